import numpy as np


def ks_distance(samples: np.ndarray, cdf) -> float:
    """Kolmogorov distance between an empirical sample and a continuous CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    f = np.asarray(cdf(x), dtype=float)
    hi = np.max(np.arange(1, n + 1) / n - f)
    lo = np.max(f - np.arange(0, n) / n)
    return float(max(hi, lo))
