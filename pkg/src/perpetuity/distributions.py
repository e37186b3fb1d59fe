"""Structural description of the input pair (A, B).

Every marginal law is a small expression tree of `ScalarDistribution`
variants.  The tree supports vectorized sampling, closed-form survival /
MGF / characteristic-function evaluation where available, and purely
symbolic structural queries (atoms, support, sign information, MGF
domain).  Nothing structural is ever inferred from samples: a query that
cannot be resolved symbolically answers ``None`` ("unknown") and callers
must treat unknown as not-satisfied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special

__all__ = [
    "NoClosedForm",
    "ValidationError",
    "ScalarDistribution",
    "PointMass",
    "Exponential",
    "Gamma",
    "Beta",
    "Uniform",
    "Negated",
    "Shifted",
    "Scaled",
    "Mixture",
    "Difference",
    "SurvivalDefined",
    "ThresholdDependent",
    "JointInput",
    "StructuralFlags",
    "GammaLike",
    "ExpPlusRemainder",
    "sample_pair",
    "structural_flags",
    "validate_nondegeneracy",
]

_INF = math.inf


class NoClosedForm(Exception):
    """Raised when an analytic survival/MGF/CF is not available for a variant."""


class ValidationError(ValueError):
    """Raised at construction time for structurally invalid inputs."""


def _as_array(x):
    return np.asarray(x, dtype=float)


def _maybe_scalar(out, x):
    if np.isscalar(x) or getattr(x, "ndim", 1) == 0:
        return float(out) if not np.iscomplexobj(out) else complex(out)
    return out


# ---------------------------------------------------------------------------
# Scalar distributions
# ---------------------------------------------------------------------------

class ScalarDistribution:
    """Base class: one marginal law with sampling and analytic handles."""

    # -- sampling ----------------------------------------------------------
    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    # -- analytic handles --------------------------------------------------
    def survival(self, x):
        """P{D > x} (strict).  Raises NoClosedForm when unavailable."""
        raise NoClosedForm(type(self).__name__)

    def pdf(self, x):
        """Density where the law is absolutely continuous, else None."""
        return None

    def mgf(self, s: float, *, numeric_ok: bool = True) -> float:
        """E e^{sD}; +inf outside the MGF domain."""
        raise NoClosedForm(type(self).__name__)

    def charfn(self, t: float) -> complex:
        """E e^{itD}."""
        raise NoClosedForm(type(self).__name__)

    def mean(self) -> float:
        raise NoClosedForm(type(self).__name__)

    # -- structural queries (symbolic; None = unknown) ---------------------
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def atoms(self) -> Optional[dict[float, float]]:
        """Full atom table when the law is purely atomic, else None."""
        return None

    def atom_at(self, v: float) -> Optional[float]:
        """Exact P{D = v}; 0 for known-continuous laws, None if unknown."""
        return None

    def mgf_domain(self) -> tuple[float, float]:
        """Open interval on which the MGF is certainly finite (conservative)."""
        raise NotImplementedError

    def log_abs_moment(self) -> Optional[float]:
        """E log|D| in closed form where available."""
        return None

    def log1p_neg_moment_finite(self) -> Optional[bool]:
        """Whether E log(1 + D^-) < infinity."""
        lo, _ = self.support()
        if lo > -_INF:
            return True
        slo, shi = self.mgf_domain()
        if slo < 0:
            return True
        return None


@dataclass(frozen=True)
class PointMass(ScalarDistribution):
    value: float

    def sample(self, rng, size):
        return np.full(size, float(self.value))

    def survival(self, x):
        return _maybe_scalar((_as_array(x) < self.value).astype(float), x)

    def mgf(self, s, *, numeric_ok=True):
        return math.exp(min(s * self.value, 700.0)) if s * self.value < 700 else _INF

    def charfn(self, t):
        return complex(np.exp(1j * t * self.value))

    def mean(self):
        return float(self.value)

    def support(self):
        return (self.value, self.value)

    def atoms(self):
        return {float(self.value): 1.0}

    def atom_at(self, v):
        return 1.0 if v == self.value else 0.0

    def mgf_domain(self):
        return (-_INF, _INF)

    def log_abs_moment(self):
        if self.value == 0:
            return -_INF
        return math.log(abs(self.value))


@dataclass(frozen=True)
class Exponential(ScalarDistribution):
    rate: float

    def __post_init__(self):
        if self.rate <= 0:
            raise ValidationError("Exponential rate must be > 0")

    def sample(self, rng, size):
        return rng.exponential(scale=1.0 / self.rate, size=size)

    def survival(self, x):
        xa = _as_array(x)
        return _maybe_scalar(np.where(xa < 0, 1.0, np.exp(-self.rate * np.maximum(xa, 0.0))), x)

    def pdf(self, x):
        xa = _as_array(x)
        return _maybe_scalar(np.where(xa < 0, 0.0, self.rate * np.exp(-self.rate * np.maximum(xa, 0.0))), x)

    def mgf(self, s, *, numeric_ok=True):
        return self.rate / (self.rate - s) if s < self.rate else _INF

    def charfn(self, t):
        return self.rate / (self.rate - 1j * t)

    def mean(self):
        return 1.0 / self.rate

    def support(self):
        return (0.0, _INF)

    def atom_at(self, v):
        return 0.0

    def mgf_domain(self):
        return (-_INF, self.rate)


@dataclass(frozen=True)
class Gamma(ScalarDistribution):
    shape: float
    rate: float

    def __post_init__(self):
        if self.shape <= 0 or self.rate <= 0:
            raise ValidationError("Gamma parameters must be > 0")

    def sample(self, rng, size):
        return rng.gamma(self.shape, scale=1.0 / self.rate, size=size)

    def survival(self, x):
        xa = _as_array(x)
        return _maybe_scalar(
            np.where(xa <= 0, 1.0, special.gammaincc(self.shape, self.rate * np.maximum(xa, 0.0))), x
        )

    def pdf(self, x):
        xa = np.maximum(_as_array(x), 1e-300)
        val = np.exp(
            self.shape * math.log(self.rate)
            + (self.shape - 1.0) * np.log(xa)
            - self.rate * xa
            - special.gammaln(self.shape)
        )
        return _maybe_scalar(np.where(_as_array(x) <= 0, 0.0, val), x)

    def mgf(self, s, *, numeric_ok=True):
        if s >= self.rate:
            return _INF
        return (self.rate / (self.rate - s)) ** self.shape

    def charfn(self, t):
        return complex(np.exp(self.shape * np.log(self.rate / (self.rate - 1j * t))))

    def mean(self):
        return self.shape / self.rate

    def support(self):
        return (0.0, _INF)

    def atom_at(self, v):
        return 0.0

    def mgf_domain(self):
        return (-_INF, self.rate)


@dataclass(frozen=True)
class Beta(ScalarDistribution):
    p: float
    q: float

    def __post_init__(self):
        if self.p <= 0 or self.q <= 0:
            raise ValidationError("Beta parameters must be > 0")

    def sample(self, rng, size):
        return rng.beta(self.p, self.q, size=size)

    def survival(self, x):
        xa = np.clip(_as_array(x), 0.0, 1.0)
        return _maybe_scalar(1.0 - special.betainc(self.p, self.q, xa), x)

    def pdf(self, x):
        xa = np.clip(_as_array(x), 1e-300, 1.0 - 1e-16)
        val = np.exp(
            (self.p - 1.0) * np.log(xa)
            + (self.q - 1.0) * np.log1p(-xa)
            - special.betaln(self.p, self.q)
        )
        inside = (_as_array(x) > 0) & (_as_array(x) < 1)
        return _maybe_scalar(np.where(inside, val, 0.0), x)

    def mgf(self, s, *, numeric_ok=True):
        return float(special.hyp1f1(self.p, self.p + self.q, s))

    def charfn(self, t):
        import mpmath

        z = mpmath.hyp1f1(self.p, self.p + self.q, 1j * t)
        return complex(z)

    def mean(self):
        return self.p / (self.p + self.q)

    def support(self):
        return (0.0, 1.0)

    def atom_at(self, v):
        return 0.0

    def mgf_domain(self):
        return (-_INF, _INF)

    def log_abs_moment(self):
        return float(special.digamma(self.p) - special.digamma(self.p + self.q))


@dataclass(frozen=True)
class Uniform(ScalarDistribution):
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValidationError("Uniform requires lo < hi")

    def sample(self, rng, size):
        return rng.uniform(self.lo, self.hi, size=size)

    def survival(self, x):
        xa = _as_array(x)
        return _maybe_scalar(np.clip((self.hi - xa) / (self.hi - self.lo), 0.0, 1.0), x)

    def pdf(self, x):
        xa = _as_array(x)
        inside = (xa > self.lo) & (xa < self.hi)
        return _maybe_scalar(np.where(inside, 1.0 / (self.hi - self.lo), 0.0), x)

    def mgf(self, s, *, numeric_ok=True):
        if s == 0:
            return 1.0
        # expm1 form: stable under cancellation for small s
        w = s * (self.hi - self.lo)
        return math.exp(s * self.lo) * math.expm1(w) / w

    def charfn(self, t):
        if t == 0:
            return 1.0 + 0.0j
        return complex((np.exp(1j * t * self.hi) - np.exp(1j * t * self.lo)) / (1j * t * (self.hi - self.lo)))

    def mean(self):
        return 0.5 * (self.lo + self.hi)

    def support(self):
        return (float(self.lo), float(self.hi))

    def atom_at(self, v):
        return 0.0

    def mgf_domain(self):
        return (-_INF, _INF)

    def log_abs_moment(self):
        if self.lo >= 0:
            def antider(u):
                return u * (math.log(u) - 1.0) if u > 0 else 0.0

            return (antider(self.hi) - antider(self.lo)) / (self.hi - self.lo)
        return None


@dataclass(frozen=True)
class Negated(ScalarDistribution):
    inner: ScalarDistribution

    def sample(self, rng, size):
        return -self.inner.sample(rng, size)

    def survival(self, x):
        # P{-I > x} = P{I < -x} = 1 - P{I > -x} - P{I = -x}
        xa = _as_array(x)
        at = self.inner.atoms()
        if at is not None:
            vals = np.array(sorted(at))
            cum = np.cumsum([at[v] for v in sorted(at)])
            idx = np.searchsorted(vals, -xa, side="left")  # atoms strictly below -x
            below = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
            return _maybe_scalar(below, x)
        if self.inner.atom_at(0.0) == 0.0:
            return _maybe_scalar(1.0 - np.asarray(self.inner.survival(-xa)), x)
        raise NoClosedForm("Negated: inner atom structure unknown")

    def pdf(self, x):
        p = self.inner.pdf(-_as_array(x))
        return None if p is None else _maybe_scalar(p, x)

    def mgf(self, s, *, numeric_ok=True):
        return self.inner.mgf(-s, numeric_ok=numeric_ok)

    def charfn(self, t):
        return self.inner.charfn(-t)

    def mean(self):
        return -self.inner.mean()

    def support(self):
        lo, hi = self.inner.support()
        return (-hi, -lo)

    def atoms(self):
        at = self.inner.atoms()
        return None if at is None else {-v: w for v, w in at.items()}

    def atom_at(self, v):
        return self.inner.atom_at(-v)

    def mgf_domain(self):
        lo, hi = self.inner.mgf_domain()
        return (-hi, -lo)

    def log_abs_moment(self):
        return self.inner.log_abs_moment()


@dataclass(frozen=True)
class Shifted(ScalarDistribution):
    inner: ScalarDistribution
    offset: float

    def sample(self, rng, size):
        return self.inner.sample(rng, size) + self.offset

    def survival(self, x):
        return self.inner.survival(_as_array(x) - self.offset)

    def pdf(self, x):
        p = self.inner.pdf(_as_array(x) - self.offset)
        return p

    def mgf(self, s, *, numeric_ok=True):
        m = self.inner.mgf(s, numeric_ok=numeric_ok)
        return m * math.exp(s * self.offset) if m < _INF else _INF

    def charfn(self, t):
        return complex(np.exp(1j * t * self.offset)) * self.inner.charfn(t)

    def mean(self):
        return self.inner.mean() + self.offset

    def support(self):
        lo, hi = self.inner.support()
        return (lo + self.offset, hi + self.offset)

    def atoms(self):
        at = self.inner.atoms()
        return None if at is None else {v + self.offset: w for v, w in at.items()}

    def atom_at(self, v):
        return self.inner.atom_at(v - self.offset)

    def mgf_domain(self):
        return self.inner.mgf_domain()


@dataclass(frozen=True)
class Scaled(ScalarDistribution):
    inner: ScalarDistribution
    factor: float

    def __post_init__(self):
        if self.factor == 0:
            raise ValidationError("Scaled factor must be nonzero")

    def sample(self, rng, size):
        return self.factor * self.inner.sample(rng, size)

    def survival(self, x):
        if self.factor > 0:
            return self.inner.survival(_as_array(x) / self.factor)
        return Negated(Scaled(self.inner, -self.factor)).survival(x)

    def pdf(self, x):
        p = self.inner.pdf(_as_array(x) / self.factor)
        return None if p is None else np.asarray(p) / abs(self.factor)

    def mgf(self, s, *, numeric_ok=True):
        return self.inner.mgf(s * self.factor, numeric_ok=numeric_ok)

    def charfn(self, t):
        return self.inner.charfn(t * self.factor)

    def mean(self):
        return self.factor * self.inner.mean()

    def support(self):
        lo, hi = self.inner.support()
        pts = sorted((self.factor * lo, self.factor * hi))
        return (pts[0], pts[1])

    def atoms(self):
        at = self.inner.atoms()
        return None if at is None else {self.factor * v: w for v, w in at.items()}

    def atom_at(self, v):
        return self.inner.atom_at(v / self.factor)

    def mgf_domain(self):
        lo, hi = self.inner.mgf_domain()
        pts = sorted((lo * self.factor, hi * self.factor))
        return (pts[0], pts[1])

    def log_abs_moment(self):
        m = self.inner.log_abs_moment()
        return None if m is None else m + math.log(abs(self.factor))


@dataclass(frozen=True)
class Mixture(ScalarDistribution):
    components: tuple[tuple[float, ScalarDistribution], ...]

    def __post_init__(self):
        comps = tuple((float(w), d) for w, d in self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ValidationError("Mixture needs at least one component")
        if any(w <= 0 or w > 1 for w, _ in comps):
            raise ValidationError("Mixture weights must lie in (0, 1]")
        if abs(sum(w for w, _ in comps) - 1.0) > 1e-12:
            raise ValidationError("Mixture weights must sum to 1 within 1e-12")

    def sample(self, rng, size):
        u = rng.random(size)
        cum = np.cumsum([w for w, _ in self.components])
        idx = np.searchsorted(cum, u, side="right")
        idx = np.minimum(idx, len(self.components) - 1)
        out = np.empty(size)
        for j, (_, comp) in enumerate(self.components):
            mask = idx == j
            n = int(mask.sum())
            if n:
                out[mask] = comp.sample(rng, n)
        return out

    def survival(self, x):
        total = sum(w * np.asarray(d.survival(x)) for w, d in self.components)
        return _maybe_scalar(total, x)

    def pdf(self, x):
        parts = [d.pdf(x) for _, d in self.components]
        if any(p is None for p in parts):
            return None
        return sum(w * np.asarray(p) for (w, _), p in zip(self.components, parts))

    def mgf(self, s, *, numeric_ok=True):
        return sum(w * d.mgf(s, numeric_ok=numeric_ok) for w, d in self.components)

    def charfn(self, t):
        return sum(w * d.charfn(t) for w, d in self.components)

    def mean(self):
        return sum(w * d.mean() for w, d in self.components)

    def support(self):
        los, his = zip(*(d.support() for _, d in self.components))
        return (min(los), max(his))

    def atoms(self):
        out: dict[float, float] = {}
        for w, d in self.components:
            at = d.atoms()
            if at is None:
                return None
            for v, p in at.items():
                out[v] = out.get(v, 0.0) + w * p
        return out

    def atom_at(self, v):
        total = 0.0
        for w, d in self.components:
            a = d.atom_at(v)
            if a is None:
                return None
            total += w * a
        return total

    def mgf_domain(self):
        los, his = zip(*(d.mgf_domain() for _, d in self.components))
        return (max(los), min(his))

    def log_abs_moment(self):
        parts = [d.log_abs_moment() for _, d in self.components]
        if any(p is None for p in parts):
            return None
        return sum(w * p for (w, _), p in zip(self.components, parts))


@dataclass(frozen=True)
class Difference(ScalarDistribution):
    """left - right with independent parts."""

    left: ScalarDistribution
    right: ScalarDistribution

    def sample(self, rng, size):
        a = self.left.sample(rng, size)
        b = self.right.sample(rng, size)
        return a - b

    def survival(self, x, tol: float = 1e-10):
        le, ri = self.left, self.right
        # Exponential - Exponential has the classical closed form.
        if isinstance(le, Exponential) and isinstance(ri, Exponential):
            lam, mu = le.rate, ri.rate
            xa = _as_array(x)
            pos = (mu / (mu + lam)) * np.exp(-lam * np.maximum(xa, 0.0))
            neg = 1.0 - (lam / (mu + lam)) * np.exp(mu * np.minimum(xa, 0.0))
            return _maybe_scalar(np.where(xa >= 0, pos, neg), x)
        at = ri.atoms()
        if at is not None:
            total = sum(w * np.asarray(le.survival(_as_array(x) + v)) for v, w in at.items())
            return _maybe_scalar(total, x)
        if ri.pdf(0.0) is None:
            raise NoClosedForm("Difference: right part has neither atoms nor a density")
        from .quadrature import integrate_semi_infinite, integrate_finite

        rlo, rhi = ri.support()
        _, rdom_hi = ri.mgf_domain()

        def one(xv: float) -> float:
            def f(y):
                return float(np.asarray(le.survival(xv + y)) * np.asarray(ri.pdf(y)))

            if rhi < _INF:
                return integrate_finite(f, rlo, rhi, tol).value
            hint = rdom_hi if rdom_hi < _INF else 1.0
            return integrate_semi_infinite(f, rlo, tol, max(hint, 1e-3)).value

        xa = np.atleast_1d(_as_array(x))
        out = np.array([one(float(v)) for v in xa])
        return _maybe_scalar(out.reshape(np.shape(_as_array(x))) if np.shape(_as_array(x)) else out[0], x)

    def mgf(self, s, *, numeric_ok=True):
        ml = self.left.mgf(s, numeric_ok=numeric_ok)
        mr = self.right.mgf(-s, numeric_ok=numeric_ok)
        return ml * mr if ml < _INF and mr < _INF else _INF

    def charfn(self, t):
        return self.left.charfn(t) * self.right.charfn(-t)

    def mean(self):
        return self.left.mean() - self.right.mean()

    def support(self):
        llo, lhi = self.left.support()
        rlo, rhi = self.right.support()
        return (llo - rhi, lhi - rlo)

    def atoms(self):
        la, ra = self.left.atoms(), self.right.atoms()
        if la is None or ra is None:
            return None
        out: dict[float, float] = {}
        for lv, lw in la.items():
            for rv, rw in ra.items():
                v = lv - rv
                out[v] = out.get(v, 0.0) + lw * rw
        return out

    def atom_at(self, v):
        at = self.atoms()
        if at is not None:
            return at.get(v, 0.0)
        # A continuous part on either side kills every atom of the difference.
        if self.left.pdf(0.0) is not None or self.right.pdf(0.0) is not None:
            return 0.0
        return None

    def mgf_domain(self):
        llo, lhi = self.left.mgf_domain()
        rlo, rhi = self.right.mgf_domain()
        return (max(llo, -rhi), min(lhi, -rlo))


class SurvivalDefined(ScalarDistribution):
    """Law given only through a survival function handle.

    Sampling is by inverse transform on a dense cached monotone table
    (65536 nodes down to survival 1e-16), which keeps the x-error of
    inversion around the table's interpolation error (~1e-8 for the
    exponential-envelope tails this exists for).
    """

    def __init__(self, S: Callable, support_lo: float, decay_rate: float = 1.0, name: str = "survival"):
        self.S = S
        self.support_lo = float(support_lo)
        self.decay_rate = float(decay_rate)
        self.name = name
        if decay_rate <= 0:
            raise ValidationError("SurvivalDefined needs a positive decay_rate envelope")
        self._check_handle()
        self._table = None

    def _check_handle(self):
        lo = self.support_lo
        s0 = float(self.S(lo))
        if abs(s0 - 1.0) > 1e-9:
            raise ValidationError(f"survival handle must satisfy S(support_lo)=1, got {s0}")
        grid = lo + np.linspace(0.0, 20.0 / self.decay_rate, 64)
        vals = np.asarray(self.S(grid), dtype=float)
        if np.any(np.diff(vals) > 1e-12):
            raise ValidationError("survival handle is not nonincreasing on the check grid")
        if vals[-1] > 0.05:
            raise ValidationError("survival handle does not decay on the check grid")

    def __repr__(self):
        return f"SurvivalDefined({self.name})"

    def _inversion_table(self):
        if self._table is None:
            lo = self.support_lo
            hi = lo + 1.0 / self.decay_rate
            while float(self.S(hi)) > 1e-16:
                hi = lo + 2.0 * (hi - lo)
            xs = np.linspace(lo, hi, 65536)
            sv = np.asarray(self.S(xs), dtype=float)
            sv = np.minimum.accumulate(np.clip(sv, 1e-300, 1.0))
            keep = np.concatenate([[True], np.diff(sv) < 0])
            self._table = (-np.log(sv[keep]), xs[keep])
        return self._table

    def inverse_survival(self, u):
        """x with S(x) = u, vectorized."""
        nls, xs = self._inversion_table()
        ua = np.clip(_as_array(u), np.exp(-nls[-1]), 1.0)
        return _maybe_scalar(np.interp(-np.log(ua), nls, xs), u)

    def sample(self, rng, size):
        return np.asarray(self.inverse_survival(rng.random(size)))

    def survival(self, x):
        xa = _as_array(x)
        out = np.clip(np.asarray(self.S(np.maximum(xa, self.support_lo)), dtype=float), 0.0, 1.0)
        out = np.where(xa < self.support_lo, 1.0, out)
        return _maybe_scalar(out, x)

    def mgf(self, s, *, numeric_ok=True):
        if not numeric_ok:
            raise NoClosedForm("SurvivalDefined MGF is numeric only")
        if s == 0:
            return 1.0
        from .quadrature import integrate_finite

        lo = self.support_lo
        # E e^{sX} = e^{s lo} + s * int_lo^inf e^{sx} S(x) dx; divergence is
        # declared when the partial integral blows past 1e12.
        total = math.exp(s * lo)
        span = 8.0 / self.decay_rate
        a = lo
        prev = None
        for _ in range(200):
            part = integrate_finite(lambda y: math.exp(s * y) * float(self.S(y)), a, a + span, 1e-11).value
            total += s * part
            if total > 1e12:
                return _INF
            a += span
            if prev is not None and abs(s * part) < 1e-12 * max(abs(total), 1.0):
                return total
            prev = part
        return _INF

    def charfn(self, t):
        if t == 0:
            return 1.0 + 0.0j
        from .quadrature import integrate_semi_infinite

        lo = self.support_lo
        res = integrate_semi_infinite(
            lambda y: np.exp(1j * t * y) * float(self.S(y)), lo, 1e-11, self.decay_rate
        )
        return complex(np.exp(1j * t * lo)) + 1j * t * res.value

    def mean(self):
        from .quadrature import integrate_semi_infinite

        res = integrate_semi_infinite(lambda y: float(self.S(y)), self.support_lo, 1e-11, self.decay_rate)
        return self.support_lo + res.value

    def support(self):
        return (self.support_lo, _INF)

    def atom_at(self, v):
        return 0.0

    def mgf_domain(self):
        # Conservative: the exponential envelope only certifies s < decay_rate.
        return (-_INF, self.decay_rate)

    def log1p_neg_moment_finite(self):
        return True


# ---------------------------------------------------------------------------
# Joint law of (A, B)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdDependent:
    """A = zeta1 * 1{B > q} + zeta2 * 1{B <= q}."""

    zeta1: float
    zeta2: float
    q: float

    def __post_init__(self):
        if not (0 < self.zeta1 < 1 and 0 < self.zeta2 < 1):
            raise ValidationError("threshold coefficients must lie in (0, 1)")
        if self.zeta1 == self.zeta2:
            raise ValidationError("threshold dependence requires zeta1 != zeta2")


@dataclass(frozen=True)
class JointInput:
    A: Optional[ScalarDistribution]
    B: ScalarDistribution
    dependence: object = "independent"  # "independent" | ThresholdDependent

    def __post_init__(self):
        if isinstance(self.dependence, ThresholdDependent):
            if self.A is not None:
                raise ValidationError("threshold-dependent joints derive A; leave field A unset")
        elif self.dependence == "independent":
            if self.A is None:
                raise ValidationError("independent joints need a marginal law for A")
        else:
            raise ValidationError(f"unsupported dependence: {self.dependence!r}")

    @property
    def independent(self) -> bool:
        return self.dependence == "independent"

    def A_marginal(self) -> ScalarDistribution:
        """Marginal law of A (derived for threshold dependence)."""
        if self.independent:
            return self.A
        dep = self.dependence
        p1 = float(np.asarray(self.B.survival(dep.q)))
        comps = []
        if p1 > 0:
            comps.append((p1, PointMass(dep.zeta1)))
        if p1 < 1:
            comps.append((1.0 - p1, PointMass(dep.zeta2)))
        return Mixture(tuple(comps))


def sample_pair(joint: JointInput, rng: np.random.Generator, size: int):
    """One batch of draws (a, b) from the joint law."""
    if joint.independent:
        a = joint.A.sample(rng, size)
        b = joint.B.sample(rng, size)
        return a, b
    dep = joint.dependence
    b = joint.B.sample(rng, size)
    a = np.where(b > dep.q, dep.zeta1, dep.zeta2)
    return a, b


# ---------------------------------------------------------------------------
# Structural flags and nondegeneracy
# ---------------------------------------------------------------------------

@dataclass
class StructuralFlags:
    p_A_eq_1: Optional[float]
    p_A_eq_neg1: Optional[float]
    p_A_in_0_1: Optional[float]
    p_A_pos: Optional[float]
    p_A_neg: Optional[float]
    A_bounded_by_1: Optional[bool]
    A_positive: Optional[bool]
    B_nonneg: Optional[bool]
    B_nonpos: Optional[bool]
    mgf_B_domain: tuple[float, float]
    log_moment_B_minus_finite: Optional[bool]


def _prob_gt(d: ScalarDistribution, x: float) -> Optional[float]:
    try:
        return float(np.asarray(d.survival(x)))
    except NoClosedForm:
        return None


def structural_flags(joint: JointInput) -> StructuralFlags:
    """All theorem-precondition flags, derived symbolically from the trees."""
    A = joint.A_marginal()
    B = joint.B
    a_lo, a_hi = A.support()
    b_lo, b_hi = B.support()
    p1 = A.atom_at(1.0)
    pm1 = A.atom_at(-1.0)
    a0 = A.atom_at(0.0)
    s0 = _prob_gt(A, 0.0)
    s1 = _prob_gt(A, 1.0)
    p_pos = s0
    p_neg = None
    if s0 is not None and a0 is not None:
        p_neg = max(0.0, 1.0 - s0 - a0)
    p_in_01 = None
    if s0 is not None and s1 is not None:
        p_in_01 = max(0.0, s0 - s1)
    if a_hi > 1.0 or a_lo < -1.0:
        bounded_by_1 = False
    else:
        bounded_by_1 = True
    if a_lo > 0.0:
        positive = True
    elif a_lo < 0.0:
        positive = False
    elif a0 is None:
        positive = None
    else:
        positive = a0 == 0.0
    return StructuralFlags(
        p_A_eq_1=p1,
        p_A_eq_neg1=pm1,
        p_A_in_0_1=p_in_01,
        p_A_pos=p_pos,
        p_A_neg=p_neg,
        A_bounded_by_1=bounded_by_1,
        A_positive=positive,
        B_nonneg=b_lo >= 0.0,
        B_nonpos=b_hi <= 0.0,
        mgf_B_domain=B.mgf_domain(),
        log_moment_B_minus_finite=B.log1p_neg_moment_finite(),
    )


def _zero_or(v):
    return 0.0 if v is None else v


@dataclass
class NondegeneracyReport:
    ok: bool
    violations: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


def validate_nondegeneracy(joint: JointInput) -> NondegeneracyReport:
    """Check P{A=0}=0, P{B=0}<1 and P{B + A c = c} < 1 for all c."""
    rep = NondegeneracyReport(ok=True)
    A = joint.A_marginal()
    B = joint.B
    a0 = A.atom_at(0.0)
    if a0 is None:
        rep.notes.append("P{A=0} not symbolically derivable; assumed 0")
    elif a0 > 0:
        rep.ok = False
        rep.violations.append("degeneracy: P{A=0} > 0")
    if isinstance(B, PointMass) and B.value == 0:
        rep.ok = False
        rep.violations.append("degeneracy: P{B=0} = 1")
    a_atoms = A.atoms()
    b_atoms = B.atoms()
    if a_atoms is not None and b_atoms is not None:
        # Solve B + A c = c a.s.; possible only if for every atom pair b = c(1-a).
        candidates = set()
        for av, _ in a_atoms.items():
            for bv, _ in b_atoms.items():
                if av != 1.0:
                    candidates.add(bv / (1.0 - av))
        for c in candidates:
            if all(abs(bv - c * (1.0 - av)) < 1e-12 for av in a_atoms for bv in b_atoms):
                rep.ok = False
                rep.violations.append(f"degeneracy: B + A*c = c a.s. for c = {c:g}")
        # A == 1 a.s. with B == 0 a.s. is already covered by the first check.
    else:
        rep.notes.append("fixed-point degeneracy not decidable symbolically (non-atomic law); assumed ok")
    return rep


# ---------------------------------------------------------------------------
# Tail models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GammaLike:
    """Right-tail model P{B > x} ~ a * x^c * e^{-b x}."""

    a: float
    c: float
    b: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValidationError("GammaLike needs a > 0 and b > 0")

    def __call__(self, x):
        xa = _as_array(x)
        return _maybe_scalar(self.a * np.power(np.maximum(xa, 1e-300), self.c) * np.exp(-self.b * xa), x)


@dataclass(frozen=True)
class ExpPlusRemainder:
    """Right-tail decomposition P{B > x} = C e^{-bx} + r(x) for x >= 0."""

    C: float
    b: float
    r: Callable = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    r_vanishes: bool = True          # lim e^{bx} r(x) = 0
    r_integrable: bool = True        # int_1^inf e^{by}/y r+(y) dy < inf (and the eps-version for r-)
    r_decay_margin: float = 1.0      # eps with |r(y)| = O(e^{-(b+eps) y})

    def __post_init__(self):
        if self.C <= 0 or self.b <= 0:
            raise ValidationError("ExpPlusRemainder needs C > 0 and b > 0")

    def __call__(self, x):
        xa = _as_array(x)
        return _maybe_scalar(self.C * np.exp(-self.b * xa) + np.asarray(self.r(xa), dtype=float), x)

    def verify_grid(self, xs: Sequence[float]) -> bool:
        vals = np.asarray(self(np.asarray(xs, dtype=float)))
        return bool(np.all(vals >= -1e-12) and np.all(vals <= 1 + 1e-12) and np.all(np.diff(vals) <= 1e-12))
