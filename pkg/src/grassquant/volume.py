"""Volume of chordal-distance balls on Grassmann manifolds.

For a p-plane P and a random q-plane Q (invariant measure), the ball
B(delta) = {Q : d_c(P, Q) <= delta} has volume

    mu(B(delta)) = c * delta**t * (1 + c1 * delta**2 + o(delta**2)),   delta <= 1,

with t = beta * min(p, q) * (n - max(p, q)).  The helpers below evaluate c,
c1, the main-order term, two-sided bounds, and two formula-free estimates
(Monte Carlo and direct quadrature of the principal-angle density).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .core import Field, SeededRng, orthonormalize, gaussian_matrices, run_blocks

QUAD_RTOL = 1e-6


@dataclass(frozen=True)
class ManifoldParams:
    n: int
    p: int
    q: int
    field: Field = Field.REAL

    def __post_init__(self):
        object.__setattr__(self, "field", Field.parse(self.field))
        if not (1 <= self.p <= self.n and 1 <= self.q <= self.n):
            raise ValueError(f"invalid-dimension: need 1 <= p, q <= n, got {self}")

    @classmethod
    def square(cls, n: int, p: int, field=Field.REAL) -> "ManifoldParams":
        return cls(n, p, p, field)

    @property
    def beta(self) -> int:
        return self.field.beta

    def normalized(self) -> "ManifoldParams":
        """Same manifold pair with p <= q (ball volumes are symmetric in the roles)."""
        if self.p <= self.q:
            return self
        return ManifoldParams(self.n, self.q, self.p, self.field)

    @property
    def exponent(self) -> int:
        """t = beta * min(p, q) * (n - max(p, q)), the real dimension seen by the ball."""
        m = self.normalized()
        return m.beta * m.p * (m.n - m.q)

    @property
    def is_exact_case(self) -> bool:
        """Complex with q = p, or real with q = p + 1: the main-order term is exact."""
        m = self.normalized()
        return m.beta * (m.q - m.p + 1) == 2

    @property
    def branch(self) -> int:
        """Which of the four (p, q) regions relative to n/2 the pair falls in."""
        n, p, q = self.normalized().n, self.normalized().p, self.normalized().q
        if 2 * q <= n:
            return 1
        if 2 * p >= n:
            return 4
        return 2 if p + q <= n else 3


@dataclass(frozen=True)
class VolumeResult:
    value: float
    kind: str
    stderr: Optional[float] = None
    valid: bool = True


def log_coefficient_form(mp: ManifoldParams, small: bool) -> float:
    """log c from one of the two product forms.

    ``small=True`` is the form for p + q <= n, ``small=False`` the one for
    p + q >= n; both are defined for any p <= q and coincide on p + q = n.
    """
    m = mp.normalized()
    n, p, q, b = m.n, m.p, m.q, m.beta / 2.0
    head = -gammaln(b * p * (n - q) + 1.0)
    if small:
        i = np.arange(1, p + 1)
        prod = np.sum(gammaln(b * (n - i + 1)) - gammaln(b * (q - i + 1)))
    else:
        i = np.arange(1, n - q + 1)
        prod = np.sum(gammaln(b * (n - i + 1)) - gammaln(b * (n - p - i + 1)))
    return float(head + prod)


def log_volume_coefficient(mp: ManifoldParams) -> float:
    m = mp.normalized()
    return log_coefficient_form(m, m.p + m.q <= m.n)


def volume_coefficient(mp: ManifoldParams) -> float:
    """Leading constant c of the small-ball volume c * delta**t."""
    return math.exp(log_volume_coefficient(mp))


def volume_correction(mp: ManifoldParams) -> float:
    """Second-order coefficient c1; zero exactly in the exact cases."""
    m = mp.normalized()
    b = m.beta / 2.0
    a = b * m.p * (m.n - m.q)
    return -(b * (m.q - m.p + 1) - 1.0) * a / (a + 1.0)


def volume_main_order(mp: ManifoldParams, delta: float) -> VolumeResult:
    if delta < 0:
        raise ValueError(f"negative-radius: delta={delta}")
    t = mp.exponent
    valid = delta <= 1.0
    if t == 0:
        return VolumeResult(1.0, "exact", None, valid)
    if delta == 0:
        value = 0.0
    else:
        value = math.exp(log_volume_coefficient(mp) + t * math.log(delta))
    kind = "exact" if (mp.is_exact_case and valid) else "main-order"
    return VolumeResult(min(value, 1.0), kind, None, valid)


def volume_bounds(mp: ManifoldParams, delta: float) -> tuple[VolumeResult, VolumeResult]:
    """(lower, upper) bounds on mu(B(delta)) valid for delta <= 1."""
    if delta < 0:
        raise ValueError(f"negative-radius: delta={delta}")
    if delta > 1:
        raise ValueError(f"invalid-radius: bounds hold only for delta <= 1, got {delta}")
    main = volume_main_order(mp, delta).value
    m = mp.normalized()
    shrink = 1.0 - delta * delta
    if mp.exponent == 0:
        lo = hi = 1.0
    elif m.field is Field.REAL and m.p == m.q:
        lo = main
        hi = main * shrink ** (-m.p / 2.0) if shrink > 0 else math.inf
    else:
        power = m.beta / 2.0 * m.p * (m.q - m.p + 1) - m.p
        lo = main * shrink ** power if power else main
        hi = main
    return (VolumeResult(min(lo, 1.0), "lower-bound", None, True),
            VolumeResult(min(hi, 1.0), "upper-bound", None, True))


def barg_volume(mp: ManifoldParams, delta: float) -> float:
    """Large-n comparison value (delta / sqrt(p))**(beta n p); not used elsewhere."""
    m = mp.normalized()
    return (delta / math.sqrt(m.p)) ** (m.beta * m.n * m.p)


def volume_monte_carlo(mp: ManifoldParams, delta: float, samples: int, rng: SeededRng,
                       workers: int = 1) -> VolumeResult:
    """Fraction of uniform q-planes within delta of span(e_1..e_p)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    m = mp.normalized()
    d2max = delta * delta

    def block(gen, _b, size):
        q = orthonormalize(gaussian_matrices(gen, size, m.n, m.q, m.field))
        top = q[:, :m.p, :]
        d2 = m.p - np.sum(top.real ** 2 + top.imag ** 2, axis=(1, 2))
        return int(np.count_nonzero(d2 <= d2max))

    hits = sum(run_blocks(block, rng, samples, workers))
    f = hits / samples
    return VolumeResult(f, "monte-carlo", math.sqrt(f * (1.0 - f) / samples), True)


def _quadrature_params(mp: ManifoldParams) -> tuple[int, int, int]:
    """(n, p', q') with p' <= q' and p' + q' <= n, via the complement identity."""
    m = mp.normalized()
    n, p, q = m.n, m.p, m.q
    if p + q > n:
        p, q = n - q, n - p
    return n, p, q


def log_angle_density_constant(n: int, p: int, q: int, beta: int) -> float:
    """Normaliser of the joint density of sin^2 of the principal angles (p <= q, p + q <= n)."""
    b = beta / 2.0
    i = np.arange(1, p + 1)
    return float(np.sum(gammaln(1 + b) + gammaln(b * (n - i + 1)) - gammaln(b * i + 1)
                        - gammaln(b * (n - q - i + 1)) - gammaln(b * (q - i + 1))))


def volume_quadrature_oracle(mp: ManifoldParams, delta: float) -> VolumeResult:
    """Integrate the principal-angle density over {sum sin^2 theta_i <= delta^2}.

    Works in x_i = sin^2 theta_i, where the (unordered) density is

        v * |x1 - x2|^beta * prod x_i^A (1 - x_i)^B,
        A = beta/2 (n - p - q + 1) - 1,   B = beta/2 (q - p + 1) - 1.

    Supports effective dimension p' <= 2 after the complement reduction.
    """
    if delta < 0:
        raise ValueError(f"negative-radius: delta={delta}")
    n, p, q = _quadrature_params(mp)
    beta = mp.beta
    valid = delta <= 1.0
    if p == 0:
        return VolumeResult(1.0, "exact", None, valid)
    if p > 2:
        raise ValueError(f"unsupported-dimension: quadrature needs min(p, n-q) <= 2, got {p}")
    b = beta / 2.0
    A = b * (n - p - q + 1) - 1.0
    B = b * (q - p + 1) - 1.0
    logv = log_angle_density_constant(n, p, q, beta)
    r2 = min(delta * delta, float(p))
    opts = dict(epsabs=0.0, epsrel=1e-10, limit=200)

    def w(x):
        return x ** A * (1.0 - x) ** B

    with warnings.catch_warnings():
        # QUADPACK flags roundoff at the integrable x^-1/2 endpoints; results are fine.
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val = _integrate_density(w, p, beta, r2, opts)
    return VolumeResult(min(math.exp(logv) * val, 1.0), "exact", None, valid)


def _integrate_density(w, p, beta, r2, opts):
    if p == 1:
        return integrate.quad(w, 0.0, min(r2, 1.0), **opts)[0]

    # x1 <= x2 half of the symmetric domain, doubled.
    def inner(x1):
        hi = min(1.0, r2 - x1)
        if hi <= x1:
            return 0.0
        f = lambda x2: (x2 - x1) ** beta * w(x2)
        val, _ = integrate.quad(f, x1, hi, **opts)
        return val * w(x1)

    top = min(r2 / 2.0, 1.0)
    kinks = [r2 - 1.0] if 0.0 < r2 - 1.0 < top else None
    return 2.0 * integrate.quad(inner, 0.0, top, points=kinks, **opts)[0]
