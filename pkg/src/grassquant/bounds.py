"""Sphere-packing and rate-distortion bounds on Grassmann manifolds.

All distortion quantities use the squared chordal distance.  "Main order"
values drop the (1 + o(1)) factors; ``drf_detailed`` carries the explicit
finite-K corrections.  Hypotheses of the form "K sufficiently large" are
reported through :class:`Validity` flags instead of exceptions so that whole
curves can still be drawn.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .core import Field
from .volume import ManifoldParams, log_volume_coefficient, volume_main_order


@dataclass(frozen=True)
class Validity:
    radius_ok: Optional[bool] = None
    rate_ok: Optional[bool] = None
    asymptotic_only: bool = False
    degenerate: bool = False

    @property
    def ok(self) -> bool:
        return self.radius_ok is not False and self.rate_ok is not False

    def describe(self) -> str:
        flags = []
        if self.radius_ok is False:
            flags.append("radius>1")
        if self.rate_ok is False:
            flags.append("K-too-small" if not self.asymptotic_only else "rate-too-small")
        if self.asymptotic_only:
            flags.append("asymptotic")
        if self.degenerate:
            flags.append("degenerate")
        return ";".join(flags) or "ok"


@dataclass(frozen=True)
class BoundReport:
    value: float
    direction: str
    validity: Validity = field(default_factory=Validity)
    inputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["validity"]["ok"] = self.validity.ok
        return d


@dataclass(frozen=True)
class DetailParams:
    a: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.a < 1.0:
            raise ValueError(f"a must lie in (0, 1), got {self.a}")


def _echo(mp: ManifoldParams, **extra) -> dict:
    return {"n": mp.n, "p": mp.p, "q": mp.q, "field": mp.field.value, **extra}


# -- sphere packing ---------------------------------------------------------

def gv_code_size(mp: ManifoldParams, delta: float) -> BoundReport:
    """Gilbert-Varshamov: a code of at least 1/mu(B(delta)) planes exists."""
    if delta < 0 or delta > 1:
        raise ValueError(f"invalid-radius: need 0 <= delta <= 1, got {delta}")
    vol = volume_main_order(mp, delta).value
    value = math.inf if vol == 0 else 1.0 / vol
    return BoundReport(value, "lower", Validity(radius_ok=True), _echo(mp, delta=delta))


def hamming_code_size(mp: ManifoldParams, delta: float) -> BoundReport:
    """Hamming: no code with minimum distance delta has more than 1/mu(B(delta/2)) planes."""
    if delta < 0 or delta > 2:
        raise ValueError(f"invalid-radius: need 0 <= delta/2 <= 1, got delta={delta}")
    vol = volume_main_order(mp, delta / 2.0).value
    value = math.inf if vol == 0 else 1.0 / vol
    return BoundReport(value, "upper", Validity(radius_ok=True), _echo(mp, delta=delta))


# -- distortion rate ----------------------------------------------------------

def _scale(mp: ManifoldParams, K) -> float:
    """(c K)^(-2/t), the common factor of all distortion-rate bounds."""
    t = mp.exponent
    return math.exp(-2.0 / t * (log_volume_coefficient(mp) + math.log(K)))


def _check_k(K):
    if K < 1:
        raise ValueError(f"code size K must be >= 1, got {K}")


def _degenerate(mp, K, direction):
    return BoundReport(0.0, direction, Validity(rate_ok=True, degenerate=True), _echo(mp, K=K))


def lower_coefficient(t: int) -> float:
    return t / (t + 2.0)


def upper_coefficient(t: int) -> float:
    return 2.0 * math.gamma(2.0 / t) / t


def drf_lower(mp: ManifoldParams, K: int) -> BoundReport:
    """Main-order sphere-packing lower bound t/(t+2) (cK)^(-2/t) on D*(K)."""
    _check_k(K)
    if mp.exponent == 0:
        return _degenerate(mp, K, "lower")
    x = _scale(mp, K)
    return BoundReport(lower_coefficient(mp.exponent) * x, "lower",
                       Validity(rate_ok=x <= 1.0), _echo(mp, K=K))


def drf_upper(mp: ManifoldParams, K: int) -> BoundReport:
    """Main-order random-code upper bound (2 Gamma(2/t)/t) (cK)^(-2/t) on D*(K)."""
    _check_k(K)
    if mp.exponent == 0:
        return _degenerate(mp, K, "upper")
    x = _scale(mp, K)
    return BoundReport(upper_coefficient(mp.exponent) * x, "upper",
                       Validity(rate_ok=x <= 1.0), _echo(mp, K=K))


def drf_detailed(mp: ManifoldParams, K: int, dp: DetailParams = DetailParams()) -> tuple[float, float]:
    """Finite-K lower and upper bounds on D*(K), including correction terms.

    Three regimes (with p <= q):
      real, q = p                  -- lower carries (1 - x)^(1/(n-p));
      real, q = p+1 or complex q=p -- exact volume, plain forms;
      real, q > p+1 or complex q>p -- upper carries the (1 - (cK)^(-2a/t)) factors.
    """
    _check_k(K)
    m = mp.normalized()
    n, p, q, beta = m.n, m.p, m.q, m.beta
    t = m.exponent
    if t == 0:
        return 0.0, 0.0
    a = dp.a
    log_ck = log_volume_coefficient(m) + math.log(K)
    x = math.exp(-2.0 / t * log_ck)
    lower = lower_coefficient(t) * x
    upper_main = upper_coefficient(t) * x
    tail = math.exp((1.0 - a) * log_ck)

    if m.field is Field.REAL and q == p:
        lower *= max(1.0 - x, 0.0) ** (1.0 / (n - p))
        upper = upper_main + p * math.exp(-tail)
    elif m.is_exact_case:
        upper = upper_main + p * math.exp(-tail)
    else:
        shrink = 1.0 - math.exp(-2.0 * a / t * log_ck)
        gamma = beta * p * (q - p + 1) / 2.0 - p
        if shrink <= 0:
            upper = math.inf
        else:
            upper = (upper_main * shrink ** (-2.0 * gamma / t)
                     + p * math.exp(-tail * shrink ** gamma))
    return lower, upper


# -- rate distortion -----------------------------------------------------------

def _check_d(D):
    if D <= 0:
        raise ValueError(f"nonpositive-distortion: D={D}")


def rdf_lower(mp: ManifoldParams, D: float) -> BoundReport:
    """Lower bound on the smallest code size reaching distortion D (inverse of drf_lower)."""
    _check_d(D)
    if mp.exponent == 0:
        return BoundReport(1.0, "lower", Validity(radius_ok=D <= 1.0, degenerate=True), _echo(mp, D=D))
    t = mp.exponent
    logk = -log_volume_coefficient(mp) - t / 2.0 * math.log(D / lower_coefficient(t))
    return BoundReport(_safe_exp(logk), "lower", Validity(radius_ok=D <= 1.0), _echo(mp, D=D))


def rdf_upper(mp: ManifoldParams, D: float) -> BoundReport:
    """Code size that suffices for distortion D (inverse of drf_upper)."""
    _check_d(D)
    if mp.exponent == 0:
        return BoundReport(1.0, "upper", Validity(radius_ok=D <= 1.0, degenerate=True), _echo(mp, D=D))
    t = mp.exponent
    logk = -log_volume_coefficient(mp) - t / 2.0 * math.log(D / upper_coefficient(t))
    return BoundReport(_safe_exp(logk), "upper", Validity(radius_ok=D <= 1.0), _echo(mp, D=D))


def _safe_exp(x: float) -> float:
    return math.inf if x > 709.0 else math.exp(x)


def drf_asymptotic(p: int, beta: int, rbar: float) -> float:
    """Limit of D*(K) as n, log2 K -> infinity with log2(K)/n -> rbar."""
    return p * 2.0 ** (-2.0 * rbar / (beta * p))


def rdf_asymptotic(p: int, beta: int, D: float) -> float:
    """Limit of log2(K*(D))/n; the inverse of :func:`drf_asymptotic`."""
    _check_d(D)
    return beta * p / 2.0 * math.log2(p / D)


# -- G_{2,1}(R) and comparisons ----------------------------------------------------

def drf_exact_circle(K: int) -> float:
    """Closed form printed for the optimal K-level quantizer of lines in R^2.

    Kept verbatim for comparison.  It disagrees with the numerical optimum
    (:func:`circle_quantizer_oracle`), which decays like K^-2, not K^-3.
    """
    _check_k(K)
    return 1.0 / (2 * K) - math.sin(math.pi / (2 * K)) / math.pi


def circle_quantizer_oracle(K: int, grid: int = 1 << 18, chunk: int = 1 << 14) -> float:
    """Distortion of K equispaced lines in R^2 against a uniform line, by brute force.

    A line is an angle phi in [0, pi); two lines at angles phi, psi are at
    squared chordal distance sin^2(phi - psi).  Equispaced codewords are
    optimal by rotational symmetry.  The expectation is a midpoint rule over
    ``grid`` cells with an explicit minimum over all K codewords.
    """
    _check_k(K)
    if grid < 10_000:
        raise ValueError("grid must be >= 1e4")
    codes = np.arange(K) * (np.pi / K)
    total = 0.0
    for start in range(0, grid, chunk):
        phi = (np.arange(start, min(start + chunk, grid)) + 0.5) * (np.pi / grid)
        d2 = np.sin(phi[:, None] - codes[None, :]) ** 2
        total += float(np.sum(np.min(d2, axis=1)))
    return total / grid


def heath_approx(n: int, K: int) -> float:
    """Earlier approximation ((n-1)/n) K^(-1/(n-1)) for complex lines."""
    if n < 2:
        raise ValueError("n must be >= 2")
    _check_k(K)
    return (n - 1) / n * K ** (-1.0 / (n - 1))


def distortion_bound_from_min_distance(mp: ManifoldParams, K: int, delta: float) -> float:
    """Distortion upper bound for any code of size K with minimum distance delta.

    Balls of radius delta/2 around the codewords are disjoint: inside them the
    error is at most delta^2/4, outside at most p.
    """
    _check_k(K)
    if delta < 0 or delta > 2:
        raise ValueError(f"invalid-radius: need 0 <= delta <= 2, got {delta}")
    cover = K * volume_main_order(mp, delta / 2.0).value
    if cover > 1.0 + 1e-12:
        raise ValueError(f"packing-violated: K * mu(B(delta/2)) = {cover:.6g} > 1")
    p = mp.normalized().p
    return delta * delta / 4.0 * cover + p * (1.0 - cover)


def max_min_decreasing_radius(mp: ManifoldParams) -> float:
    """Radius below which :func:`distortion_bound_from_min_distance` decreases in delta."""
    m = mp.normalized()
    t = m.beta * m.p * (m.n - m.p)
    return math.sqrt(4.0 * m.beta * m.p ** 2 * (m.n - m.p) / (2.0 + t))
