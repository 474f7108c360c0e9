"""MIMO beamforming with finite-rate feedback and a fixed number of on-beams.

Channel H is Lr x Lt with i.i.d. CN(0, 1) entries; s beams share power
P_on = rho / s.  The receiver feeds back the index of the codeword closest
(in chordal distance) to the span of the top-s right singular vectors of H.
Rates are in nats per channel use.

All Monte Carlo estimates for one :class:`MimoConfig` draw their channels
from the same seeded stream, so simulated, perfect-CSIT and predicted rates
are compared on common channel realisations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bounds import drf_lower, drf_upper
from .codebook import Codebook, quantize_many
from .core import Field, Plane, SeededRng, gaussian_matrices, run_blocks
from .volume import ManifoldParams

CHANNEL_STREAM = 7


class DegenerateManifoldError(ValueError):
    """s = Lt: the Grassmannian is a single point and feedback carries nothing."""


@dataclass(frozen=True)
class MimoConfig:
    lt: int
    lr: int
    s: int
    rho: float
    rfb: int
    trials: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.lt < 1 or self.lr < 1:
            raise ValueError("antenna counts must be positive")
        if not 1 <= self.s <= self.lt:
            raise ValueError(f"need 1 <= s <= Lt, got s={self.s}, Lt={self.lt}")
        if self.rho < 0:
            raise ValueError("rho must be non-negative")
        if self.rfb < 0 or self.trials < 2:
            raise ValueError("need Rfb >= 0 and trials >= 2")

    @classmethod
    def from_db(cls, lt, lr, s, rho_db, rfb, **kw) -> "MimoConfig":
        return cls(lt, lr, s, 10.0 ** (rho_db / 10.0), rfb, **kw)

    @property
    def p_on(self) -> float:
        return self.rho / self.s

    @property
    def codebook_size(self) -> int:
        return 2 ** self.rfb

    @property
    def manifold(self) -> ManifoldParams:
        return ManifoldParams(self.lt, self.s, self.s, Field.COMPLEX)

    @property
    def rng(self) -> SeededRng:
        return SeededRng(self.seed, CHANNEL_STREAM)


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float

    @classmethod
    def of(cls, x: np.ndarray) -> "Estimate":
        return cls(float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(len(x))))


@dataclass(frozen=True)
class RateReport:
    simulated: Estimate
    predicted_lower: float
    predicted_upper: float
    perfect_csit: Estimate
    eta_lower: float
    eta_upper: float
    eta_measured: float

    @property
    def eta(self) -> float:
        return self.eta_measured


def sample_channels(lt: int, lr: int, size: int, gen: np.random.Generator) -> np.ndarray:
    return gaussian_matrices(gen, size, lr, lt, Field.COMPLEX)


def sample_channel(cfg: MimoConfig, rng) -> np.ndarray:
    from .core import as_generator
    return sample_channels(cfg.lt, cfg.lr, 1, as_generator(rng))[0]


def _top_right_singular(H: np.ndarray, s: int) -> np.ndarray:
    _, _, vh = np.linalg.svd(H, full_matrices=True)
    return np.swapaxes(vh[..., :s, :], -1, -2).conj()


def optimal_beamformer(H, s: int) -> Plane:
    """Span of the right singular vectors of H for its s largest singular values."""
    H = np.asarray(H, dtype=complex)
    if not 1 <= s <= H.shape[1]:
        raise ValueError(f"need 1 <= s <= Lt, got s={s}")
    return Plane(_top_right_singular(H, s), Field.COMPLEX)


def feedback_select(B: Codebook, H, s: int) -> int:
    H = np.asarray(H, dtype=complex)
    if B.n != H.shape[1] or B.p != s or B.field is not Field.COMPLEX:
        raise ValueError("dimension-mismatch: codebook must live in G_{Lt,s}(C)")
    return int(quantize_many(B, _top_right_singular(H, s)[None])[0][0])


def _logdet_rate(H: np.ndarray, P: np.ndarray, p_on: float) -> np.ndarray:
    """log det(I + p_on H P P^H H^H), via the s x s form."""
    hp = H @ P
    m = np.eye(P.shape[-1]) + p_on * (np.swapaxes(hp.conj(), -1, -2) @ hp)
    sign, logdet = np.linalg.slogdet(m)
    return logdet


def _eigen_rate(H: np.ndarray, s: int, scale: float) -> np.ndarray:
    """sum_{i<=s} ln(1 + scale * lambda_i), lambda_i the top eigenvalues of H H^H."""
    sv = np.linalg.svd(H, compute_uv=False)[..., :s]
    return np.sum(np.log1p(scale * sv ** 2), axis=-1)


def _channel_blocks(cfg: MimoConfig, fn, workers: int) -> np.ndarray:
    def block(gen, _b, size):
        return fn(sample_channels(cfg.lt, cfg.lr, size, gen))
    return np.concatenate(run_blocks(block, cfg.rng, cfg.trials, workers))


def simulate_rate(cfg: MimoConfig, B: Optional[Codebook] = None, workers: int = 1) -> Estimate:
    """Average information rate with the chordal feedback rule.

    ``B=None`` feeds back the exact optimal beamformer (perfect CSIT).
    """
    if B is not None:
        if B.K > cfg.codebook_size:
            raise ValueError(f"codebook has {B.K} entries, more than 2^Rfb = {cfg.codebook_size}")
        if (B.n, B.p, B.field) != (cfg.lt, cfg.s, Field.COMPLEX):
            raise ValueError("dimension-mismatch: codebook must live in G_{Lt,s}(C)")

    def rates(H):
        V = _top_right_singular(H, cfg.s)
        if B is None:
            P = V
        else:
            idx, _ = quantize_many(B, V)
            P = B.generators[idx]
        return _logdet_rate(H, P, cfg.p_on)

    return Estimate.of(_channel_blocks(cfg, rates, workers))


def selected_distortion(cfg: MimoConfig, B: Codebook, workers: int = 1) -> Estimate:
    """Mean d_c^2 between the fed-back codeword and the optimal beamformer."""
    return Estimate.of(_channel_blocks(
        cfg, lambda H: quantize_many(B, _top_right_singular(H, cfg.s))[1], workers))


def perfect_csit_rate(cfg: MimoConfig, workers: int = 1) -> Estimate:
    return Estimate.of(_channel_blocks(cfg, lambda H: _eigen_rate(H, cfg.s, cfg.p_on), workers))


def eta_from_distortion(D: float, s: int) -> float:
    """Power efficiency factor 1 - D/s, clipped to [0, 1]."""
    return min(max(1.0 - D / s, 0.0), 1.0)


def eta_interval(cfg: MimoConfig) -> tuple[float, float]:
    """(eta_lower, eta_upper) from the distortion-rate bounds at K = 2^Rfb."""
    if cfg.s == cfg.lt:
        raise DegenerateManifoldError("degenerate-manifold: s = Lt leaves nothing to quantize")
    mp, K = cfg.manifold, cfg.codebook_size
    return (eta_from_distortion(drf_upper(mp, K).value, cfg.s),
            eta_from_distortion(drf_lower(mp, K).value, cfg.s))


def predict_rate(cfg: MimoConfig, workers: int = 1) -> tuple[float, float]:
    """Rate band E[sum ln(1 + eta P_on lambda_i)] for eta at both ends of its interval."""
    eta_lo, eta_hi = eta_interval(cfg)

    def both(H):
        return np.stack([_eigen_rate(H, cfg.s, eta_lo * cfg.p_on),
                         _eigen_rate(H, cfg.s, eta_hi * cfg.p_on)], axis=1)

    r = _channel_blocks(cfg, both, workers)
    return float(np.mean(r[:, 0])), float(np.mean(r[:, 1]))


def rate_report(cfg: MimoConfig, B: Codebook, workers: int = 1) -> RateReport:
    sim = simulate_rate(cfg, B, workers)
    perfect = perfect_csit_rate(cfg, workers)
    lo, hi = predict_rate(cfg, workers)
    eta_lo, eta_hi = eta_interval(cfg)
    eta_meas = eta_from_distortion(selected_distortion(cfg, B, workers).mean, cfg.s)
    return RateReport(sim, lo, hi, perfect, eta_lo, eta_hi, eta_meas)
