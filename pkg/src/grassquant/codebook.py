"""Codebooks on G_{n,p}: random and max-min designs, quantization, distortion."""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .core import (Field, Plane, SeededRng, block_sizes, gaussian_matrices, json_dumps,
                   orthonormalize, plane_from_dict, plane_to_dict, projector_embedding,
                   run_blocks, sample_generators)
from .volume import ManifoldParams

# Distortion kernels work on chunks of queries to bound memory (chunk x K floats).
_QUERY_CHUNK = 4096


@dataclass(eq=False)
class Codebook:
    """K planes of G_{n,p}(L), stored as a (K, n, p) stack of generators."""

    generators: np.ndarray
    field: Field = Field.REAL
    method: str = "loaded"
    seed: Optional[int] = None
    design_log: list = dc_field(default_factory=list)

    def __post_init__(self):
        self.field = Field.parse(self.field)
        g = np.asarray(self.generators, dtype=self.field.dtype)
        if g.ndim != 3 or g.shape[0] < 1:
            raise ValueError(f"codebook generators must have shape (K, n, p), got {g.shape}")
        gram = np.swapaxes(g.conj(), 1, 2) @ g
        if np.max(np.abs(gram - np.eye(g.shape[2]))) > 1e-10:
            raise ValueError("codebook generators are not orthonormal")
        g.setflags(write=False)
        self.generators = g
        self._emb = None

    @classmethod
    def from_planes(cls, planes, **kw) -> "Codebook":
        planes = list(planes)
        if not planes:
            raise ValueError("a codebook needs at least one plane")
        shapes = {(pl.n, pl.p, pl.field) for pl in planes}
        if len(shapes) != 1:
            raise ValueError("all planes in a codebook must share n, p and field")
        return cls(np.stack([pl.generator for pl in planes]), planes[0].field, **kw)

    @property
    def K(self) -> int:
        return self.generators.shape[0]

    @property
    def n(self) -> int:
        return self.generators.shape[1]

    @property
    def p(self) -> int:
        return self.generators.shape[2]

    def __len__(self):
        return self.K

    def __getitem__(self, i) -> Plane:
        return Plane(self.generators[i], self.field)

    @property
    def planes(self) -> list[Plane]:
        return [self[i] for i in range(self.K)]

    @property
    def embedding(self) -> np.ndarray:
        if self._emb is None:
            self._emb = projector_embedding(self.generators)
        return self._emb

    def to_dict(self) -> dict:
        return {"n": self.n, "p": self.p, "field": self.field.value, "K": self.K,
                "method": self.method, "seed": self.seed,
                "planes": [plane_to_dict(pl) for pl in self.planes]}

    @classmethod
    def from_dict(cls, obj: dict) -> "Codebook":
        try:
            planes = [plane_from_dict(d) for d in obj["planes"]]
            n, p, K = int(obj["n"]), int(obj["p"]), int(obj["K"])
            fld = Field.parse(obj["field"])
        except KeyError as exc:
            raise ValueError(f"schema-mismatch: codebook object missing {exc}") from None
        if len(planes) != K or any((pl.n, pl.p, pl.field) != (n, p, fld) for pl in planes):
            raise ValueError("schema-mismatch: planes disagree with codebook header")
        return cls.from_planes(planes, method=obj.get("method", "loaded"), seed=obj.get("seed"))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(json_dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path) -> "Codebook":
        with open(path) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"schema-mismatch: {path} is not valid JSON ({exc})") from None
        return cls.from_dict(obj)


@dataclass(frozen=True)
class DistortionEstimate:
    mean: float
    stderr: float
    samples: int


def _square_params(mp: ManifoldParams) -> ManifoldParams:
    if mp.p != mp.q:
        raise ValueError("codebook design needs p == q")
    return mp


def random_codebook(mp: ManifoldParams, K: int, rng) -> Codebook:
    """K planes drawn independently from the invariant measure."""
    _square_params(mp)
    if K < 1:
        raise ValueError("K must be >= 1")
    seed = rng.seed if isinstance(rng, SeededRng) else None
    gens = sample_generators(mp.n, mp.p, mp.field, K, rng)
    return Codebook(gens, mp.field, method="random", seed=seed)


def _nearest(code_emb: np.ndarray, query_emb: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Index of, and squared chordal distance to, the nearest codeword for each query."""
    idx = np.empty(len(query_emb), dtype=np.int64)
    d2 = np.empty(len(query_emb))
    for s in range(0, len(query_emb), _QUERY_CHUNK):
        # row-wise products: a query's result must not depend on its batch
        overlap = (query_emb[s:s + _QUERY_CHUNK, None, :] @ code_emb.T)[:, 0, :]
        j = np.argmax(overlap, axis=1)  # first maximum, i.e. lowest index on ties
        idx[s:s + _QUERY_CHUNK] = j
        d2[s:s + _QUERY_CHUNK] = m - overlap[np.arange(len(j)), j]
    np.clip(d2, 0.0, m, out=d2)
    return idx, d2


def quantize_many(C: Codebook, gens: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`quantize` for a (S, n, q) stack of query generators."""
    gens = np.asarray(gens)
    if gens.ndim != 3 or gens.shape[1] != C.n:
        raise ValueError(f"dimension-mismatch: queries {gens.shape} vs codebook n={C.n}")
    if np.iscomplexobj(gens) and C.field is Field.REAL:
        raise ValueError("dimension-mismatch: complex queries for a real codebook")
    return _nearest(C.embedding, projector_embedding(gens), min(C.p, gens.shape[2]))


def quantize(C: Codebook, Q: Plane) -> tuple[int, float]:
    if Q.n != C.n or Q.field is not C.field:
        raise ValueError("dimension-mismatch: query plane incompatible with codebook")
    idx, d2 = quantize_many(C, Q.generator[None])
    return int(idx[0]), float(d2[0])


def pairwise_distance_sq(C: Codebook) -> np.ndarray:
    e = C.embedding
    d2 = C.p - e @ e.T
    np.clip(d2, 0.0, C.p, out=d2)
    np.fill_diagonal(d2, np.inf)
    return d2


def min_distance(C: Codebook) -> float:
    if C.K < 2:
        raise ValueError("singleton-codebook: minimum distance needs K >= 2")
    return float(np.sqrt(np.min(pairwise_distance_sq(C))))


def uniform_query_blocks(C: Codebook, q: int, samples: int, rng: SeededRng):
    """The query stream used by :func:`estimate_distortion`, block by block."""
    for b, size in enumerate(block_sizes(samples)):
        yield sample_generators(C.n, q, C.field, size, rng.generator(b))


def estimate_distortion(C: Codebook, q: Optional[int] = None, samples: int = 100_000,
                        rng: SeededRng = SeededRng(0), workers: int = 1) -> DistortionEstimate:
    """Monte Carlo estimate of E_Q[min_i d_c^2(P_i, Q)] for Q uniform on G_{n,q}."""
    q = C.p if q is None else q
    if samples < 100:
        raise ValueError("samples must be >= 100")
    if not 1 <= q <= C.n:
        raise ValueError(f"invalid-dimension: q={q} for n={C.n}")

    def block(gen, _b, size):
        gens = sample_generators(C.n, q, C.field, size, gen)
        return quantize_many(C, gens)[1]

    d2 = np.concatenate(run_blocks(block, rng, samples, workers))
    return DistortionEstimate(float(np.mean(d2)), float(np.std(d2, ddof=1) / math.sqrt(samples)),
                              samples)


def maxmin_design(mp: ManifoldParams, K: int, iters: int = 2000, restarts: int = 8,
                  rng: SeededRng = SeededRng(0), workers: int = 1,
                  step_start: float = 1.0, step_end: float = 1e-3) -> Codebook:
    """Codebook that (locally) maximises the minimum pairwise chordal distance.

    Each restart starts from a random codebook.  Every iteration takes the
    closest pair, perturbs one member towards a fresh uniform plane with a
    geometrically shrinking step, and keeps the move only if the minimum
    distance does not decrease.  The best restart wins; ties go to the lowest
    restart index.
    """
    _square_params(mp)
    if K < 2:
        raise ValueError("max-min design needs K >= 2")
    if not isinstance(rng, SeededRng):
        raise TypeError("maxmin_design needs a SeededRng for reproducibility")

    def run(r):
        return _maxmin_restart(mp, K, iters, rng.child(r).generator(), step_start, step_end)

    if workers > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(restarts)))
    else:
        results = [run(r) for r in range(restarts)]

    best = max(range(restarts), key=lambda r: (results[r][1], -r))
    log = [{"restart": r, "initial_min_distance": math.sqrt(res[2]),
            "min_distance": math.sqrt(res[1]), "accepted": len(res[3]),
            "trace": [math.sqrt(x) for x in res[3]]}
           for r, res in enumerate(results)]
    return Codebook(results[best][0], mp.field, method="maxmin", seed=rng.seed, design_log=log)


def _maxmin_restart(mp, K, iters, gen, step_start, step_end):
    n, p, fld = mp.n, mp.p, mp.field
    gens = sample_generators(n, p, fld, K, gen).copy()
    emb = projector_embedding(gens)
    d2 = p - emb @ emb.T
    np.fill_diagonal(d2, np.inf)
    row_min = d2.min(axis=1)
    initial = float(row_min.min())
    ratio = (step_end / step_start) ** (1.0 / max(iters - 1, 1))
    trace = []  # global min d^2 after each accepted move
    for it in range(iters):
        step = step_start * ratio ** it
        a = int(np.argmin(row_min))
        b = int(np.argmin(d2[a]))
        current = row_min[a]
        mover = a if gen.random() < 0.5 else b
        fresh = orthonormalize(gaussian_matrices(gen, 1, n, p, fld)[0])
        cand = orthonormalize(gens[mover] + step * fresh)
        cand_emb = projector_embedding(cand)
        cand_d2 = p - emb @ cand_emb
        cand_d2[mover] = np.inf
        if cand_d2.min() < current:
            continue
        gens[mover] = cand
        emb[mover] = cand_emb
        old_row = d2[mover].copy()
        d2[mover] = cand_d2
        d2[:, mover] = cand_d2
        row_min[mover] = cand_d2.min()
        # Rows whose nearest neighbour was the mover must be rescanned.
        stale = np.flatnonzero(old_row <= row_min)
        closer = cand_d2 < row_min
        row_min[closer] = cand_d2[closer]
        for i in stale:
            if i != mover:
                row_min[i] = d2[i].min()
        trace.append(max(float(row_min.min()), 0.0))
    return gens, float(max(row_min.min(), 0.0)), max(initial, 0.0), trace
