"""Planes on the Grassmann manifold G_{n,p}(L), L in {R, C}.

A plane is stored as an n x p generator matrix with orthonormal columns.
Generators are only defined up to right multiplication by a p x p unitary,
so everything here is written in terms of gauge-invariant quantities.
"""
from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

#: Samples per Monte Carlo block.  Fixed so results do not depend on threads.
BLOCK_SIZE = 1 << 15

ORTHO_TOL = 1e-10


class Field(enum.Enum):
    REAL = "real"
    COMPLEX = "complex"

    @property
    def beta(self) -> int:
        return 1 if self is Field.REAL else 2

    @property
    def dtype(self):
        return np.float64 if self is Field.REAL else np.complex128

    @classmethod
    def parse(cls, value) -> "Field":
        if isinstance(value, Field):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown field {value!r}; expected 'real' or 'complex'") from None


@dataclass(frozen=True)
class SeededRng:
    """Reproducible source of independent random streams.

    ``generator(block)`` always returns the same stream for the same
    ``(seed, stream, block)`` triple, which is what lets Monte Carlo work be
    split across threads without changing the result.
    """

    seed: int
    stream: int = 0

    def generator(self, block: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, block))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, stream: int) -> "SeededRng":
        return SeededRng(self.seed, self.stream * 1_000_003 + stream + 1)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, SeededRng):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return np.random.default_rng(rng)
    raise TypeError(f"cannot make a random generator from {type(rng).__name__}")


@dataclass(frozen=True, eq=False)
class Plane:
    """A point of G_{n,p}(L) given by an orthonormal n x p generator."""

    generator: np.ndarray
    field: Field = Field.REAL

    def __post_init__(self):
        g = np.asarray(self.generator, dtype=self.field.dtype)
        if g.ndim != 2 or g.shape[1] < 1 or g.shape[1] > g.shape[0]:
            raise ValueError(f"invalid-dimension: generator shape {g.shape}")
        gram = g.conj().T @ g
        if np.max(np.abs(gram - np.eye(g.shape[1]))) > ORTHO_TOL:
            raise ValueError("generator columns are not orthonormal")
        g.setflags(write=False)
        object.__setattr__(self, "generator", g)

    @property
    def n(self) -> int:
        return self.generator.shape[0]

    @property
    def p(self) -> int:
        return self.generator.shape[1]

    @classmethod
    def from_matrix(cls, a, field: Field | str | None = None) -> "Plane":
        """Span of the columns of ``a`` (must have full column rank)."""
        a = np.asarray(a)
        if a.ndim == 1:
            a = a[:, None]
        if field is None:
            field = Field.COMPLEX if np.iscomplexobj(a) else Field.REAL
        field = Field.parse(field)
        return cls(orthonormalize(a.astype(field.dtype)), field)

    @classmethod
    def span_of_basis(cls, n: int, idx: Sequence[int], field: Field | str = Field.REAL) -> "Plane":
        field = Field.parse(field)
        g = np.zeros((n, len(idx)), dtype=field.dtype)
        g[list(idx), range(len(idx))] = 1.0
        return cls(g, field)

    def same_as(self, other: "Plane", tol: float = 1e-10) -> bool:
        return (self.n, self.p, self.field) == (other.n, other.p, other.field) and \
            chordal_distance_sq(self, other) <= tol

    def to_dict(self) -> dict:
        return plane_to_dict(self)

    def __repr__(self):
        return f"Plane(n={self.n}, p={self.p}, field={self.field.value})"


@dataclass(frozen=True)
class PrincipalAngles:
    angles: np.ndarray = dc_field(repr=True)

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        a.setflags(write=False)
        object.__setattr__(self, "angles", a)

    def __len__(self):
        return len(self.angles)

    def __iter__(self):
        return iter(self.angles)

    def chordal_sq(self) -> float:
        return float(np.sum(np.sin(self.angles) ** 2))


def orthonormalize(a: np.ndarray) -> np.ndarray:
    """Q factor of ``a`` (stacked allowed) with the R diagonal made real positive."""
    q, r = np.linalg.qr(a)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    mag = np.abs(d)
    phase = np.where(mag > 0, d / np.where(mag > 0, mag, 1.0), 1.0)
    return q * phase[..., None, :]


def _check_dims(n: int, p: int):
    if not (isinstance(n, (int, np.integer)) and isinstance(p, (int, np.integer))):
        raise TypeError("n and p must be integers")
    if p < 1 or p > n:
        raise ValueError(f"invalid-dimension: need 1 <= p <= n, got n={n}, p={p}")


def gaussian_matrices(gen: np.random.Generator, size: int, n: int, p: int, field: Field) -> np.ndarray:
    """``size`` i.i.d. n x p Gaussian matrices, complex entries with unit variance."""
    if field is Field.REAL:
        return gen.standard_normal((size, n, p))
    x = gen.standard_normal((size, n, p, 2)) * np.sqrt(0.5)
    return x[..., 0] + 1j * x[..., 1]


def sample_generators(n: int, p: int, field: Field | str, size: int, rng) -> np.ndarray:
    """Stack of ``size`` generator matrices drawn from the invariant measure."""
    field = Field.parse(field)
    _check_dims(n, p)
    gen = as_generator(rng)
    return orthonormalize(gaussian_matrices(gen, size, n, p, field))


def sample_uniform(n: int, p: int, field: Field | str, rng) -> Plane:
    """Draw one plane from the invariant (isotropic) distribution on G_{n,p}."""
    field = Field.parse(field)
    return Plane(sample_generators(n, p, field, 1, rng)[0], field)


def _pair_check(a: Plane, b: Plane):
    if a.n != b.n:
        raise ValueError(f"dimension-mismatch: ambient dimensions {a.n} and {b.n}")
    if a.field is not b.field:
        raise ValueError("dimension-mismatch: planes are over different fields")


def principal_angles(a: Plane, b: Plane) -> PrincipalAngles:
    _pair_check(a, b)
    s = np.linalg.svd(a.generator.conj().T @ b.generator, compute_uv=False)
    s = np.clip(s, 0.0, 1.0)
    return PrincipalAngles(np.sort(np.arccos(s)))


def chordal_distance_sq(a: Plane, b: Plane) -> float:
    """Squared chordal distance min(p, q) - tr(A^H B B^H A); p and q may differ."""
    _pair_check(a, b)
    m = min(a.p, b.p)
    cross = a.generator.conj().T @ b.generator
    d2 = m - float(np.sum(cross.real ** 2 + cross.imag ** 2))
    return min(max(d2, 0.0), float(m))


def chordal_distance(a: Plane, b: Plane) -> float:
    return float(np.sqrt(chordal_distance_sq(a, b)))


def complement(a: Plane) -> Plane:
    if a.p == a.n:
        raise ValueError("no-complement: plane fills the ambient space")
    q, _ = np.linalg.qr(a.generator, mode="complete")
    return Plane(orthonormalize(q[:, a.p:]), a.field)


def projector_embedding(gens: np.ndarray) -> np.ndarray:
    """Real vectors e(P) with e(P).e(Q) = tr(Pi_P Pi_Q) for projectors Pi = G G^H.

    ``gens`` has shape (..., n, p); the result has shape (..., n*n).  This turns
    squared chordal distances into a single real matrix product.
    """
    gens = np.asarray(gens)
    proj = gens @ np.swapaxes(gens.conj(), -1, -2)
    n = proj.shape[-1]
    iu = np.triu_indices(n, 1)
    parts = [np.diagonal(proj, axis1=-2, axis2=-1).real,
             np.sqrt(2.0) * proj[..., iu[0], iu[1]].real]
    if np.iscomplexobj(proj):
        parts.append(np.sqrt(2.0) * proj[..., iu[0], iu[1]].imag)
    return np.ascontiguousarray(np.concatenate(parts, axis=-1))


def block_sizes(total: int, block_size: int = BLOCK_SIZE) -> list[int]:
    sizes = [block_size] * (total // block_size)
    if total % block_size:
        sizes.append(total % block_size)
    return sizes


def run_blocks(fn: Callable[[np.random.Generator, int, int], object], rng: SeededRng,
               total: int, workers: int = 1, block_size: int = BLOCK_SIZE) -> list:
    """Apply ``fn(gen, block_index, size)`` to fixed-size sample blocks.

    Each block gets its own stream, so the list of results is identical for
    any number of workers.
    """
    sizes = block_sizes(total, block_size)

    def task(b):
        return fn(rng.generator(b), b, sizes[b])

    if workers <= 1 or len(sizes) <= 1:
        return [task(b) for b in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, range(len(sizes))))


def plane_to_dict(plane: Plane) -> dict:
    g = plane.generator
    if plane.field is Field.REAL:
        data = [float(x) for x in g.ravel()]
    else:
        data = [[float(z.real), float(z.imag)] for z in g.ravel()]
    return {"n": plane.n, "p": plane.p, "field": plane.field.value, "data": data}


def plane_from_dict(obj: dict) -> Plane:
    try:
        n, p = int(obj["n"]), int(obj["p"])
        field = Field.parse(obj["field"])
        data = obj["data"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"schema-mismatch: plane object missing {exc}") from None
    if len(data) != n * p:
        raise ValueError(f"schema-mismatch: expected {n * p} entries, got {len(data)}")
    if field is Field.REAL:
        g = np.array(data, dtype=float).reshape(n, p)
    else:
        arr = np.array(data, dtype=float)
        if arr.shape != (n * p, 2):
            raise ValueError("schema-mismatch: complex data must be [re, im] pairs")
        g = (arr[:, 0] + 1j * arr[:, 1]).reshape(n, p)
    return Plane(g, field)


def format_float(x: float) -> str:
    """17 significant digits: always round-trips an IEEE double."""
    x = float(x)
    if not math.isfinite(x):
        return "NaN" if math.isnan(x) else ("Infinity" if x > 0 else "-Infinity")
    return "%.17g" % x


def json_dumps(obj) -> str:
    """JSON text with every float written by :func:`format_float`."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {json_dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(json_dumps(v) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)) or obj is None or isinstance(obj, str):
        return json.dumps(obj if not isinstance(obj, np.bool_) else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")
