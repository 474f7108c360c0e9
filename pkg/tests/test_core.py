import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from grassquant.core import (
    Field, Plane, SeededRng, chordal_distance, chordal_distance_sq, complement, json_dumps,
    orthonormalize, plane_from_dict, plane_to_dict, principal_angles, run_blocks,
    sample_generators, sample_uniform,
)


def random_unitary(gen, n, field):
    g = gen.standard_normal((n, n))
    if field is Field.COMPLEX:
        g = g + 1j * gen.standard_normal((n, n))
    return orthonormalize(g)


def test_field_beta():
    assert Field.REAL.beta == 1 and Field.COMPLEX.beta == 2
    assert Field.parse("complex") is Field.COMPLEX
    with pytest.raises(ValueError):
        Field.parse("quaternion")


def test_seeded_rng_reproducible():
    a = SeededRng(42, 3).generator(5).standard_normal(10)
    b = SeededRng(42, 3).generator(5).standard_normal(10)
    c = SeededRng(42, 4).generator(5).standard_normal(10)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_run_blocks_independent_of_workers():
    def fn(gen, _b, size):
        return gen.standard_normal(size)

    one = np.concatenate(run_blocks(fn, SeededRng(7), 100_000, workers=1))
    four = np.concatenate(run_blocks(fn, SeededRng(7), 100_000, workers=4))
    assert np.array_equal(one, four)


@pytest.mark.parametrize("field", list(Field))
def test_sample_uniform_single_point(field):
    P = sample_uniform(1, 1, field, SeededRng(1))
    assert P.generator.shape == (1, 1)
    assert abs(abs(P.generator[0, 0]) - 1.0) < 1e-15


@pytest.mark.parametrize("n,p", [(0, 1), (3, 0), (3, 4)])
def test_sample_uniform_invalid_dimension(n, p):
    with pytest.raises(ValueError, match="invalid-dimension"):
        sample_uniform(n, p, Field.REAL, SeededRng(0))


def test_sample_uniform_positive_triangular_gauge():
    gens = sample_generators(5, 3, Field.COMPLEX, 200, SeededRng(2))
    eye = np.eye(3)
    assert np.allclose(np.swapaxes(gens.conj(), 1, 2) @ gens, eye, atol=1e-12)


def test_line_angle_uniform_ks():
    gens = sample_generators(2, 1, Field.REAL, 100_000, SeededRng(11))
    theta = np.arccos(np.clip(np.abs(gens[:, 0, 0]), 0.0, 1.0))
    ks = stats.kstest(theta, stats.uniform(0, math.pi / 2).cdf).statistic
    assert ks < 0.01


def test_ball_frequency_exact_complex_case():
    from grassquant.volume import ManifoldParams, volume_monte_carlo
    r = volume_monte_carlo(ManifoldParams(4, 2, 2, Field.COMPLEX), 0.5, 10**7, SeededRng(5))
    target = 0.5 ** 9
    sigma = math.sqrt(target * (1 - target) / 10**7)
    assert abs(r.value - target) <= 3 * sigma


def test_principal_angles_examples():
    P = sample_uniform(5, 2, Field.COMPLEX, SeededRng(3))
    assert np.allclose(principal_angles(P, P).angles, 0.0, atol=1e-7)

    A = Plane.span_of_basis(4, [0, 1])
    B = Plane.span_of_basis(4, [2, 3])
    assert np.allclose(principal_angles(A, B).angles, [math.pi / 2] * 2)

    for t in np.linspace(0, math.pi / 2, 7):
        line = Plane(np.array([[math.cos(t)], [math.sin(t)]]), Field.REAL)
        ang = principal_angles(Plane.span_of_basis(2, [0]), line).angles
        assert abs(ang[0] - t) < 1e-7


def test_principal_angles_sorted_in_range():
    gen = np.random.default_rng(0)
    for _ in range(50):
        P = sample_uniform(6, 3, Field.REAL, gen)
        Q = sample_uniform(6, 2, Field.REAL, gen)
        a = principal_angles(P, Q).angles
        assert len(a) == 2
        assert np.all(np.diff(a) >= 0) and a.min() >= 0 and a.max() <= math.pi / 2


def test_dimension_mismatch():
    P = sample_uniform(4, 2, Field.REAL, SeededRng(0))
    Q = sample_uniform(5, 2, Field.REAL, SeededRng(0))
    R = sample_uniform(4, 2, Field.COMPLEX, SeededRng(0))
    for other in (Q, R):
        with pytest.raises(ValueError, match="dimension-mismatch"):
            chordal_distance_sq(P, other)
        with pytest.raises(ValueError, match="dimension-mismatch"):
            principal_angles(P, other)


def test_chordal_distance_examples():
    P = sample_uniform(4, 2, Field.REAL, SeededRng(4))
    assert chordal_distance_sq(P, P) == pytest.approx(0.0, abs=1e-14)
    assert chordal_distance_sq(Plane.span_of_basis(4, [0, 1]), Plane.span_of_basis(4, [2, 3])) == 2.0
    line = Plane(np.array([[0.6], [0.8], [0.0]]), Field.REAL)
    assert chordal_distance_sq(line, Plane.span_of_basis(3, [0, 1])) == pytest.approx(0.0, abs=1e-15)


def test_chordal_matches_angle_sum():
    gen = np.random.default_rng(8)
    for field in Field:
        for _ in range(40):
            P = sample_uniform(6, 2, field, gen)
            Q = sample_uniform(6, 3, field, gen)
            s2 = float(np.sum(np.sin(principal_angles(P, Q).angles) ** 2))
            assert abs(chordal_distance_sq(P, Q) - s2) < 1e-9
            assert 0.0 <= chordal_distance_sq(P, Q) <= 2.0


def test_complement_examples():
    C = complement(Plane.span_of_basis(3, [0]))
    assert C.p == 2
    assert C.same_as(Plane.span_of_basis(3, [1, 2]))
    P = sample_uniform(5, 2, Field.COMPLEX, SeededRng(9))
    Pc = complement(P)
    assert np.abs(P.generator.conj().T @ Pc.generator).max() < 1e-10
    assert chordal_distance_sq(P, complement(Pc)) <= 1e-10
    with pytest.raises(ValueError, match="no-complement"):
        complement(sample_uniform(3, 3, Field.REAL, SeededRng(0)))


def test_complement_duality_5_2_3():
    gen = np.random.default_rng(10)
    P = sample_uniform(5, 2, Field.COMPLEX, gen)
    Q = sample_uniform(5, 3, Field.COMPLEX, gen)
    assert abs(chordal_distance_sq(P, Q) - chordal_distance_sq(complement(P), complement(Q))) < 1e-9


@pytest.mark.parametrize("n,p,q,field", [(4, 2, 2, Field.REAL), (5, 1, 3, Field.COMPLEX),
                                         (6, 2, 5, Field.REAL), (7, 3, 3, Field.COMPLEX)])
def test_complement_duality_many(n, p, q, field):
    gen = np.random.default_rng(n * 100 + p * 10 + q)
    for _ in range(250):
        P = sample_uniform(n, p, field, gen)
        Q = sample_uniform(n, q, field, gen)
        assert abs(chordal_distance_sq(P, Q) - chordal_distance_sq(complement(P), complement(Q))) < 1e-9


@pytest.mark.parametrize("n,p,q", [(5, 1, 2), (5, 2, 3), (6, 2, 2), (6, 1, 4), (7, 3, 5)])
def test_plane_matching_complement_identity(n, p, q):
    gen = np.random.default_rng(n + 7 * p + 13 * q)
    pp = min(p, n - q)
    for field in Field:
        for _ in range(100):
            P = sample_uniform(n, p, field, gen)
            Q = sample_uniform(n, q, field, gen)
            assert abs(chordal_distance_sq(P, Q) - (pp - chordal_distance_sq(P, complement(Q)))) < 1e-9


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 7), data=st.data(), complex_=st.booleans(), seed=st.integers(0, 2**32 - 1))
def test_gauge_and_left_invariance(n, data, complex_, seed):
    field = Field.COMPLEX if complex_ else Field.REAL
    p = data.draw(st.integers(1, n))
    q = data.draw(st.integers(1, n))
    gen = np.random.default_rng(seed)
    P = sample_uniform(n, p, field, gen)
    Q = sample_uniform(n, q, field, gen)
    d = chordal_distance_sq(P, Q)
    ang = principal_angles(P, Q).angles

    U = random_unitary(gen, p, field)
    PU = Plane(P.generator @ U, field)
    assert abs(chordal_distance_sq(PU, Q) - d) < 1e-10
    assert np.allclose(np.cos(principal_angles(PU, Q).angles), np.cos(ang), atol=1e-10)

    A = random_unitary(gen, n, field)
    AP, AQ = Plane(A @ P.generator, field), Plane(A @ Q.generator, field)
    assert abs(chordal_distance_sq(AP, AQ) - d) < 1e-9
    # sqrt amplifies roundoff near 0 (contained planes)
    if d > 1e-6:
        assert abs(chordal_distance(AP, AQ) - math.sqrt(d)) < 1e-9
    assert 0.0 <= d <= min(p, q)


def test_plane_rejects_non_orthonormal():
    with pytest.raises(ValueError):
        Plane(np.array([[1.0], [1.0]]), Field.REAL)


@pytest.mark.parametrize("field", list(Field))
def test_plane_json_round_trip(field):
    P = sample_uniform(5, 2, field, SeededRng(12))
    obj = json.loads(json_dumps(plane_to_dict(P)))
    assert obj["field"] == field.value and len(obj["data"]) == 10
    Q = plane_from_dict(obj)
    assert np.array_equal(P.generator, Q.generator)


def test_plane_json_schema_mismatch():
    with pytest.raises(ValueError, match="schema-mismatch"):
        plane_from_dict({"n": 2, "p": 1, "field": "real"})
    with pytest.raises(ValueError, match="schema-mismatch"):
        plane_from_dict({"n": 2, "p": 1, "field": "real", "data": [1.0]})
    with pytest.raises(ValueError, match="schema-mismatch"):
        plane_from_dict({"n": 2, "p": 1, "field": "complex", "data": [1.0, 0.0]})
