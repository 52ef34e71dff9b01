import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sparse_imc.bounds import beta_gaussian
from sparse_imc.discretization import (
    ClassTooLarge,
    DiscretizationScheme,
    enumerate_class,
    kraft_sum,
    level_values,
    levels,
    location_levels,
    penalty,
    quantize_factor,
)
from sparse_imc.model import ImcModel, validate_bounds


def test_levels_examples():
    assert levels(10, 10, 1) == 16
    assert levels(4, 2, 1) == 4
    assert levels(10, 10, 2) == 128
    with pytest.raises(ValueError):
        levels(10, 10, 0.5)


@pytest.mark.parametrize("n,beta", [(8, 1), (16, 1.5), (4, 2.5), (32, 1.2)])
def test_levels_exact_powers_not_bumped(n, beta):
    # brute force: smallest power of two >= n ** beta
    target = n**beta
    k = 0
    while 2**k < target * (1 - 1e-12):
        k += 1
    assert levels(n, 1, beta) == 2**k


def test_location_levels():
    assert [location_levels(k) for k in (1, 2, 3, 4, 5, 8, 9)] == [1, 2, 4, 4, 8, 8, 16]


def test_level_values_endpoints():
    np.testing.assert_allclose(level_values(2.0, 5), [-2, -1, 0, 1, 2])
    np.testing.assert_allclose(level_values(1.0, 2), [-1, 1])


def test_quantize_zero_matrix():
    np.testing.assert_array_equal(quantize_factor(np.zeros((3, 2)), 1.0, 8), np.zeros((3, 2)))


def test_quantize_two_levels():
    out = quantize_factor([[0.3, -0.01, 0.0]], 1.0, 2)
    np.testing.assert_array_equal(out, [[1.0, -1.0, 0.0]])
    assert abs(out[0, 0] - 0.3) <= 1 / (2 - 1)


def test_quantize_nearest_by_brute_force():
    rng = np.random.default_rng(0)
    c, L = 1.7, 8
    vals = level_values(c, L)
    M = rng.uniform(-c, c, size=(20, 20))
    Mq = quantize_factor(M, c, L)
    brute = vals[np.argmin(np.abs(M[..., None] - vals), axis=-1)]
    np.testing.assert_array_equal(Mq, brute)


def test_quantize_tie_goes_toward_zero():
    # levels for c=1, L=4: -1, -1/3, 1/3, 1; midpoint 2/3 lies between 1/3 and 1
    vals = level_values(1.0, 4)
    mid = (vals[2] + vals[3]) / 2
    assert quantize_factor([[mid]], 1.0, 4)[0, 0] == vals[2]
    assert quantize_factor([[-mid]], 1.0, 4)[0, 0] == vals[1]


def test_quantize_error_bound_large_l():
    rng = np.random.default_rng(1)
    L = 2**16
    M = rng.uniform(-1, 1, size=(50, 50))
    assert np.abs(M - quantize_factor(M, 1.0, L)).max() <= 1 / (L - 1)


def test_quantize_out_of_range():
    with pytest.raises(ValueError):
        quantize_factor([[1.5]], 1.0, 4)


factor = arrays(np.float64, (3, 4), elements=st.floats(-2, 2))


@settings(max_examples=100, deadline=None)
@given(M=factor, L=st.sampled_from([2, 4, 8, 64, 1024]))
def test_quantize_properties(M, L):
    Mq = quantize_factor(M, 2.0, L)
    np.testing.assert_array_equal(quantize_factor(Mq, 2.0, L), Mq)  # idempotent
    np.testing.assert_array_equal(Mq == 0, M == 0)  # support preserved
    assert np.abs(Mq).max() <= 2.0
    assert np.all(np.abs(Mq - M)[M != 0] <= 2.0 / (L - 1) * (1 + 1e-12))


def test_penalty_examples():
    scheme = DiscretizationScheme(16, r1=2, r=2, r2=3)
    assert scheme.l_loc_p == 4
    P = np.array([[0.2, 0.0], [0.5, -1.0]])
    Q = np.zeros((2, 3))
    # bare per-nonzero code: 3 * (log2 4 + log2 16)
    assert penalty(P, Q, scheme, count_header=False) == 18
    # with count headers: ceil(log2 5) + ceil(log2 7) extra bits
    assert penalty(P, Q, scheme) == 18 + 3 + 3
    # all-zero candidate floors at one bit without headers
    assert penalty(np.zeros((2, 2)), Q, scheme, count_header=False) == 1
    assert penalty(np.zeros((2, 2)), Q, scheme) == 6


def test_code_length_log_bound():
    for r1, r2, r in itertools.product(range(1, 9), range(1, 9), range(1, 5)):
        for n, beta in itertools.product((r1 + r2 + 2, 20, 100), (1.0, 1.5, 3.0)):
            if not (r1 < n and r2 < n):
                continue
            s = DiscretizationScheme.from_problem(n, n, r1, r, r2, beta)
            # the inequality holds when the location code is no larger than for r1 * r1 slots
            if r > r1 or r > r2:
                continue
            assert s.bits_per_nonzero_p <= 8 * math.log(r1) + 2 * beta * math.log(n) + 1e-9
            assert s.bits_per_nonzero_q <= 8 * math.log(r2) + 2 * beta * math.log(n) + 1e-9


def test_kraft_tiny_by_hand():
    # one slot per factor, levels {-1, +1}: each factor sums to 2^-1 * (1 + 2 * 2^-1) = 1
    s = DiscretizationScheme(2, 1, 1, 1)
    assert s.class_size() == 9
    assert kraft_sum(s) == pytest.approx(1.0, abs=1e-15)
    assert kraft_sum(DiscretizationScheme(2, 2, 1, 1)) <= 1


def test_bare_code_violates_kraft():
    # without the count header the code is not uniquely decodable
    assert kraft_sum(DiscretizationScheme(2, 1, 1, 1), count_header=False) == pytest.approx(3.5)


def test_kraft_matches_direct_enumeration():
    s = DiscretizationScheme(2, 2, 1, 1)
    A, B = np.eye(2), np.eye(1)
    direct = math.fsum(2.0 ** -penalty(P, Q, s) for P, Q, _ in enumerate_class(A, B, s, x_max=np.inf))
    assert kraft_sum(s) == pytest.approx(direct, rel=1e-14)


def test_kraft_invariant_to_amplitude_bits():
    # doubling the levels doubles the choices per nonzero and halves each weight
    for r1, r, r2 in [(1, 2, 1), (2, 1, 2), (2, 2, 1)]:
        base = kraft_sum(DiscretizationScheme(2, r1, r, r2))
        assert kraft_sum(DiscretizationScheme(4, r1, r, r2)) == pytest.approx(base, rel=1e-14)


def test_kraft_shrinks_under_extra_bits():
    s = DiscretizationScheme(2, 2, 1, 1)
    A, B = np.eye(2), np.eye(1)
    inflated = math.fsum(2.0 ** -(penalty(P, Q, s) + 1) for P, Q, _ in enumerate_class(A, B, s, np.inf))
    assert inflated == pytest.approx(kraft_sum(s) / 2, rel=1e-14)
    assert inflated < kraft_sum(s)


def test_kraft_cap():
    with pytest.raises(ClassTooLarge):
        kraft_sum(DiscretizationScheme(4, 2, 2, 2), cap=1000)


def test_enumerate_tiny():
    s = DiscretizationScheme(2, 1, 1, 1)
    A, B = np.array([[1.0]]), np.array([[1.0]])
    out = list(enumerate_class(A, B, s, x_max=1.0))
    assert len(out) == 9
    for P, Q, X in out:
        assert validate_bounds(ImcModel(A, B, P, Q, x_max=1.0), "candidate").ok
        np.testing.assert_array_equal(X, A @ P @ Q @ B)
    # lexicographic order, zero first
    assert out[0][0][0, 0] == 0 and out[0][1][0, 0] == 0
    assert out[1][1][0, 0] == -1


def test_enumerate_filters_by_x_max():
    s = DiscretizationScheme(2, 1, 1, 1, q_max=1.0)
    A, B = np.array([[2.0]]), np.array([[1.0]])
    out = list(enumerate_class(A, B, s, x_max=1.0))
    # only candidates with a zero factor survive: |2 * (+-1) * (+-1)| = 2 > 1
    assert len(out) == 5
    assert all(np.all(X == 0) for _, _, X in out)
    zero_only = list(enumerate_class(A, B, s, x_max=0.0))
    assert len(zero_only) == 5


def test_enumerate_cap():
    with pytest.raises(ClassTooLarge):
        next(enumerate_class(np.eye(2), np.eye(2), DiscretizationScheme(4, 2, 2, 2), 1.0, cap=10))


def _random_truth(rng):
    n1, n2 = rng.integers(4, 30, size=2)
    r1, r2 = rng.integers(1, 6, size=2)
    r = int(rng.integers(1, min(r1, r2) + 1))
    a_max, b_max, q_max = rng.uniform(0.2, 2, size=3)
    A = rng.uniform(-a_max, a_max, (n1, r1))
    B = rng.uniform(-b_max, b_max, (r2, n2))
    P = rng.uniform(-1, 1, (r1, r)) * (rng.random((r1, r)) < 0.6)
    Q = rng.uniform(-q_max, q_max, (r, r2)) * (rng.random((r, r2)) < 0.6)
    return A, B, P, Q, a_max, b_max, q_max


def test_quantized_candidate_max_norm_bound():
    rng = np.random.default_rng(7)
    for _ in range(200):
        A, B, P, Q, a_max, b_max, q_max = _random_truth(rng)
        r1, r = P.shape
        r2 = Q.shape[1]
        L = int(rng.choice([2, 4, 16, 256]))
        Pq, Qq = quantize_factor(P, 1.0, L), quantize_factor(Q, q_max, L)
        err = np.abs(A @ Pq @ Qq @ B - A @ P @ Q @ B).max()
        assert err <= 6 * r * r1 * r2 * a_max * b_max * q_max / L * (1 + 1e-12)


def test_quantized_candidate_frobenius_bound_with_gaussian_beta():
    rng = np.random.default_rng(8)
    for _ in range(200):
        A, B, P, Q, a_max, b_max, q_max = _random_truth(rng)
        n1, n2 = A.shape[0], B.shape[1]
        r1, r = P.shape
        r2 = Q.shape[1]
        X = A @ P @ Q @ B
        x_max = max(2 * np.abs(X).max(), 1e-3)
        m = int(rng.integers(4, n1 * n2 + 1))
        beta = beta_gaussian(m, n1, n2, r, r1, r2, a_max, b_max, q_max, x_max)
        L = levels(n1, n2, beta)
        Xq = A @ quantize_factor(P, 1.0, L) @ quantize_factor(Q, q_max, L) @ B
        assert np.sum((X - Xq) ** 2) / (n1 * n2) <= x_max**2 / m
        assert np.abs(Xq).max() <= x_max  # the quantized truth is a valid candidate
