import itertools
import math

import numpy as np
import pytest

from sparse_imc.bounds import (
    beta_gaussian,
    bound_report,
    corollary1_rhs,
    gaussian_mse_rhs,
    lambda_min,
    theorem1_rhs,
)
from sparse_imc.discretization import levels
from sparse_imc.noise import d_constant_gaussian


def test_beta_examples():
    assert beta_gaussian(100, 10, 10, 1, 1, 1, 1, 1, 1, 6) == pytest.approx(2.0, abs=1e-12)
    assert beta_gaussian(100, 10, 10, 1, 1, 1, 1, 1, 1, 1e9) == 1.0


def test_levels_cover_quantization_argument():
    rng = np.random.default_rng(0)
    for _ in range(500):
        n1, n2 = rng.integers(2, 200, size=2)
        r1, r2 = rng.integers(1, 10, size=2)
        r = int(rng.integers(1, min(r1, r2) + 1))
        m = int(rng.integers(4, n1 * n2 + 1))
        a, b, q = rng.uniform(0.1, 5, size=3)
        x = rng.uniform(0.01, 10)
        beta = beta_gaussian(m, n1, n2, r, r1, r2, a, b, q, x)
        assert levels(n1, n2, beta) >= 6 * math.sqrt(m) * r * r1 * r2 * a * b * q / x * (1 - 1e-12)


def test_lambda_min_examples():
    assert lambda_min(0, 1, 1, math.e, 1) == pytest.approx(2.0)
    assert lambda_min(2, 1, 4, 16, 16) == pytest.approx(2 * (7 / 3) * (4 * math.log(4) + math.log(16)), rel=1e-14)
    assert lambda_min(2, 1, 4, 16, 16) == pytest.approx(38.82, abs=5e-3)


def test_lambda_min_monotone():
    grid = [(d, b, r, n) for d in (0, 1, 5) for b in (1, 2) for r in (1, 2, 8) for n in (4, 16, 100)]
    for d, b, r, n in grid:
        base = lambda_min(d, b, r, n, n)
        assert lambda_min(d + 1, b, r, n, n) > base
        assert lambda_min(d, b + 0.5, r, n, n) > base
        assert lambda_min(d, b, r + 1, n, n) > base
        assert lambda_min(d, b, r, n + 1, n) > base


def _theorem1_by_hand(D, lp, lq, beta, n, m, kl, p0, q0):
    first = 8 * D * math.log(m) / m
    inner = kl / (n * n) + ((lp + lq) + 4 * D * (beta + 4) * math.log(n) / 3) * (p0 + q0) / m
    return first + 3 * inner


def test_theorem1_examples():
    assert theorem1_rhs(2, 1, 1, 1, 16, 16, 100, 0, 0, 0) == pytest.approx(16 * math.log(100) / 100)
    assert theorem1_rhs(2, 1, 1, 1, 16, 16, 200, 0, 0, 0) < theorem1_rhs(2, 1, 1, 1, 16, 16, 100, 0, 0, 0)
    got = theorem1_rhs(2, 38.82, 38.82, 1, 16, 16, 100, 0, 2, 2)
    assert got == pytest.approx(_theorem1_by_hand(2, 38.82, 38.82, 1, 16, 100, 0, 2, 2), rel=1e-12)


def test_corollary_examples():
    assert corollary1_rhs(1, 1, 1, 10, 10, 100, 0, 0) == pytest.approx(70 * math.log(100) / 100)
    e = math.e
    assert corollary1_rhs(1, 1, 1, e, e, e**2, 1, 0) == pytest.approx(860 / e**2, rel=1e-12)
    assert corollary1_rhs(1, 1, 1, e, e, e**2, 1, 0) == pytest.approx(116.38, abs=1e-2)
    base = corollary1_rhs(1, 1, 0, 10, 10, 100, 0, 0)
    one = corollary1_rhs(1, 0.5, 1.3, 10, 10, 100, 2, 1) - base
    two = corollary1_rhs(1, 0.5, 1.3, 10, 10, 100, 4, 2) - base
    assert two == pytest.approx(2 * one, rel=1e-13)


def test_corollary_scaling_in_m():
    args = dict(x_max=1.0, sigma2=0.25, beta=1.5, n1=1000, n2=1000, p0_star=10, q0_star=10)
    m = 10**6
    ratio = corollary1_rhs(m=2 * m, **args) / corollary1_rhs(m=m, **args)
    assert abs(ratio - 0.5) <= 0.05 * 0.5


def test_theorem1_reproduces_gaussian_mse_bound():
    rng = np.random.default_rng(1)
    for _ in range(200):
        x, s2 = rng.uniform(0.1, 3), rng.uniform(0.01, 2)
        n1, n2 = rng.integers(4, 100, size=2)
        m = int(rng.integers(4, n1 * n2 + 1))
        lp, lq, beta = rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(1, 3)
        sq = rng.uniform(0, 10) * n1 * n2
        p0, q0 = rng.integers(0, 20, size=2)
        D = d_constant_gaussian(x, s2)
        t1 = theorem1_rhs(D, lp, lq, beta, n1, n2, m, sq / (2 * s2), p0, q0)
        mse = gaussian_mse_rhs(x, s2, lp, lq, beta, n1, n2, m, sq, p0, q0)
        assert t1 * 4 * s2 == pytest.approx(mse, rel=1e-12)


def test_swap_symmetry():
    rng = np.random.default_rng(2)
    for _ in range(100):
        n1, n2 = (int(v) for v in rng.integers(4, 50, size=2))
        r1, r2 = (int(v) for v in rng.integers(1, 6, size=2))
        p0, q0 = (int(v) for v in rng.integers(0, 10, size=2))
        m, D, beta = 40, 3.0, 1.7
        lp, lq = lambda_min(D, beta, r1, n1, n2), lambda_min(D, beta, r2, n1, n2)
        # swapping the triples swaps the two weights
        assert lambda_min(D, beta, r1, n2, n1) == lp
        a = theorem1_rhs(D, lp, lq, beta, n1, n2, m, 1.0, p0, q0)
        b = theorem1_rhs(D, lq, lp, beta, n2, n1, m, 1.0, q0, p0)
        assert a == b
        assert corollary1_rhs(1, 1, beta, n1, n2, m, p0, q0) == corollary1_rhs(1, 1, beta, n2, n1, m, q0, p0)


def test_bound_report_fields():
    rep = bound_report(16, 16, 1, 2, 2, 64, 0.25, 1.0, 1.0, 1.0, 1.0, 2, 2)
    assert rep.L_lev == levels(16, 16, rep.beta)
    assert rep.d_const == 8.0
    assert rep.lambda_p_min == rep.lambda_q_min
    assert rep.corollary1_rhs == pytest.approx(corollary1_rhs(1.0, 0.25, rep.beta, 16, 16, 64, 2, 2))
    assert set(rep.to_dict()) >= {"beta", "L_lev", "theorem1_rhs", "corollary1_rhs", "inputs"}


@pytest.mark.parametrize("m", [4, 16, 1024])
def test_corollary_dominates_intermediate_at_quantized_truth(m):
    # the constant-explicit form is an upper bound for the intermediate one at lambda_min
    for x, s2, n, r1, r2, r, p0, q0 in itertools.product((0.5, 1), (0.1, 1), (8, 32), (1, 3), (1, 3), (1,), (0, 3),
                                                         (1, 4)):
        if m > n * n:
            continue
        beta = beta_gaussian(m, n, n, r, r1, r2, 1, 1, 1, x)
        D = d_constant_gaussian(x, s2)
        lp, lq = lambda_min(D, beta, r1, n, n), lambda_min(D, beta, r2, n, n)
        inter = gaussian_mse_rhs(x, s2, lp, lq, beta, n, n, m, n * n * x**2 / m, p0, q0)
        assert inter <= corollary1_rhs(x, s2, beta, n, n, m, p0, q0) * (1 + 1e-12)
