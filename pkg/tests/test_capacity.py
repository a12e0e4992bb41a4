import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import minimize

from crsim._rng import derive_rng
from crsim.capacity import (EigenBatch, bit_loading_rate, breakpoints, c_l2, effective_snr,
                            frame_average, g_eval, mean_bit_loading_rate, sample_eigenvalues,
                            waterfill)

lam_lists = st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=5)
rhos = st.floats(0.0, 1e3)


def simplex_max(lam, rho):
    """Independent numeric maximizer of sum log2(1 + x lam) on the scaled simplex."""
    lam = np.asarray(lam, float)
    k = len(lam)
    if rho == 0:
        return 0.0
    f = lambda x: -np.sum(np.log2(1 + np.clip(x, 0, None) * lam))
    jac = lambda x: -lam / ((1 + np.clip(x, 0, None) * lam) * math.log(2))
    best = -np.inf
    starts = [np.full(k, rho / k)] + [np.eye(k)[i] * rho for i in range(k)]
    for x0 in starts:
        res = minimize(f, x0, jac=jac, method="SLSQP", bounds=[(0, rho)] * k,
                       constraints=[{"type": "eq", "fun": lambda x: x.sum() - rho,
                                     "jac": lambda x: np.ones(k)}],
                       options={"ftol": 1e-15, "maxiter": 500})
        best = max(best, -f(res.x))
    return best


def level_bisection(lam, rho):
    """Water level by bisection on sum (mu - 1/lam)^+ = rho."""
    inv = 1 / np.asarray(lam)
    lo, hi = inv.min(), inv.max() + rho
    for _ in range(200):
        mid = (lo + hi) / 2
        if np.maximum(mid - inv, 0).sum() > rho:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2


def test_effective_snr_examples():
    assert effective_snr(10, 10, 2, 1.0, 2) == pytest.approx(200 / 42)
    assert effective_snr(0, 10, 2, 1.0, 2) == 0.0
    assert effective_snr(7.0, 1e12, 3, 0.5, 2) == pytest.approx(7.0 / 0.5, rel=1e-9)
    arr = effective_snr(np.array([1.0, 2.0]), 3.0, 4, 1.0, 2)
    assert arr.shape == (2,)


def test_waterfill_examples():
    r = waterfill([1.0], 1.0)
    assert r.x == pytest.approx([1.0]) and r.value == pytest.approx(1.0)
    r = waterfill([3.0, 3.0, 3.0], 1.5)
    assert np.allclose(r.x, 0.5)
    r = waterfill([2.0, 0.5], 1.0)
    assert np.allclose(r.x, [1.0, 0.0]) and r.mu == pytest.approx(1.5)
    assert r.mu == pytest.approx(level_bisection([2.0, 0.5], 1.0), abs=1e-9)
    with pytest.raises(ValueError):
        waterfill([0.0, 0.0], 1.0)


def kkt_ok(res, lam, rho):
    x = res.x
    lam = np.asarray(lam)
    assert np.all(x >= 0)
    assert x.sum() == pytest.approx(rho, abs=1e-9 * max(1, rho))
    on = x > 0
    assert np.allclose(res.mu, x[on] + 1 / lam[on], atol=1e-9 * max(1, res.mu))
    assert np.all(res.mu <= 1 / lam[~on] + 1e-9 * max(1, res.mu))


@given(lam_lists, rhos)
def test_waterfill_kkt_and_g_equivalence(lam, rho):
    res = waterfill(lam, rho)
    kkt_ok(res, lam, rho)
    assert g_eval(rho, lam) == pytest.approx(res.value, abs=1e-9 * max(1, abs(res.value)))


def test_waterfill_matches_brute_force():
    rng = np.random.default_rng(5)
    for _ in range(60):
        k = rng.integers(1, 5)
        lam = rng.exponential(size=k) * 3
        rho = float(rng.exponential() * 10)
        assert waterfill(lam, rho).value == pytest.approx(simplex_max(lam, rho), abs=1e-6)


def test_waterfill_preserves_input_order():
    r = waterfill([0.5, 2.0], 1.0)
    assert np.allclose(r.x, [0.0, 1.0])


def test_base_none_gives_nats():
    assert waterfill([1.0], 1.0, base=None).value == pytest.approx(math.log(2))
    assert g_eval(1.0, [1.0], base=None) == pytest.approx(math.log(2))


def test_breakpoints():
    q = breakpoints(np.array([2.0, 0.5]))
    assert q[0] == 0 and q[1] == pytest.approx(1.5)
    assert np.isinf(breakpoints(np.array([1.0, 0.0]))[1])


def test_g_eval_continuity_at_breakpoints(rng):
    for _ in range(200):
        lam = np.sort(rng.exponential(size=3) * 4)[::-1]
        for qk in breakpoints(lam)[1:]:
            if qk <= 1e-6:
                continue
            assert abs(g_eval(qk - 1e-8, lam) - g_eval(qk + 1e-8, lam)) < 1e-6


@given(lam_lists, st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_g_increasing_and_concave(lam, a, b):
    lo, hi = min(a, b), max(a, b)
    assert g_eval(hi, lam) >= g_eval(lo, lam) - 1e-12
    assert g_eval((a + b) / 2, lam) >= (g_eval(a, lam) + g_eval(b, lam)) / 2 - 1e-9


def test_sample_eigenvalue_moments():
    rng = np.random.default_rng(8)
    one = np.array([sample_eigenvalues(1, 3, rng)[0] for _ in range(100_000)])
    assert one.mean() == pytest.approx(3.0, rel=0.02)
    b = EigenBatch.draw(2, 3, 100_000, rng)
    assert b.lambdas.sum(axis=1).mean() == pytest.approx(6.0, rel=0.02)
    assert np.all(b.lambdas >= 0)
    with pytest.raises(ValueError):
        sample_eigenvalues(3, 2, rng)


def test_eigenvalue_distribution_independent_of_system():
    # sampled through two unrelated seeds/configs: only (K1, K2) matter
    a = EigenBatch.draw(2, 2, 50_000, derive_rng(1, 2)).lambdas
    b = EigenBatch.draw(2, 2, 50_000, derive_rng(99, 2)).lambdas
    for m in (1, 2):
        assert np.mean(a ** m, axis=0) == pytest.approx(np.mean(b ** m, axis=0), rel=0.05)


def test_batch_is_read_only():
    b = EigenBatch.draw(2, 2, 10, np.random.default_rng(0))
    with pytest.raises(ValueError):
        b.lambdas[0, 0] = 1.0


def test_batch_mean_matches_scalar_path():
    b = EigenBatch.draw(3, 4, 200, np.random.default_rng(1))
    rho = np.array([0.0, 0.01, 0.3, 2.0, 50.0])
    ref = [np.mean([g_eval(r, lam) for lam in b.lambdas]) for r in rho]
    assert np.allclose(b.mean_g(rho), ref, rtol=1e-12, atol=1e-13)


def test_c_l2_zero_and_shared_batch():
    b = EigenBatch.draw(2, 2, 500, np.random.default_rng(2))
    z = c_l2(0.0, 2, 2, 500, batch=b)
    assert z.mean == 0.0 and z.stderr == 0.0 and z.n_trials == 500
    r = np.random.default_rng(3)
    for _ in range(100):
        a, c = r.exponential(20, size=2)
        assert c_l2(a, 2, 2, 500, batch=b).mean < c_l2(2 * a, 2, 2, 500, batch=b).mean
        mid = c_l2((a + c) / 2, 2, 2, 500, batch=b).mean
        assert mid >= (c_l2(a, 2, 2, 500, batch=b).mean + c_l2(c, 2, 2, 500, batch=b).mean) / 2 - 1e-9


def test_c_l2_deterministic_given_seed():
    a = c_l2(5.0, 2, 2, 300, rng=derive_rng(4, 2))
    b = c_l2(5.0, 2, 2, 300, rng=derive_rng(4, 2))
    assert a == b
    vals = EigenBatch.draw(2, 2, 300, derive_rng(4, 2)).g_matrix([5.0])[0]
    assert a.stderr == pytest.approx(vals.std(ddof=1) / math.sqrt(300))
    with pytest.raises(ValueError):
        c_l2(1.0, 2, 2, 10)


def test_frame_average():
    assert frame_average(5.0, 0, 100) == 0.0
    assert frame_average(5.0, 100, 100) == 5.0
    assert frame_average(5.0, 50, 100) == 2.5
    with pytest.raises(ValueError):
        frame_average(5.0, 101, 100)


def discrete_bit_oracle(lam, rho, gap, step, max_bits=12):
    """Exhaustive best total rate on the bit grid under the power budget."""
    levels = np.arange(0, max_bits + step / 2, step)
    best = 0.0
    for bits in itertools.product(levels, repeat=len(lam)):
        power = sum((2 ** b - 1) * gap / l for b, l in zip(bits, lam))
        if power <= rho * (1 + 1e-12):
            best = max(best, sum(bits))
    return best


def test_bit_loading_example_and_oracle():
    assert bit_loading_rate([1.0], 3.0, 10 * math.log10(2), 0.5) == pytest.approx(1.0)
    assert discrete_bit_oracle([1.0], 3.0, 2.0, 0.5) == pytest.approx(1.0)


def test_bit_loading_bounds(rng):
    for _ in range(40):
        lam = rng.exponential(size=2) * 3
        rho = float(rng.exponential() * 10)
        r = bit_loading_rate(lam, rho, 3.0, 0.5)
        # feasible on the grid, so never above the exhaustive discrete optimum, never above capacity
        assert r <= discrete_bit_oracle(lam, rho, 10 ** 0.3, 0.5) + 1e-12
        assert r <= g_eval(rho, lam) + 1e-12
        assert r / 0.5 == pytest.approx(round(r / 0.5))


def test_bit_loading_gap_free_limit(rng):
    lam = rng.exponential(size=3) * 2
    for rho in (0.5, 4.0, 30.0):
        assert bit_loading_rate(lam, rho, 0.0, 1e-7) == pytest.approx(g_eval(rho, lam), abs=1e-5)
    with pytest.raises(ValueError):
        bit_loading_rate(lam, 1.0, -1.0, 0.5)


def test_mean_bit_loading_matches_per_draw():
    b = EigenBatch.draw(2, 2, 300, np.random.default_rng(6))
    for rho in (0.0, 0.7, 20.0):
        ref = np.mean([bit_loading_rate(l, rho, 3.0, 0.5) for l in b.lambdas])
        assert mean_bit_loading_rate(b, rho, 3.0, 0.5) == pytest.approx(ref, abs=1e-12)


def test_mean_g_scalar_in_scalar_out():
    b = EigenBatch.draw(2, 3, 50, derive_rng(0, 2))
    v = b.mean_g(4.0)
    assert isinstance(v, float)
    assert v == b.mean_g(np.array([4.0]))[0]
