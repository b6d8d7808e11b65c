import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import ks_2samp

from patternindep.copulas import Q_B, Q_C, Q_FGM, Direction
from patternindep.errors import SizeLimit
from patternindep.nulldist import (build_limit_law, exact_null_distribution, exact_upper_quantile,
                                   limit_quantile, limiting_power, local_power_curvature,
                                   mc_critical_value, mc_p_value, null_statistics, quantile_table,
                                   quantiles_to_csv, sample_limit, shifted_law, upper_quantile)
from patternindep.spectral import find_gamma_roots

from oracles import exact_law

PI4 = math.pi ** 4


@pytest.fixture(scope="module")
def laws():
    return {A: build_limit_law(A, capture=0.99) for A in ("B", "C", "D", "E", "F")}


def test_top_weights(laws):
    assert laws["B"].weights[0] == pytest.approx(36 / PI4) and laws["B"].multiplicities[0] == 1
    assert laws["C"].weights[0] == pytest.approx(9 / PI4) and laws["C"].multiplicities[0] == 4
    assert laws["F"].weights[0] == pytest.approx(3 / find_gamma_roots("K3", 1)[0] ** 2)


def test_capture_and_variance(laws):
    for A, law in laws.items():
        assert law.capture >= 0.99
        assert law.residual_variance_bound() >= 0
    assert laws["B"].variance == pytest.approx(0.32, abs=1e-3)
    assert laws["C"].variance == pytest.approx(0.08, abs=1e-3)


@pytest.mark.parametrize("A", ["B", "F", "D", "DE"])
@pytest.mark.parametrize("n", [4, 5])
def test_exact_law_matches_brute_force(A, n):
    assert exact_null_distribution(A, n) == exact_law(A, n)


def test_exact_law_n4_examples():
    assert exact_null_distribution("B", 4) == [(Fraction(-1, 3), Fraction(2, 3)), (Fraction(2, 3), Fraction(1, 3))]
    assert exact_null_distribution("F", 4) == [(Fraction(-1, 2), Fraction(1, 2)), (Fraction(1, 2), Fraction(1, 2))]
    assert exact_upper_quantile(exact_null_distribution("B", 4), 0.05) == Fraction(2, 3)


@pytest.mark.parametrize("n", [4, 5, 6, 7, 8])
def test_exact_mean_zero(n):
    for A in ("B", "C", "D", "E", "F", "DE"):
        assert sum(v * p for v, p in exact_null_distribution(A, n)) == 0


def test_size_limit():
    with pytest.raises(SizeLimit):
        exact_null_distribution("B", 9)


def test_mc_critical_value_n4():
    assert mc_critical_value("B", 4, 0.05, reps=2000, rng=1) == 2 / 3


def test_p_value_convention():
    assert mc_p_value(1.0, [0.0, 2.0, 1.0]) == 0.75


def test_upper_quantile_monotone(laws):
    d = sample_limit(laws["B"], 20000, rng=3)
    qs = [upper_quantile(d, a) for a in (0.1, 0.05, 0.01)]
    assert qs[0] <= qs[1] <= qs[2]
    assert np.mean(d >= qs[1]) >= 0.05


def test_limit_mean_and_variance(laws):
    d = sample_limit(laws["C"], 50000, rng=11)
    v = laws["C"].variance
    assert abs(d.mean()) < 4 * math.sqrt(v / 50000)
    assert abs(d.var() - v) < 0.05 * v


def test_z_b_matches_four_y(laws):
    # independent route: Y from plain numpy chi-square draws
    rng = np.random.default_rng(17)
    reps, N = 40000, 40
    j = np.arange(1, N + 1)
    w = (9 / (PI4 * np.outer(j, j) ** 2)).ravel()
    Y = np.zeros(reps)
    for lo in range(0, w.size, 200):
        ww = w[lo:lo + 200]
        Y += (rng.chisquare(1, (reps, ww.size)) - 1) @ ww
    zb = sample_limit(laws["B"], reps, rng=18)
    qa, qb = upper_quantile(zb, 0.05), upper_quantile(4 * Y, 0.05)
    assert abs(qa - qb) < 0.03 * qb


def test_z_d_and_z_e_coincide(laws):
    assert np.allclose(laws["D"].weights, laws["E"].weights)
    d = sample_limit(laws["D"], 20000, rng=5)
    e = sample_limit(laws["E"], 20000, rng=6)
    assert ks_2samp(d, e).pvalue > 1e-3


def test_finite_n_matches_limit(laws):
    T = 200 * null_statistics(200, 10000, rng=21, ids=("B",))[:, 0]
    Z = sample_limit(laws["B"], 100000, rng=22)
    assert ks_2samp(T, Z).statistic <= 0.03


def test_determinism_across_workers(laws):
    a = sample_limit(laws["B"], 10000, rng=9, workers=1)
    b = sample_limit(laws["B"], 10000, rng=9, workers=3)
    assert np.array_equal(a, b)
    x = null_statistics(30, 5000, rng=9, workers=1)
    y = null_statistics(30, 5000, rng=9, workers=4)
    assert np.array_equal(x, y)
    t1 = quantile_table(["B"], [20, None], [0.05], 2000, seed=4, workers=1)
    t2 = quantile_table(["B"], [20, None], [0.05], 2000, seed=4, workers=2)
    assert quantiles_to_csv(t1) == quantiles_to_csv(t2)


def test_mc_level_accuracy():
    c = mc_critical_value("B", 30, 0.05, reps=20000, rng=31)
    T = null_statistics(30, 20000, rng=32, ids=("B",))[:, 0]
    rate = np.mean(T >= c)
    assert abs(rate - 0.05) < 4 * math.sqrt(0.05 * 0.95 / 20000) + 0.01


def test_limiting_power_properties(laws):
    law = laws["B"]
    reps = 40000
    se = math.sqrt(0.05 * 0.95 / reps)
    p0 = limiting_power("B", Q_B, 0.0, reps=reps, rng=1, law=law)
    assert abs(p0 - 0.05) < 3 * se
    pp = limiting_power("B", Q_B, 1.5, reps=reps, rng=2, law=law)
    pm = limiting_power("B", Q_B, -1.5, reps=reps, rng=2, law=law)
    assert abs(pp - pm) < 3 * math.sqrt(2 * pp * (1 - pp) / reps)
    assert pp > 0.05 + 5 * se


def test_curvature_nonnegative_and_maximised_by_top_direction(laws):
    law = laws["B"]
    reps = 40000
    top = local_power_curvature("B", Q_B, reps=reps, rng=3, law=law)
    others = [local_power_curvature("B", q, reps=reps, rng=3, law=law)
              for q in (Q_FGM, Q_C, _cos_direction(2, 1), _cos_direction(1, 2))]
    se = math.sqrt(0.1 / reps)
    assert top > -3 * se and all(o > -3 * se for o in others)
    assert top >= max(others)


def _cos_direction(j, k):
    fj = lambda x: np.sqrt(2) * np.cos(np.pi * j * x)
    fk = lambda x: np.sqrt(2) * np.cos(np.pi * k * x)
    return Direction(f"cos{j} x cos{k}", lambda u, v: fj(u) * fk(v), ((1.0, fj, fk),))


def test_quantiles_converge_with_n(laws):
    lim = limit_quantile(laws["B"], 0.05, reps=50000, rng=40)
    gaps = [abs(n * mc_critical_value("B", n, 0.05, reps=10000, rng=41) - lim) for n in (50, 200)]
    assert gaps[1] <= gaps[0] + 0.01
