import math
from fractions import Fraction

import numpy as np
import pytest

from patternindep.copulas import Q_B, Q_C, Q_FGM, direction
from patternindep.efficiency import (FGM_QUAD_EXACT, bahadur_efficiency, efficiency_report,
                                     fgm_integrals, kappa, quad_form, standard_efficiency_table)
from patternindep.kernels import h2_closed
from patternindep.quadrature import gauss_legendre, split_at
from patternindep.spectral import spectrum_product

PI4 = math.pi ** 4
STATS = ("B", "C", "D", "E", "F", "DE")


def quad_form_4d(A, q, outer=16, inner=16):
    """<K(A) q, q> by direct nested quadrature of h2 (split at the kinks)."""
    x, w = gauss_legendre(outer)
    total = 0.0
    for a, wa in zip(x, w):
        for b, wb in zip(x, w):
            xs, wx = split_at(a, inner)
            ys, wy = split_at(b, inner)
            X, Y = np.meshgrid(xs, ys, indexing="ij")
            inner_val = wx @ (h2_closed(A, np.array([a, b]), np.stack([X, Y], -1)) * q(X, Y)) @ wy
            total += wa * wb * q(a, b) * inner_val
    return total


def test_fgm_integrals():
    for val, exact in fgm_integrals():
        assert abs(val - float(exact)) < 1e-14
    assert [e for _, e in fgm_integrals()] == [Fraction(1, 5), Fraction(1, 15), Fraction(4, 45)]


@pytest.mark.parametrize("A", STATS)
def test_fgm_quad_forms_exact(A):
    assert abs(quad_form(A, Q_FGM) - float(FGM_QUAD_EXACT[A])) < 1e-14


@pytest.mark.parametrize("A", ["B", "D", "F"])
def test_fgm_quad_forms_by_direct_quadrature(A):
    assert abs(quad_form_4d(A, Q_FGM) - float(FGM_QUAD_EXACT[A])) < 1e-6


@pytest.mark.parametrize("A", ["B", "C", "D"])
def test_quad_form_by_spectral_sum(A):
    # sum lambda <phi, q>^2 over retained eigenfunctions
    spec = spectrum_product(A, 40)
    x, w = gauss_legendre(96)
    Q = Q_FGM(x[:, None], x[None, :]) * w[:, None] * w[None, :]
    s = 0.0
    for lam, descs in zip(spec.eigenvalues, spec.descriptors):
        for d in descs:
            s += lam * float(d.left(x) @ Q @ d.right(x)) ** 2
    assert abs(s - float(FGM_QUAD_EXACT[A])) < 1e-6


def test_eigen_directions():
    assert quad_form("B", Q_B) == pytest.approx(6 / PI4, rel=1e-12)
    assert quad_form("C", Q_C) == pytest.approx(3 / (2 * PI4), rel=1e-12)
    assert kappa("B", Q_B) == pytest.approx(Q_B.norm() ** 2, rel=1e-10)


@pytest.mark.parametrize("A", STATS)
@pytest.mark.parametrize("fam", ["Clayton", "Gaussian", "GFGM"])
def test_generic_and_fast_paths_agree(A, fam):
    q = direction(fam)
    fast = quad_form(A, q, path="fast")
    gen = quad_form(A, q, path="generic")
    assert abs(fast - gen) <= 1e-8 * abs(fast) + 1e-14


def test_standard_efficiency_table_rows():
    r1, r2 = standard_efficiency_table()
    expected1 = dict(B=1.0, C=0.44444, D=0.66667, E=0.66667, F=0.89061, DE=0.76180)
    expected2 = dict(B=0.0625, C=1.0, D=0.25, E=0.25, F=0.28179, DE=0.28568)
    for A in STATS:
        assert abs(r1.ratios[A] - expected1[A]) < 5e-5
        assert abs(r2.ratios[A] - expected2[A]) < 5e-5
    assert r1.ratios["C"] == pytest.approx(4 / 9, abs=1e-12)
    assert r2.ratios["B"] == pytest.approx(1 / 16, abs=1e-12)


def test_symmetry_and_no_dominance():
    r1, r2 = standard_efficiency_table()
    for r in (r1, r2):
        assert r.ratios["D"] == pytest.approx(r.ratios["E"], rel=1e-12)
    assert r1.kappas["B"] > r1.kappas["C"] and r2.kappas["C"] > r2.kappas["B"]


def test_normalization_invariance():
    for A in STATS:
        assert kappa(A, Q_FGM, "h2") == pytest.approx(kappa(A, Q_FGM, "6h2"), rel=1e-14)


def test_self_efficiency_is_one():
    for A in STATS:
        assert bahadur_efficiency(A, A, Q_C) == 1.0


def test_pairwise_matrix():
    rep = efficiency_report(Q_FGM, "B")
    M = rep.pairwise()
    assert np.allclose(np.diag(M), 1)
    assert np.allclose(M * M.T, 1)
    d = rep.to_dict()
    assert d["exact_quad_forms"]["B"] == "1/150"


@pytest.mark.parametrize("name", ["fgm", "c", "b", "clayton", "gaussian", "gfgm"])
def test_kappa_bounded_for_unit_directions(name):
    from patternindep.copulas import parse_direction
    q = parse_direction(name)
    q = q.scaled(1 / q.norm(256))
    for A in STATS:
        k = kappa(A, q)
        assert 0 < k <= 1 + 1e-9
    assert kappa("B", Q_B.scaled(1 / Q_B.norm())) == pytest.approx(1, abs=1e-10)
    assert kappa("C", Q_C.scaled(1 / Q_C.norm())) == pytest.approx(1, abs=1e-10)
