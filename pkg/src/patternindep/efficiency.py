"""Quadratic forms <K(A) q, q>, kappa values and local Bahadur efficiencies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .copulas import Q_C, Q_FGM, Direction
from .errors import QuadratureNonconvergent
from .kernels import FACTORS, kernel_function
from .quadrature import bilinear, kink_rule
from .spectral import top_eigenvalue
from .statistics import STATISTIC_IDS, pattern_set

CONVERGENCE_RTOL = 1e-8

#: exact values of the FGM integrals of (2u-1) g_i (2v-1)
FGM_EXACT = (Fraction(1, 5), Fraction(1, 15), Fraction(4, 45))

#: <K(A) q_FGM, q_FGM> in closed form
FGM_QUAD_EXACT = {
    "B": Fraction(1, 150), "C": Fraction(1, 1350), "D": Fraction(1, 450),
    "E": Fraction(1, 450), "F": Fraction(8, 2025), "DE": Fraction(1, 225),
}


def _one(x):
    return np.ones_like(np.asarray(x, float))


def _fast(A, q: Direction, order, panel_order):
    clus = q.endpoint_singular
    total = 0.0
    for scale, left, right in FACTORS[A]:
        gl, gr = kernel_function(left), kernel_function(right)
        for ca, fa, ga in q.factors:
            for cb, fb, gb in q.factors:
                total += scale * ca * cb * bilinear(gl, fa, fb, order, panel_order, clus) \
                    * bilinear(gr, ga, gb, order, panel_order, clus)
    return total


def _generic(A, q: Direction, order, panel_order):
    xo, wo, xi, wi = kink_rule(order, panel_order, q.endpoint_singular)
    Qo = q(xo[:, None], xo[None, :])
    Qi = q(xi[:, None], xi[None, :]) * wi[:, None] * wi[None, :]
    total = 0.0
    for scale, left, right in FACTORS[A]:
        Gl = kernel_function(left)(xo[:, None], xi[None, :])
        Gr = kernel_function(right)(xo[:, None], xi[None, :])
        inner = Gl @ Qi @ Gr.T
        total += scale * float(wo @ (Qo * inner) @ wo)
    return total


def quad_form(A, q: Direction, order: int = 64, panel_order: int = 8, path: str = "auto",
              check: bool = True) -> float:
    """<K(A) q, q> for the h2-normalized kernel.

    ``path`` is "fast" (finite-rank reduction to 1D integrals), "generic" (2D
    nested rule) or "auto".  With ``check`` the order is doubled and
    QuadratureNonconvergent raised if the value moves by more than 1e-8 relative.
    """
    key = pattern_set(A).id
    if path == "auto":
        path = "fast" if q.factors is not None else "generic"
    if path == "fast" and q.factors is None:
        raise ValueError("direction has no finite-rank factorization")
    fn = _fast if path == "fast" else _generic
    val = fn(key, q, order, panel_order)
    if check:
        val2 = fn(key, q, 2 * order, panel_order)
        scale = max(abs(val2), 1e-12 * q.norm() ** 2)
        if abs(val2 - val) > CONVERGENCE_RTOL * scale:
            raise QuadratureNonconvergent(
                f"<K({key})q,q> moved from {val!r} to {val2!r} when doubling the order")
        val = val2
    return val


def fgm_integrals(order: int = 64):
    """[(I_i by quadrature, exact rational)] for I_i = int int (2u-1) g_i(u,v) (2v-1)."""
    lin = Q_FGM.factors[0][1]
    out = []
    for gid, exact in zip(("g1", "g2", "g3"), FGM_EXACT):
        out.append((bilinear(kernel_function(gid), lin, lin, order), exact))
    return out


def kappa(A, q: Direction, normalization: str = "h2", **kw) -> float:
    """<K(A) q, q> / lambda_{A,1}; the same for either kernel normalization."""
    factor = {"h2": 1.0, "6h2": 6.0}[normalization]
    return (factor * quad_form(A, q, **kw)) / (factor * top_eigenvalue(A))


def bahadur_efficiency(Aprime, A, q: Direction, **kw) -> float:
    """Local exact Bahadur efficiency of T^{A'} relative to T^A in direction q."""
    if pattern_set(Aprime).id == pattern_set(A).id:
        return 1.0
    return kappa(Aprime, q, **kw) / kappa(A, q, **kw)


@dataclass(frozen=True)
class EfficiencyReport:
    direction: str
    reference: str
    statistics: tuple
    quad_forms: dict
    top_eigenvalues: dict
    kappas: dict
    ratios: dict
    exact_quad_forms: dict = field(default_factory=dict)

    def pairwise(self) -> np.ndarray:
        k = np.array([self.kappas[a] for a in self.statistics])
        return k[:, None] / k[None, :]

    def to_dict(self) -> dict:
        return {
            "direction": self.direction, "reference": self.reference,
            "normalization": "h2",
            "statistics": list(self.statistics),
            "quad_forms": self.quad_forms, "top_eigenvalues": self.top_eigenvalues,
            "kappas": self.kappas, "ratios": self.ratios,
            "exact_quad_forms": {k: str(v) for k, v in self.exact_quad_forms.items()},
        }


def efficiency_report(q: Direction, reference="B", statistics=None, **kw) -> EfficiencyReport:
    stats = tuple(pattern_set(a).id for a in (statistics or ("B", "C", "D", "E", "F", "DE")))
    ref = pattern_set(reference).id
    quad = {a: quad_form(a, q, **kw) for a in stats}
    lam = {a: top_eigenvalue(a) for a in stats}
    kap = {a: quad[a] / lam[a] for a in stats}
    if ref not in kap:
        quad[ref] = quad_form(ref, q, **kw)
        lam[ref] = top_eigenvalue(ref)
        kap[ref] = quad[ref] / lam[ref]
    ratios = {a: (1.0 if a == ref else kap[a] / kap[ref]) for a in stats}
    exact = dict(FGM_QUAD_EXACT) if q.label == Q_FGM.label else {}
    return EfficiencyReport(q.label, ref, stats, quad, lam, kap, ratios,
                            {a: exact[a] for a in stats if a in exact})


def standard_efficiency_table(**kw):
    """Both lines of the efficiency table: (q_FGM relative to B) and (q_C relative to C)."""
    return [efficiency_report(Q_FGM, "B", **kw), efficiency_report(Q_C, "C", **kw)]


assert set(FGM_QUAD_EXACT) <= set(STATISTIC_IDS)
