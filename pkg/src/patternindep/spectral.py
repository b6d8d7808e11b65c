"""Eigen-decompositions of the factor operators K1..K4 and of the operators K(A).

All eigenvalues returned here belong to the reduced kernels h2^A exactly as
they are (factors 1/6 or 1/2 included).  Limit-law weights are 6 times these.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numba as nb
import numpy as np

from .errors import DistinctnessWarning, RootBracketFailure
from .kernels import DIAGONAL_TRACE, FACTORS
from .statistics import pattern_set

SQRT2 = math.sqrt(2.0)
PI2 = math.pi ** 2
PI4 = math.pi ** 4

#: trace of K(A) in the h2 normalization
ANALYTIC_TRACE = {"B": 1 / 6, "C": 1 / 6, "D": 1 / 6, "E": 1 / 6, "F": 2 / 9, "DE": 1 / 3}
NORMALIZATION = "h2"


# ----------------------------------------------------------------------------
# eigenfunction descriptors


class Descriptor:
    """An orthonormal eigenfunction that can be evaluated numerically."""

    tag = ""

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class CosPi(Descriptor):
    j: int
    tag = "CosPi"

    def __call__(self, u):
        return SQRT2 * np.cos(math.pi * self.j * np.asarray(u, float))

    def to_dict(self):
        return {"tag": self.tag, "j": self.j}


@dataclass(frozen=True)
class Cos2Pi(Descriptor):
    j: int
    tag = "Cos2Pi"

    def __call__(self, u):
        return SQRT2 * np.cos(2 * math.pi * self.j * np.asarray(u, float))

    def to_dict(self):
        return {"tag": self.tag, "j": self.j}


@dataclass(frozen=True)
class Sin2Pi(Descriptor):
    j: int
    tag = "Sin2Pi"

    def __call__(self, u):
        return SQRT2 * np.sin(2 * math.pi * self.j * np.asarray(u, float))

    def to_dict(self):
        return {"tag": self.tag, "j": self.j}


@dataclass(frozen=True)
class Chi3(Descriptor):
    """Eigenfunction of K3 for the eigenvalue mu = 1/gamma_j."""

    j: int
    mu: float
    tag = "Chi3"

    @property
    def c(self):
        return (0.5 + 2 * self.mu) ** -0.5

    def __call__(self, u):
        freq = math.sqrt(6.0 / self.mu)
        u = np.asarray(u, float)
        return self.c * (np.cos(freq * u) + math.sqrt(8 * self.mu / 3) * np.sin(freq * u))

    def to_dict(self):
        return {"tag": self.tag, "j": self.j, "mu": self.mu}


@dataclass(frozen=True)
class Chi4(Descriptor):
    """Eigenfunction of K4 for the eigenvalue mu = 1/gamma_j."""

    j: int
    mu: float
    tag = "Chi4"

    @property
    def c(self):
        return (0.5 + self.mu / 3) ** -0.5

    @property
    def b(self):
        """Integral of (u - 1/2) times this function."""
        return -self.c * self.mu / 3

    def __call__(self, u):
        freq = 2 * math.sqrt(3.0 / self.mu)
        u = np.asarray(u, float)
        return self.c * (np.cos(freq * u) + math.sqrt(self.mu / 3) * np.sin(freq * u))

    def to_dict(self):
        return {"tag": self.tag, "j": self.j, "mu": self.mu}


@dataclass(frozen=True)
class Tensor(Descriptor):
    left: Descriptor
    right: Descriptor
    tag = "Tensor"

    def __call__(self, u, v):
        return self.left(u) * self.right(v)

    def to_dict(self):
        return {"tag": self.tag, "left": self.left.to_dict(), "right": self.right.to_dict()}


@dataclass(frozen=True)
class ChiExpansion(Descriptor):
    """Finite combination sum_{(l,m)} coef * chi_l(u) chi_m(v) of K4 eigenfunctions."""

    pairs: tuple          # ((l, m), ...), 1-based
    coefs: tuple
    mu: np.ndarray = field(repr=False, compare=False)
    tag = "ChiExpansion"

    def __call__(self, u, v):
        u = np.asarray(u, float)
        v = np.asarray(v, float)
        out = 0.0
        for (l, m), a in zip(self.pairs, self.coefs):
            out = out + a * Chi4(l, self.mu[l - 1])(u) * Chi4(m, self.mu[m - 1])(v)
        return out

    def project(self, coef_matrix) -> float:
        """Inner product with sum Q[l-1, m-1] chi_l x chi_m."""
        Q = np.asarray(coef_matrix)
        total = 0.0
        for (l, m), a in zip(self.pairs, self.coefs):
            if l <= Q.shape[0] and m <= Q.shape[1]:
                total += a * Q[l - 1, m - 1]
        return total

    def to_dict(self):
        return {"tag": self.tag, "pairs": [list(p) for p in self.pairs], "coefs": list(self.coefs)}


@dataclass(frozen=True)
class TauBasis(ChiExpansion):
    """Orthonormal basis element of an eigenspace spanned by chi_j x chi_k with mu_j mu_k = lam."""

    lam: float = 0.0
    index: int = 1
    tag = "TauBasis"

    def to_dict(self):
        d = super().to_dict()
        d.update(tag=self.tag, lam=self.lam, index=self.index)
        return d


@dataclass(frozen=True, eq=False)
class HatF(Descriptor):
    """Eigenfunction of K(DE) attached to the i-th zero of the secular function.

    Coefficients b_l b_m / (mu_l mu_m - lam_hat) on chi_l x chi_m, truncated to
    l, m <= m1 and normalised in coefficient space (the chi_l are orthonormal).
    """

    i: int
    lam_hat: float
    mu: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    tag = "HatF"

    def coefficients(self, terms: int | None = None) -> np.ndarray:
        full = _hatf_coefs(self.mu, self.b, self.lam_hat)
        c = 1.0 / math.sqrt(float(np.sum(full * full)))
        if terms is None:
            return c * full
        return c * full[:terms, :terms]

    def __call__(self, u, v, terms: int = 200):
        A = self.coefficients(terms)
        k = A.shape[0]
        Xu = np.stack([Chi4(l + 1, self.mu[l])(u) for l in range(k)], axis=-1)
        Xv = np.stack([Chi4(l + 1, self.mu[l])(v) for l in range(k)], axis=-1)
        return np.einsum("...l,lm,...m->...", Xu, A, Xv)

    def project(self, coef_matrix) -> float:
        Q = np.asarray(coef_matrix)
        A = self.coefficients(Q.shape[0])
        return float(np.sum(A * Q[: A.shape[0], : A.shape[1]]))

    def to_dict(self):
        return {"tag": self.tag, "i": self.i, "lam_hat": self.lam_hat, "m1": int(self.mu.shape[0])}


def _hatf_coefs(mu, b, lam_hat):
    return np.outer(b, b) / (np.outer(mu, mu) - lam_hat)


# ----------------------------------------------------------------------------
# spectra


@dataclass(frozen=True)
class SpectrumEntry:
    eigenvalue: float
    multiplicity: int
    descriptors: tuple

    def to_dict(self):
        return {"eigenvalue": self.eigenvalue, "multiplicity": self.multiplicity,
                "descriptors": [d.to_dict() for d in self.descriptors]}


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalue classes in decreasing order with their eigenfunctions."""

    kernel: str
    eigenvalues: np.ndarray
    multiplicities: np.ndarray
    descriptors: tuple
    analytic_trace: float
    normalization: str = NORMALIZATION
    meta: dict = field(default_factory=dict)

    @property
    def captured_trace(self) -> float:
        return float(math.fsum(self.eigenvalues * self.multiplicities))

    @property
    def entries(self) -> list:
        return [SpectrumEntry(float(l), int(m), d)
                for l, m, d in zip(self.eigenvalues, self.multiplicities, self.descriptors)]

    def __len__(self):
        return int(self.eigenvalues.shape[0])

    def to_dict(self, max_entries: int | None = None) -> dict:
        ents = self.entries if max_entries is None else self.entries[:max_entries]
        return {"kernel": self.kernel, "normalization": self.normalization,
                "entries": [e.to_dict() for e in ents],
                "analytic_trace": self.analytic_trace, "captured_trace": self.captured_trace,
                **({"meta": self.meta} if self.meta else {})}


def _group(values, keys, descs, rel_tol=1e-12):
    """Sort descending and merge equal eigenvalues (exact keys when given)."""
    values = np.asarray(values, float)
    order = np.argsort(-values, kind="stable")
    vals, mults, groups = [], [], []
    prev_key = None
    for idx in order:
        v = values[idx]
        k = None if keys is None else keys[idx]
        if vals:
            same = (k == prev_key) if (k is not None and prev_key is not None) \
                else abs(v - vals[-1]) <= rel_tol * vals[-1]
            if same:
                mults[-1] += 1
                groups[-1].append(descs[idx])
                continue
        vals.append(v)
        mults.append(1)
        groups.append([descs[idx]])
        prev_key = k
    return np.array(vals), np.array(mults, dtype=np.int64), tuple(tuple(g) for g in groups)


# ----------------------------------------------------------------------------
# transcendental roots


def _root_offsets(kind: str, j: np.ndarray) -> np.ndarray:
    """Solve for t in (0, pi/2) with w = (j - 1/2) pi + t a root of the K3/K4 equation.

    K3: 2 sin w + w cos w = 0, i.e. tan t = 2 / w.
    K4:   sin w + w cos w = 0, i.e. tan t = 1 / w.
    """
    c = 2.0 if kind == "K3" else 1.0
    a = (j - 0.5) * math.pi

    def G(t):
        return t - np.arctan(c / (a + t))

    lo = np.zeros_like(a)
    hi = np.full_like(a, math.pi / 2)
    if np.any(G(lo) >= 0) or np.any(G(hi) <= 0):
        raise RootBracketFailure(f"{kind}: sign change missing in a root bracket")
    while np.max(hi - lo) > 1e-8:
        mid = 0.5 * (lo + hi)
        pos = G(mid) > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
    t = 0.5 * (lo + hi)
    for _ in range(8):
        w = a + t
        step = G(t) / (1.0 + c / (w * w + c * c))
        t = t - step
        if np.max(np.abs(step)) <= 1e-16:
            break
    if np.any(t <= 0) or np.any(t >= math.pi / 2):
        raise RootBracketFailure(f"{kind}: Newton polish left its bracket")
    return a + t


@lru_cache(maxsize=8)
def _gamma_cached(kind: str, count: int) -> np.ndarray:
    j = np.arange(1, count + 1, dtype=float)
    w = _root_offsets(kind, j)
    gam = (2.0 * w * w / 3.0) if kind == "K3" else (w * w / 3.0)
    gam.setflags(write=False)
    return gam


def _kernel_key(kernel) -> str:
    k = str(kernel).upper()
    if k.startswith("G"):
        k = "K" + k[1:]
    if k not in ("K1", "K2", "K3", "K4"):
        raise ValueError(f"unknown kernel {kernel!r}")
    return k


def find_gamma_roots(kernel, count: int) -> np.ndarray:
    """The ``count`` smallest positive zeros gamma_j of the K3 or K4 secular function."""
    k = _kernel_key(kernel)
    if k not in ("K3", "K4"):
        raise ValueError("gamma roots exist for K3 and K4 only")
    if count < 1:
        raise ValueError("count must be >= 1")
    gam = _gamma_cached(k, int(count))
    j = np.arange(1, count + 1)
    scale = 2 * PI2 / 3 if k == "K3" else PI2 / 3
    if np.any(gam <= scale * (j - 1) ** 2) or np.any(gam >= scale * j ** 2):
        raise RootBracketFailure("root outside its printed bracket")
    return gam.copy()


def omega_1d(kernel, z):
    """Secular function whose zeros are the gamma_j (for checks)."""
    k = _kernel_key(kernel)
    z = np.asarray(z, float)
    if k == "K3":
        w = np.sqrt(1.5 * z)
        return 2.0 / 3.0 + w / np.tan(w) / 3.0
    w = np.sqrt(3 * z)
    return 1.0 + w / np.tan(w)


def gamma_tail(kernel, count: int) -> float:
    """Asymptotic estimate of sum_{j > count} 1/gamma_j."""
    k = _kernel_key(kernel)
    # 1/gamma_j ~ const / ((j - 1/2) pi)^2 and sum_{j>N} (j-1/2)^-2 ~ 1/N
    const = 1.5 if k == "K3" else 3.0
    return const / (PI2 * count)


def k4_mu(count: int) -> np.ndarray:
    return 1.0 / find_gamma_roots("K4", count)


def k4_b(mu: np.ndarray) -> np.ndarray:
    """b_j = integral of (u - 1/2) chi_j = -c_j mu_j / 3."""
    return -((0.5 + mu / 3.0) ** -0.5) * mu / 3.0


# ----------------------------------------------------------------------------
# one-dimensional spectra

def _axis(kernel: str, count: int):
    """Per-axis eigen-system: list of (eigenvalue, integer key or None, descriptor)."""
    k = _kernel_key(kernel)
    out = []
    if k == "K1":
        for j in range(1, count + 1):
            out.append((6.0 / (PI2 * j * j), j, CosPi(j)))
    elif k == "K2":
        for j in range(1, count + 1):
            lam = 3.0 / (PI2 * j * j)
            out.append((lam, j, Cos2Pi(j)))
            out.append((lam, j, Sin2Pi(j)))
    elif k == "K3":
        gam = find_gamma_roots("K3", count)
        for j in range(1, count + 1):
            out.append((3.0 / (2 * PI2 * j * j), None, Cos2Pi(j)))
            out.append((1.0 / gam[j - 1], None, Chi3(j, 1.0 / gam[j - 1])))
    else:
        gam = find_gamma_roots("K4", count)
        for j in range(1, count + 1):
            out.append((3.0 / (PI2 * j * j), None, Cos2Pi(j)))
            out.append((1.0 / gam[j - 1], None, Chi4(j, 1.0 / gam[j - 1])))
    return out


def spectrum_1d(kernel, count: int) -> Spectrum:
    """The ``count`` largest eigenvalue classes of K1..K4."""
    if count < 1:
        raise ValueError("count must be >= 1")
    k = _kernel_key(kernel)
    ax = _axis(k, count)
    vals, mults, groups = _group([a[0] for a in ax], [a[1] for a in ax] if k in ("K1", "K2") else None,
                                 [a[2] for a in ax])
    return Spectrum(k, vals[:count], mults[:count], groups[:count], DIAGONAL_TRACE["g" + k[1:]],
                    normalization="factor kernel")


def trace_check(kernel, count: int):
    """(closed-form trace, sum of the ``count`` largest eigenvalues with multiplicity)."""
    s = spectrum_1d(kernel, count)
    k = _kernel_key(kernel)
    return DIAGONAL_TRACE["g" + k[1:]], s.captured_trace


# ----------------------------------------------------------------------------
# product spectra for B, C, D, E, F

_PRODUCT_AXES = {key: (terms[0][0], "K" + terms[0][1][1], "K" + terms[0][2][1])
                 for key, terms in FACTORS.items() if len(terms) == 1}


def product_pairs(left, right, scale, cutoff, floor=None):
    """All scaled products of two per-axis systems, optionally only those >= floor."""
    lv = np.array([a[0] for a in left])
    rv = np.array([a[0] for a in right])
    rorder = np.argsort(-rv, kind="stable")
    rsorted = rv[rorder]
    vals, li, ri = [], [], []
    for i, l in enumerate(lv):
        if floor is None:
            cnt = len(rv)
        else:
            # number of right entries with scale*l*r >= floor
            cnt = int(np.searchsorted(-rsorted, -floor / (scale * l) * (1 + 1e-14), side="right"))
        if cnt == 0:
            continue
        idx = rorder[:cnt]
        vals.append(scale * l * rv[idx])
        li.append(np.full(cnt, i))
        ri.append(idx)
    if not vals:
        return np.empty(0), np.empty(0, int), np.empty(0, int)
    return np.concatenate(vals), np.concatenate(li), np.concatenate(ri)


def spectrum_product(A, cutoff: int, min_eigenvalue: float | None = None) -> Spectrum:
    """Spectrum of K(A), A in {B, C, D, E, F}, from per-axis indices <= cutoff.

    ``min_eigenvalue`` additionally drops classes below a floor, which gives the
    hyperbolic truncation used for limit laws.
    """
    key = pattern_set(A).id
    if key == "DE":
        raise ValueError("use spectrum_de for DE")
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    scale, kl, kr = _PRODUCT_AXES[key]
    left, right = _axis(kl, cutoff), _axis(kr, cutoff)
    vals, li, ri = product_pairs(left, right, scale, cutoff, min_eigenvalue)
    exact = all(a[1] is not None for a in left + right)
    keys = [left[i][1] * right[k][1] for i, k in zip(li, ri)] if exact else None
    descs = [Tensor(left[i][2], right[k][2]) for i, k in zip(li, ri)]
    v, m, g = _group(vals, keys, descs)
    return Spectrum(key, v, m, g, ANALYTIC_TRACE[key],
                    meta={"cutoff": int(cutoff), "min_eigenvalue": min_eigenvalue})


def top_eigenvalue(A, de_params=(500, 500)) -> float:
    """Largest eigenvalue of K(A) (h2 normalization)."""
    key = pattern_set(A).id
    if key == "B":
        return 6 / PI4
    if key == "C":
        return 3 / (2 * PI4)
    if key in ("D", "E"):
        return 3 / PI4
    if key == "F":
        g1 = find_gamma_roots("K3", 1)[0]
        return float(0.5 / g1 ** 2)
    m, m1 = de_params
    sol = de_secular(m1, max(1, min(m, 8)))
    mu = sol.mu
    cands = [3 / (2 * PI4), mu[0] / (2 * PI2), mu[0] * mu[1] / 6, sol.x[0] / 6]
    return float(max(cands))


# ----------------------------------------------------------------------------
# secular equation of the DE operator

_NTERMS = 12       # series terms for far poles
_RATIO = 64.0      # poles farther than this factor are summed by moments
_BLOCK = 512


@nb.njit(cache=True, nogil=True)
def _block_moments(lam, w, block, nterms):
    P = lam.shape[0]
    nb_ = (P + block - 1) // block
    small = np.zeros((nb_ + 1, nterms))
    large = np.zeros((nb_ + 1, nterms + 2))
    acc = np.zeros(nterms)
    for b in range(nb_):
        for p in range(nterms):
            small[b, p] = acc[p]
        for k in range(b * block, min((b + 1) * block, P)):
            t = w[k]
            for p in range(nterms):
                acc[p] += t
                t *= lam[k]
    for p in range(nterms):
        small[nb_, p] = acc[p]
    acc2 = np.zeros(nterms + 2)
    for b in range(nb_ - 1, -1, -1):
        for k in range(min((b + 1) * block, P) - 1, b * block - 1, -1):
            inv = 1.0 / lam[k]
            t = w[k]
            for q in range(nterms + 2):
                acc2[q] += t
                t *= inv
        for q in range(nterms + 2):
            large[b, q] = acc2[q]
    return small, large


@nb.njit(cache=True, nogil=True)
def _secular_eval(lam, w, s0, s1, iL, anchor, tau, small, large, nterms):
    # f(x) = 1 + sum w_k / (x - lam_k), split into poles left (psi) and right (phi)
    psi = 0.0
    dpsi = 0.0
    phi = 0.0
    dphi = 0.0
    for k in range(s0, s1):
        d = (anchor - lam[k]) + tau
        t = w[k] / d
        if k <= iL:
            psi += t
            dpsi -= t / d
        else:
            phi += t
            dphi -= t / d
    x = anchor + tau
    xi = 1.0 / x
    pw = xi
    for p in range(nterms):
        # sum w lam^p / x^(p+1)
        psi += small[p] * pw
        dpsi -= (p + 1) * small[p] * pw * xi
        pw *= xi
    pw = 1.0
    for p in range(nterms):
        # large[q] = sum w lam^-q; w/(x-lam) = -sum_p w x^p / lam^(p+1)
        phi -= large[p + 1] * pw
        dphi -= (p + 1) * large[p + 2] * pw
        pw *= x
    return psi, dpsi, phi, dphi


@nb.njit(cache=True, nogil=True)
def _secular_solve(lam, w, first, count, ratio, block, small, large, nterms, out, iters):
    P = lam.shape[0]
    zero_small = np.zeros(nterms)
    zero_large = np.zeros(nterms + 2)
    for r in range(first, first + count):
        iL = P - 2 - r
        iR = iL + 1
        a = lam[iL]
        b = lam[iR]
        delta = b - a
        if ratio > 0.0:
            lo_idx = np.searchsorted(lam, a / ratio)
            hi_idx = np.searchsorted(lam, b * ratio, side="right")
            bl = lo_idx // block
            bh = (hi_idx + block - 1) // block
            s0 = bl * block
            s1 = min(bh * block, P)
            sm = small[bl]
            lg = large[min(bh, large.shape[0] - 1)] if s1 < P else zero_large
        else:
            s0 = 0
            s1 = P
            sm = zero_small
            lg = zero_large
        psi, dpsi, phi, dphi = _secular_eval(lam, w, s0, s1, iL, a, 0.5 * delta, sm, lg, nterms)
        if 1.0 + psi + phi > 0.0:
            anchor = b
            lo = -0.5 * delta
            hi = 0.0
            tau = -0.5 * delta
        else:
            anchor = a
            lo = 0.0
            hi = 0.5 * delta
            tau = 0.5 * delta
        n_it = 0
        for it in range(200):
            n_it += 1
            psi, dpsi, phi, dphi = _secular_eval(lam, w, s0, s1, iL, anchor, tau, sm, lg, nterms)
            f = 1.0 + psi + phi
            if f == 0.0:
                break
            if f > 0.0:
                lo = tau
            else:
                hi = tau
            if anchor == a:
                xa = tau
                xb = tau - delta
            else:
                xa = tau + delta
                xb = tau
            Sp = -dpsi * xa * xa
            Sf = -dphi * xb * xb
            c = 1.0 + (psi - Sp / xa) + (phi - Sf / xb)
            if anchor == a:
                B = -c * delta + Sp + Sf
                C = -Sp * delta
            else:
                B = c * delta + Sp + Sf
                C = Sf * delta
            t_new = 0.5 * (lo + hi)
            if abs(c) * abs(delta) < 1e-300 * abs(B) or c == 0.0:
                if B != 0.0:
                    t_new = -C / B
            else:
                disc = B * B - 4.0 * c * C
                if disc < 0.0:
                    disc = 0.0
                sq = math.sqrt(disc)
                q = -0.5 * (B + (sq if B >= 0 else -sq))
                r1 = q / c
                r2 = C / q if q != 0.0 else r1
                if lo < r1 < hi:
                    t_new = r1
                elif lo < r2 < hi:
                    t_new = r2
            if not (lo < t_new < hi):
                t_new = 0.5 * (lo + hi)
            step = t_new - tau
            tau = t_new
            if abs(step) <= 2e-16 * abs(anchor + tau) or hi - lo <= 4e-16 * abs(anchor):
                break
        out[r] = anchor + tau
        iters[r] = n_it


@dataclass(frozen=True)
class DESecular:
    """Zeros of the truncated secular function of the DE operator.

    ``poles`` holds the merged products mu_l mu_m (ascending) with weights
    36 * sum b_l^2 b_m^2; ``x`` holds the reciprocals 1/z_hat of the first m
    zeros in decreasing order.
    """

    m1: int
    m: int
    mu: np.ndarray
    b: np.ndarray
    poles: np.ndarray
    weights: np.ndarray
    x: np.ndarray
    collisions: int
    iterations: np.ndarray

    @property
    def z(self) -> np.ndarray:
        return 1.0 / self.x

    @property
    def s_bar(self) -> float:
        return float(math.fsum(self.x))

    def omega(self, z):
        """Truncated secular function at z (direct summation)."""
        z = np.asarray(z, float)
        x = 1.0 / z
        return 1.0 + np.sum(self.weights / (x[..., None] - self.poles), axis=-1)


def _de_poles(m1: int):
    mu = k4_mu(m1)
    b = k4_b(mu)
    b2 = b * b
    iu, ju = np.triu_indices(m1)
    prods = mu[iu] * mu[ju]
    wts = b2[iu] * b2[ju] * np.where(iu == ju, 1.0, 2.0)
    del iu, ju
    order = np.argsort(prods, kind="stable")
    prods = prods[order]
    wts = wts[order]
    del order
    same = np.abs(np.diff(prods)) <= 1e-12 * prods[1:]
    collisions = int(np.count_nonzero(same))
    if collisions:
        warnings.warn(f"{collisions} coincident pole pairs merged at relative tolerance 1e-12",
                      DistinctnessWarning, stacklevel=3)
        start = np.concatenate(([True], ~same))
        gid = np.cumsum(start) - 1
        wts = np.bincount(gid, weights=wts)
        prods = prods[start]
    return mu, b, prods, 36.0 * wts, collisions


@lru_cache(maxsize=4)
def de_secular(m1: int, m: int, direct: bool = False) -> DESecular:
    """Solve the truncated DE secular equation for its m smallest zeros."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if m1 * (m1 + 1) // 2 <= m:
        raise ValueError("need m1 (m1 + 1) / 2 > m")
    mu, b, poles, wts, coll = _de_poles(int(m1))
    if m > poles.shape[0] - 1:
        raise ValueError("not enough distinct poles for m zeros")
    out = np.empty(m)
    iters = np.zeros(m, np.int64)
    if direct:
        small = np.zeros((1, _NTERMS))
        large = np.zeros((1, _NTERMS + 2))
        _secular_solve(poles, wts, 0, m, 0.0, _BLOCK, small, large, _NTERMS, out, iters)
    else:
        small, large = _block_moments(poles, wts, _BLOCK, _NTERMS)
        # the solver indexes rows of the moment tables through a 2D view
        _secular_solve(poles, wts, 0, m, _RATIO, _BLOCK, small, large, _NTERMS, out, iters)
    P = poles.shape[0]
    left = poles[P - 2 - np.arange(m)]
    right = poles[P - 1 - np.arange(m)]
    if not (np.all(out > left) and np.all(out < right)):
        raise RootBracketFailure("a secular zero left its pole bracket")
    for arr in (mu, b, poles, wts, out):
        arr.setflags(write=False)
    return DESecular(int(m1), int(m), mu, b, poles, wts, out, coll, iters)


def omega_de_roots(m: int, m1: int) -> np.ndarray:
    """The m smallest zeros z_hat of the truncated DE secular function (ascending)."""
    return de_secular(int(m1), int(m)).z


def spectrum_de(cutoff: int, m: int, m1: int, min_eigenvalue: float | None = None) -> Spectrum:
    """Spectrum of K(DE): tensor families up to ``cutoff`` per axis plus m secular eigenvalues."""
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    sol = de_secular(int(m1), int(m))
    nmu = max(cutoff, m1)
    mu = k4_mu(nmu)
    floor = 0.0 if min_eigenvalue is None else float(min_eigenvalue)
    vals, descs = [], []

    def keep(v):
        return v >= floor

    # chi_j x chi_k tensors for the tau family use the same orthonormal chi_l
    for j in range(1, cutoff + 1):
        for k in range(1, cutoff + 1):
            v = 3.0 / (2 * PI4 * j * j * k * k)
            if not keep(v):
                break
            vals.append(v)
            descs.append(Tensor(Cos2Pi(j), Cos2Pi(k)))
    for j in range(1, cutoff + 1):
        for k in range(1, cutoff + 1):
            v = mu[k - 1] / (2 * PI2 * j * j)
            if not keep(v):
                break
            vals.append(v)
            descs.append(Tensor(Cos2Pi(j), Chi4(k, mu[k - 1])))
            vals.append(v)
            descs.append(Tensor(Chi4(k, mu[k - 1]), Cos2Pi(j)))
    # tau family: eigenspaces of chi_j x chi_k with equal products, minus one dimension
    tv, tg = _tau_family(mu[:cutoff], floor)
    vals.extend(tv)
    descs.extend(tg)
    for i in range(m):
        v = sol.x[i] / 6.0
        if not keep(v):
            break
        vals.append(v)
        descs.append(HatF(i + 1, float(sol.x[i]), sol.mu, sol.b))
    v, mult, g = _group(vals, None, descs)
    return Spectrum("DE", v, mult, g, ANALYTIC_TRACE["DE"],
                    meta={"cutoff": int(cutoff), "m": int(m), "m1": int(m1),
                          "s_bar": sol.s_bar, "pole_collisions": sol.collisions,
                          "min_eigenvalue": min_eigenvalue})


def _tau_family(mu, floor):
    n = mu.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    prods = mu[iu] * mu[ju]
    sel = prods / 6.0 >= floor
    iu, ju, prods = iu[sel], ju[sel], prods[sel]
    # full ordered-pair sets, including diagonal pairs that collide
    diag = mu * mu
    vals, descs = [], []
    order = np.argsort(-prods, kind="stable")
    used = np.zeros(order.shape[0], dtype=bool)
    sorted_p = prods[order]
    for pos, idx in enumerate(order):
        if used[pos]:
            continue
        lam = sorted_p[pos]
        same = [pos]
        q = pos + 1
        while q < order.shape[0] and abs(sorted_p[q] - lam) <= 1e-12 * lam:
            same.append(q)
            q += 1
        for s in same:
            used[s] = True
        pairs = set()
        for s in same:
            j, k = int(iu[order[s]]) + 1, int(ju[order[s]]) + 1
            pairs.add((j, k))
            pairs.add((k, j))
        for d in np.flatnonzero(np.abs(diag - lam) <= 1e-12 * lam):
            pairs.add((int(d) + 1, int(d) + 1))
        pairs = sorted(pairs)
        basis = _gram_schmidt_pairs(pairs)
        for t, coefs in enumerate(basis, start=1):
            vals.append(lam / 6.0)
            descs.append(TauBasis(tuple(pairs), tuple(coefs), mu, lam=float(lam), index=t))
    return vals, descs


def _gram_schmidt_pairs(pairs):
    """Orthonormal basis of {sum a_p e_p : sum a_p = 0} from e_p - e_anchor, anchor = pairs[0]."""
    k = len(pairs)
    basis = []
    for p in range(1, k):
        v = np.zeros(k)
        v[p] = 1.0
        v[0] = -1.0
        for e in basis:
            v -= (v @ e) * e
        v /= np.linalg.norm(v)
        basis.append(v)
    return [tuple(float(x) for x in e) for e in basis]
