"""Limit laws (weighted chi-square series), Monte Carlo critical values and exact small-n laws."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .errors import SizeLimit, TruncationUnreachable, UnsupportedShift
from .perm_core import count_patterns4_batch, random_permutations
from .quadrature import clustered, gauss_legendre
from .spectral import (ANALYTIC_TRACE, ChiExpansion, CosPi, Cos2Pi, HatF, Sin2Pi, Chi3, Chi4,
                       Spectrum, Tensor, spectrum_de, spectrum_product)
from .statistics import pattern_set, statistics_from_counts
from .streams import map_blocks, substream, as_seed_sequence

#: limit-law weights are this multiple of the h2 eigenvalues
WEIGHT_FACTOR = 6.0
DEFAULT_CAPTURE = 0.999
DEFAULT_DE_PARAMS = (5000, 500)   # (m, m1)
LIMIT_BLOCK = 4096
_COLUMN_CHUNK = 512
SHIFT_AXIS_CUTOFF = 64
SHIFT_ORDER = 256


@dataclass(frozen=True)
class LimitLaw:
    """Sum over classes c of w_c ((xi_c + s_c)^2 + chi^2_{m_c - 1} - m_c).

    ``weights`` are 6 x the h2 eigenvalues; ``shifts`` are per-class norms of
    the shift vector (all zero for the null law).
    """

    statistic: str
    weights: np.ndarray
    multiplicities: np.ndarray
    shifts: np.ndarray
    captured_trace: float      # h2 normalization
    analytic_trace: float      # h2 normalization
    spectrum: Spectrum | None = field(default=None, repr=False, compare=False)
    meta: dict = field(default_factory=dict)

    @property
    def capture(self) -> float:
        return self.captured_trace / self.analytic_trace

    @property
    def variance(self) -> float:
        """Variance of the truncated null series."""
        return float(2.0 * np.sum(self.multiplicities * self.weights ** 2))

    def residual_variance_bound(self) -> float:
        """2 (tail trace) (largest omitted weight), both in limit-law units."""
        tail = WEIGHT_FACTOR * max(self.analytic_trace - self.captured_trace, 0.0)
        wmax = float(self.weights[-1]) if len(self.weights) else 0.0
        return 2.0 * tail * wmax

    def with_shifts(self, shifts) -> "LimitLaw":
        return LimitLaw(self.statistic, self.weights, self.multiplicities, np.asarray(shifts, float),
                        self.captured_trace, self.analytic_trace, self.spectrum, self.meta)

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "normalization": "6*h2 (limit-law weights)",
                "classes": int(len(self.weights)),
                "weights": self.weights.tolist(), "multiplicities": self.multiplicities.tolist(),
                "captured_trace_h2": self.captured_trace, "analytic_trace_h2": self.analytic_trace,
                "capture": self.capture, "residual_variance_bound": self.residual_variance_bound(),
                **self.meta}


def _axis_bound(kernel: str) -> float:
    # eigenvalue of index j on an axis is at most C / (j - 1)^2
    return {"K1": 6 / math.pi ** 2, "K2": 3 / math.pi ** 2, "K3": 3 / (2 * math.pi ** 2),
            "K4": 3 / math.pi ** 2}[kernel]


def _cutoff_for_floor(A: str, floor: float) -> int:
    from .spectral import _PRODUCT_AXES
    scale, kl, kr = _PRODUCT_AXES[A]
    top = {"K1": 6 / math.pi ** 2, "K2": 3 / math.pi ** 2, "K3": 0.2863, "K4": 0.73}
    c = max(scale * _axis_bound(kl) * top[kr], scale * _axis_bound(kr) * top[kl])
    return int(math.sqrt(c / floor)) + 2


def _de_cutoff_for_floor(floor: float) -> int:
    # families mu_k/(2 pi^2 j^2) and mu_j mu_k / 6 with mu_1 < 0.73, mu_k < 3/(pi^2 (k-1)^2)
    c = max(0.73 / (2 * math.pi ** 2), 3 / (2 * math.pi ** 4), 0.73 * 3 / (6 * math.pi ** 2))
    return int(math.sqrt(c / floor)) + 2


def limit_spectrum(A, floor: float, de_params=DEFAULT_DE_PARAMS) -> Spectrum:
    key = pattern_set(A).id
    if key == "DE":
        m, m1 = de_params
        return spectrum_de(_de_cutoff_for_floor(floor), m, m1, min_eigenvalue=floor)
    return spectrum_product(key, _cutoff_for_floor(key, floor), min_eigenvalue=floor)


def build_limit_law(A, cutoff: int | None = None, de_params=DEFAULT_DE_PARAMS,
                    capture: float = DEFAULT_CAPTURE, max_classes: int = 60000) -> LimitLaw:
    """Truncated null limit law of n T_n^A.

    The eigenvalue floor is lowered until the retained classes carry ``capture``
    of the trace; ``cutoff`` (per-axis index bound) only sets the first floor.
    The retained set is the shortest decreasing prefix that reaches the target.
    """
    key = pattern_set(A).id
    analytic = ANALYTIC_TRACE[key]
    top = limit_spectrum(key, 1e-3 if key != "DE" else 1e-3, de_params).eigenvalues[0]
    floor = top * 1e-3 if cutoff is None else top / (cutoff * cutoff)
    while True:
        spec = limit_spectrum(key, floor, de_params)
        cum = np.cumsum(spec.eigenvalues * spec.multiplicities)
        if cum[-1] >= capture * analytic:
            k = int(np.searchsorted(cum, capture * analytic)) + 1
            break
        if len(spec) > max_classes:
            raise TruncationUnreachable(
                f"{key}: {len(spec)} classes capture only {cum[-1] / analytic:.6f} of the trace")
        floor /= 4.0
    if k > max_classes:
        raise TruncationUnreachable(f"{key}: capture {capture} needs {k} > {max_classes} classes")
    ev = spec.eigenvalues[:k]
    mult = spec.multiplicities[:k]
    trimmed = Spectrum(spec.kernel, ev, mult, spec.descriptors[:k], analytic, meta=spec.meta)
    meta = {"capture_target": capture, "floor_h2": float(ev[-1])}
    if key == "DE":
        meta["de_params"] = {"m": de_params[0], "m1": de_params[1]}
    return LimitLaw(key, WEIGHT_FACTOR * ev, mult, np.zeros(k), float(np.sum(ev * mult)), analytic,
                    trimmed, meta)


# ----------------------------------------------------------------------------
# sampling


def _block_draws(gen, size, weights, mults, shifts, want_z=False, z_coef=None):
    S = np.zeros(size)
    Z = np.zeros(size) if want_z else None
    shifted = shifts != 0
    if want_z:
        shifted = shifted | (z_coef != 0)
    for mv in np.unique(mults[~shifted]):
        idx = np.flatnonzero((mults == mv) & ~shifted)
        for lo in range(0, idx.shape[0], _COLUMN_CHUNK):
            cols = idx[lo:lo + _COLUMN_CHUNK]
            k = cols.shape[0]
            if mv == 1:
                G = gen.standard_normal((size, k))
                G *= G
            elif mv == 2:
                G = gen.standard_exponential((size, k))
                G *= 2.0
            else:
                G = gen.standard_gamma(mv / 2.0, (size, k))
                G *= 2.0
            S += G @ weights[cols]
    idx = np.flatnonzero(shifted)
    if idx.shape[0]:
        xi = gen.standard_normal((size, idx.shape[0]))
        G = (xi + shifts[idx]) ** 2
        rest = mults[idx] - 1
        for j in np.flatnonzero(rest > 0):
            G[:, j] += 2.0 * gen.standard_gamma(rest[j] / 2.0, size)
        S += G @ weights[idx]
        if want_z:
            Z += xi @ z_coef[idx]
    S -= float(np.sum(weights * mults))
    return S, Z


def sample_limit(law: LimitLaw, size: int | None = None, rng=None, workers=None):
    """Draws of the truncated series; a single float when ``size`` is None."""
    n = 1 if size is None else int(size)
    w, m, s = law.weights, law.multiplicities, law.shifts
    out = map_blocks(lambda g, k: _block_draws(g, k, w, m, s)[0], n, rng, workers, LIMIT_BLOCK)
    return float(out[0]) if size is None else out


def upper_quantile(values, alpha: float) -> float:
    """Smallest x with empirical F(x) >= 1 - alpha."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    v = np.sort(np.asarray(values, float))
    k = max(math.ceil((1.0 - alpha) * v.shape[0] - 1e-9), 1)
    return float(v[k - 1])


def limit_quantile(law: LimitLaw, alpha: float, reps: int = 100_000, rng=None, workers=None) -> float:
    if reps < 1000:
        raise ValueError("reps must be >= 1000")
    return upper_quantile(sample_limit(law, reps, rng, workers), alpha)


# ----------------------------------------------------------------------------
# finite-sample null distributions


def null_statistics(n: int, reps: int, rng=None, ids=("B", "C", "D", "E", "F", "DE"), workers=None):
    """T_n^A for ``reps`` uniform random permutations; shape (reps, len(ids))."""
    if n < 4:
        raise ValueError("n must be >= 4")
    ids = tuple(pattern_set(a).id for a in ids)

    def block(gen, size):
        return statistics_from_counts(count_patterns4_batch(random_permutations(n, size, gen)), n, ids)

    out = map_blocks(block, reps, rng, workers)
    return out.reshape(reps, len(ids))


def mc_critical_value(A, n: int, alpha: float, reps: int = 100_000, rng=None, workers=None) -> float:
    """Empirical upper-alpha quantile of T_n^A under uniform permutations."""
    return upper_quantile(null_statistics(n, reps, rng, (A,), workers)[:, 0], alpha)


def mc_p_value(observed: float, null_draws) -> float:
    d = np.asarray(null_draws, float)
    return (1.0 + np.count_nonzero(d >= observed)) / (d.shape[0] + 1.0)


def exact_null_distribution(A, n: int) -> list:
    """[(value, probability)] of T_n^A over all n! permutations, in exact rationals."""
    if n > 8:
        raise SizeLimit("exact enumeration is limited to n <= 8")
    if n < 4:
        raise ValueError("n must be >= 4")
    ps = pattern_set(A)
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    counts = count_patterns4_batch(perms)
    num = counts @ ps.weights().astype(np.int64)
    tally = Counter(num.tolist())
    total = math.comb(n, 4)
    nperm = math.factorial(n)
    off = ps.offset_exact()
    return sorted((Fraction(k, total) + off, Fraction(c, nperm)) for k, c in tally.items())


def exact_upper_quantile(dist, alpha: float) -> Fraction:
    """Smallest atom x with P(T <= x) >= 1 - alpha."""
    cum = Fraction(0)
    target = 1 - Fraction(alpha).limit_denominator(10**12)
    for value, p in dist:
        cum += p
        if cum >= target:
            return value
    return dist[-1][0]


# ----------------------------------------------------------------------------
# local alternatives


def _eval_1d(desc, x, cache):
    f = cache.get(desc)
    if f is None:
        f = desc(x)
        cache[desc] = f
    return f


def _index(desc) -> int:
    return getattr(desc, "j", 0)


def shift_coefficients(law: LimitLaw, q, axis_cutoff: int = SHIFT_AXIS_CUTOFF,
                       order: int = SHIFT_ORDER) -> np.ndarray:
    """Per-class norms of (<phi, q>) over the eigenfunctions phi of each class.

    Eigenfunctions with a per-axis index above ``axis_cutoff`` get 0.
    """
    spec = law.spectrum
    if spec is None:
        raise UnsupportedShift("law carries no eigenfunctions")
    x, w = clustered(order) if getattr(q, "endpoint_singular", False) else gauss_legendre(order)
    M = w[:, None] * q(x[:, None], x[None, :]) * w[None, :]
    cache: dict = {}
    chi_proj = None
    out = np.zeros(len(spec))
    for c, descs in enumerate(spec.descriptors):
        acc = 0.0
        for d in descs:
            if isinstance(d, Tensor):
                if _index(d.left) > axis_cutoff or _index(d.right) > axis_cutoff:
                    continue
                a = _eval_1d(d.left, x, cache) @ M @ _eval_1d(d.right, x, cache)
            else:
                if chi_proj is None:
                    mu = d.mu
                    L = min(axis_cutoff, mu.shape[0])
                    X = np.stack([Chi4(l + 1, float(mu[l]))(x) for l in range(L)])
                    chi_proj = X @ M @ X.T
                a = d.project(chi_proj)
            acc += a * a
        out[c] = math.sqrt(acc)
    return out


def shifted_law(A, q, law: LimitLaw | None = None, min_capture: float = 0.99, **kw) -> LimitLaw:
    """Limit law with per-class shifts <phi, q>; theta multiplies them at sampling time."""
    from .efficiency import quad_form

    law = law or build_limit_law(A, **kw)
    s = shift_coefficients(law, q)
    ev = law.weights / WEIGHT_FACTOR
    captured = float(np.sum(ev * s * s))
    total = quad_form(law.statistic, q, check=False)
    if total > 1e-14 and captured < min_capture * total:
        raise UnsupportedShift(
            f"{law.statistic}: retained eigenfunctions carry {captured / total:.4f} of <Kq,q>")
    out = law.with_shifts(s)
    object.__setattr__(out, "meta", {**law.meta, "shift_capture": captured / total if total > 0 else 1.0})
    return out


def limiting_power(A, q, theta: float, alpha: float = 0.05, reps: int = 100_000, rng=None,
                   law: LimitLaw | None = None, workers=None) -> float:
    """P(sum w ((xi + theta a)^2 + ...) >= c(alpha)) over the truncated series."""
    sl = shifted_law(A, q, law)
    root = as_seed_sequence(rng)
    null = sl.with_shifts(np.zeros_like(sl.shifts))
    c = limit_quantile(null, alpha, reps, substream(root, 0), workers)
    draws = sample_limit(sl.with_shifts(theta * sl.shifts), reps, substream(root, 1), workers)
    return float(np.mean(draws >= c))


def local_power_curvature(A, q, alpha: float = 0.05, reps: int = 100_000, rng=None,
                          law: LimitLaw | None = None, workers=None) -> float:
    """Second derivative at 0 of the limiting power, E[Z^2 1{S >= c}] - alpha |a|^2 / |q|^2.

    Z = sum a xi / |q|.  When q lies in the closed span of the eigenfunctions
    |a| = |q| and this is the familiar E[Z^2 1{S >= c}] - alpha.
    """
    sl = shifted_law(A, q, law)
    root = as_seed_sequence(rng)
    null = sl.with_shifts(np.zeros_like(sl.shifts))
    c = limit_quantile(null, alpha, reps, substream(root, 0), workers)
    qn = q.norm()
    z = sl.shifts / qn
    w, m = sl.weights, sl.multiplicities
    zero = np.zeros_like(z)

    def block(gen, size):
        S, Z = _block_draws(gen, size, w, m, zero, True, z)
        return (Z * Z) * (S >= c)

    vals = map_blocks(block, reps, substream(root, 1), workers, LIMIT_BLOCK)
    return float(np.mean(vals) - alpha * np.sum(z * z))


# ----------------------------------------------------------------------------
# quantile tables


@dataclass(frozen=True)
class EmpiricalQuantiles:
    statistic: str
    n: int | None            # None for the limit law
    alphas: tuple
    quantiles: tuple         # on the n T scale
    reps: int
    seed: int | None

    def rows(self):
        for a, v in zip(self.alphas, self.quantiles):
            yield {"statistic": self.statistic, "n_or_inf": "inf" if self.n is None else self.n,
                   "alpha": a, "quantile": v, "reps": self.reps, "seed": self.seed}


def quantile_table(statistics, ns, alphas, reps: int, seed: int | None = None,
                   de_params=DEFAULT_DE_PARAMS, workers=None) -> list:
    """Upper quantiles of n T_n^A (finite n) and of the limit law (n = None)."""
    root = as_seed_sequence(seed)
    out = []
    stats = tuple(pattern_set(a).id for a in statistics)
    alphas = tuple(sorted(float(a) for a in alphas))
    for i, n in enumerate(sorted(ns, key=lambda v: math.inf if v is None else v)):
        if n is None:
            for j, A in enumerate(stats):
                law = build_limit_law(A, de_params=de_params)
                d = sample_limit(law, reps, substream(root, i, j), workers)
                out.append(EmpiricalQuantiles(A, None, alphas,
                                              tuple(upper_quantile(d, a) for a in alphas), reps, seed))
        else:
            T = n * null_statistics(n, reps, substream(root, i), stats, workers)
            for j, A in enumerate(stats):
                out.append(EmpiricalQuantiles(A, int(n), alphas,
                                              tuple(upper_quantile(T[:, j], a) for a in alphas), reps, seed))
    return sorted(out, key=lambda e: (e.statistic, math.inf if e.n is None else e.n))


QUANTILE_COLUMNS = ("statistic", "n_or_inf", "alpha", "quantile", "reps", "seed")


def quantiles_to_csv(table) -> str:
    buf = io.StringIO()
    wr = csv.DictWriter(buf, fieldnames=QUANTILE_COLUMNS, lineterminator="\n")
    wr.writeheader()
    for e in table:
        for r in e.rows():
            wr.writerow({**r, "quantile": repr(r["quantile"])})
    return buf.getvalue()


def quantiles_to_json(table) -> str:
    return json.dumps({"schema": 1, "version": __version__, "scale": "n*T",
                       "rows": [r for e in table for r in e.rows()]}, indent=2)


# ----------------------------------------------------------------------------
# finite-sample power under copula alternatives


def sample_permutations(model, n: int, size: int, gen) -> np.ndarray:
    """Rank permutations (0-based rows) of ``size`` samples of n points from a copula."""
    from .copulas import sample

    pts = sample(model, size * n, gen).reshape(size, n, 2)
    order = np.argsort(pts[:, :, 0], axis=1, kind="stable")
    y = np.take_along_axis(pts[:, :, 1], order, axis=1)
    return np.argsort(np.argsort(y, axis=1, kind="stable"), axis=1, kind="stable")


def alternative_statistics(model, n: int, reps: int, rng=None, ids=("B", "C", "D", "E", "F", "DE"),
                           workers=None) -> np.ndarray:
    ids = tuple(pattern_set(a).id for a in ids)

    def block(gen, size):
        return statistics_from_counts(count_patterns4_batch(sample_permutations(model, n, size, gen)), n, ids)

    return map_blocks(block, reps, rng, workers).reshape(reps, len(ids))


@dataclass(frozen=True)
class PowerResult:
    model: str
    n: int
    alpha: float
    statistics: tuple
    critical_values: tuple
    power: tuple
    reps: int
    cv_reps: int
    seed: int | None

    def standard_errors(self):
        return tuple(math.sqrt(p * (1 - p) / self.reps) for p in self.power)

    def rows(self):
        for A, c, p, se in zip(self.statistics, self.critical_values, self.power, self.standard_errors()):
            yield {"model": self.model, "n": self.n, "alpha": self.alpha, "statistic": A,
                   "critical_value": c, "power": p, "se": se, "reps": self.reps,
                   "cv_reps": self.cv_reps, "seed": self.seed}


def empirical_power(model, n: int, alpha: float = 0.05, reps: int = 10_000, cv_reps: int = 100_000,
                    rng=None, ids=("B", "C", "F", "D", "E", "DE"), critical_values=None,
                    workers=None) -> PowerResult:
    """Rejection rate of T_n^A > c over copula samples, c the simulated null quantile."""
    ids = tuple(pattern_set(a).id for a in ids)
    root = as_seed_sequence(rng)
    if critical_values is None:
        T0 = null_statistics(n, cv_reps, substream(root, 0), ids, workers)
        critical_values = tuple(upper_quantile(T0[:, j], alpha) for j in range(len(ids)))
    T1 = alternative_statistics(model, n, reps, substream(root, 1), ids, workers)
    power = tuple(float(np.mean(T1[:, j] > critical_values[j])) for j in range(len(ids)))
    seed = None if rng is None or not isinstance(rng, (int, np.integer)) else int(rng)
    return PowerResult(model.label, int(n), float(alpha), ids, tuple(map(float, critical_values)),
                       power, int(reps), int(cv_reps), seed)
