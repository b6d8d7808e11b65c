"""Copula families used as alternatives: samplers, densities and local directions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, ndtri

from .errors import InputFormatError, ParameterOutOfRange, UnsupportedSampler
from .quadrature import clustered, gauss_legendre

FAMILIES = ("FGM", "Clayton", "Gaussian", "OptC", "AMH", "Plackett", "Frank", "GFGM")
SAMPLEABLE = ("FGM", "Clayton", "Gaussian", "OptC", "Frank")

_ALIASES = {f.lower(): f for f in FAMILIES}
_ALIASES.update({"gauss": "Gaussian", "normal": "Gaussian", "opt": "OptC", "optc": "OptC",
                 "p": "Plackett", "f": "Frank"})


def _check_range(family: str, theta: float):
    ok = {
        "FGM": -1 <= theta <= 1,
        "Clayton": theta >= -1 and theta != 0,
        "Gaussian": -1 < theta < 1,
        "OptC": -0.5 <= theta <= 0.5,
        "AMH": -1 <= theta <= 1,
        "Plackett": theta > -1,
        "Frank": math.isfinite(theta),
        "GFGM": -0.125 <= theta <= 0.25,
    }[family]
    if not ok or not math.isfinite(theta):
        raise ParameterOutOfRange(f"{family} parameter {theta} out of range")


@dataclass(frozen=True)
class CopulaModel:
    family: str
    parameter: float

    def __post_init__(self):
        fam = _ALIASES.get(str(self.family).lower())
        if fam is None:
            raise InputFormatError(f"unknown copula family {self.family!r}")
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "parameter", float(self.parameter))
        _check_range(fam, self.parameter)

    @property
    def label(self) -> str:
        return f"{self.family.lower()}:{self.parameter:g}"


def parse_model(text: str) -> CopulaModel:
    """Parse strings such as ``fgm:0.5`` or ``clayton:-0.25``."""
    name, sep, value = str(text).partition(":")
    if not sep:
        raise InputFormatError(f"expected family:parameter, got {text!r}")
    try:
        theta = float(value)
    except ValueError:
        raise InputFormatError(f"bad copula parameter in {text!r}") from None
    return CopulaModel(name.strip(), theta)


def normal_cdf(x):
    return 0.5 * erfc(-np.asarray(x, float) / math.sqrt(2.0))


# ----------------------------------------------------------------------------
# sampling


def _cond_fgm(theta, u, p):
    # dC/du = v + A v (1 - v) with A = theta (1 - 2u); stable root of A v^2 - (1+A) v + p = 0
    A = theta * (1.0 - 2.0 * u)
    disc = np.sqrt((1.0 + A) ** 2 - 4.0 * A * p)
    return 2.0 * p / ((1.0 + A) + disc)


def _cond_clayton(k, u, p):
    if k == -1.0:
        return 1.0 - u
    t = u ** (-k) * (p ** (-k / (1.0 + k)) - 1.0) + 1.0
    return np.clip(t, 0.0, None) ** (-1.0 / k)


def _cond_frank(theta, u, p):
    if theta == 0.0:
        return p
    a = np.exp(-theta * u)
    k = math.expm1(-theta)
    return -np.log1p(p * k / (p + (1.0 - p) * a)) / theta


def sample(model: CopulaModel, size: int | None = None, rng=None):
    """Draw ``size`` pairs (array (size, 2)); with size None a single (u, v) tuple."""
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    n = 1 if size is None else int(size)
    fam, t = model.family, model.parameter
    if fam not in SAMPLEABLE:
        raise UnsupportedSampler(f"no sampler for the {fam} family (direction only)")
    if fam == "Gaussian":
        z = gen.standard_normal((n, 2))
        x = z[:, 0]
        y = t * x + math.sqrt(1.0 - t * t) * z[:, 1]
        out = np.column_stack((normal_cdf(x), normal_cdf(y)))
    elif fam == "OptC":
        out = np.empty((n, 2))
        filled = 0
        bound = 1.0 + 2.0 * abs(t)
        while filled < n:
            m = max(16, int(1.1 * bound * (n - filled)))
            cand = gen.random((m, 3))
            u, v, r = cand.T
            dens = 1.0 + 2.0 * t * np.cos(2 * np.pi * u) * np.cos(2 * np.pi * v)
            acc = cand[r * bound <= dens, :2]
            take = min(acc.shape[0], n - filled)
            out[filled:filled + take] = acc[:take]
            filled += take
    else:
        up = gen.random((n, 2))
        u, p = up[:, 0], up[:, 1]
        cond = {"FGM": _cond_fgm, "Clayton": _cond_clayton, "Frank": _cond_frank}[fam]
        out = np.column_stack((u, cond(t, u, p)))
    if size is None:
        return float(out[0, 0]), float(out[0, 1])
    return out


# ----------------------------------------------------------------------------
# distribution functions and densities


def cdf(model: CopulaModel, u, v):
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    fam, t = model.family, model.parameter
    if fam == "FGM":
        return u * v * (1 + t * (1 - u) * (1 - v))
    if fam == "Clayton":
        with np.errstate(divide="ignore"):
            return np.maximum(u ** (-t) + v ** (-t) - 1.0, 0.0) ** (-1.0 / t)
    if fam == "Gaussian":
        from scipy.stats import multivariate_normal
        x, y = ndtri(u), ndtri(v)
        mvn = multivariate_normal(mean=[0, 0], cov=[[1, t], [t, 1]])
        return mvn.cdf(np.stack(np.broadcast_arrays(x, y), axis=-1))
    if fam == "OptC":
        return u * v + t / (2 * np.pi ** 2) * np.sin(2 * np.pi * u) * np.sin(2 * np.pi * v)
    if fam == "AMH":
        return u * v / (1 - t * (1 - u) * (1 - v))
    if fam == "Plackett":
        if t == 0:
            return u * v
        s = 1 + t * (u + v)
        return (s - np.sqrt(s * s - 4 * u * v * t * (t + 1))) / (2 * t)
    if fam == "Frank":
        if t == 0:
            return u * v
        return -np.log1p(np.expm1(-t * u) * np.expm1(-t * v) / math.expm1(-t)) / t
    # GFGM
    return u * v * (1 + t * (1 - u * u) * (1 - v * v)) ** 2


def density(model: CopulaModel, u, v):
    """Copula density at interior points."""
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    if np.any((u <= 0) | (u >= 1) | (v <= 0) | (v >= 1)):
        raise ParameterOutOfRange("density is evaluated on the open unit square")
    fam, t = model.family, model.parameter
    if fam == "FGM":
        return 1 + t * (2 * u - 1) * (2 * v - 1)
    if fam == "Clayton":
        if t == -1:
            raise ParameterOutOfRange("the Clayton copula with kappa = -1 has no density")
        s = u ** (-t) + v ** (-t) - 1.0
        with np.errstate(invalid="ignore", divide="ignore"):
            d = (1 + t) * (u * v) ** (-t - 1) * np.where(s > 0, s, 1.0) ** (-1.0 / t - 2)
        return np.where(s > 0, d, 0.0)
    if fam == "Gaussian":
        x, y = ndtri(u), ndtri(v)
        r2 = 1 - t * t
        return np.exp(-(t * t * (x * x + y * y) - 2 * t * x * y) / (2 * r2)) / math.sqrt(r2)
    if fam == "OptC":
        return 1 + 2 * t * np.cos(2 * np.pi * u) * np.cos(2 * np.pi * v)
    if fam == "AMH":
        a = 1 - t * (1 - u) * (1 - v)
        return (1 + t * ((1 + u) * (1 + v) - 3) + t * t * (1 - u) * (1 - v)) / a ** 3
    if fam == "Plackett":
        psi = 1 + t
        s = 1 + t * (u + v)
        return psi * (1 + t * (u + v - 2 * u * v)) / (s * s - 4 * psi * t * u * v) ** 1.5
    if fam == "Frank":
        if t == 0:
            return np.ones(np.broadcast(u, v).shape)
        k = -math.expm1(-t)
        num = t * k * np.exp(-t * (u + v))
        den = k - (-np.expm1(-t * u)) * (-np.expm1(-t * v))
        return num / den ** 2
    a = lambda x: (1 - x * x) * (1 - 5 * x * x)
    return 1 + 2 * t * (1 - 3 * u * u) * (1 - 3 * v * v) + t * t * a(u) * a(v)


# ----------------------------------------------------------------------------
# local directions


@dataclass(frozen=True)
class Direction:
    """A zero-mean perturbation q of the independence density.

    ``factors`` lists (coef, f, g) with q(u, v) = sum coef f(u) g(v) when the
    direction is a finite-rank tensor; None for a generic evaluator.
    """

    label: str
    func: object
    factors: tuple | None = None
    endpoint_singular: bool = False

    def __call__(self, u, v):
        return self.func(np.asarray(u, float), np.asarray(v, float))

    def scaled(self, c: float, label: str | None = None) -> "Direction":
        f = self.func
        facs = None if self.factors is None else tuple((c * a, g, h) for a, g, h in self.factors)
        return Direction(label or f"{c:g}*{self.label}", lambda u, v: c * f(u, v), facs,
                         self.endpoint_singular)

    def _rule(self, order):
        return clustered(order) if self.endpoint_singular else gauss_legendre(order)

    def norm(self, order: int = 128) -> float:
        x, w = self._rule(order)
        Q = self(x[:, None], x[None, :])
        return math.sqrt(float(w @ (Q * Q) @ w))

    def mean(self, order: int = 128) -> float:
        x, w = self._rule(order)
        return float(w @ self(x[:, None], x[None, :]) @ w)


def _rank1(label, f, coef=1.0, singular=False):
    return Direction(label, lambda u, v: coef * f(u) * f(v), ((coef, f, f),), singular)


def _lin(x):
    return 2 * x - 1


def _cos2(x):
    return np.cos(2 * np.pi * x)


def _cos1(x):
    return np.cos(np.pi * x)


def _cubic(x):
    return 1 - 3 * x * x


def _log1(x):
    return 1 + np.log(x)


Q_FGM = _rank1("q_FGM", _lin)
Q_C = _rank1("q_C", _cos2, 2.0)
Q_B = _rank1("q_B", _cos1, 2.0)

NAMED_DIRECTIONS = {"fgm": Q_FGM, "c": Q_C, "b": Q_B, "q_fgm": Q_FGM, "q_c": Q_C, "q_b": Q_B}


def direction(model) -> Direction:
    """First-order term q of the density 1 + theta q + o(theta) at independence."""
    fam = model.family if isinstance(model, CopulaModel) else _ALIASES.get(str(model).lower())
    if fam in ("FGM", "AMH", "Plackett"):
        return Direction(f"q_{fam}", Q_FGM.func, Q_FGM.factors)
    if fam == "Frank":
        return Q_FGM.scaled(0.5, "q_Frank")
    if fam == "GFGM":
        return _rank1("q_GFGM", _cubic, 2.0)
    if fam == "OptC":
        return Direction("q_OptC", Q_C.func, Q_C.factors)
    if fam == "Clayton":
        return _rank1("q_Clayton", _log1, singular=True)
    if fam == "Gaussian":
        return _rank1("q_Gaussian", ndtri, singular=True)
    raise InputFormatError(f"unknown copula family {model!r}")


def parse_direction(text: str) -> Direction:
    """A named direction (fgm, c, b) or the direction of a copula family."""
    key = str(text).strip().lower()
    if key in NAMED_DIRECTIONS:
        return NAMED_DIRECTIONS[key]
    return direction(key.partition(":")[0])


def total_mass(model: CopulaModel, order: int = 128) -> float:
    """Quadrature of the density over the unit square (should be 1).

    Endpoint clustering absorbs corner singularities; for Clayton with
    kappa < 0 the inner integral runs over the support only.
    """
    u, w = clustered(order)
    if model.family == "Clayton" and model.parameter < 0:
        k = model.parameter
        total = 0.0
        for ui, wi in zip(u, w):
            v0 = max(1 - ui ** (-k), 0.0) ** (-1 / k)
            vv = v0 + (1 - v0) * u
            ok = (vv > 0) & (vv < 1)
            total += wi * (1 - v0) * float(np.sum(w[ok] * density(model, np.full(ok.sum(), ui), vv[ok])))
        return total
    return float(w @ density(model, u[:, None], u[None, :]) @ w)
