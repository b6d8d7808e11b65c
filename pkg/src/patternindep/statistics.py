"""Linear pattern statistics and the centred test statistics T^A."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DegenerateSample, InputFormatError
from .perm_core import PATTERN_NAMES, PatternCounts, pattern_index

_SETS = {
    "B": ("1234", "1243", "2134", "2143", "3412", "3421", "4312", "4321"),
    "C": ("1234", "1432", "2143", "2341", "3214", "3412", "4123", "4321"),
    "D": ("1324", "1342", "2413", "2431", "3124", "3142", "4213", "4231"),
    "E": ("1324", "1423", "2314", "2413", "3142", "3241", "4132", "4231"),
}
_SETS["F"] = tuple(sorted(set(_SETS["B"]) | set(_SETS["C"])))

#: dihedral orbits of S4 with their a* weights
ORBITS = {
    "black": (("1234", "4321"), 4),
    "blue": (("1243", "2134", "3421", "4312"), 2),
    "cyan": (("1324", "4231"), 2),
    "red": (("2143", "3412"), 4),
    "violet": (("2413", "3142"), 2),
    "magenta": (("1432", "2341", "3214", "4123"), 1),
}
_named = {p for members, _ in ORBITS.values() for p in members}
ORBITS["green"] = (tuple(p for p in PATTERN_NAMES if p not in _named), 1)

A_STAR = np.array([4, 2, 2, 1, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 1, 1, 4, 2, 1, 1, 1, 2, 2, 4], dtype=float)
A_STAR_SUM = 44

STATISTIC_IDS = ("B", "C", "D", "E", "F", "DE")


@dataclass(frozen=True)
class PatternSet:
    """A test statistic id with its member sets, sign and centring.

    For ``DE`` the statistic is the sum of the D and E statistics, so
    ``components`` lists both sets and ``sign`` applies to each.
    """

    id: str
    components: tuple
    sign: int

    @property
    def members(self) -> frozenset:
        out = set()
        for c in self.components:
            out |= c
        return frozenset(out)

    @property
    def size(self) -> int:
        return sum(len(c) for c in self.components)

    def weights(self) -> np.ndarray:
        """Signed indicator weights w with T = w . t + offset."""
        w = np.zeros(24)
        for c in self.components:
            for name in c:
                w[pattern_index(name)] += self.sign
        return w

    def offset(self) -> float:
        return -self.sign * self.size / 24.0

    def offset_exact(self) -> Fraction:
        return Fraction(-self.sign * self.size, 24)


def pattern_set(A) -> PatternSet:
    if isinstance(A, PatternSet):
        return A
    key = str(A).upper()
    if key == "DE":
        return PatternSet("DE", (frozenset(_SETS["D"]), frozenset(_SETS["E"])), -1)
    if key not in _SETS:
        raise InputFormatError(f"unknown statistic {A!r}; expected one of {STATISTIC_IDS}")
    sign = -1 if key in ("D", "E") else 1
    return PatternSet(key, (frozenset(_SETS[key]),), sign)


def members(A) -> tuple:
    return tuple(sorted(pattern_set(A).members, key=pattern_index))


def _relative(counts: PatternCounts) -> np.ndarray:
    if counts.n < 4:
        raise DegenerateSample(f"need n >= 4 observations, got {counts.n}")
    return counts.relative()


def linear_statistic(counts: PatternCounts, a) -> float:
    """Sum over sigma of a_sigma * t(sigma, pi)."""
    a = np.asarray(a, dtype=float)
    if a.shape != (24,):
        raise ValueError("weight vector must have 24 entries")
    return float(_relative(counts) @ a)


def test_statistic(counts: PatternCounts, A) -> float:
    ps = pattern_set(A)
    return float(_relative(counts) @ ps.weights() + ps.offset())


# keep pytest from collecting the function above as a test
test_statistic.__test__ = False


def test_statistic_exact(counts: PatternCounts, A) -> Fraction:
    """Exact rational value of T^A."""
    if counts.n < 4:
        raise DegenerateSample(f"need n >= 4 observations, got {counts.n}")
    ps = pattern_set(A)
    w = ps.weights().astype(np.int64)
    from math import comb
    return Fraction(int(counts.counts @ w), comb(counts.n, 4)) + ps.offset_exact()


test_statistic_exact.__test__ = False


def rho_star_statistic(counts: PatternCounts) -> float:
    """L_{a*} centred by its null mean 44/24."""
    return linear_statistic(counts, A_STAR) - A_STAR_SUM / 24.0


def statistic_matrix(ids=STATISTIC_IDS) -> tuple:
    """(W, b) with T = relative_counts @ W + b for each id in ``ids``."""
    sets = [pattern_set(a) for a in ids]
    W = np.stack([s.weights() for s in sets], axis=1)
    b = np.array([s.offset() for s in sets])
    return W, b


def statistics_from_counts(counts: np.ndarray, n: int, ids=STATISTIC_IDS) -> np.ndarray:
    """Vectorised T^A for an (R, 24) array of raw counts; returns shape (R, len(ids)).

    While the numerator fits in 53 bits the value is the correctly rounded
    rational, so equal statistics compare equal.
    """
    if n < 4:
        raise DegenerateSample(f"need n >= 4 observations, got {n}")
    from math import comb
    total = comb(n, 4)
    sets = [pattern_set(a) for a in ids]
    if 24 * 8 * total < 2**53:
        W = np.stack([s.weights() for s in sets], axis=1).astype(np.int64)
        # every offset is a multiple of 1/24
        off = np.array([int(s.offset_exact() * 24) for s in sets], dtype=np.int64)
        num = 24 * (np.asarray(counts, dtype=np.int64) @ W) + off * total
        return num.astype(float) / float(24 * total)
    W, b = statistic_matrix(ids)
    return (np.asarray(counts, dtype=float) / total) @ W + b
