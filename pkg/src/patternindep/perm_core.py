"""Permutations, rank vectors, the dihedral action and length-4 pattern counts."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numba as nb
import numpy as np

from .errors import TieError

#: S4 in lexicographic order; index 0 is 1234 and index 23 is 4321.
PATTERNS = tuple(itertools.permutations((1, 2, 3, 4)))
PATTERN_NAMES = tuple("".join(map(str, p)) for p in PATTERNS)
PATTERN_INDEX = {name: i for i, name in enumerate(PATTERN_NAMES)}


def pattern_index(pattern) -> int:
    """Index of a length-4 pattern given as '2143', (2,1,4,3) or an int index."""
    if isinstance(pattern, (int, np.integer)):
        if not 0 <= pattern < 24:
            raise IndexError(pattern)
        return int(pattern)
    if not isinstance(pattern, str):
        pattern = "".join(str(int(v)) for v in pattern)
    return PATTERN_INDEX[pattern]


class Permutation:
    """Immutable permutation of {1..n} in one-line notation."""

    __slots__ = ("_entries",)

    def __init__(self, entries):
        arr = np.asarray(entries, dtype=np.int64).ravel()
        n = arr.shape[0]
        if n < 1:
            raise ValueError("a permutation needs at least one entry")
        seen = np.zeros(n + 1, dtype=bool)
        if arr.min() < 1 or arr.max() > n:
            raise ValueError(f"entries must lie in 1..{n}")
        seen[arr] = True
        if not seen[1:].all():
            raise ValueError("entries are not a bijection of 1..n")
        arr = arr.copy()
        arr.setflags(write=False)
        self._entries = arr

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def n(self) -> int:
        return int(self._entries.shape[0])

    def __len__(self):
        return self.n

    def __iter__(self):
        return (int(v) for v in self._entries)

    def __getitem__(self, i):
        return int(self._entries[i])

    def __eq__(self, other):
        if isinstance(other, Permutation):
            return np.array_equal(self._entries, other._entries)
        if isinstance(other, (tuple, list)):
            return tuple(self) == tuple(other)
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self))

    def __repr__(self):
        return f"Permutation({tuple(self)})"

    def inverse(self) -> "Permutation":
        inv = np.empty_like(self._entries)
        inv[self._entries - 1] = np.arange(1, self.n + 1)
        return Permutation(inv)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(1, n + 1))


def _as_entries(p) -> np.ndarray:
    if isinstance(p, Permutation):
        return p.entries
    return np.asarray(p, dtype=np.int64).ravel()


@dataclass(frozen=True)
class PatternCounts:
    """Occurrence counts of the 24 length-4 patterns in a permutation of size n."""

    n: int
    counts: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64).copy()
        if c.shape != (24,):
            raise ValueError("expected 24 counts")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    def __getitem__(self, pattern) -> int:
        return int(self.counts[pattern_index(pattern)])

    @property
    def total(self) -> int:
        return comb(self.n, 4)

    def relative(self) -> np.ndarray:
        """Relative frequencies t(sigma, pi); all zero when n < 4."""
        if self.n < 4:
            return np.zeros(24)
        return self.counts / float(comb(self.n, 4))

    def as_dict(self) -> dict:
        return {name: int(c) for name, c in zip(PATTERN_NAMES, self.counts)}

    def __eq__(self, other):
        if not isinstance(other, PatternCounts):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.counts, other.counts)

    def __hash__(self):
        return hash((self.n, tuple(self.counts)))


# ----------------------------------------------------------------------------
# ranks and sample permutations


def ranks(values, jitter_seed: int | None = None) -> Permutation:
    """Rank vector: output[i] = #{j : values[j] <= values[i]}.

    Equal values raise TieError unless ``jitter_seed`` is given, in which case
    tied values are ordered by a seeded random key.  That is the limit of an
    infinitesimal random jitter and never changes the order of distinct values.
    """
    v = np.asarray(values, dtype=float).ravel()
    n = v.shape[0]
    if n == 0:
        raise ValueError("empty input")
    if np.isnan(v).any():
        raise ValueError("NaN in input")
    if jitter_seed is None:
        order = np.argsort(v, kind="stable")
        sv = v[order]
        if n > 1 and np.any(sv[1:] == sv[:-1]):
            k = int(np.flatnonzero(sv[1:] == sv[:-1])[0])
            raise TieError(f"tied values ({float(sv[k])!r}); enable seeded jitter to break ties")
    else:
        keys = np.random.default_rng(jitter_seed).random(n)
        order = np.lexsort((keys, v))
    r = np.empty(n, dtype=np.int64)
    r[order] = np.arange(1, n + 1)
    return Permutation(r)


def has_ties(values) -> bool:
    v = np.sort(np.asarray(values, dtype=float).ravel())
    return bool(v.shape[0] > 1 and np.any(v[1:] == v[:-1]))


def permutation_from_sample(points, jitter_seed: int | None = None) -> Permutation:
    """The permutation r o q^-1: y-ranks read in increasing x order."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be an (n, 2) array")
    if jitter_seed is None:
        q, r = ranks(pts[:, 0]), ranks(pts[:, 1])
    else:
        ss = np.random.SeedSequence(jitter_seed)
        sx, sy = ss.generate_state(2)
        q, r = ranks(pts[:, 0], int(sx)), ranks(pts[:, 1], int(sy))
    out = np.empty(pts.shape[0], dtype=np.int64)
    out[q.entries - 1] = r.entries
    return Permutation(out)


def random_permutation(n: int, rng) -> Permutation:
    """Uniform random permutation of size n (Fisher-Yates via numpy)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Permutation(_generator(rng).permutation(n) + 1)


def random_permutations(n: int, size: int, rng) -> np.ndarray:
    """``size`` independent uniform permutations as rows of 0-based values."""
    base = np.broadcast_to(np.arange(n, dtype=np.int64), (size, n))
    return _generator(rng).permuted(base, axis=1)


def _generator(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


# ----------------------------------------------------------------------------
# dihedral group generated by inversion and reversal

_GENERATORS = {
    "inv": (0, 1, 1, 0),   # (i, p_i) -> (p_i, i)
    "rev": (-1, 0, 0, 1),  # (i, p_i) -> (n+1-i, p_i)
}


def _matmul(a, b):
    return (a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3])


@dataclass(frozen=True)
class GroupElement:
    """Element of the 8-element dihedral group, acting on the point diagram.

    ``matrix`` is a signed 2x2 permutation matrix acting on centred
    (position, value) coordinates; ``word`` is a shortest generator word,
    applied left to right.
    """

    matrix: tuple
    word: tuple = ()

    def then(self, other: "GroupElement") -> "GroupElement":
        """Element that applies ``self`` first and ``other`` second."""
        return _canonical(_matmul(other.matrix, self.matrix))

    @classmethod
    def from_word(cls, word) -> "GroupElement":
        if isinstance(word, str):
            word = word.split()
        m = (1, 0, 0, 1)
        for w in word:
            m = _matmul(_GENERATORS[w], m)
        return _canonical(m)

    def __repr__(self):
        return "GroupElement(" + (" ".join(self.word) or "id") + ")"


def _build_group():
    ident = (1, 0, 0, 1)
    words = {ident: ()}
    frontier = [ident]
    while frontier:
        nxt = []
        for m in frontier:
            for name in ("inv", "rev"):
                m2 = _matmul(_GENERATORS[name], m)
                if m2 not in words:
                    words[m2] = words[m] + (name,)
                    nxt.append(m2)
        frontier = nxt
    return {m: GroupElement(m, w) for m, w in words.items()}


_GROUP = _build_group()


def _canonical(m) -> GroupElement:
    return _GROUP[tuple(m)]


def dihedral_group() -> tuple:
    """All 8 elements, identity first, ordered by word length then word."""
    return tuple(sorted(_GROUP.values(), key=lambda g: (len(g.word), g.word)))


IDENTITY = GroupElement.from_word(())
INV = GroupElement.from_word(("inv",))
REV = GroupElement.from_word(("rev",))


def apply_group(g: GroupElement, p) -> Permutation:
    """Act on a permutation by transforming its point diagram."""
    e = _as_entries(p)
    n = e.shape[0]
    xs = 2 * np.arange(1, n + 1) - (n + 1)
    ys = 2 * e - (n + 1)
    a, b, c, d = g.matrix
    nx = a * xs + b * ys
    ny = c * xs + d * ys
    order = np.argsort(nx)
    return Permutation((ny[order] + n + 1) // 2)


def inverse(p) -> Permutation:
    return apply_group(INV, p)


def reverse(p) -> Permutation:
    return apply_group(REV, p)


# ----------------------------------------------------------------------------
# pattern counting

def _region_table() -> np.ndarray:
    """table[t, r]: 4-pattern formed by a 3-pattern t and a fourth point in value region r."""
    s3 = list(itertools.permutations((1, 2, 3)))
    table = np.empty((6, 4), dtype=np.int64)
    for t, tau in enumerate(s3):
        for r in range(4):
            vals = (2 * tau[0], 2 * tau[1], 2 * tau[2], 2 * r + 1)
            rk = tuple(int(x) for x in np.argsort(np.argsort(vals)) + 1)
            table[t, r] = PATTERN_INDEX["".join(map(str, rk))]
    return table


_REGION = _region_table()
# 3-pattern of (x, y, z) by where x sits relative to y, z and whether y < z
_T_LOW_UP, _T_LOW_DOWN = 0, 1     # 123, 132
_T_MID_UP, _T_MID_DOWN = 2, 3     # 213, 231
_T_HIGH_UP, _T_HIGH_DOWN = 4, 5   # 312, 321


@nb.njit(cache=True, nogil=True)
def _fw_add(tree, i, val):
    i += 1
    m = tree.shape[0]
    while i < m:
        tree[i] += val
        i += i & (-i)


@nb.njit(cache=True, nogil=True)
def _fw_below(tree, i):
    s = 0
    while i > 0:
        s += tree[i]
        i -= i & (-i)
    return s


@nb.njit(cache=True, nogil=True)
def _count4_fast(p, region, out):
    # p holds 0-based values.  Positions i<j<k<l carry values x,y,z,w.
    # For fixed k, S[v] counts l > k with p[l] < v.  For fixed (j, k) the first
    # index i is aggregated through two Fenwick trees over values (count and
    # sum of S[x]), split by whether x lies below, between or above {y, z}.
    n = p.shape[0]
    for t in range(24):
        out[t] = 0
    if n < 4:
        return
    S = np.zeros(n + 1, np.int64)
    for w in range(p[n - 1] + 1, n + 1):
        S[w] += 1
    cnt = np.zeros(n + 1, np.int64)
    sm = np.zeros(n + 1, np.int64)
    for k in range(n - 2, 1, -1):
        T = n - 1 - k
        z = p[k]
        for t in range(n + 1):
            cnt[t] = 0
            sm[t] = 0
        tot = 0
        for j in range(1, k):
            x = p[j - 1]
            sx = S[x]
            _fw_add(cnt, x, 1)
            _fw_add(sm, x, sx)
            tot += sx
            y = p[j]
            if y < z:
                lo = y
                hi = z
                up = True
            else:
                lo = z
                hi = y
                up = False
            c_lo = _fw_below(cnt, lo)
            s_lo = _fw_below(sm, lo)
            c_hi = _fw_below(cnt, hi)
            s_hi = _fw_below(sm, hi)
            S_lo = S[lo]
            S_hi = S[hi]
            # x below both
            N = c_lo
            if N > 0:
                r = region[0] if up else region[1]
                out[r[0]] += s_lo
                out[r[1]] += N * S_lo - s_lo
                out[r[2]] += N * (S_hi - S_lo)
                out[r[3]] += N * (T - S_hi)
            # x between
            N = c_hi - c_lo
            if N > 0:
                sg = s_hi - s_lo
                r = region[2] if up else region[3]
                out[r[0]] += N * S_lo
                out[r[1]] += sg - N * S_lo
                out[r[2]] += N * S_hi - sg
                out[r[3]] += N * (T - S_hi)
            # x above both
            N = j - c_hi
            if N > 0:
                sg = tot - s_hi
                r = region[4] if up else region[5]
                out[r[0]] += N * S_lo
                out[r[1]] += N * (S_hi - S_lo)
                out[r[2]] += sg - N * S_hi
                out[r[3]] += N * T - sg
        for w in range(z + 1, n + 1):
            S[w] += 1


@nb.njit(cache=True, nogil=True)
def _code4(a, b, c, d):
    # lexicographic rank of the pattern of (a, b, c, d) via its Lehmer code
    l0 = (b < a) + (c < a) + (d < a)
    l1 = (c < b) + (d < b)
    l2 = 1 if d < c else 0
    return 6 * l0 + 2 * l1 + l2


@nb.njit(cache=True, nogil=True)
def _count4_brute(p, out):
    n = p.shape[0]
    for t in range(24):
        out[t] = 0
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                for l in range(k + 1, n):
                    out[_code4(p[i], p[j], p[k], p[l])] += 1


@nb.njit(cache=True, nogil=True)
def _count4_rows(P, region):
    # releases the GIL so callers can spread row blocks over threads
    R = P.shape[0]
    out = np.zeros((R, 24), np.int64)
    for r in range(R):
        _count4_fast(P[r], region, out[r])
    return out


def _zero_based(p) -> np.ndarray:
    return np.ascontiguousarray(_as_entries(p) - 1, dtype=np.int64)


def count_patterns4(p) -> PatternCounts:
    """All 24 length-4 pattern counts in O(n^2 log n) time and O(n) memory."""
    e = _zero_based(p)
    out = np.zeros(24, np.int64)
    _count4_fast(e, _REGION, out)
    return PatternCounts(e.shape[0], out)


def count_patterns4_oracle(p) -> PatternCounts:
    """Reference counts by enumerating every index quadruple, O(n^4)."""
    e = _zero_based(p)
    out = np.zeros(24, np.int64)
    _count4_brute(e, out)
    return PatternCounts(e.shape[0], out)


def count_patterns4_batch(perms) -> np.ndarray:
    """Counts for each row of a 2D array of 0-based permutations, shape (R, 24)."""
    P = np.ascontiguousarray(perms, dtype=np.int64)
    if P.ndim != 2:
        raise ValueError("expected a 2D array")
    return _count4_rows(P, _REGION)
