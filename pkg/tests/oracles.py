"""Independent reference implementations used only by the tests."""

import itertools
import math
from fractions import Fraction

import numpy as np

S4 = ["".join(p) for p in itertools.permutations("1234")]


def pattern_of(values):
    order = sorted(range(len(values)), key=lambda i: values[i])
    out = [0] * len(values)
    for rank, i in enumerate(order, start=1):
        out[i] = rank
    return "".join(map(str, out))


def brute_counts(p):
    """Pattern counts by enumerating every 4-subset in pure Python."""
    counts = dict.fromkeys(S4, 0)
    for quad in itertools.combinations(list(p), 4):
        counts[pattern_of(quad)] += 1
    return [counts[s] for s in S4]


# memberships written out from the orbit table, not from the package
SETS = {
    "B": {"1234", "1243", "2134", "2143", "3412", "3421", "4312", "4321"},
    "C": {"1234", "1432", "2143", "2341", "3214", "3412", "4123", "4321"},
    "D": {"1324", "1342", "2413", "2431", "3124", "3142", "4213", "4231"},
    "E": {"1324", "1423", "2314", "2413", "3142", "3241", "4132", "4231"},
}
SETS["F"] = SETS["B"] | SETS["C"]


def statistic_exact(counts, n, A):
    total = math.comb(n, 4)
    rel = {s: Fraction(c, total) for s, c in zip(S4, counts)}
    def part(X, sign):
        return sign * (sum(rel[s] for s in SETS[X]) - Fraction(len(SETS[X]), 24))
    if A == "DE":
        return part("D", -1) + part("E", -1)
    return part(A, -1 if A in ("D", "E") else 1)


def exact_law(A, n):
    """Null law of T_n^A by full enumeration with the pure-Python counter."""
    tally = {}
    for p in itertools.permutations(range(1, n + 1)):
        v = statistic_exact(brute_counts(p), n, A)
        tally[v] = tally.get(v, 0) + 1
    N = math.factorial(n)
    return sorted((v, Fraction(c, N)) for v, c in tally.items())


def gamma1_k3_mpmath():
    import mpmath as mp
    mp.mp.dps = 40
    f = lambda z: mp.mpf(2) / 3 + mp.sqrt(1.5 * z) * mp.cot(mp.sqrt(1.5 * z)) / 3
    return float(mp.findroot(f, 3.49))


def nystrom_eigenvalues(kernel, nodes=400):
    """Top eigenvalues of a kernel operator on [0,1] by a midpoint Nystrom matrix."""
    x = (np.arange(nodes) + 0.5) / nodes
    K = kernel(x[:, None], x[None, :]) / nodes
    return np.sort(np.linalg.eigvalsh(K))[::-1]
