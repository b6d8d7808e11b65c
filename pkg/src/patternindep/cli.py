"""Command-line interface: tests on data, power studies, efficiency tables, quantiles, spectra."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .copulas import parse_direction, parse_model
from .efficiency import efficiency_report
from .errors import InputError, InputFormatError, PatternIndepError
from .nulldist import (DEFAULT_DE_PARAMS, build_limit_law, empirical_power, exact_null_distribution,
                       exact_upper_quantile, mc_p_value, null_statistics, quantile_table,
                       quantiles_to_csv, quantiles_to_json, sample_limit, upper_quantile)
from .perm_core import count_patterns4, permutation_from_sample
from .spectral import spectrum_1d, spectrum_de, spectrum_product
from .statistics import STATISTIC_IDS, pattern_set, statistics_from_counts
from .streams import as_seed_sequence, substream

SCHEMA = 1
LONG_DE_PARAMS = (30000, 5000)
LONG_ROOTS = 10**6


# ----------------------------------------------------------------------------
# input


def read_pairs(path) -> np.ndarray:
    """Two numeric columns; a single non-numeric first line is taken as a header."""
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc}") from None
    out = []
    for i, row in enumerate(rows):
        if len(row) != 2:
            raise InputFormatError(f"line {i + 1}: expected 2 columns, found {len(row)}")
        try:
            x, y = (float(c.strip()) for c in row)
        except ValueError:
            if i == 0:
                continue
            raise InputFormatError(f"line {i + 1}: non-numeric cell in {row!r}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise InputFormatError(f"line {i + 1}: non-finite value")
        out.append((x, y))
    return np.array(out, dtype=float).reshape(-1, 2)


# ----------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class TestReport:
    statistic: str
    n: int
    T: float
    nT: float
    method: str
    critical_value: float
    p_value: float
    reject: bool
    alpha: float
    reps: int | None
    seed: int | None
    ties: str
    scale: str = "T"

    def to_dict(self):
        return asdict(self)


TestReport.__test__ = False


def run_test(points, stats=("B",), alpha: float = 0.05, method: str = "mc", reps: int = 10_000,
             seed: int | None = None, jitter_ties: bool = False, de_params=DEFAULT_DE_PARAMS,
             workers=None) -> list:
    """Test of independence on a sample of points with each requested statistic."""
    if not 0 < alpha < 1:
        raise InputError("alpha must lie in (0, 1)")
    pts = np.asarray(points, float)
    jitter_seed = (0 if seed is None else int(seed)) if jitter_ties else None
    from .perm_core import has_ties
    tied = bool(has_ties(pts[:, 0]) or has_ties(pts[:, 1])) if pts.ndim == 2 and len(pts) else False
    perm = permutation_from_sample(pts, jitter_seed=jitter_seed)
    n = perm.n
    counts = count_patterns4(perm)
    ids = tuple(pattern_set(a).id for a in stats)
    T = statistics_from_counts(counts.counts[None, :], n, ids)[0]
    ties = f"jittered(seed={jitter_seed})" if (tied and jitter_ties) else "none"
    root = as_seed_sequence(seed)
    reports = []
    if method == "mc":
        null = null_statistics(n, reps, substream(root, 0), ids, workers)
    for j, A in enumerate(ids):
        t = float(T[j])
        if method == "mc":
            crit = upper_quantile(null[:, j], alpha)
            p = mc_p_value(t, null[:, j])
            reject = p <= alpha
            rr, scale = reps, "T"
        elif method == "exact":
            dist = exact_null_distribution(A, n)
            crit = float(exact_upper_quantile(dist, alpha))
            from fractions import Fraction
            tv = Fraction(t).limit_denominator(24 * math.comb(n, 4))
            p = float(sum(pr for v, pr in dist if v >= tv))
            reject = p <= alpha
            rr, scale = None, "T"
        elif method == "asymptotic":
            law = build_limit_law(A, de_params=de_params)
            draws = sample_limit(law, reps, substream(root, 1, j), workers)
            crit = upper_quantile(draws, alpha)
            p = mc_p_value(n * t, draws)
            reject = n * t > crit
            rr, scale = reps, "nT"
        else:
            raise InputError(f"unknown method {method!r}")
        reports.append(TestReport(A, n, t, n * t, method, float(crit), float(p), bool(reject),
                                  float(alpha), rr, seed, ties, scale))
    return reports


@dataclass(frozen=True)
class PowerStudyConfig:
    models: tuple
    ns: tuple = (50, 100)
    alpha: float = 0.05
    statistics: tuple = ("B", "C", "F", "D", "E", "DE")
    reps: int = 10_000
    cv_reps: int = 100_000
    seed: int | None = None

    def __post_init__(self):
        if self.reps < 100 or self.cv_reps < 100:
            raise InputError("replication counts must be at least 100")
        if not self.models:
            raise InputError("at least one copula model is required")
        if any(n < 4 for n in self.ns):
            raise InputError("sample sizes must be >= 4")


def run_power_study(config: PowerStudyConfig, workers=None) -> list:
    """Rows (model, n, statistic, power, ...) in canonical order."""
    root = as_seed_sequence(config.seed)
    ids = tuple(pattern_set(a).id for a in config.statistics)
    rows = []
    for i, n in enumerate(sorted(config.ns)):
        T0 = null_statistics(n, config.cv_reps, substream(root, i, 0), ids, workers)
        crit = tuple(upper_quantile(T0[:, j], config.alpha) for j in range(len(ids)))
        for k, text in enumerate(config.models):
            model = parse_model(text) if isinstance(text, str) else text
            res = empirical_power(model, n, config.alpha, config.reps, config.cv_reps,
                                  substream(root, i, 1 + k), ids, crit, workers)
            for r in res.rows():
                r["seed"] = config.seed
                rows.append(r)
    order = {a: j for j, a in enumerate(ids)}
    return sorted(rows, key=lambda r: (r["model"], r["n"], order[r["statistic"]]))


def run_efficiency_table(directions=(("fgm", "B"), ("c", "C"))) -> list:
    out = []
    for spec in directions:
        d, ref = spec if isinstance(spec, tuple) else (spec, "B")
        out.append(efficiency_report(parse_direction(d) if isinstance(d, str) else d, ref))
    return out


def emit_null_quantiles(stats, ns, alphas, reps: int, seed=None, de_params=DEFAULT_DE_PARAMS,
                        workers=None):
    return quantile_table(stats, ns, alphas, reps, seed, de_params, workers)


# ----------------------------------------------------------------------------
# output


def _envelope(kind: str, payload, **meta) -> str:
    doc = {"schema": SCHEMA, "version": __version__, "kind": kind, **meta, "results": payload}
    return json.dumps(doc, indent=2, sort_keys=False, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
    return buf.getvalue()


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _stats_arg(values):
    out = []
    for v in values or ["B"]:
        for part in v.split(","):
            part = part.strip()
            if part.lower() == "all":
                out.extend(STATISTIC_IDS)
            elif part:
                out.append(pattern_set(part).id)
    return tuple(dict.fromkeys(out))


def _floats(values):
    return [float(x) for v in values for x in str(v).split(",") if x.strip()]


def _cmd_test(a):
    pts = read_pairs(a.input)
    reps = run_test(pts, _stats_arg(a.stat), a.alpha, a.method, a.reps, a.seed, a.jitter_ties,
                    LONG_DE_PARAMS if a.long_mode else DEFAULT_DE_PARAMS, a.workers)
    rows = [r.to_dict() for r in reps]
    if a.output == "csv":
        return _csv(rows, list(rows[0]))
    return _envelope("test", rows, input=str(a.input))


def _cmd_power(a):
    models = []
    for spec in a.family:
        name, _, vals = spec.partition(":")
        for v in vals.split(","):
            models.append(f"{name}:{v}")
    cfg = PowerStudyConfig(tuple(models), tuple(int(n) for n in _floats(a.n)), a.alpha,
                           _stats_arg(a.stat or ["B,C,F,D,E,DE"]), a.reps, a.cv_reps, a.seed)
    rows = run_power_study(cfg, a.workers)
    if a.output == "csv":
        return _csv(rows, ["model", "n", "alpha", "statistic", "critical_value", "power", "se",
                           "reps", "cv_reps", "seed"])
    return _envelope("power", rows, config={**asdict(cfg), "models": list(cfg.models)})


def _cmd_efficiency(a):
    dirs = []
    for d in a.direction or ["fgm:B", "c:C"]:
        name, _, ref = d.partition(":")
        dirs.append((name, ref or "B"))
    reports = run_efficiency_table(dirs)
    if a.output == "csv":
        rows = []
        for r in reports:
            row = {"direction": r.direction, "reference": r.reference}
            row.update({A: r.ratios[A] for A in r.statistics})
            rows.append(row)
        return _csv(rows, ["direction", "reference", *reports[0].statistics])
    return _envelope("efficiency", [r.to_dict() for r in reports])


def _cmd_quantiles(a):
    ns = []
    for v in a.n or ["inf"]:
        for part in str(v).split(","):
            ns.append(None if part.strip().lower() in ("inf", "asymptotic") else int(part))
    table = emit_null_quantiles(_stats_arg(a.stat), ns, _floats(a.alpha_grid or ["0.1,0.05,0.01"]),
                                a.reps, a.seed, LONG_DE_PARAMS if a.long_mode else DEFAULT_DE_PARAMS,
                                a.workers)
    if a.output == "csv":
        return quantiles_to_csv(table)
    return quantiles_to_json(table)


def _cmd_spectrum(a):
    key = a.kernel.strip()
    m, m1 = LONG_DE_PARAMS if a.long_mode else (a.m, a.m1)
    if key.upper() in ("K1", "K2", "K3", "K4", "G1", "G2", "G3", "G4"):
        count = LONG_ROOTS if (a.long_mode and key.upper() in ("K3", "G3")) else a.count
        spec = spectrum_1d(key, count)
    elif pattern_set(key).id == "DE":
        spec = spectrum_de(a.cutoff, m, m1)
    else:
        spec = spectrum_product(key, a.cutoff)
    doc = spec.to_dict(max_entries=a.max_entries)
    if a.output == "csv":
        rows = [{"kernel": spec.kernel, "eigenvalue": float(e["eigenvalue"]),
                 "multiplicity": e["multiplicity"]} for e in doc["entries"]]
        return _csv(rows, ["kernel", "eigenvalue", "multiplicity"])
    return _envelope("spectrum", doc)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="patternindep",
                                description="Independence tests based on 4-point pattern counts.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--output", choices=("json", "csv"), default="json")
        sp.add_argument("--out", help="write to this file instead of stdout")
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--long-mode", action="store_true",
                        help="full-scale truncations (m1=5000, m=30000; 10^6 roots)")
        if seed:
            sp.add_argument("--seed", type=int, default=None)

    t = sub.add_parser("test", help="test independence on a two-column CSV file")
    t.add_argument("input")
    t.add_argument("--stat", action="append", help="statistic id(s): B C D E F DE or all")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--method", choices=("mc", "asymptotic", "exact"), default="mc")
    t.add_argument("--reps", type=int, default=10_000)
    t.add_argument("--jitter-ties", action="store_true")
    common(t)
    t.set_defaults(func=_cmd_test)

    pw = sub.add_parser("power", help="empirical power under copula alternatives")
    pw.add_argument("--family", action="append", required=True,
                    help="family:value[,value...], e.g. fgm:0.25,0.5")
    pw.add_argument("--n", action="append", default=None)
    pw.add_argument("--stat", action="append")
    pw.add_argument("--alpha", type=float, default=0.05)
    pw.add_argument("--reps", type=int, default=10_000)
    pw.add_argument("--cv-reps", type=int, default=100_000)
    common(pw)
    pw.set_defaults(func=_cmd_power)

    ef = sub.add_parser("efficiency", help="local Bahadur efficiency table")
    ef.add_argument("--direction", action="append",
                    help="direction[:reference], e.g. fgm:B, c:C, b:B, gfgm:B")
    common(ef, seed=False)
    ef.set_defaults(func=_cmd_efficiency)

    q = sub.add_parser("quantiles", help="null quantiles of n T (finite n or inf)")
    q.add_argument("--stat", action="append")
    q.add_argument("--n", action="append", help="sample sizes, or inf for the limit law")
    q.add_argument("--alpha", dest="alpha_grid", action="append", help="alpha values")
    q.add_argument("--reps", type=int, default=100_000)
    common(q)
    q.set_defaults(func=_cmd_quantiles)

    s = sub.add_parser("spectrum", help="eigenvalues of K1..K4 or of K(A)")
    s.add_argument("--kernel", default="B", help="K1..K4 or a statistic id")
    s.add_argument("--count", type=int, default=50)
    s.add_argument("--cutoff", type=int, default=20)
    s.add_argument("--m", type=int, default=DEFAULT_DE_PARAMS[0])
    s.add_argument("--m1", type=int, default=DEFAULT_DE_PARAMS[1])
    s.add_argument("--max-entries", type=int, default=200)
    common(s, seed=False)
    s.set_defaults(func=_cmd_spectrum)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "n", None) is None and args.command == "power":
        args.n = ["50,100"]
    try:
        text = args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except PatternIndepError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return exc.exit_code
    _emit(text, args.out)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
