"""Command-line front end.

Every output embeds the manifest that produced it: a ``# manifest: {...}``
first line for CSV, a ``manifest`` field for JSON, and a leading
``{"manifest": ...}`` line for JSON-lines simulation records. ``rerun`` reads
that manifest back and reproduces the file byte for byte.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import branching, experiments, extremes, moments
from .errors import CritWindowError, InsufficientSamplesError, PrecisionError, SeriesError
from .intensity import IntensityParams, intensity_label, intensity_total, label_distribution
from .quadrature import QuadratureSpec
from .records import ExperimentManifest

MANIFEST_PREFIX = "# manifest: "

EXIT_USAGE = 2
EXIT_PRECISION = 3
EXIT_SAMPLES = 4


def fmt(v) -> str:
    """Numbers at 12 significant digits; integers stay integers."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".12g")


def _json_value(v):
    if isinstance(v, (int, np.integer, bool, np.bool_, str)) or v is None:
        return v.item() if isinstance(v, np.generic) else v
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    x = float(fmt(v))
    return x if math.isfinite(x) else fmt(v)


@dataclass
class Table:
    columns: list
    rows: list


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- commands ------------------------------------------------------------------

def _spec(o) -> QuadratureSpec:
    return QuadratureSpec(abs_tol=o["abs_tol"], rel_tol=o["rel_tol"])


def _grid(o):
    if o["x_count"] < 1 or not 0 < o["x_min"] <= o["x_max"]:
        raise UsageError("need 0 < x-min <= x-max and x-count >= 1")
    return np.linspace(o["x_min"], o["x_max"], o["x_count"])


def cmd_intensity(o):
    params = IntensityParams(o["lam"])
    L = o["labels"]
    cols = ["x", "total"] + [f"label_{l}" for l in range(L + 1)] + [f"p_{l}" for l in range(L + 1)]
    rows = []
    for x in _grid(o):
        dist = label_distribution(float(x), params)
        rows.append([x, intensity_total(float(x), params)]
                    + [intensity_label(float(x), l, params) for l in range(L + 1)]
                    + list(dist.masses[: L + 1]))
    return Table(cols, rows)


def cmd_weight_moments(o):
    spec = _spec(o)
    params = IntensityParams(o["lam"])
    rows = []
    for eps in o["eps"]:
        m = moments.expected_weight(eps, params, spec)
        v = moments.weight_variance(eps, params, spec)
        ma = moments.weight_mean_asymptotic(eps, o["lam"])
        va = moments.weight_variance_asymptotic(eps)
        rows.append([eps, o["lam"], float(m), m.error, ma, float(m) - ma, float(v), v.error, va, float(v) - va])
    return Table(["eps", "lambda", "mean", "mean_err", "mean_asymptotic", "mean_delta",
                  "variance", "variance_err", "variance_asymptotic", "variance_delta"], rows)


def cmd_count_moments(o):
    spec = _spec(o)
    params = IntensityParams(o["lam"])
    rows = []
    for eps in o["eps"]:
        m = moments.expected_count(eps, params, spec)
        v = moments.count_variance(eps, params, spec)
        ma = moments.count_mean_asymptotic(eps, o["lam"])
        va = moments.count_variance_asymptotic(eps)
        rows.append([eps, o["lam"], float(m), m.error, ma, float(m) - ma, float(v), v.error, va, float(v) - va])
    return Table(["eps", "lambda", "mean", "mean_err", "mean_asymptotic", "mean_delta",
                  "variance", "variance_err", "variance_asymptotic", "variance_delta"], rows)


def cmd_factorial_moments(o):
    table = moments.factorial_moments(o["lam"], o["a"], o["order"], _spec(o))
    rows = [[k, table.values[k], table.certified_abs_err[k]] for k in range(table.order + 1)]
    return Table(["k", "value", "abs_err"], rows)


def cmd_largest_cdf(o):
    spec = _spec(o)
    k = o["k"]
    rows = []
    for x in _grid(o):
        c = extremes.kth_largest_cdf(float(x), k, o["lam"], spec)
        row = [x, float(c), c.error]
        if not o["no_density"]:
            d = extremes.kth_largest_density(float(x), k, o["lam"], spec)
            row += [float(d), d.error]
        rows.append(row)
    cols = ["x", "cdf", "cdf_err"] + ([] if o["no_density"] else ["density", "density_err"])
    return Table(cols, rows)


def cmd_branching(o):
    if o["table"] == "borel":
        mean = o["borel_mean"]
        ks = np.arange(1, o["k_max"] + 1)
        pmf = branching.borel_pmf(ks, mean)
        cdf = np.cumsum(pmf)
        return Table(["k", "pmf", "cdf"], [[int(k), p, c] for k, p, c in zip(ks, pmf, cdf)])
    spec = _spec(o)
    cols = ["eps", "lambda", "u_eps", "u_eps_err", "u_eps_small_form"]
    if o["n"] is not None:
        cols.append("progeny_tail_scaled")
    rows = []
    for eps in o["eps"]:
        big, small = branching.u_eps_forms(o["lam"], eps, spec)
        row = [eps, o["lam"], float(big), big.error, float(small)]
        if o["n"] is not None:
            row.append(branching.progeny_tail_scaled(o["lam"], eps, o["n"]))
        rows.append(row)
    return Table(cols, rows)


def cmd_identities(o):
    spec = _spec(o)
    rows = []
    for lam in o["lam"]:
        r = moments.weight_identity_residual(lam, spec)
        rows.append(["weight", lam, "", float(r), r.error])
        r = moments.cubic_identity_residual(lam, spec)
        rows.append(["cubic", lam, "", float(r), r.error])
        left, right = moments.unicyclic_weight(lam, spec)
        rows.append(["unicyclic", lam, "", float(left) - float(right), left.error + right.error])
        for eps in o["eps"]:
            big, small = branching.u_eps_forms(lam, eps, spec)
            rows.append(["u_eps_forms", lam, eps, float(big) - float(small), big.error + small.error])
    return Table(["identity", "lambda", "eps", "residual", "error_bound"], rows)


def _simulate(o, sampler):
    if sampler == "graph":
        return experiments.graph_records(o["n"], o["lam"], o["eps"], o["reps"], o["seed"])
    return experiments.bm_records(o["lam"], o["eps"], o["reps"], o["seed"], o["step"],
                                  o["min_excursion"], o["horizon"])


def cmd_simulate_graph(o):
    return _simulate(o, "graph")


def cmd_simulate_bm(o):
    return _simulate(o, "bm")


def _read_records(path):
    with open(path) as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    return [r for r in lines if "manifest" not in r]


def cmd_compare(o):
    records = _read_records(o["records"]) if o["records"] else _simulate(o, o["sampler"])
    rows = [[r.statistic, r.empirical, r.std_error, r.analytic, r.analytic_error, r.z_score]
            for r in experiments.compare_records(records, o["lam"], o["eps"])]
    return Table(["statistic", "empirical", "std_error", "analytic", "analytic_error", "z_score"], rows)


COMMANDS = {
    "intensity": cmd_intensity,
    "weight-moments": cmd_weight_moments,
    "count-moments": cmd_count_moments,
    "factorial-moments": cmd_factorial_moments,
    "largest-cdf": cmd_largest_cdf,
    "branching": cmd_branching,
    "identities": cmd_identities,
    "simulate-graph": cmd_simulate_graph,
    "simulate-bm": cmd_simulate_bm,
    "compare": cmd_compare,
}
SIMULATIONS = {"simulate-graph", "simulate-bm"}


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="critwindow", description="Critical-window component sizes: exact values and simulations.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text, lam_list=False, tolerances=True):
        p = sub.add_parser(name, help=help_text)
        if lam_list:
            p.add_argument("--lambda", dest="lam", type=float, nargs="+", default=[1.0])
        else:
            p.add_argument("--lambda", dest="lam", type=float, default=0.0)
        if tolerances:
            p.add_argument("--abs-tol", type=float, default=1e-9)
            p.add_argument("--rel-tol", type=float, default=1e-8)
        p.add_argument("--out", default="-", help="output path, '-' for stdout")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        return p

    def grid(p, lo, hi, count):
        p.add_argument("--x-min", type=float, default=lo)
        p.add_argument("--x-max", type=float, default=hi)
        p.add_argument("--x-count", type=int, default=count)

    def sim(p, eps):
        p.add_argument("--eps", type=float, default=eps)
        p.add_argument("--n", type=int, default=10 ** 6)
        p.add_argument("--reps", type=int, default=10)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--step", type=float, default=5e-5)
        p.add_argument("--min-excursion", type=float, default=0.05)
        p.add_argument("--horizon", type=float, default=None)

    p = add("intensity", "tabulate the intensity, labelled intensities and label law")
    grid(p, 0.05, 4.0, 80)
    p.add_argument("--labels", type=int, default=3)

    p = add("weight-moments", "mean and variance of the weight above eps, exact and asymptotic")
    p.add_argument("--eps", type=float, nargs="+", default=[0.01])
    p = add("count-moments", "mean and variance of the count above eps, exact and asymptotic")
    p.add_argument("--eps", type=float, nargs="+", default=[0.01])

    p = add("factorial-moments", "factorial moments of the count above a")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--order", type=int, default=4)

    p = add("largest-cdf", "distribution function and density of the k-th largest point")
    grid(p, 0.2, 3.0, 15)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--no-density", action="store_true")

    p = add("branching", "u_eps and progeny tails, or Borel tables")
    p.add_argument("--table", choices=["u-eps", "borel"], default="u-eps")
    p.add_argument("--eps", type=float, nargs="+", default=[1.0])
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--borel-mean", type=float, default=1.0)
    p.add_argument("--k-max", type=int, default=20)

    p = add("identities", "residuals of the exact integral identities", lam_list=True)
    p.add_argument("--eps", type=float, nargs="+", default=[0.01, 0.1, 1.0])

    p = add("simulate-graph", "G(n, p) replications as JSON-lines records", tolerances=False)
    sim(p, 0.1)
    p = add("simulate-bm", "reflected Brownian excursions as JSON-lines records", tolerances=False)
    sim(p, 0.1)

    p = add("compare", "simulated moments against exact values, with z-scores")
    sim(p, 0.5)
    p.add_argument("--sampler", choices=["graph", "bm"], default="graph")
    p.add_argument("--records", default=None, help="JSON-lines records to use instead of simulating")

    p = sub.add_parser("rerun", help="re-execute the manifest embedded in an output file")
    p.add_argument("--from", dest="source", required=True)
    p.add_argument("--out", default="-")
    return parser


def _options(ns) -> dict:
    return {k: v for k, v in vars(ns).items() if k not in ("command", "out", "format")}


def manifest_for(command, options, out, format_) -> ExperimentManifest:
    lam = options.get("lam", 0.0)
    eps = options.get("eps")
    tolerances = {k: options[k] for k in ("abs_tol", "rel_tol") if k in options}
    sampler = options.get("sampler") or {"simulate-graph": "graph", "simulate-bm": "bm"}.get(command)
    return ExperimentManifest(
        command=command,
        lam=lam[0] if isinstance(lam, list) else lam,
        eps=eps[0] if isinstance(eps, list) else eps,
        n=options.get("n"),
        replications=options.get("reps"),
        seed=options.get("seed"),
        tolerances=tolerances,
        output_path=out,
        format="json" if command in SIMULATIONS else format_,
        sampler=sampler,
        options=options,
    )


# -- output ----------------------------------------------------------------------

def render_table(table: Table, manifest: ExperimentManifest) -> str:
    if manifest.format == "json":
        doc = {
            "manifest": json.loads(manifest.to_json()),
            "columns": table.columns,
            "rows": [{c: _json_value(v) for c, v in zip(table.columns, row)} for row in table.rows],
        }
        return json.dumps(doc, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write(MANIFEST_PREFIX + manifest.to_json() + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def render_records(records, manifest: ExperimentManifest) -> str:
    lines = [json.dumps({"manifest": json.loads(manifest.to_json())}, sort_keys=True)]
    for rec in records:
        lines.append(json.dumps({k: _json_value(v) for k, v in rec.items()}, sort_keys=True))
    return "\n".join(lines) + "\n"


def read_manifest(path) -> ExperimentManifest:
    with open(path) as fh:
        first = fh.readline()
        if first.startswith(MANIFEST_PREFIX):
            return ExperimentManifest.from_json(first[len(MANIFEST_PREFIX):])
        doc = json.loads(first)
    if "manifest" not in doc:
        raise UsageError(f"{path} carries no manifest")
    return ExperimentManifest.from_json(json.dumps(doc["manifest"]))


def execute(manifest: ExperimentManifest) -> str:
    result = COMMANDS[manifest.command](dict(manifest.options))
    if isinstance(result, Table):
        return render_table(result, manifest)
    return render_records(result, manifest)


def _emit(text, out):
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _error_record(exc) -> dict:
    rec = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, PrecisionError):
        rec["best_bound"] = exc.best_bound
        rec["estimate"] = exc.estimate
    if isinstance(exc, SeriesError):
        rec["bracket"] = list(exc.bracket)
    return rec


def run(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        if ns.command == "rerun":
            manifest = read_manifest(ns.source)
            _emit(execute(manifest), ns.out)
            return 0
        manifest = manifest_for(ns.command, _options(ns), ns.out, ns.format)
        _emit(execute(manifest), ns.out)
        return 0
    except (PrecisionError, InsufficientSamplesError, CritWindowError, ValueError, OSError) as exc:
        code = EXIT_PRECISION if isinstance(exc, PrecisionError) else (
            EXIT_SAMPLES if isinstance(exc, InsufficientSamplesError) else EXIT_USAGE)
        sys.stderr.write(json.dumps(_error_record(exc), default=str) + "\n")
        return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
