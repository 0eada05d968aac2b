"""Command-line interface.

Subcommands::

    sample      generate a sample set and write it as CSV
    extend      extend a saved set by RSS, HLHS or RLH
    metrics     space-filling metrics of saved sets or of fresh designs
    optimize-z  optimal imbalance factor for one output distribution
    run         adaptive convergence experiment
    bench       preset studies: cubic, addmult, spacefill, twodof

Every option may also come from a ``--config`` file of ``key = value``
lines (``#`` starts a comment; keys are option names with dashes or
underscores).  Command-line flags override the file.  ``run`` and
``bench`` require a seed.  Studies write CSV tables plus a ``plot-data``
directory of ``series,x,y`` tables; ``--figures`` also renders PNGs.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import plotting
from .distributions import format_distribution, make_stream, parse_distribution
from .estimators import ConvergencePolicy, Statistic
from .experiments import (QUANTILES, ConfigError, ExperimentConfig, adaptive_csv, cubic_study,
                          generate, projective_study, run_metric_study, run_replicates)
from .metrics import METRIC_HEADER, metric_row
from .models import get_model, model_additive, model_multiplicative
from .refine import (SWEEP_HEADER, RefinementProblem, no_refinement_variance, optimize_z,
                     sweep_rows, two_sample_variance, variance_of_split)
from .samplers import hlhs_extend, rlh_extend, rss_extend, set_from_csv, set_to_csv
from .strata import dumps, loads


def read_config(path: str | None) -> dict:
    """Parse ``key = value`` lines; keys are normalized to underscores."""
    if not path:
        return {}
    out = {}
    with open(path) as fh:
        for num, ln in enumerate(fh, 1):
            ln = ln.split("#", 1)[0].strip()
            if not ln:
                continue
            key, sep, val = ln.partition("=")
            if not sep:
                raise SystemExit(f"{path}:{num}: expected key = value")
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def merged(args, defaults: dict) -> argparse.Namespace:
    """Fill unset options from the config file, then from ``defaults``."""
    cfg = read_config(getattr(args, "config", None))
    ns = vars(args).copy()
    for key, default in defaults.items():
        if ns.get(key) is not None:
            continue
        if key in cfg:
            conv = type(default) if default is not None else str
            ns[key] = conv(cfg[key]) if conv is not bool else cfg[key].lower() in ("1", "true", "yes")
        else:
            ns[key] = default
    return argparse.Namespace(**ns)


def parse_marginals(text: str):
    return tuple(parse_distribution(s) for s in text.split(";") if s.strip())


def parse_int_list(text: str) -> list[int]:
    """``"2,5,10"`` or ``"0-9"`` style lists."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if "-" in part:
            a, b = part.split("-")
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    return out


def write_text(path: str | None, text: str):
    if path in (None, "", "-"):
        sys.stdout.write(text)
        return
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)


def require_seed(ns):
    if ns.seed is None:
        raise SystemExit("--seed is required")


def finish_figures(ns, plot_dir: str):
    if ns.figures:
        for p in plotting.render_dir(plot_dir, os.path.join(ns.out_dir, "figures")):
            print(f"wrote {p}")


# -- subcommands -----------------------------------------------------------------

def cmd_sample(args):
    ns = merged(args, {"generator": "SRS", "marginals": "U(0,1);U(0,1)", "n_samples": 16,
                       "seed": 0, "stream_id": 0, "out": None, "design_out": None})
    marg = parse_marginals(ns.marginals)
    sset = generate(ns.generator, marg, ns.n_samples, make_stream(ns.seed, ns.stream_id), ns.seed)
    write_text(ns.out, set_to_csv(sset))
    if ns.design_out and sset.design is not None:
        write_text(ns.design_out, dumps(sset.design))


def cmd_extend(args):
    ns = merged(args, {"input": None, "design": None, "method": "RSS", "k_new": 1, "t": 1,
                       "seed": 0, "stream_id": 1, "out": None, "design_out": None})
    if not ns.input:
        raise SystemExit("--input is required")
    with open(ns.input) as fh:
        text = fh.read()
    design = None
    if ns.design:
        with open(ns.design) as fh:
            design = loads(fh.read())
    sset = set_from_csv(text, design)
    stream = make_stream(ns.seed, ns.stream_id)
    method = ns.method.upper()
    if method == "RSS":
        if design is None:
            raise SystemExit("RSS extension needs --design")
        out = rss_extend(sset, ns.k_new, stream)
    elif method == "HLHS":
        out = hlhs_extend(sset, ns.t, stream)
    elif method == "RLH":
        out = rlh_extend(sset, stream)
    else:
        raise SystemExit(f"unknown extension method {ns.method!r}")
    write_text(ns.out, set_to_csv(out))
    if ns.design_out and out.design is not None:
        write_text(ns.design_out, dumps(out.design))


def cmd_metrics(args):
    ns = merged(args, {"inputs": None, "generators": "SRS,LHS,SBSS", "n_samples": "100",
                       "dims": "2", "seeds": "0-9", "n_probe": 100_000, "seed": 0,
                       "no_voronoi": False, "out": None})
    if ns.inputs:
        lines = [METRIC_HEADER]
        for path in ns.inputs:
            with open(path) as fh:
                sset = set_from_csv(fh.read())
            lines.append(metric_row(sset.generator or os.path.basename(path), sset.u,
                                    ns.seed, make_stream(ns.seed, 1), ns.n_probe,
                                    not ns.no_voronoi))
        write_text(ns.out, "\n".join(lines) + "\n")
        return
    text = run_metric_study(ns.generators.split(","), parse_int_list(ns.n_samples),
                            parse_int_list(ns.dims), parse_int_list(ns.seeds), ns.n_probe,
                            not ns.no_voronoi)
    write_text(ns.out, text)


def cmd_optimize_z(args):
    ns = merged(args, {"dist": "N(0,1)", "tol": 1e-4, "sweep_out": None, "points": 99})
    prob = RefinementProblem(parse_distribution(ns.dist))
    opt = optimize_z(prob, ns.tol)
    print(f"dist={format_distribution(prob.output_dist)}")
    print(f"z_star={opt.z_star:.6f}")
    print(f"var_star={opt.var_star:.6g}")
    print(f"two_samples={two_sample_variance(prob):.6g}")
    print(f"no_refinement={no_refinement_variance(prob):.6g}")
    print(f"balanced={variance_of_split(prob, 0.5):.6g}")
    if ns.sweep_out:
        zs = np.linspace(0.01, 0.99, ns.points)
        write_text(ns.sweep_out, "\n".join([SWEEP_HEADER] + sweep_rows(prob, zs)) + "\n")


def _policy(ns) -> ConvergencePolicy:
    truth = None if ns.truth in (None, "") else float(ns.truth)
    return ConvergencePolicy(ns.criterion, ns.threshold, Statistic.parse(ns.statistic), truth,
                             ns.batch, ns.bootstrap_replicates)


RUN_DEFAULTS = {"model": "cubic-A", "generator": "RSS", "n0": 20, "criterion": "analytic",
                "threshold": 0.01, "statistic": "variance", "truth": None, "batch": 1,
                "bootstrap_replicates": 1000, "replicates": 100, "seed": None,
                "max_samples": 200_000, "hlhs_t": 1, "workers": 1, "out_dir": "results",
                "figures": False}


def cmd_run(args):
    ns = merged(args, RUN_DEFAULTS)
    require_seed(ns)
    pol = _policy(ns)
    cfg = ExperimentConfig(ns.model, ns.generator.upper(), ns.n0, pol, ns.replicates,
                           int(ns.seed), ns.max_samples, ns.hlhs_t, ns.workers)
    res = run_replicates(cfg)
    os.makedirs(ns.out_dir, exist_ok=True)
    write_text(os.path.join(ns.out_dir, "iterations.csv"), adaptive_csv(res, pol))
    lines = ["replicate,N,converged"] + [f"{r.replicate},{r.N},{int(r.converged)}" for r in res]
    write_text(os.path.join(ns.out_dir, "convergence.csv"), "\n".join(lines) + "\n")
    plot_dir = os.path.join(ns.out_dir, "plot-data")
    Ns = np.sort([r.N for r in res])
    share = np.arange(1, len(Ns) + 1) / len(Ns)
    plotting.write_plot_data(os.path.join(plot_dir, "converged_share.csv"),
                             {cfg.generator: (Ns, share)}, "samples", "share converged",
                             f"{cfg.model} {pol.criterion}", logx=True)
    trace = res[0]
    plotting.write_plot_data(os.path.join(plot_dir, "trace_replicate0.csv"),
                             {cfg.generator: (trace.trace_N, trace.trace_metric)}, "samples",
                             "convergence metric", logx=True, logy=True)
    q = np.percentile(Ns, QUANTILES, method="lower")
    print(" ".join(f"q{p}={int(v)}" for p, v in zip(QUANTILES, q)))
    finish_figures(ns, plot_dir)


# -- bench presets -------------------------------------------------------------------

def bench_cubic(ns):
    dists = [d.strip().upper() for d in ns.dists.split(",")]
    gens = [g.strip().upper() for g in ns.generators.split(",")]
    out = cubic_study(dists, gens, ns.replicates, int(ns.seed), ns.n0, ns.threshold,
                      ns.max_samples, ns.workers)
    lines = ["dist,generator," + ",".join(f"q{p}" for p in QUANTILES) + ",unconverged"]
    by_gen = {}
    for row in out:
        lines.append(f"{row['dist']},{row['generator']}," + ",".join(str(int(v)) for v in row["quantiles"])
                     + f",{row['unconverged']}")
        by_gen.setdefault(row["generator"], []).append(row)
    write_text(os.path.join(ns.out_dir, "cubic_convergence.csv"), "\n".join(lines) + "\n")
    plot_dir = os.path.join(ns.out_dir, "plot-data")
    kurt = {d: get_model(f"cubic-{d}").truth["kurtosis"] for d in dists}
    top = len(QUANTILES) - 1
    series = {g: ([kurt[r["dist"]] for r in rows], [r["quantiles"][top] for r in rows])
              for g, rows in by_gen.items()}
    plotting.write_plot_data(os.path.join(plot_dir, "samples_vs_kurtosis.csv"), series,
                             "response excess kurtosis", f"samples for {QUANTILES[top]}% convergence",
                             logy=True)
    if "SRS" in by_gen:
        ref = {r["dist"]: r["quantiles"][top] for r in by_gen["SRS"]}
        red = {g: ([kurt[r["dist"]] for r in rows],
                   [(ref[r["dist"]] - r["quantiles"][top]) / ref[r["dist"]] for r in rows])
               for g, rows in by_gen.items() if g != "SRS"}
        plotting.write_plot_data(os.path.join(plot_dir, "reduction_vs_kurtosis.csv"), red,
                                 "response excess kurtosis", "reduction relative to SRS")
    return plot_dir


def bench_addmult(ns):
    dims = parse_int_list(ns.dims)
    gens = [g.strip().upper() for g in ns.generators.split(",")]
    lines = ["model,n,generator,N,std"]
    series = {}
    for kind, make in (("additive", model_additive), ("multiplicative", model_multiplicative)):
        for n in dims:
            res = projective_study(make(n), gens, int(ns.n_samples), ns.replicates, int(ns.seed))
            for g, s in res.items():
                lines.append(f"{kind},{n},{g},{int(ns.n_samples)},{s!r}")
                xs, ys = series.setdefault(f"{kind} {g}", ([], []))
                xs.append(n)
                ys.append(s)
    write_text(os.path.join(ns.out_dir, "projective.csv"), "\n".join(lines) + "\n")
    plot_dir = os.path.join(ns.out_dir, "plot-data")
    plotting.write_plot_data(os.path.join(plot_dir, "estimator_std_vs_dimension.csv"), series,
                             "dimension", "std of mean estimator", logy=True)
    return plot_dir


def bench_spacefill(ns):
    gens = [g.strip() for g in ns.generators.split(",")]
    seeds = [int(ns.seed) + s for s in range(ns.replicates)]
    text = run_metric_study(gens, parse_int_list(ns.n_samples), parse_int_list(ns.dims), seeds,
                            ns.n_probe)
    write_text(os.path.join(ns.out_dir, "spacefill.csv"), text)
    rows = [r.split(",") for r in text.strip().splitlines()[1:]]
    plot_dir = os.path.join(ns.out_dir, "plot-data")
    for col, name in ((4, "v_metric"), (5, "wd2"), (6, "max_rho"), (7, "cond")):
        series = {}
        for g in gens:
            by_n = {}
            for r in rows:
                if r[0] == g and r[col]:
                    by_n.setdefault(int(r[2]), []).append(float(r[col]))
            xs = sorted(by_n)
            series[f"{g} N={ns.n_samples}"] = (xs, [float(np.mean(by_n[x])) for x in xs])
        plotting.write_plot_data(os.path.join(plot_dir, f"{name}_vs_dimension.csv"), series,
                                 "dimension", f"mean {name}")
    return plot_dir


def bench_twodof(ns):
    pol = ConvergencePolicy("bootstrap", ns.threshold, Statistic.parse(ns.statistic), None,
                            ns.batch, ns.bootstrap_replicates)
    lines = ["generator,replicate,N,converged"]
    series = {}
    for g in ("RSS", "SRS"):
        cfg = ExperimentConfig("twodof", g, ns.n0, pol, ns.replicates, int(ns.seed),
                               ns.max_samples, workers=ns.workers)
        res = run_replicates(cfg)
        lines += [f"{g},{r.replicate},{r.N},{int(r.converged)}" for r in res]
        Ns = np.sort([r.N for r in res])
        series[g] = (Ns, np.arange(1, len(Ns) + 1) / len(Ns))
    write_text(os.path.join(ns.out_dir, "twodof.csv"), "\n".join(lines) + "\n")
    plot_dir = os.path.join(ns.out_dir, "plot-data")
    plotting.write_plot_data(os.path.join(plot_dir, "twodof_converged_share.csv"), series,
                             "samples", "share converged", logx=True)
    return plot_dir


BENCH = {
    "cubic": (bench_cubic, {"dists": "A,B,C,D,E", "generators": "SRS,HLHS,RSS", "replicates": 100,
                            "n0": 20, "threshold": 0.01, "max_samples": 200_000}),
    "addmult": (bench_addmult, {"dims": "2,5,10", "generators": "SRS,LHS,SS", "replicates": 100,
                                "n_samples": 1024}),
    "spacefill": (bench_spacefill, {"generators": "SRS,LHS,LHS_corr,SBSS", "replicates": 10,
                                    "n_samples": "100", "dims": "2", "n_probe": 100_000}),
    "twodof": (bench_twodof, {"replicates": 5, "n0": 20, "threshold": 0.01, "statistic": "mean",
                              "batch": 10, "bootstrap_replicates": 1000, "max_samples": 5000}),
}


def cmd_bench(args):
    func, extra = BENCH[args.study]
    ns = merged(args, {"seed": None, "out_dir": "results", "figures": False, "workers": 1, **extra})
    require_seed(ns)
    plot_dir = func(ns)
    print(f"wrote {ns.out_dir}")
    finish_figures(ns, plot_dir)


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="refstrat", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key = value file; flags override it")
        sp.add_argument("--seed", type=int)
        return sp

    sp = common(sub.add_parser("sample", help="generate a sample set"))
    sp.add_argument("--generator", help="SRS, SS, LHS, LHS_corr or RSS")
    sp.add_argument("--marginals", help='e.g. "LN(0,0.1);U(0,5);N(1,0.1)"')
    sp.add_argument("-N", "--n-samples", dest="n_samples", type=int)
    sp.add_argument("--stream-id", type=int)
    sp.add_argument("--out", help="CSV path (stdout if omitted)")
    sp.add_argument("--design-out", help="write the stratified design here")
    sp.set_defaults(func=cmd_sample)

    sp = common(sub.add_parser("extend", help="extend a saved sample set"))
    sp.add_argument("--input", help="sample CSV")
    sp.add_argument("--design", help="design file (required for RSS)")
    sp.add_argument("--method", help="RSS, HLHS or RLH")
    sp.add_argument("-k", "--k-new", dest="k_new", type=int, help="RSS samples to add")
    sp.add_argument("-t", type=int, help="HLHS refinement factor")
    sp.add_argument("--stream-id", type=int)
    sp.add_argument("--out")
    sp.add_argument("--design-out")
    sp.set_defaults(func=cmd_extend)

    sp = common(sub.add_parser("metrics", help="space-filling metrics"))
    sp.add_argument("inputs", nargs="*", help="sample CSVs; omit to generate designs")
    sp.add_argument("--generators")
    sp.add_argument("-N", "--n-samples", dest="n_samples")
    sp.add_argument("--dims")
    sp.add_argument("--seeds")
    sp.add_argument("--n-probe", type=int)
    sp.add_argument("--no-voronoi", action="store_true", default=None)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_metrics)

    sp = sub.add_parser("optimize-z", help="optimal imbalance factor")
    sp.add_argument("--config")
    sp.add_argument("--dist", help='e.g. "LN(-1.49,1.27)"')
    sp.add_argument("--tol", type=float)
    sp.add_argument("--sweep-out", help="write a dist,z,var sweep CSV")
    sp.add_argument("--points", type=int)
    sp.set_defaults(func=cmd_optimize_z)

    sp = common(sub.add_parser("run", help="adaptive convergence experiment"))
    sp.add_argument("--model", help="cubic-A..J, additive-n, multiplicative-n or twodof")
    sp.add_argument("--generator", help="SRS, RSS, HLHS or RLH")
    sp.add_argument("--n0", type=int)
    sp.add_argument("--criterion", help="analytic or bootstrap")
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--statistic", help="mean, variance, moment(3), cdf_at(0.5), ...")
    sp.add_argument("--truth", help="true value (analytic criterion; default from the model)")
    sp.add_argument("--batch", type=int)
    sp.add_argument("--bootstrap-replicates", type=int)
    sp.add_argument("--replicates", type=int)
    sp.add_argument("--max-samples", type=int)
    sp.add_argument("--hlhs-t", type=int)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--out-dir")
    sp.add_argument("--figures", action="store_true", default=None, help="also render PNGs")
    sp.set_defaults(func=cmd_run)

    sp = common(sub.add_parser("bench", help="preset benchmark studies"))
    sp.add_argument("study", choices=sorted(BENCH))
    sp.add_argument("--replicates", type=int)
    sp.add_argument("--dists", help="cubic sets, e.g. A,B,C")
    sp.add_argument("--generators")
    sp.add_argument("--dims")
    sp.add_argument("-N", "--n-samples", dest="n_samples")
    sp.add_argument("--n0", type=int)
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--statistic")
    sp.add_argument("--batch", type=int)
    sp.add_argument("--bootstrap-replicates", type=int)
    sp.add_argument("--max-samples", type=int)
    sp.add_argument("--n-probe", type=int)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--out-dir")
    sp.add_argument("--figures", action="store_true", default=None, help="also render PNGs")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
