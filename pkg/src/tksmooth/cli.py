"""Command-line entry point: ``tksmooth {simulate,smooth,experiment}``.

Exit codes: 0 success, 1 usage error, 2 solver or runtime failure, 3 I/O error.
The default worker count for experiments comes from ``TKSMOOTH_WORKERS``.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import datafile, experiments
from .errors import SmootherError
from .models import forward_simulate
from .noise import ContaminationScheme
from .objectives import ObjectiveKind
from .solver import SolverConfig, smooth

log = logging.getLogger("tksmooth")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _scheme(args):
    kind = {"nominal": "nominal", "normal": "normal", "uniform": "uniform"}.get(args.scheme)
    if kind is None:
        raise UsageError(f"unknown scheme {args.scheme!r}")
    if kind == "nominal":
        return ContaminationScheme.nominal()
    if kind == "normal":
        return ContaminationScheme.contaminating_normal(args.p, args.phi)
    return ContaminationScheme.contaminating_uniform(args.p, args.lo, args.hi)


def _solver_cfg(args, default_max_iter):
    max_iter = default_max_iter if args.max_iter is None else args.max_iter
    return SolverConfig(eps=args.eps, max_iter=max_iter)


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _format(args):
    if args.format:
        return args.format
    if args.out and args.out.endswith(".json"):
        return "json"
    return "csv"


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scheme", default="nominal", choices=["nominal", "normal", "uniform"])
    p.add_argument("--p", type=float, default=None, help="outlier probability")
    p.add_argument("--phi", type=float, default=100.0, help="outlier variance (normal scheme)")
    p.add_argument("--lo", type=float, default=-10.0)
    p.add_argument("--hi", type=float, default=10.0)
    p.add_argument("--dof", type=float, default=experiments.DEFAULT_DOF)
    p.add_argument("--jump", action="store_true")
    p.add_argument("--out", default=None)


def _add_solver(p):
    p.add_argument("--eps", type=float, default=SolverConfig.eps)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--format", choices=["csv", "json"], default=None)


def build_parser():
    parser = _Parser(prog="tksmooth", description="Student's t robust and trend-following Kalman smoothers")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    sim = sub.add_parser("simulate", help="write a generated dataset (JSON)")
    sim.add_argument("--experiment", default="table1", choices=["table1", "linear", "vdp", "ttrend"])
    sim.add_argument("--run", type=int, default=0, help="run index within the seed's stream family")
    _add_common(sim)

    sm = sub.add_parser("smooth", help="run one smoother on a dataset file")
    sm.add_argument("--in", dest="infile", required=True)
    sm.add_argument("--smoother", default="trobust")
    sm.add_argument("--out", default=None)
    _add_solver(sm)

    ex = sub.add_parser("experiment", help="run a Monte Carlo study")
    ex.add_argument("experiment", choices=list(experiments.EXPERIMENTS))
    ex.add_argument("--runs", type=int, default=200)
    ex.add_argument("--smoother", action="append", default=None,
                    help="smoother to include (repeatable or comma separated)")
    ex.add_argument("--workers", type=int, default=None)
    ex.add_argument("--raw", default=None, help="per-run metrics file (default: <out>.runs.<ext>)")
    ex.add_argument("--dump", default=None, help="write truth/measurement/estimate series (JSON)")
    _add_common(ex)
    _add_solver(ex)
    return parser


def cmd_simulate(args):
    exp = "table1" if args.experiment == "linear" else args.experiment
    rng = experiments.run_rng(args.seed, args.run)
    meta = {"experiment": exp, "seed": args.seed, "run": args.run}
    if exp == "table1":
        if args.p is None and args.scheme != "nominal":
            raise UsageError("--p is required for contaminated schemes")
        scheme = _scheme(args)
        truth, model = experiments.simulate_linear_run(scheme, rng, dof=args.dof)
        params = {"dt": experiments.LINEAR_DT, "sigma2": scheme.sigma2, "s": args.dof, "r": args.dof}
        meta["scheme"] = {"kind": scheme.kind, "p": scheme.outlier_rate, "phi": scheme.phi,
                          "lo": scheme.lo, "hi": scheme.hi}
        name = "linear"
    elif exp == "vdp":
        p = 0.7 if args.p is None else args.p
        truth, model = experiments.simulate_vdp_run(p, rng, dof=args.dof)
        params = {"mu": experiments.VDP_MU, "dt": experiments.VDP_DT, "q": experiments.VDP_PROCESS_VAR,
                  "sigma2": experiments.LINEAR_SIGMA2, "x0": list(experiments.VDP_X0),
                  "s": args.dof, "r": args.dof}
        meta["p"] = p
        name = "vdp"
    else:
        truth, model = experiments.simulate_ttrend_run(args.jump, rng, dof=args.dof)
        params = {"dt": experiments.TTREND_DT, "sigma2": experiments.TTREND_SIGMA2, "s": args.dof, "r": args.dof}
        meta["jump"] = bool(args.jump)
        name = "linear"
    doc = datafile.dataset_document(name, params, truth.times, model.z, truth.states, meta)
    _write(args.out, datafile.dumps_json(doc))
    return EXIT_OK


def cmd_smooth(args):
    try:
        doc = json.loads(Path(args.infile).read_text())
    except OSError as exc:
        raise OSError(f"cannot read {args.infile}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise OSError(f"cannot parse {args.infile}: {exc}") from exc
    try:
        kind = ObjectiveKind.parse(args.smoother)
    except ValueError:
        raise UsageError(f"unknown smoother {args.smoother!r}") from None
    model, times = datafile.model_from_document(doc)
    if doc["model"]["name"] == "vdp":
        x0 = forward_simulate(model)
    else:
        x0 = np.zeros((model.N, model.n))
    report = smooth(kind, model, x0, _solver_cfg(args, SolverConfig.max_iter), times=times)
    if _format(args) == "json":
        _write(args.out, datafile.dumps_json(datafile.estimate_document(report, times)))
    else:
        _write(args.out, datafile.estimate_to_csv(report.estimate))
    report.raise_for_status()
    return EXIT_OK


def _smoothers(values, experiment):
    if not values:
        return None
    try:
        return tuple(ObjectiveKind.parse(s) for v in values for s in v.split(",") if s)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def spec_from_args(args):
    exp = args.experiment
    kw = dict(runs=args.runs, master_seed=args.seed, dof=args.dof,
              smoothers=_smoothers(args.smoother, exp),
              solver_cfg=_solver_cfg(args, experiments.EXPERIMENT_MAX_ITER))
    if exp == "table1":
        if args.p is None and args.scheme != "nominal":
            raise UsageError("--p is required for contaminated schemes")
        kw["scheme"] = _scheme(args)
    elif exp == "vdp":
        kw["p_outlier"] = 0.7 if args.p is None else args.p
    else:
        kw["jump"] = bool(args.jump)
    if args.runs < 1:
        raise UsageError("--runs must be at least 1")
    return experiments.ExperimentSpec(exp, **kw)


def _raw_path(args, fmt):
    if args.raw:
        return args.raw
    if args.out and args.out != "-":
        out = Path(args.out)
        return str(out.with_name(out.stem + ".runs." + fmt))
    return None


def cmd_experiment(args):
    spec = spec_from_args(args)
    fmt = _format(args)
    try:
        summary = experiments.run_experiment(spec, workers=args.workers, keep_trajectories=bool(args.dump))
    except experiments.ExperimentFailed as exc:
        raw = _raw_path(args, fmt)
        if raw:
            _write_records(raw, experiments.run_records_from_runs(exc.runs), fmt)
        raise
    log.info("%s: %d runs in %.1fs", spec.experiment, spec.runs, summary.wall_time)
    records = experiments.summary_records(summary)
    _write_records(args.out, records, fmt)
    raw = _raw_path(args, fmt)
    if raw:
        _write_records(raw, experiments.run_records(summary), fmt)
    if args.dump:
        _write(args.dump, datafile.dumps_json(experiments.trajectory_dump(summary)))
    return EXIT_OK


def _write_records(path, records, fmt):
    if fmt == "json":
        _write(path, json.dumps(records, indent=1) + "\n")
    else:
        _write(path, datafile.records_to_csv(records))


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(name)s: %(message)s")
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        handler = {"simulate": cmd_simulate, "smooth": cmd_smooth, "experiment": cmd_experiment}[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except datafile.DataFileError as exc:
        print(f"error: {args.infile}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SmootherError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
