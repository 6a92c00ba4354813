"""Simulated data and Monte Carlo drivers for the smoother comparisons.

Three studies are provided:

table1
    Linear sinusoid tracking (N = 100) with contaminated measurements.
    Metric: MSE over both state components.
vdp
    Van der Pol oscillator (N = 164) with a fraction of N(0, 100) outliers on
    the first component. Metric: MSE.
ttrend
    The linear model on a coarse grid (N = 20) with optional unmodeled jump.
    Metric: RMSE of the second state component.

Each run draws from its own stream seeded by (master_seed, run_index), so
results do not depend on execution order or worker count.
"""
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import SmootherError
from .models import (DEFAULT_DOF, SequenceModel, StateTrajectory, forward_simulate, linear_stage,
                     vdp_stage)
from .noise import ContaminationScheme, sample_gaussian_vector, sample_measurement_noise
from .objectives import ObjectiveKind
from .solver import SolverConfig, objective_trace_check, smooth

WORKERS_ENV = "TKSMOOTH_WORKERS"

# Gauss-Newton converges linearly on large-residual instances (L2 on VDP with
# heavy contamination needs up to ~3000 iterations to reach eps = 1e-8).
EXPERIMENT_MAX_ITER = 10000

LINEAR_N = 100
LINEAR_DT = 0.04 * np.pi
LINEAR_SIGMA2 = 0.25

VDP_MU = 2.0
VDP_N = 164
VDP_DT = 16.0 / VDP_N
VDP_X0 = (0.0, -0.5)
VDP_PROCESS_VAR = 0.01
VDP_OUTLIER_VAR = 100.0
# Explicit Euler is unstable once x1**2 > 1 + 2/(mu*dt); a noisy path that gets
# there blows up to inf within a few steps, while stable paths stay below ~10.
VDP_DIVERGENCE_BOUND = 1e3
VDP_MAX_REDRAWS = 100

TTREND_N = 20
TTREND_DT = 2.0 * np.pi / TTREND_N
TTREND_SIGMA2 = 0.05
TTREND_JUMP = 2.0


def run_rng(master_seed, run_index):
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(run_index)]))


def integrated_noise_system(dt):
    """Transition, process covariance and measurement matrix of the two-fold integrator."""
    G = np.array([[1.0, 0.0], [dt, 1.0]])
    Q = np.array([[dt, dt ** 2 / 2.0], [dt ** 2 / 2.0, dt ** 3 / 3.0]])
    H = np.array([[0.0, 1.0]])
    return G, Q, H


def sinusoid(t):
    t = np.asarray(t, dtype=float)
    return np.stack([-np.cos(t), -np.sin(t)], axis=-1)


def linear_model(z, dt, sigma2, s=DEFAULT_DOF, r=DEFAULT_DOF):
    G, Q, H = integrated_noise_system(dt)
    g0 = G @ sinusoid(0.0)
    stages = [linear_stage(G, Q, H, [[sigma2]], [zk], s=s, r=r, index=k + 1) for k, zk in enumerate(z)]
    return SequenceModel(stages, g0)


def vdp_model(z, mu=VDP_MU, dt=VDP_DT, q=VDP_PROCESS_VAR, sigma2=LINEAR_SIGMA2, x0=VDP_X0,
              s=DEFAULT_DOF, r=DEFAULT_DOF):
    Q = q * np.eye(2)
    H = np.array([[1.0, 0.0]])
    stages = [vdp_stage(mu, dt, Q, H, [[sigma2]], [zk], s=s, r=r, index=k + 1) for k, zk in enumerate(z)]
    g0 = stages[0].g(np.asarray(x0, dtype=float))
    return SequenceModel(stages, g0)


def simulate_linear_run(scheme, rng, N=LINEAR_N, dt=LINEAR_DT, dof=DEFAULT_DOF):
    """Sinusoid truth at t_k = k dt with second-component measurements."""
    t = dt * np.arange(1, N + 1)
    truth = sinusoid(t)
    z = truth[:, 1] + sample_measurement_noise(scheme, rng, N)
    return StateTrajectory(truth, t), linear_model(z, dt, scheme.sigma2, s=dof, r=dof)


def _euler_path(stage, noise):
    x = np.empty((len(noise), 2))
    prev = np.asarray(VDP_X0, dtype=float)
    for k in range(len(noise)):
        prev = x[k] = stage.g(prev) + noise[k]
        if not np.all(np.abs(prev) < VDP_DIVERGENCE_BOUND):
            return None
    return x


def simulate_vdp_run(p_outlier, rng, dof=DEFAULT_DOF, process_noise=True, measurement_noise=True):
    """Stochastic Euler Van der Pol truth, contaminated first-component measurements.

    A process-noise draw whose path leaves ``VDP_DIVERGENCE_BOUND`` is discarded
    and redrawn from the same generator, so the truth is conditioned on not
    diverging. Measurement noise is drawn after the accepted path.
    """
    stage = vdp_stage(VDP_MU, VDP_DT, np.eye(2), np.array([[1.0, 0.0]]), [[1.0]], [0.0])
    for _ in range(VDP_MAX_REDRAWS):
        noise = sample_gaussian_vector(np.zeros(2), VDP_PROCESS_VAR * np.eye(2), rng, size=VDP_N)
        if not process_noise:
            noise[:] = 0.0
        x = _euler_path(stage, noise)
        if x is not None:
            break
    else:
        raise RuntimeError(f"Van der Pol truth diverged in {VDP_MAX_REDRAWS} consecutive draws")
    scheme = ContaminationScheme.contaminating_normal(p_outlier, VDP_OUTLIER_VAR, LINEAR_SIGMA2)
    v = sample_measurement_noise(scheme, rng, VDP_N)
    if not measurement_noise:
        v[:] = 0.0
    t = VDP_DT * np.arange(1, VDP_N + 1)
    return StateTrajectory(x, t), vdp_model(x[:, 0] + v, s=dof, r=dof)


def simulate_ttrend_run(jump, rng, dof=DEFAULT_DOF, noise=True, jump_size=TTREND_JUMP):
    """Coarse sinusoid with an optional step added to both components for t > pi."""
    t = TTREND_DT * np.arange(1, TTREND_N + 1)
    truth = sinusoid(t)
    if jump:
        truth[t > np.pi] += jump_size
    scheme = ContaminationScheme.nominal(TTREND_SIGMA2)
    v = sample_measurement_noise(scheme, rng, TTREND_N)
    if not noise:
        v[:] = 0.0
    return StateTrajectory(truth, t), linear_model(truth[:, 1] + v, TTREND_DT, TTREND_SIGMA2, s=dof, r=dof)


def mse(truth, estimate):
    """Mean over time of the squared state error, summed over components."""
    return float(np.mean(np.sum((_states(truth) - _states(estimate)) ** 2, axis=1)))


def rmse_x2(truth, estimate):
    return float(np.sqrt(np.mean((_states(truth)[:, 1] - _states(estimate)[:, 1]) ** 2)))


def _states(x):
    return x.states if isinstance(x, StateTrajectory) else np.asarray(x, dtype=float)


def quantile(values, q):
    """Empirical quantile, lower order statistic: sorted[floor(q (n - 1))]."""
    return float(np.quantile(np.asarray(values, dtype=float), q, method="lower"))


EXPERIMENTS = ("table1", "vdp", "ttrend")
DEFAULT_SMOOTHERS = {
    "table1": ("l2", "trobust"),
    "vdp": ("l2", "trobust"),
    "ttrend": ("l2", "trobust", "ttrend"),
}


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    runs: int = 200
    master_seed: int = 0
    smoothers: tuple = None
    solver_cfg: SolverConfig = field(default_factory=lambda: SolverConfig(max_iter=EXPERIMENT_MAX_ITER))
    dof: float = DEFAULT_DOF
    scheme: ContaminationScheme = field(default_factory=ContaminationScheme.nominal)
    p_outlier: float = 0.7
    jump: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        smoothers = DEFAULT_SMOOTHERS[self.experiment] if self.smoothers is None else self.smoothers
        object.__setattr__(self, "smoothers", tuple(ObjectiveKind.parse(s) for s in smoothers))

    @property
    def metric(self):
        return "rmse_x2" if self.experiment == "ttrend" else "mse"


def simulate(spec, run_index):
    rng = run_rng(spec.master_seed, run_index)
    if spec.experiment == "table1":
        return simulate_linear_run(spec.scheme, rng, dof=spec.dof)
    if spec.experiment == "vdp":
        return simulate_vdp_run(spec.p_outlier, rng, dof=spec.dof)
    return simulate_ttrend_run(spec.jump, rng, dof=spec.dof)


def initial_trajectory(experiment, model):
    """Zero trajectory for linear models, noise-free propagation from g0 for VDP."""
    if experiment == "vdp":
        return forward_simulate(model)
    return np.zeros((model.N, model.n))


@dataclass
class RunMetrics:
    index: int
    mse: dict
    rmse_x2: dict
    status: dict
    iterations: dict
    objective: dict
    trace_ok: dict
    truth: StateTrajectory = None
    measurements: np.ndarray = None
    estimates: dict = None

    @property
    def failed(self):
        return [k for k, st in self.status.items() if st != "converged_delta"]


def run_one(spec, run_index, keep_trajectories=False):
    truth, model = simulate(spec, run_index)
    x0 = initial_trajectory(spec.experiment, model)
    out = RunMetrics(run_index, {}, {}, {}, {}, {}, {})
    estimates = {}
    for kind in spec.smoothers:
        report = smooth(kind, model, x0, spec.solver_cfg, times=truth.times)
        key = kind.value
        out.mse[key] = mse(truth, report.estimate)
        out.rmse_x2[key] = rmse_x2(truth, report.estimate)
        out.status[key] = report.status.value
        out.iterations[key] = report.iterations
        out.objective[key] = report.objective
        out.trace_ok[key] = objective_trace_check(report, spec.solver_cfg)
        estimates[key] = report.estimate.states
    if keep_trajectories:
        out.truth = truth
        out.measurements = model.z[:, 0].copy()
        out.estimates = estimates
    return out


@dataclass
class SummaryRow:
    smoother: str
    median: float
    q025: float
    q975: float
    runs: int


@dataclass
class ExperimentSummary:
    spec: ExperimentSpec
    rows: list
    runs: list
    wall_time: float

    def row(self, smoother):
        key = ObjectiveKind.parse(smoother).value
        return next(r for r in self.rows if r.smoother == key)

    def median(self, smoother):
        return self.row(smoother).median


class ExperimentFailed(SmootherError, RuntimeError):
    def __init__(self, message, runs):
        super().__init__(message)
        self.runs = runs


def default_workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _run_task(args):
    spec, index, keep = args
    return run_one(spec, index, keep)


def run_experiment(spec, workers=None, keep_trajectories=False):
    """Run all Monte Carlo replications and aggregate per-smoother statistics.

    Any run that does not converge aborts the experiment with ExperimentFailed
    listing the offending runs; failed runs are never dropped from statistics.
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    start = time.perf_counter()
    tasks = [(spec, i, keep_trajectories) for i in range(spec.runs)]
    if workers == 1:
        results = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=max(1, spec.runs // (4 * workers))))
    results.sort(key=lambda r: r.index)
    failed = [r for r in results if r.failed]
    if failed:
        detail = ", ".join(f"run {r.index}: {r.status}" for r in failed[:10])
        raise ExperimentFailed(f"{len(failed)} of {spec.runs} runs did not converge ({detail})", results)
    rows = []
    for kind in spec.smoothers:
        vals = [getattr(r, spec.metric)[kind.value] for r in results]
        rows.append(SummaryRow(kind.value, quantile(vals, 0.5), quantile(vals, 0.025),
                               quantile(vals, 0.975), len(vals)))
    return ExperimentSummary(spec, rows, results, time.perf_counter() - start)


def run_table1(spec, **kw):
    if spec.experiment != "table1":
        raise ValueError("run_table1 needs a table1 spec")
    return run_experiment(spec, **kw)


def run_vdp(spec, **kw):
    if spec.experiment != "vdp":
        raise ValueError("run_vdp needs a vdp spec")
    return run_experiment(spec, **kw)


def run_ttrend(spec, **kw):
    if spec.experiment != "ttrend":
        raise ValueError("run_ttrend needs a ttrend spec")
    return run_experiment(spec, **kw)


TABLE1_ROWS = [
    ContaminationScheme.nominal(),
    *[ContaminationScheme.contaminating_normal(p, phi) if kind == "normal"
      else ContaminationScheme.contaminating_uniform(p)
      for p in (0.1, 0.2, 0.5) for kind, phi in (("normal", 10.0), ("normal", 100.0), ("uniform", None))],
]


def summary_records(summary):
    """Flat dict rows for CSV/JSON output. Wall time is excluded so files are reproducible."""
    spec = summary.spec
    records = []
    for row in summary.rows:
        if spec.experiment == "table1":
            sc = spec.scheme
            rec = {"scheme": sc.kind, "p": sc.outlier_rate,
                   "phi": sc.phi if sc.kind == "normal" else "", "smoother": row.smoother,
                   "median_mse": row.median}
        elif spec.experiment == "vdp":
            rec = {"p": spec.p_outlier, "smoother": row.smoother, "median_mse": row.median}
        else:
            rec = {"jump": int(spec.jump), "smoother": row.smoother, "median_rmse_x2": row.median}
        rec.update(q025=row.q025, q975=row.q975, runs=row.runs)
        records.append(rec)
    return records


def run_records(summary):
    """Per-run, per-smoother raw metrics."""
    return run_records_from_runs(summary.runs)


def run_records_from_runs(runs):
    out = []
    for r in runs:
        for key in r.mse:
            out.append({"run": r.index, "smoother": key, "mse": r.mse[key], "rmse_x2": r.rmse_x2[key],
                        "iterations": r.iterations[key], "status": r.status[key],
                        "objective": r.objective[key]})
    return out


def trajectory_dump(summary):
    """Plot-ready truth, measurement and estimate series for every kept run."""
    runs = []
    for r in summary.runs:
        if r.truth is None:
            continue
        runs.append({"run": r.index, "t": r.truth.times.tolist(), "truth": r.truth.states.tolist(),
                     "z": r.measurements.tolist(),
                     "estimates": {k: v.tolist() for k, v in r.estimates.items()}})
    return {"experiment": summary.spec.experiment, "runs": runs}
