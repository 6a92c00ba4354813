"""Globally convergent Gauss-Newton smoother with Armijo backtracking."""
import enum
from dataclasses import dataclass, field

import numpy as np

from . import block_tridiag
from .errors import SolverFailure
from .models import StateTrajectory, as_states
from .objectives import ObjectiveKind, delta, evaluate, objective_value


@dataclass(frozen=True)
class SolverConfig:
    """Algorithm parameters.

    eps
        Terminate once the predicted decrease satisfies delta >= -eps.
    beta
        Armijo sufficient-decrease fraction.
    gamma
        Backtracking factor.
    eta
        Subproblem inexactness. The direction is always the exact minimizer
        of the quadratic model, so any eta in (0, 1) is satisfied.
    """

    eps: float = 1e-8
    beta: float = 1e-4
    gamma: float = 0.5
    eta: float = 0.5
    max_iter: int = 200
    max_linesearch: int = 52

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")
        for name in ("beta", "gamma", "eta"):
            val = getattr(self, name)
            if not 0.0 < val < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {val}")
        if self.max_iter < 1 or self.max_linesearch < 1:
            raise ValueError("iteration limits must be positive")


class Status(str, enum.Enum):
    CONVERGED = "converged_delta"
    MAX_ITERATIONS = "max_iterations"
    LINE_SEARCH_FAILED = "line_search_failed"


@dataclass(frozen=True)
class IterationRecord:
    objective: float
    delta: float
    step: float
    next_objective: float
    step_norm: float
    grad_norm: float


@dataclass
class SmootherReport:
    kind: ObjectiveKind
    estimate: StateTrajectory
    status: Status
    iterations: int
    trace: list = field(default_factory=list)

    @property
    def converged(self):
        return self.status is Status.CONVERGED

    @property
    def objective(self):
        return self.trace[-1].next_objective if self.trace else float("nan")

    def raise_for_status(self):
        if not self.converged:
            last = self.trace[-1] if self.trace else None
            raise SolverFailure(f"{self.kind.value} smoother stopped with status {self.status.value} "
                                f"after {self.iterations} iterations (last record: {last})", self)
        return self


def smooth(kind, model, x0, cfg=None, times=None):
    kind = ObjectiveKind.parse(kind)
    cfg = SolverConfig() if cfg is None else cfg
    if times is None and isinstance(x0, StateTrajectory):
        times = x0.times
    x = as_states(model, x0).copy()
    trace = []
    status = Status.MAX_ITERATIONS
    it = 0
    for it in range(cfg.max_iter + 1):
        ev = evaluate(kind, model, x)
        d = block_tridiag.solve(block_tridiag.factor(ev.curvature), -ev.gradient)
        dlt = delta(kind, model, x, d, evaluation=ev)
        K = ev.value
        dnorm, gnorm = float(np.linalg.norm(d)), float(np.linalg.norm(ev.gradient))
        if dlt >= -cfg.eps:
            trace.append(IterationRecord(K, dlt, 0.0, K, dnorm, gnorm))
            status = Status.CONVERGED
            break
        if it == cfg.max_iter:
            break
        t = 1.0
        for _ in range(cfg.max_linesearch + 1):
            K_new = objective_value(kind, model, x + t * d)
            if K_new <= K + cfg.beta * t * dlt:
                break
            t *= cfg.gamma
        else:
            trace.append(IterationRecord(K, dlt, 0.0, K, dnorm, gnorm))
            status = Status.LINE_SEARCH_FAILED
            break
        x = x + t * d
        trace.append(IterationRecord(K, dlt, t, K_new, dnorm, gnorm))
    iterations = sum(1 for rec in trace if rec.step > 0)
    return SmootherReport(kind, StateTrajectory(x, times), status, iterations, trace)


def objective_trace_check(report, cfg=None):
    """Check sufficient decrease on every step and the termination rule."""
    cfg = SolverConfig() if cfg is None else cfg
    prev = None
    for rec in report.trace:
        if prev is not None and rec.objective > prev:
            return False
        if rec.step > 0:
            if not rec.delta < 0:
                return False
            if not rec.next_objective <= rec.objective + cfg.beta * rec.step * rec.delta:
                return False
        prev = rec.next_objective
    if report.status is Status.CONVERGED:
        if not report.trace or abs(report.trace[-1].delta) > cfg.eps:
            return False
    return True
