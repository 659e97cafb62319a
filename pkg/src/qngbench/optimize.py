"""Preconditioned gradient-descent optimizers for variational circuits.

Three schemes share one loop:

* fixed-step QNGD: theta <- theta - lambda * F^+ g with constant lambda;
* adaptive QNGD: per-epoch step beta / 2^k, with k the smallest value in
  [0, k_m] whose trial point satisfies the sufficient-decrease rule
  f(theta) - f(theta - step * d) >= alpha * step * ||d||^2;
* adaptive SGD: the same with the metric forced to the identity.

Each epoch computes the Euclidean gradient by parameter shift, the metric
for the configured mode, the preconditioned direction, then checks the
stopping rule before (possibly) searching and updating. Every cost and
metric circuit evaluation is charged to the run's ledger, and the
per-epoch trace carries enough to audit the whole budget after the fact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .ansatz import Ansatz, _check_theta
from .hamiltonian import (
    EXACT,
    ExpectationEstimator,
    PauliHamiltonian,
    exact_ground_energy,
)
from .metric import (
    EvalLedger,
    MetricMatrix,
    ansatz_energy,
    compute_metric,
    parameter_shift_gradient,
    pseudo_invert,
)

_METRIC_MODES = ("identity", "block_diagonal", "full")
_STOPPING_RULES = ("exact_gap", "gradient_norm", "energy_delta")
_MAX_STALL_STREAK = 5  # consecutive failed line searches before giving up


@dataclass(frozen=True)
class OptimizerConfig:
    """Hyperparameters shared by all schemes.

    ``fixed_step`` set selects fixed-step QNGD; unset selects the adaptive
    line search driven by (alpha, beta, k_m). ``eps`` is the eigenvalue
    threshold of the metric pseudo-inverse.
    """

    alpha: float = 0.01
    beta: float = 0.5
    k_m: int = 6
    tol: float = 0.01
    eps: float = 1e-3
    max_epochs: int = 200
    fixed_step: float | None = None
    metric_mode: str = "full"
    stopping_rule: str = "exact_gap"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.beta <= 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.k_m <= 0:
            raise ValueError(f"k_m must be positive, got {self.k_m}")
        if self.tol <= 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.eps <= 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.fixed_step is not None and self.fixed_step <= 0.0:
            raise ValueError(f"fixed step must be positive, got {self.fixed_step}")
        if self.metric_mode not in _METRIC_MODES:
            raise ValueError(f"unknown metric mode {self.metric_mode!r}")
        if self.stopping_rule not in _STOPPING_RULES:
            raise ValueError(f"unknown stopping rule {self.stopping_rule!r}")

    @property
    def adaptive(self) -> bool:
        return self.fixed_step is None


@dataclass
class EpochRecord:
    """One optimizer epoch.

    ``step_size``/``k_chosen`` are None on the terminating epoch (no update
    performed); ``k_chosen`` is also None on fixed-step epochs and on
    adaptive epochs whose line search found no acceptable step (the caller
    then stepped by beta / 2^k_m). ``energy_evals``/``metric_evals`` are
    the circuit evaluations charged during this epoch; ``cumulative_calls``
    is the run's ledger total after it.
    """

    epoch: int
    energy: float
    step_size: float | None
    k_chosen: int | None
    grad_norm: float
    energy_evals: int
    metric_evals: int
    cumulative_calls: int


@dataclass
class OptimizerTrace:
    records: list[EpochRecord]
    termination: str  # converged | max_epochs | stalled
    config: OptimizerConfig
    p: int
    theta_final: np.ndarray
    exact_energy: float | None
    total_energy_evals: int
    total_metric_evals: int

    @property
    def eot(self) -> int | None:
        """Epochs to terminate; None when the run did not converge."""
        return self.records[-1].epoch if self.termination == "converged" else None

    @property
    def final_energy(self) -> float:
        return self.records[-1].energy

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    @property
    def total_calls(self) -> int:
        return self.total_energy_evals + self.total_metric_evals


class ArmijoResult(NamedTuple):
    k: int | None
    step: float
    energy: float  # cost at the trial point belonging to ``step``
    trials: int


def natural_gradient(theta, g, F, eps: float) -> np.ndarray:
    """Preconditioned direction F^+(eps) g."""
    theta = np.asarray(theta, dtype=float)
    g = np.asarray(g, dtype=float)
    if theta.shape != g.shape:
        raise ValueError(f"shape mismatch: theta {theta.shape}, g {g.shape}")
    f = np.asarray(F, dtype=float)
    if f.shape != (g.shape[0], g.shape[0]):
        raise ValueError(f"metric shape {f.shape} does not match p={g.shape[0]}")
    return pseudo_invert(f, eps) @ g


def armijo_search(
    f: Callable[[np.ndarray], float],
    theta,
    direction,
    alpha: float,
    beta: float,
    k_m: int,
    f0: float | None = None,
) -> ArmijoResult:
    """Backtracking line search over steps beta / 2^k, k = 0 .. k_m.

    Scans k upward and returns the first k whose trial point satisfies the
    sufficient-decrease inequality; each trial costs one evaluation of
    ``f``. A non-finite trial value counts as failure for that k. When no
    k qualifies, returns k=None with the smallest step (and its already
    evaluated trial energy) so the caller can still move.

    ``f0`` passes in the already-known f(theta); left None, it is
    evaluated here (not counted as a trial).
    """
    theta = np.asarray(theta, dtype=float)
    direction = np.asarray(direction, dtype=float)
    if not np.all(np.isfinite(direction)) or not direction.any():
        raise ValueError("search direction must be finite and nonzero")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if beta <= 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    if k_m < 0:
        raise ValueError(f"k_m must be nonnegative, got {k_m}")
    if f0 is None:
        f0 = f(theta)
    dir_sq = float(direction @ direction)
    trials = 0
    f_trial = np.nan
    for k in range(k_m + 1):
        step = beta / 2**k
        f_trial = f(theta - step * direction)
        trials += 1
        if np.isfinite(f_trial) and f0 - f_trial >= alpha * step * dir_sq:
            return ArmijoResult(k, step, float(f_trial), trials)
    return ArmijoResult(None, beta / 2**k_m, float(f_trial), trials)


def _should_stop(
    rule: str,
    tol: float,
    f_cur: float,
    f_prev: float | None,
    grad_norm: float,
    exact_energy: float | None,
) -> bool:
    if rule == "exact_gap":
        if exact_energy is None:
            raise ValueError("exact_gap stopping needs the exact ground energy")
        return abs(f_cur - exact_energy) <= tol
    if rule == "gradient_norm":
        return grad_norm <= tol
    if rule == "energy_delta":
        return f_prev is not None and abs(f_prev - f_cur) <= tol
    raise ValueError(f"unknown stopping rule {rule!r}")


def stopping_check(
    trace: OptimizerTrace, cfg: OptimizerConfig, exact_energy: float | None = None
) -> bool:
    """Would the configured rule fire on the trace's latest epoch?"""
    if not trace.records:
        raise ValueError("trace has no epochs")
    last = trace.records[-1]
    f_prev = trace.records[-2].energy if len(trace.records) > 1 else None
    return _should_stop(
        cfg.stopping_rule, cfg.tol, last.energy, f_prev, last.grad_norm, exact_energy
    )


def run_optimizer(
    a: Ansatz,
    h: PauliHamiltonian,
    theta0,
    cfg: OptimizerConfig,
    est: ExpectationEstimator = EXACT,
    exact_energy: float | None = None,
) -> OptimizerTrace:
    """Iterate gradient / metric / stopping-check / update to termination.

    Per epoch: parameter-shift gradient (2p cost evaluations), metric for
    ``cfg.metric_mode``, preconditioned direction, stopping check, then --
    unless terminated -- either the Armijo search (adaptive) or a fixed
    step. The cost at the accepted trial point is reused as the next
    epoch's energy, so it is never evaluated twice. The initial f(theta_0)
    evaluation is charged to epoch 0.
    """
    theta = _check_theta(a, theta0).copy()
    if cfg.stopping_rule == "exact_gap" and exact_energy is None:
        exact_energy = exact_ground_energy(h)

    ledger = EvalLedger()
    records: list[EpochRecord] = []
    epoch_energy_base = 0
    epoch_metric_base = 0

    def cost(t: np.ndarray) -> float:
        return ansatz_energy(a, h, t, est, ledger)

    f_cur = cost(theta)
    f_prev: float | None = None
    stall_streak = 0
    termination = "max_epochs"

    for epoch in range(cfg.max_epochs + 1):
        g = parameter_shift_gradient(a, h, theta, est, ledger)
        metric = compute_metric(a, theta, cfg.metric_mode, est, ledger)
        direction = pseudo_invert(metric.F, cfg.eps) @ g
        grad_norm = float(np.linalg.norm(direction))

        def record(step_size: float | None, k_chosen: int | None) -> None:
            nonlocal epoch_energy_base, epoch_metric_base
            records.append(
                EpochRecord(
                    epoch=epoch,
                    energy=f_cur,
                    step_size=step_size,
                    k_chosen=k_chosen,
                    grad_norm=grad_norm,
                    energy_evals=ledger.energy_evals - epoch_energy_base,
                    metric_evals=ledger.metric_evals - epoch_metric_base,
                    cumulative_calls=ledger.total,
                )
            )
            epoch_energy_base = ledger.energy_evals
            epoch_metric_base = ledger.metric_evals

        if _should_stop(
            cfg.stopping_rule, cfg.tol, f_cur, f_prev, grad_norm, exact_energy
        ):
            record(None, None)
            termination = "converged"
            break
        if epoch == cfg.max_epochs:
            record(None, None)
            termination = "max_epochs"
            break

        if cfg.adaptive:
            if grad_norm == 0.0:
                record(None, None)
                termination = "stalled"
                break
            result = armijo_search(
                cost, theta, direction, cfg.alpha, cfg.beta, cfg.k_m, f0=f_cur
            )
            step, k_chosen, f_new = result.step, result.k, result.energy
            stall_streak = stall_streak + 1 if k_chosen is None else 0
        else:
            step, k_chosen = cfg.fixed_step, None
            f_new = None

        theta = theta - step * direction
        if f_new is None:
            f_new = cost(theta)
        record(step, k_chosen)
        f_prev, f_cur = f_cur, f_new

        if not np.isfinite(f_cur):
            termination = "stalled"
            break
        if stall_streak >= _MAX_STALL_STREAK:
            termination = "stalled"
            break

    return OptimizerTrace(
        records=records,
        termination=termination,
        config=cfg,
        p=a.p,
        theta_final=theta,
        exact_energy=exact_energy,
        total_energy_evals=ledger.energy_evals,
        total_metric_evals=ledger.metric_evals,
    )


def qpu_call_count(trace: OptimizerTrace):
    """Audit the trace's circuit-call ledger.

    Returns (per_epoch, totals): per_epoch is one dict per recorded epoch
    splitting its cost evaluations into gradient (always 2p), line_search
    (k+1 trials if k was accepted, k_m+1 on an exhausted search), update
    (the post-step evaluation in fixed-step mode) and initial (epoch 0's
    f(theta_0)), plus the metric evaluations. Raises RuntimeError when the
    breakdown disagrees with the ledger deltas recorded during the run.
    """
    cfg = trace.config
    per_epoch = []
    for idx, r in enumerate(trace.records):
        gradient = 2 * trace.p
        initial = 1 if idx == 0 else 0
        if r.step_size is None:  # terminating epoch: no search, no update
            line_search = 0
            update = 0
        elif cfg.adaptive:
            line_search = r.k_chosen + 1 if r.k_chosen is not None else cfg.k_m + 1
            update = 0
        else:
            line_search = 0
            update = 1
        energy_total = gradient + line_search + update + initial
        if energy_total != r.energy_evals:
            raise RuntimeError(
                f"epoch {r.epoch}: ledger recorded {r.energy_evals} energy "
                f"evals, breakdown gives {energy_total}"
            )
        per_epoch.append(
            {
                "epoch": r.epoch,
                "gradient": gradient,
                "metric": r.metric_evals,
                "line_search": line_search,
                "update": update,
                "initial": initial,
                "total": energy_total + r.metric_evals,
            }
        )
    totals = {
        key: sum(e[key] for e in per_epoch)
        for key in ("gradient", "metric", "line_search", "update", "initial", "total")
    }
    if totals["total"] != trace.records[-1].cumulative_calls:
        raise RuntimeError(
            f"ledger total {trace.records[-1].cumulative_calls} != "
            f"breakdown total {totals['total']}"
        )
    return per_epoch, totals
