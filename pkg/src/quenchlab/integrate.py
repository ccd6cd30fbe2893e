"""Time marching with the semi-explicit Crank-Nicolson scheme.

Each step is an Euler predictor followed by a trapezoidal corrector:

    v* = v + 2 mu F(v),   v_new = v + mu (F(v*) + F(v)),   mu = tau / (2 h^2).

The step size follows an arc-length rule on the nodal time derivatives
d = F / h^2, clamped to [tau_min, tau_max].
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import ExperimentConfig, ProblemSpec
from .discretize import Grid, StateVector, build_grid, phi_params, rhs
from .ic import ICValidationReport, validate

__all__ = [
    "QuenchReport",
    "RunRecord",
    "StepController",
    "StepRejected",
    "TERMINATIONS",
    "adapt_tau",
    "detect_quench",
    "run",
    "step",
]

logger = logging.getLogger(__name__)

LEFT, RIGHT, NONE = "left", "right", "none"
TERMINATIONS = ("quenched", "max_time", "max_steps", "step_floor_stall")
BLOWUP_SAMPLES = 10
CHUNK = 1 << 16


class StepRejected(RuntimeError):
    """The predictor or corrector pushed a wall value out of (0, 1)."""

    def __init__(self, side, stage):
        super().__init__(f"{stage} left (0, 1) at the {side} wall")
        self.side = side
        self.stage = stage


def step(v: StateVector, tau: float, spec: ProblemSpec, g: Grid) -> StateVector:
    """Advance ``v`` by one semi-explicit Crank-Nicolson step of size ``tau``."""
    if not tau > 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    mu = tau / (2.0 * g.h**2)
    f0 = rhs(v, spec, g)
    vstar = v.u + 2.0 * mu * f0
    _reject_if_outside(vstar, "predictor")
    new = v.u + mu * (rhs(vstar, spec, g) + f0)
    _reject_if_outside(new, "corrector")
    return StateVector(v.t + tau, new)


def _reject_if_outside(u, stage):
    side = _kernels._exit_side(u)
    if side == _kernels.SIDE_LEFT:
        raise StepRejected(LEFT, stage)
    if side == _kernels.SIDE_RIGHT:
        raise StepRejected(RIGHT, stage)
    if not np.all(np.isfinite(u)):
        raise StepRejected(NONE, stage)


@dataclass
class StepController:
    """Recent step sizes and nodal time derivatives for the arc-length rule."""

    tau_prev2: float
    tau_prev: float
    tau_min: float
    tau_max: float
    mode: str = "adaptive"
    deriv_hist: list = field(default_factory=list)

    def push(self, d, tau=None):
        """Record the derivative vector at a newly accepted step."""
        self.deriv_hist.append(np.asarray(d, dtype=float))
        del self.deriv_hist[:-3]
        if tau is not None:
            self.tau_prev2, self.tau_prev = self.tau_prev, float(tau)

    @property
    def warm(self):
        return len(self.deriv_hist) == 3


def adapt_tau(ctrl: StepController) -> float:
    """Next step from tau^2 = tau_k^2 + min_i{(d^{k-1} - d^{k-2})^2 - (d^k - d^{k-1})^2}.

    A non-positive radicand gives ``tau_min``; the result is clamped to
    [tau_min, tau_max]. In fixed mode the last step is returned unchanged.
    """
    if ctrl.mode == "fixed":
        return ctrl.tau_prev
    if not ctrl.warm:
        raise ValueError("adapt_tau needs three derivative vectors")
    d0, d1, d2 = ctrl.deriv_hist
    increment = np.min((d1 - d0) ** 2 - (d2 - d1) ** 2)
    radicand = ctrl.tau_prev**2 + increment
    if not radicand > 0.0:
        return ctrl.tau_min
    return float(min(max(math.sqrt(radicand), ctrl.tau_min), ctrl.tau_max))


def detect_quench(v, epsilon: float) -> str:
    """'left' if u_0 <= eps, 'right' if u_{N+1} >= 1 - eps, else 'none'."""
    if not 0.0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    u = v.u if isinstance(v, StateVector) else np.asarray(v)
    left = u[0] <= epsilon
    right = u[-1] >= 1.0 - epsilon
    if left and right:
        # both within threshold: the one further past it, relative to epsilon
        return LEFT if (epsilon - u[0]) >= (u[-1] - (1.0 - epsilon)) else RIGHT
    if left:
        return LEFT
    if right:
        return RIGHT
    return NONE


@dataclass
class RunRecord:
    """Retained trajectory samples of one run.

    Columns are parallel arrays, one entry per retained accepted step.
    ``d_left``/``d_right`` (wall time derivatives) and ``step_index`` are kept
    in memory but are not part of the CSV layout. Samples whose step index is
    a multiple of ``sample_stride`` form a uniform subsequence of the steps;
    the rest come from the dense terminal tail.
    """

    t: np.ndarray
    u_left: np.ndarray
    u_right: np.ndarray
    tau: np.ndarray
    mass: np.ndarray
    flux_balance: np.ndarray
    step_count: int
    termination: str
    h: float = math.nan
    step_index: np.ndarray | None = None
    d_left: np.ndarray | None = None
    d_right: np.ndarray | None = None
    mass0: float = math.nan
    sample_stride: int = 1
    final_state: StateVector | None = None
    diagnostics: dict = field(default_factory=dict)
    ic_report: ICValidationReport | None = None

    COLUMNS = ("t", "u_left", "u_right", "tau", "mass", "flux_balance")

    def __post_init__(self):
        if self.termination not in TERMINATIONS:
            raise ValueError(f"unknown termination {self.termination!r}")

    def __len__(self):
        return self.t.shape[0]

    def columns(self):
        return {name: getattr(self, name) for name in self.COLUMNS}


@dataclass(frozen=True)
class QuenchReport:
    side: str
    T_est: float
    epsilon: float
    wall_value_at_stop: float
    blowup_indicator: float

    def to_dict(self):
        return {
            "side": self.side,
            "T_est": _json_float(self.T_est),
            "epsilon": self.epsilon,
            "wall_value_at_stop": _json_float(self.wall_value_at_stop),
            "blowup_indicator": _json_float(self.blowup_indicator),
        }


def _json_float(x):
    return None if x is None or not math.isfinite(x) else float(x)


class _Collector:
    """Keeps every ``stride``-th step plus the last ``tail`` steps."""

    NAMES = ("t", "u_left", "u_right", "tau", "mass", "flux_balance", "d_left", "d_right")

    def __init__(self, stride, tail):
        self.stride = stride
        self.tail = tail
        self.strided = {name: [] for name in self.NAMES + ("step_index",)}
        self.tail_cols = {name: np.empty(0) for name in self.NAMES}
        self.tail_idx = np.empty(0, dtype=np.int64)

    def add(self, cols, first_index):
        n = cols["t"].shape[0]
        idx = np.arange(first_index, first_index + n, dtype=np.int64)
        keep = idx % self.stride == 0
        for name in self.NAMES:
            self.strided[name].append(cols[name][keep])
        self.strided["step_index"].append(idx[keep])
        if self.tail:
            for name in self.NAMES:
                self.tail_cols[name] = np.concatenate([self.tail_cols[name], cols[name]])[-self.tail:]
            self.tail_idx = np.concatenate([self.tail_idx, idx])[-self.tail:]
        else:
            # always keep the final step
            for name in self.NAMES:
                self.tail_cols[name] = cols[name][-1:].copy()
            self.tail_idx = idx[-1:].copy()

    def merged(self):
        idx = np.concatenate(self.strided["step_index"] + [self.tail_idx])
        order_idx, first = np.unique(idx, return_index=True)
        out = {}
        for name in self.NAMES:
            out[name] = np.concatenate(self.strided[name] + [self.tail_cols[name]])[first]
        out["step_index"] = order_idx
        return out


def run(cfg: ExperimentConfig):
    """March ``cfg`` from t = 0 until quench, max_time, max_steps or stall.

    A step that pushes a wall out of (0, 1) is retried with half the step,
    down to ``tau_min``. If the exit persists at ``tau_min`` the wall flux has
    outrun the smallest admissible step, and the run is reported as quenched
    at that wall at the current time. In fixed mode there is no retry.

    Returns:
        (RunRecord, QuenchReport)
    """
    spec = cfg.problem
    g = build_grid(spec.a, cfg.N)
    report = validate(cfg.ic, spec)
    if not report.hypotheses_ok:
        msg = f"initial condition fails the quenching hypotheses: {report.to_dict()}"
        logger.warning(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)

    u = np.array(cfg.ic(g.nodes), dtype=float)
    kind, m = phi_params(spec)
    n = u.shape[0]
    f0 = np.empty(n)
    _kernels.rhs(u, g.h, spec.p, spec.q, spec.r, kind, m, f0)
    d0 = np.zeros(n)
    d1 = np.zeros(n)
    d2 = f0 / g.h**2
    mass0 = float(_kernels.mass(u, g.h, kind, m))

    state = np.array([0.0, cfg.tau0, 0.0, 0.0])
    params = np.array([
        g.h, spec.p, spec.q, spec.r, float(kind), m,
        cfg.tau1, cfg.tau_min, cfg.tau_max,
        1.0 if cfg.mode == "adaptive" else 0.0,
        cfg.epsilon_quench, cfg.max_time,
    ])
    diag = np.zeros(4, dtype=np.int64)
    bufs = {name: np.empty(CHUNK) for name in _Collector.NAMES}
    collector = _Collector(cfg.sample_stride, cfg.tail_samples)

    status = _kernels.RUNNING
    done = 0
    while done < cfg.max_steps:
        n_max = min(CHUNK, cfg.max_steps - done)
        recorded, status = _kernels.advance(
            u, f0, d0, d1, d2, state, params, n_max,
            bufs["t"], bufs["u_left"], bufs["u_right"], bufs["tau"],
            bufs["mass"], bufs["flux_balance"], bufs["d_left"], bufs["d_right"], diag,
        )
        if recorded:
            collector.add({k: v[:recorded] for k, v in bufs.items()}, done + 1)
        done += recorded
        if status != _kernels.RUNNING:
            break

    termination, side = _classify(status, int(state[3]), u, cfg.epsilon_quench)
    if status == _kernels.RUNNING:
        termination = "max_steps"
    cols = collector.merged() if done else {k: np.empty(0) for k in _Collector.NAMES + ("step_index",)}
    diagnostics = {
        "non_monotone_steps": int(diag[0]),
        "interior_positive_steps": int(diag[1]),
        "interior_negative_steps": int(diag[2]),
        "interior_mixed_steps": int(diag[3]),
        "status_code": int(status),
    }
    record = RunRecord(
        t=cols["t"], u_left=cols["u_left"], u_right=cols["u_right"], tau=cols["tau"],
        mass=cols["mass"], flux_balance=cols["flux_balance"],
        step_count=done, termination=termination, h=g.h,
        step_index=cols["step_index"], d_left=cols["d_left"], d_right=cols["d_right"],
        mass0=mass0, sample_stride=cfg.sample_stride, final_state=StateVector(state[0], u),
        diagnostics=diagnostics, ic_report=report,
    )
    logger.info("run finished: %s after %d steps at t=%.6g (side %s)", termination, done, state[0], side)
    return record, _quench_report(record, side, cfg.epsilon_quench)


def _classify(status, exit_side, u, eps):
    if status == _kernels.QUENCH_THRESHOLD:
        return "quenched", detect_quench(u, eps)
    if status == _kernels.QUENCH_WALL_EXIT:
        return "quenched", LEFT if exit_side == _kernels.SIDE_LEFT else RIGHT
    if status == _kernels.MAX_TIME:
        return "max_time", NONE
    if status in (_kernels.STALL, _kernels.NONFINITE):
        return "step_floor_stall", NONE
    return "max_steps", NONE


def _quench_report(rec: RunRecord, side, eps):
    if side == NONE or len(rec) == 0:
        return QuenchReport(NONE, math.nan, eps, math.nan, math.nan)
    wall = rec.u_left if side == LEFT else rec.u_right
    d = rec.d_left if side == LEFT else rec.d_right
    blowup = float(np.max(np.abs(d[-BLOWUP_SAMPLES:])))
    return QuenchReport(side, float(rec.t[-1]), eps, float(wall[-1]), blowup)
