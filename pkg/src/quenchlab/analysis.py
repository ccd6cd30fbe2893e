"""Quenching rates, lower bounds on the quenching time, and order estimation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import ExperimentConfig, ProblemSpec
from .discretize import StateVector
from .ic import InitialCondition
from .integrate import LEFT, NONE, RIGHT, QuenchReport, RunRecord, run

__all__ = [
    "BoundsReport",
    "ConvergenceReport",
    "EnvelopeReport",
    "InsufficientPointsError",
    "QuenchedEarlyError",
    "RateFit",
    "check_envelopes",
    "convergence_study",
    "estimate_order",
    "fit_quench_rate",
    "fit_window",
    "lower_bound_T",
    "mass_audit",
    "theoretical_rate",
]

MIN_FIT_POINTS = 10
INDETERMINATE = 1e-13
ENVELOPE_RTOL = 1e-12


class InsufficientPointsError(ValueError):
    pass


class QuenchedEarlyError(RuntimeError):
    """A convergence run quenched before the comparison time."""


def _check_side(side):
    if side not in (LEFT, RIGHT):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def theoretical_rate(side: str, spec: ProblemSpec) -> float:
    """Asymptotic exponent: 1/(2(q+1)) at the right wall, 1/(2(p+1)) at the left."""
    _check_side(side)
    exponent = spec.q if side == RIGHT else spec.p
    return _rate(exponent)


def _rate(exponent):
    return 1.0 / (2.0 * (exponent + 1.0))


@dataclass(frozen=True)
class BoundsReport:
    side: str
    T_lower: float
    C_envelope: float
    rate_theory: float

    def to_dict(self):
        return asdict(self)


def lower_bound_T(side: str, spec: ProblemSpec, ic: InitialCondition) -> BoundsReport:
    """Lower bound on the quenching time and the one-sided envelope constant.

    Right wall: T_q = a (1 - u0(a))^(2q+2) / (2 (q a + 1)(q + 1)),
    C_2 = ((q a + 1)(2q + 2) / a)^(1/(2q+2)).
    Left wall: T_p = a u0(0)^(2p+2) / (2 (p a + 1)(p + 1)),
    C_4 = ((p a + 1)(2p + 2) / a)^(1/(2p+2)).
    """
    _check_side(side)
    a = spec.a
    if side == RIGHT:
        e, gap = spec.q, 1.0 - ic(a)
    else:
        e, gap = spec.p, ic(0.0)
    T_lower = a * gap ** (2 * e + 2) / (2.0 * (e * a + 1.0) * (e + 1.0))
    C = ((e * a + 1.0) * (2 * e + 2) / a) ** (1.0 / (2 * e + 2))
    return BoundsReport(side=side, T_lower=float(T_lower), C_envelope=float(C), rate_theory=_rate(e))


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    residual_rms: float
    window: tuple[float, float]
    n_points: int

    def to_dict(self):
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def _wall_distance(rec: RunRecord, side):
    return 1.0 - rec.u_right if side == RIGHT else rec.u_left


def fit_window(rec: RunRecord, T: float, window_decades: float = 2.0, floor: float | None = None):
    """Mask and (lo, hi) bounds, in T - t, of the terminal fit window.

    The final sample is always excluded. The window starts at the larger of
    the last remaining T - t and ``floor`` and spans ``window_decades``
    decades upward. ``floor`` defaults to h**2: below that distance from T
    the singular boundary layer, whose width scales like sqrt(T - t), is
    narrower than one grid cell.
    """
    if floor is None:
        floor = rec.h**2 if math.isfinite(rec.h) else 0.0
    s = T - rec.t
    usable = np.zeros(len(rec), dtype=bool)
    usable[:-1] = s[:-1] > 0.0
    if not usable.any():
        raise InsufficientPointsError("no samples before the quenching time")
    lo = max(float(s[usable].min()), floor)
    hi = lo * 10.0**window_decades
    mask = usable & (s >= lo) & (s <= hi)
    return mask, (lo, hi)


def _uniform(rec: RunRecord, mask):
    # drop the dense tail so every step carries the same weight
    if rec.step_index is None or rec.sample_stride <= 1:
        return mask
    thinned = mask & (rec.step_index % rec.sample_stride == 0)
    return thinned if thinned.sum() >= MIN_FIT_POINTS else mask


def fit_quench_rate(rec: RunRecord, rep: QuenchReport, window_decades: float = 2.0,
                    floor: float | None = None) -> RateFit:
    """Least-squares slope of ln(y) against ln(T - t) over the terminal window.

    y is 1 - u(a, t) for a right-wall quench and u(0, t) for the left wall;
    T is ``rep.T_est``. Only the strided samples enter the fit when the
    record has a dense tail, so that every step carries equal weight.
    """
    if rep.side == NONE:
        raise ValueError("no quench to fit")
    T = rep.T_est
    mask, window = fit_window(rec, T, window_decades, floor)
    mask = _uniform(rec, mask)
    n = int(mask.sum())
    if n < MIN_FIT_POINTS:
        raise InsufficientPointsError(f"{n} samples in the fit window, need {MIN_FIT_POINTS}")
    x = np.log(T - rec.t[mask])
    y = np.log(_wall_distance(rec, rep.side)[mask])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return RateFit(
        slope=float(slope),
        intercept=float(intercept),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        window=window,
        n_points=n,
    )


@dataclass(frozen=True)
class EnvelopeReport:
    side: str
    fraction_satisfied: float
    n_points: int
    companion_slope_positive: bool

    def to_dict(self):
        return asdict(self)


def check_envelopes(rec: RunRecord, rep: QuenchReport, bounds: BoundsReport,
                    window_decades: float = 2.0, floor: float | None = None) -> EnvelopeReport:
    """Share of window samples obeying y <= C (T - t)^rate.

    The companion bound y >= C' (T - t)^rate has an unknown constant, so for
    it only the sign of the trend is checked: y must shrink as t -> T.
    """
    if rep.side == NONE:
        raise ValueError("no quench to check")
    T = rep.T_est
    mask, _ = fit_window(rec, T, window_decades, floor)
    s = T - rec.t[mask]
    y = _wall_distance(rec, rep.side)[mask]
    n = int(mask.sum())
    if n == 0:
        return EnvelopeReport(rep.side, math.nan, 0, False)
    # equality counts; allow for the roundoff of forming 1 - u
    ok = y <= bounds.C_envelope * s**bounds.rate_theory * (1.0 + ENVELOPE_RTOL)
    slope = np.polyfit(np.log(s), np.log(y), 1)[0] if n >= 2 else math.nan
    return EnvelopeReport(rep.side, float(ok.mean()), n, bool(slope > 0.0))


@dataclass(frozen=True)
class ConvergenceReport:
    per_node_order: np.ndarray
    median_order: float
    nodes_used: np.ndarray

    def to_dict(self):
        return {
            "per_node_order": [float(v) for v in self.per_node_order],
            "median_order": float(self.median_order),
            "nodes_used": [int(i) for i in self.nodes_used],
        }


def _as_vector(v):
    if isinstance(v, RunRecord):
        v = v.final_state
    if isinstance(v, StateVector):
        return v.u
    return np.asarray(v, dtype=float)


def estimate_order(run_tau, run_tau_half, run_ref) -> ConvergenceReport:
    """Per-node observed order p_i = log2(|v_tau - v_ref|_i / |v_tau/2 - v_ref|_i).

    Nodes whose denominator falls below 1e-13, or whose ratio is not a
    positive finite number, are left out.
    """
    v1, v2, vr = (_as_vector(v) for v in (run_tau, run_tau_half, run_ref))
    if not (v1.shape == v2.shape == vr.shape):
        raise ValueError("solutions live on different grids")
    e1 = np.abs(v1 - vr)
    e2 = np.abs(v2 - vr)
    ok = (e2 >= INDETERMINATE) & (e1 > 0.0)
    nodes = np.flatnonzero(ok)
    if nodes.size == 0:
        raise ValueError("every node has an indeterminate error ratio")
    orders = np.log(e1[nodes] / e2[nodes]) / math.log(2.0)
    return ConvergenceReport(orders, float(np.median(orders)), nodes)


def convergence_study(spec: ProblemSpec, ic: InitialCondition, N: int, tau: float,
                      t_compare: float, divisor: int = 16):
    """Fixed-step runs with tau, tau/2 and tau/divisor to ``t_compare``.

    Returns the ConvergenceReport and the three final states.

    Raises:
        QuenchedEarlyError: if any run quenches first.
    """
    if divisor < 4:
        raise ValueError("reference divisor must be at least 4")
    states = []
    for step in (tau, tau / 2.0, tau / divisor):
        n_steps = int(round(t_compare / step))
        if n_steps < 1:
            raise ValueError("t_compare is shorter than one step")
        cfg = ExperimentConfig(
            problem=spec, ic=ic, N=N, tau0=step, tau1=step, tau_min=step, tau_max=step,
            mode="fixed", max_steps=n_steps, sample_stride=max(n_steps, 1), tail_samples=0,
        )
        rec, rep = run(cfg)
        if rec.termination != "max_steps":
            raise QuenchedEarlyError(
                f"run with tau={step:g} ended with {rec.termination!r} at t={rec.final_state.t:g}"
            )
        states.append(rec.final_state)
    return estimate_order(*states), states


def mass_audit(spec: ProblemSpec, ic: InitialCondition, N: int, tau: float, t_end: float) -> float:
    """Largest |(mass(after) - mass(before))/tau - flux_balance(midpoint)| over fixed steps to ``t_end``.

    The midpoint state is the average of the states before and after a step.
    """
    from .discretize import build_grid, flux_balance, mass
    from .integrate import step

    g = build_grid(spec.a, N)
    v = StateVector.from_ic(ic, g)
    m0 = mass(v, spec, g)
    worst = 0.0
    for _ in range(int(round(t_end / tau))):
        w = step(v, tau, spec, g)
        m1 = mass(w, spec, g)
        defect = abs((m1 - m0) / tau - flux_balance(0.5 * (v.u + w.u), spec))
        worst = max(worst, defect)
        v, m0 = w, m1
    return worst
