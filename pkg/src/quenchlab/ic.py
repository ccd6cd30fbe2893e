"""Quadratic initial conditions and the hypothesis checks placed on them."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import PhiSpec, ProblemSpec

__all__ = [
    "BUILTIN_ICS",
    "ICValidationReport",
    "InitialCondition",
    "example_A",
    "example_B",
    "validate",
]

CONCAVE_UP = "concave_up"
CONCAVE_DOWN = "concave_down"
MIXED = "mixed"

SIDE_LEFT = "left"
SIDE_RIGHT = "right"
UNDETERMINED = "undetermined"

DEFAULT_TOL = 1e-10
VALIDATION_POINTS = 1001


@dataclass(frozen=True)
class InitialCondition:
    """u0(x) = c0 + c1 x + c2 x**2 on [0, domain_length].

    Construction enforces 0 < u0 < 1 on the closed interval. For a quadratic
    the extremes sit at the endpoints or the vertex, so the check is exact.
    """

    coeffs: tuple[float, float, float]
    domain_length: float

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        if len(c) != 3 or not all(math.isfinite(v) for v in c):
            raise ValueError(f"expected three finite coefficients, got {self.coeffs!r}")
        object.__setattr__(self, "coeffs", c)
        a = float(self.domain_length)
        if not a > 0.0:
            raise ValueError(f"domain_length must be positive, got {a}")
        object.__setattr__(self, "domain_length", a)
        candidates = [0.0, a]
        c0, c1, c2 = c
        if c2 != 0.0:
            vertex = -c1 / (2.0 * c2)
            if 0.0 < vertex < a:
                candidates.append(vertex)
        values = self(np.array(candidates))
        if values.min() <= 0.0 or values.max() >= 1.0:
            raise ValueError(
                f"initial condition leaves (0, 1) on [0, {a}]: range "
                f"[{values.min():.6g}, {values.max():.6g}]"
            )

    def __call__(self, x):
        c0, c1, c2 = self.coeffs
        return c0 + x * (c1 + c2 * x)

    def derivative(self, x):
        _, c1, c2 = self.coeffs
        return c1 + 2.0 * c2 * x

    def second_derivative(self, x):
        return 2.0 * self.coeffs[2] + 0.0 * np.asarray(x, dtype=float)


@dataclass(frozen=True)
class ICValidationReport:
    compat_left_residual: float
    compat_right_residual: float
    concavity_class: str
    monotone_ok: bool
    slope_cond_right_ok: bool
    slope_cond_left_ok: bool
    predicted_quench_side: str
    tol: float = DEFAULT_TOL

    @property
    def compatible(self):
        return self.compat_left_residual <= self.tol and self.compat_right_residual <= self.tol

    @property
    def hypotheses_ok(self):
        """Compatibility, monotonicity, definite concavity and its paired slope condition."""
        if not (self.compatible and self.monotone_ok):
            return False
        if self.concavity_class == CONCAVE_UP:
            return self.slope_cond_right_ok
        if self.concavity_class == CONCAVE_DOWN:
            return self.slope_cond_left_ok
        return False

    def to_dict(self):
        d = asdict(self)
        d.pop("tol")
        return d


def example_A():
    """Concave-up data that quenches at the right wall."""
    a = 1.0 / 8.0
    q = math.log(5.0) / math.log(16.0 / 3.0)
    spec = ProblemSpec(a=a, p=1.0, q=q, r=2.0, phi=PhiSpec("identity"))
    return spec, InitialCondition((0.25, 4.0, 4.0), a)


def example_B():
    """Concave-down data that quenches at the left wall."""
    a = 1.0 / 8.0
    q = math.log(3.5) / math.log(32.0 / 9.0)
    spec = ProblemSpec(a=a, p=1.0, q=q, r=2.0, phi=PhiSpec("identity"))
    return spec, InitialCondition((0.25, 4.0, -2.0), a)


BUILTIN_ICS = {"example_A": example_A, "example_B": example_B}


def _concavity(c2):
    if c2 > 0.0:
        return CONCAVE_UP
    if c2 < 0.0:
        return CONCAVE_DOWN
    # linear data satisfies both conditions, so neither wall is singled out
    return MIXED


def validate(ic: InitialCondition, spec: ProblemSpec, tol: float = DEFAULT_TOL) -> ICValidationReport:
    """Check u0 against compatibility, concavity, monotonicity and slope conditions.

    Never raises on a failed hypothesis; the report carries the outcome.
    """
    a = spec.a
    u0_left = ic(0.0)
    u0_right = ic(a)
    left = abs(ic.derivative(0.0) - u0_left ** (-spec.p))
    right = abs(ic.derivative(a) - (1.0 - u0_right) ** (-spec.q))

    concavity = _concavity(ic.coeffs[2])
    # u0' is affine, so its minimum over [0, a] sits at an endpoint
    monotone = min(ic.derivative(0.0), ic.derivative(a)) >= 0.0

    x = np.linspace(0.0, a, VALIDATION_POINTS)[1:-1]
    u = ic(x)
    du = ic.derivative(x)
    right_slope = bool(np.all(du - (x / a) * (1.0 - u) ** (-spec.q) >= 0.0))
    left_slope = bool(np.all(du - ((a - x) / a) * u ** (-spec.p) >= 0.0))

    side = UNDETERMINED
    if monotone and concavity == CONCAVE_UP:
        side = SIDE_RIGHT
    elif monotone and concavity == CONCAVE_DOWN:
        side = SIDE_LEFT

    return ICValidationReport(
        compat_left_residual=float(left),
        compat_right_residual=float(right),
        concavity_class=concavity,
        monotone_ok=bool(monotone),
        slope_cond_right_ok=right_slope,
        slope_cond_left_ok=left_slope,
        predicted_quench_side=side,
        tol=tol,
    )
