"""Problem parameterization and the phi nonlinearity registry.

The model is

    (phi(u))_t = (|u_x|^(r-2) u_x)_x,      0 < x < a,
    u_x(0, t) = u(0, t)^(-p),  u_x(a, t) = (1 - u(a, t))^(-q),

with phi one of two closed forms: the identity, or phi(s) = s^(1/m), 0 < m < 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .ic import InitialCondition

__all__ = [
    "PHI_KINDS",
    "DomainError",
    "ExperimentConfig",
    "PhiSpec",
    "ProblemSpec",
    "SingularityError",
    "phi_derivative",
    "phi_eval",
]

PHI_KINDS = ("identity", "power")

_DOMAIN_SLACK = 1e-12


class DomainError(ValueError):
    """Argument outside [0, 1]."""


class SingularityError(ValueError):
    """Evaluation at a point where the quantity is singular."""


def _check_unit_interval(s):
    arr = np.asarray(s, dtype=float)
    if np.any(arr < -_DOMAIN_SLACK) or np.any(arr > 1.0 + _DOMAIN_SLACK):
        raise DomainError(f"phi argument outside [0, 1]: {s!r}")
    return np.clip(arr, 0.0, 1.0)


@dataclass(frozen=True)
class PhiSpec:
    """Strictly increasing phi with phi(0) = 0 and phi(1) = 1.

    ``kind="power"`` means phi(s) = s**(1/m) with 0 < m < 1 (so 1/m > 1).
    """

    kind: str = "identity"
    m: float | None = None

    def __post_init__(self):
        if self.kind not in PHI_KINDS:
            raise ValueError(f"unknown phi kind {self.kind!r}; expected one of {PHI_KINDS}")
        if self.kind == "identity":
            if self.m is not None:
                raise ValueError("identity phi takes no exponent m")
        else:
            if self.m is None or not (0.0 < self.m < 1.0):
                raise ValueError(f"power phi needs 0 < m < 1, got m={self.m!r}")
            object.__setattr__(self, "m", float(self.m))
        self._check_shape()

    def _check_shape(self):
        if abs(phi_eval(self, 0.0)) > 1e-12 or abs(phi_eval(self, 1.0) - 1.0) > 1e-12:
            raise ValueError("phi must satisfy phi(0) = 0 and phi(1) = 1")
        s = np.linspace(0.0, 1.0, 2001)[1:]
        if np.any(phi_derivative(self, s) <= 0.0):
            raise ValueError("phi must be strictly increasing on (0, 1]")

    @property
    def exponent(self):
        """1/m for the power kind, 1 for the identity."""
        return 1.0 if self.kind == "identity" else 1.0 / self.m

    def B(self, s):
        """Reciprocal derivative 1/phi'(s)."""
        return 1.0 / phi_derivative(self, s)


def phi_eval(phi: PhiSpec, s):
    """Evaluate phi(s) for scalar or array s in [0, 1]."""
    s = _check_unit_interval(s)
    if phi.kind == "identity":
        out = s.copy() if s.ndim else s
    else:
        out = s ** (1.0 / phi.m)
    return float(out) if np.ndim(out) == 0 else out


def phi_derivative(phi: PhiSpec, s):
    """phi'(s) for s in (0, 1].

    Raises:
        SingularityError: at s = 0 for the power kind; the caller has to
            treat that limit explicitly.
    """
    s = _check_unit_interval(s)
    if phi.kind == "identity":
        out = np.ones_like(s)
    else:
        if np.any(s <= 0.0):
            raise SingularityError("phi' for the power kind is not evaluated at s = 0")
        k = 1.0 / phi.m
        out = k * s ** (k - 1.0)
    return float(out) if np.ndim(out) == 0 else out



@dataclass(frozen=True)
class ProblemSpec:
    """Domain length, flux exponents and nonlinearity of the model.

    Attributes:
        a: domain length.
        p: left-wall flux exponent, u_x(0) = u(0)^-p.
        q: right-wall flux exponent, u_x(a) = (1 - u(a))^-q.
        r: diffusion exponent, r >= 2.
        phi: the phi nonlinearity.
    """

    a: float
    p: float
    q: float
    r: float = 2.0
    phi: PhiSpec = field(default_factory=PhiSpec)

    def __post_init__(self):
        for name in ("a", "p", "q", "r"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.a <= 0.0:
            raise ValueError(f"domain length a must be positive, got {self.a}")
        if self.p <= 0.0:
            raise ValueError(f"left exponent p must be positive, got {self.p}")
        if self.q <= 0.0:
            raise ValueError(f"right exponent q must be positive, got {self.q}")
        if self.r < 2.0:
            raise ValueError(f"diffusion exponent r must be >= 2, got {self.r}")
        if not isinstance(self.phi, PhiSpec):
            raise TypeError("phi must be a PhiSpec")

    @property
    def is_heat(self):
        """True when the model reduces to the heat equation (r = 2, phi = identity)."""
        return self.r == 2.0 and self.phi.kind == "identity"


STEP_MODES = ("adaptive", "fixed")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one simulation.

    Step sizes are in time units. ``sample_stride`` decimates the stored
    trajectory; the last ``tail_samples`` accepted steps are always kept in
    full so the terminal approach to quenching is resolved.
    """

    problem: ProblemSpec
    ic: InitialCondition
    N: int
    tau0: float = 1e-6
    tau1: float = 1e-6
    tau_min: float = 1e-9
    tau_max: float | None = None
    epsilon_quench: float = 1e-4
    sample_stride: int = 100
    output_dir: Path | None = None
    mode: str = "adaptive"
    max_time: float = math.inf
    max_steps: int = 50_000_000
    tail_samples: int = 10_000
    window_decades: float = 2.0
    fit_floor: float | None = None

    def __post_init__(self):
        if self.tau_max is None:
            object.__setattr__(self, "tau_max", 10.0 * self.tau0)
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if not (0.0 < self.tau_min <= min(self.tau0, self.tau1)):
            raise ValueError("need 0 < tau_min <= tau0, tau1")
        if not (max(self.tau0, self.tau1) <= self.tau_max):
            raise ValueError("need tau0, tau1 <= tau_max")
        if not (0.0 < self.epsilon_quench < 0.5):
            raise ValueError("epsilon_quench must lie in (0, 1/2)")
        if self.mode not in STEP_MODES:
            raise ValueError(f"mode must be one of {STEP_MODES}, got {self.mode!r}")
        if self.sample_stride < 1 or self.tail_samples < 0:
            raise ValueError("sample_stride must be >= 1 and tail_samples >= 0")
        if self.max_steps < 1 or not self.max_time > 0.0:
            raise ValueError("max_steps and max_time must be positive")
        if self.window_decades <= 0.0:
            raise ValueError("window_decades must be positive")
        if self.fit_floor is not None and self.fit_floor < 0.0:
            raise ValueError("fit_floor must be non-negative")
        if self.output_dir is not None:
            object.__setattr__(self, "output_dir", Path(self.output_dir))

    @property
    def h(self):
        return self.problem.a / (self.N + 1)
