"""Uniform grid, semidiscrete right-hand sides and integral functionals.

The right-hand sides return F with ``h**2 * du/dt = F``. Wall rows come from
eliminating a ghost node with the prescribed wall gradient, i.e. a half-cell
flux balance at each wall.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import ProblemSpec

__all__ = [
    "Grid",
    "SingularFluxError",
    "StateVector",
    "build_grid",
    "flux_balance",
    "mass",
    "phi_params",
    "rhs",
    "rhs_general",
    "rhs_heat",
]


class SingularFluxError(ValueError):
    """A wall value sits at or beyond the singular level of its flux term."""


@dataclass(frozen=True)
class Grid:
    N: int
    h: float
    nodes: np.ndarray

    @property
    def a(self):
        return float(self.nodes[-1])

    def __len__(self):
        return self.nodes.shape[0]


def build_grid(a: float, N: int) -> Grid:
    """Nodes x_j = j*h, j = 0..N+1, with h = a/(N+1) and x_{N+1} = a exactly."""
    if not a > 0.0:
        raise ValueError(f"domain length must be positive, got {a}")
    if isinstance(N, bool) or int(N) != N or N < 2:
        raise ValueError(f"N must be an integer >= 2, got {N!r}")
    N = int(N)
    h = a / (N + 1)
    nodes = np.arange(N + 2, dtype=float) * h
    nodes[-1] = a
    nodes.flags.writeable = False
    return Grid(N=N, h=h, nodes=nodes)


@dataclass(frozen=True)
class StateVector:
    t: float
    u: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if u.ndim != 1 or u.shape[0] < 4:
            raise ValueError("state must be a 1-D vector with at least 4 nodes")
        if not np.all(np.isfinite(u)):
            raise ValueError("state contains non-finite values")
        u.flags.writeable = False
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def from_ic(cls, ic, grid: Grid, t: float = 0.0):
        return cls(t, ic(grid.nodes))


def _values(u):
    return u.u if isinstance(u, StateVector) else np.asarray(u, dtype=float)


def _check_grid(u, g: Grid):
    if u.shape[0] != len(g):
        raise ValueError(f"state has {u.shape[0]} nodes, grid has {len(g)}")


def _check_walls(u_left, u_right):
    if not u_left > 0.0:
        raise SingularFluxError(f"left wall value {u_left!r} is not positive")
    if not u_right < 1.0:
        raise SingularFluxError(f"right wall value {u_right!r} is not below 1")


def phi_params(spec: ProblemSpec):
    """(kind code, m) as understood by the compiled kernels."""
    if spec.phi.kind == "identity":
        return _kernels.PHI_IDENTITY, 1.0
    return _kernels.PHI_POWER, spec.phi.m


def rhs_heat(u, spec: ProblemSpec, g: Grid) -> np.ndarray:
    """F for r = 2, phi = identity.

    F_0 = 2(u_1 - u_0) - 2h u_0^-p, F_k = u_{k-1} - 2u_k + u_{k+1},
    F_{N+1} = 2(u_N - u_{N+1}) + 2h (1 - u_{N+1})^-q.
    """
    if not spec.is_heat:
        raise ValueError("rhs_heat needs r = 2 and phi = identity; use rhs_general")
    v = _values(u)
    _check_grid(v, g)
    _check_walls(v[0], v[-1])
    out = np.empty_like(v)
    _kernels.rhs_heat(v, g.h, spec.p, spec.q, out)
    return out


def rhs_general(u, spec: ProblemSpec, g: Grid) -> np.ndarray:
    """F for arbitrary r >= 2 and phi, in flux form.

    Interior rows are B(u_k) h (Phi_{k+1/2} - Phi_{k-1/2}) with the half-point
    flux Phi = |d|^(r-2) d, d the forward difference quotient. Wall rows use
    the prescribed wall flux in place of the missing half-point flux, with
    the factor 2 of the half cell.
    """
    v = _values(u)
    _check_grid(v, g)
    _check_walls(v[0], v[-1])
    kind, m = phi_params(spec)
    out = np.empty_like(v)
    _kernels.rhs_general(v, g.h, spec.p, spec.q, spec.r, kind, m, out)
    if not np.all(np.isfinite(out)):
        raise SingularFluxError("non-finite flux in rhs_general")
    return out


def rhs(u, spec: ProblemSpec, g: Grid) -> np.ndarray:
    return rhs_heat(u, spec, g) if spec.is_heat else rhs_general(u, spec, g)


def mass(u, spec: ProblemSpec, g: Grid) -> float:
    """Trapezoidal approximation of the integral of phi(u) over [0, a]."""
    v = _values(u)
    _check_grid(v, g)
    kind, m = phi_params(spec)
    return float(_kernels.mass(v, g.h, kind, m))


def flux_balance(u, spec: ProblemSpec) -> float:
    """Right wall flux minus left wall flux, the rate of change of the mass."""
    v = _values(u)
    _check_walls(v[0], v[-1])
    return float(_kernels.flux_balance(v[0], v[-1], spec.p, spec.q, spec.r))
