"""Action-angle blocks on toric Kähler cones and mapping-torus invariants."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DomainError, PreconditionError, UsageError
from .forms import TWO_PI
from .lcs import ResidualReport

HOMOGENEITY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ActionAngleModel:
    """Symplectic potential ``s`` on an open cone of action coordinates ``x``."""

    rank: int
    potential: Callable[[np.ndarray], float]
    interior: Callable[[np.ndarray], bool]
    hessian_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    def hessian(self, x) -> np.ndarray:
        x = self._checked(x)
        if self.hessian_fn is not None:
            return np.asarray(self.hessian_fn(x), dtype=float)
        return fd_hessian(self.potential, x)

    def _checked(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.rank:
            raise UsageError(f"expected {self.rank} action coordinates, got {x.shape[0]}")
        if not self.interior(x):
            raise DomainError(f"x = {x.tolist()} is outside the cone interior")
        return x


def fd_hessian(fn: Callable[[np.ndarray], float], x: np.ndarray) -> np.ndarray:
    """Central second differences, symmetrised."""
    n = x.shape[0]
    h = 1e-4 * np.maximum(1.0, np.abs(x))
    H = np.zeros((n, n))
    f0 = fn(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        H[i, i] = (fn(x + ei) - 2 * f0 + fn(x - ei)) / h[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (fn(x + ei + ej) - fn(x + ei - ej) - fn(x - ei + ej)
                                 + fn(x - ei - ej)) / (4 * h[i] * h[j])
    return 0.5 * (H + H.T)


def _positive(x) -> bool:
    return bool(np.all(np.asarray(x) > 0))


def flat_cone(rank: int = 2) -> ActionAngleModel:
    """Potential ``s = 1/2 sum x_j log x_j`` with Hessian ``diag(1 / 2 x_j)``."""
    return ActionAngleModel(
        rank, lambda x: 0.5 * float(np.sum(x * np.log(x))), _positive,
        lambda x: np.diag(0.5 / x), "flat",
    )


def from_potential(fn: Callable[[np.ndarray], float], rank: int, name: str = "custom"
                   ) -> ActionAngleModel:
    """Potential on the positive orthant with a finite-difference Hessian."""
    return ActionAngleModel(rank, fn, _positive, None, name)


def user_grid(axes: Sequence[np.ndarray], values: np.ndarray) -> ActionAngleModel:
    """Tabulated potential on a rectangular lattice (cubic interpolation)."""
    axes = [np.asarray(a, dtype=float) for a in axes]
    values = np.asarray(values, dtype=float)
    if values.shape != tuple(a.size for a in axes):
        raise UsageError("grid values do not match the axes")
    if any(a.size < 4 for a in axes):
        raise UsageError("cubic interpolation needs at least 4 nodes per axis")
    interp = RegularGridInterpolator(axes, values, method="cubic")
    lo = np.array([a[0] for a in axes])
    hi = np.array([a[-1] for a in axes])
    margin = 1e-3 * (hi - lo)

    def inside(x):
        return bool(np.all(x > 0) and np.all(x >= lo + margin) and np.all(x <= hi - margin))

    return ActionAngleModel(len(axes), lambda x: float(interp(x[None])[0]), inside, None,
                            "user-grid")


def load_user_grid(path) -> ActionAngleModel:
    """Read a CSV with columns ``x_0, ..., x_{n-1}, s`` listing a full lattice."""
    with open(path, encoding="utf-8") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
    data = np.array(rows[1:], dtype=float)
    pts, s = data[:, :-1], data[:, -1]
    axes = [np.unique(pts[:, i]) for i in range(pts.shape[1])]
    idx = tuple(np.searchsorted(axes[i], pts[:, i]) for i in range(pts.shape[1]))
    grid = np.full(tuple(a.size for a in axes), np.nan)
    grid[idx] = s
    if np.isnan(grid).any():
        raise UsageError(f"{path}: lattice is incomplete")
    return user_grid(axes, grid)


def omega_matrix(rank: int) -> np.ndarray:
    I = np.eye(rank)
    Z = np.zeros((rank, rank))
    return np.block([[Z, -I], [I, Z]])


def omega_J_blocks(m: ActionAngleModel, x) -> tuple:
    """``omega = [[0, -I], [I, 0]]`` and ``J = [[0, -S^-1], [S, 0]]`` at ``x``."""
    S = m.hessian(x)
    Z = np.zeros_like(S)
    J = np.block([[Z, -np.linalg.inv(S)], [S, Z]])
    return omega_matrix(m.rank), J


def hessian_homogeneity(m: ActionAngleModel, x, t_values: Sequence[float]) -> ResidualReport:
    """Residual of ``S(e^{2t} x) - e^{-2t} S(x)`` over ``t_values``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    S0 = m.hessian(x)
    res = [float(np.max(np.abs(m.hessian(np.exp(2 * t) * x) - np.exp(-2 * t) * S0)))
           for t in t_values]
    if not res:
        raise UsageError("no t values")
    res = np.array(res)
    return ResidualReport(float(res.max()), float(res.mean()), int(res.size), None)


def holomorphy_residual(m: ActionAngleModel, alpha: float, y0, A, x_grid,
                        t_check: Sequence[float] = (-0.5, 0.5)) -> float:
    """Max of ``|df J(x) - J(f(x)) df|`` for ``f(x, y) = (e^{-2 alpha} x, y + y0 + A x)``.

    The torus offset ``y0`` does not enter ``df``; it is accepted for
    completeness of the map.
    """
    X = np.atleast_2d(np.asarray(x_grid, dtype=float))
    n = m.rank
    A = np.asarray(A, dtype=float).reshape(n, n)
    del y0
    for x in X:
        t = list(t_check) + [-alpha]
        if hessian_homogeneity(m, x, t).max_residual > HOMOGENEITY_TOL:
            raise PreconditionError("the potential is not homogeneous on the grid")
    c = np.exp(-2 * alpha)
    df = np.block([[c * np.eye(n), np.zeros((n, n))], [A, np.eye(n)]])
    worst = 0.0
    for x in X:
        _, J = omega_J_blocks(m, x)
        _, Jf = omega_J_blocks(m, c * x)
        worst = max(worst, float(np.max(np.abs(df @ J - Jf @ df))))
    return worst


class Rescaling(NamedTuple):
    factor: float
    residual: float


def omega_rescaling(alpha: float, A=None, rank: int = 2) -> Rescaling:
    """Best factor ``c`` with ``df^T omega df = c omega`` and the fit residual."""
    n = rank
    A = np.zeros((n, n)) if A is None else np.asarray(A, dtype=float).reshape(n, n)
    df = np.block([[np.exp(-2 * alpha) * np.eye(n), np.zeros((n, n))], [A, np.eye(n)]])
    W = omega_matrix(n)
    P = df.T @ W @ df
    c = float(np.sum(P * W) / np.sum(W * W))
    return Rescaling(c, float(np.max(np.abs(P - c * W))))


# --------------------------------------------------------------------------
# mapping tori


@dataclass(frozen=True)
class MappingTorusData:
    """Mapping torus of a Sasakian manifold by ``(t, p) ~ (t + alpha, g p)``."""

    sasaki_id: str
    alpha: float
    g: tuple

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise UsageError(f"alpha must be positive, got {self.alpha}")
        g = np.mod(np.asarray(self.g, dtype=float).reshape(-1), TWO_PI)
        g = np.where(g >= TWO_PI, 0.0, g)
        object.__setattr__(self, "g", tuple(float(v) for v in g))


class Comparison(NamedTuple):
    isomorphic: bool
    reason: str


def mapping_torus_compare(d1: MappingTorusData, d2: MappingTorusData,
                          tol: float = 1e-12) -> Comparison:
    """Invariant comparison: same Sasakian id, same ``alpha`` and same ``g`` in T."""
    if d1.sasaki_id != d2.sasaki_id:
        return Comparison(False, "sasakian manifolds differ")
    if abs(d1.alpha - d2.alpha) > tol:
        return Comparison(False, "alpha differs")
    g1, g2 = np.array(d1.g), np.array(d2.g)
    if g1.shape != g2.shape:
        return Comparison(False, "torus ranks differ")
    d = np.mod(g1 - g2, TWO_PI)
    if np.any(np.minimum(d, TWO_PI - d) > tol):
        return Comparison(False, "g differs")
    return Comparison(True, "all invariants agree")
