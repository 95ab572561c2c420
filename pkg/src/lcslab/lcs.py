"""Structural checks for lcs data and the Aff+(R) monodromy algebra."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from . import forms
from .errors import PreconditionError, StructuralError, UsageError
from .forms import Chart, KForm, Point, ScalarField, VectorField

DET_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LcsStructure:
    """A nondegenerate 2-form ``omega`` with Lee form ``theta`` on a chart."""

    dim: int
    chart: Chart
    omega: KForm
    theta: KForm
    metric_matrix: Optional[Callable] = None

    def __post_init__(self):
        if self.dim < 2 or self.dim % 2:
            raise UsageError(f"lcs dimension must be even, got {self.dim}")
        if self.omega.degree != 2 or self.theta.degree != 1:
            raise UsageError("omega must be a 2-form and theta a 1-form")
        if self.chart.dim != self.dim:
            raise UsageError("chart dimension does not match the structure")

    def frames(self, x) -> np.ndarray:
        return self.chart.tangent_basis(x)

    def omega_matrix(self, x, frame=None) -> np.ndarray:
        """Matrix ``W[a, b] = omega(e_a, e_b)`` in an orthonormal tangent frame."""
        x = np.atleast_2d(x)
        frame = self.frames(x) if frame is None else frame
        return forms.restrict(self.omega.tensor(x), 2, frame)

    def theta_vector(self, x, frame=None) -> np.ndarray:
        x = np.atleast_2d(x)
        frame = self.frames(x) if frame is None else frame
        return forms.restrict(self.theta.tensor(x), 1, frame)


@dataclass(frozen=True)
class ResidualReport:
    max_residual: float
    mean_residual: float
    n_points: int
    witness_point: Optional[Point]

    @classmethod
    def from_values(cls, chart: Chart, x: np.ndarray, values: np.ndarray) -> "ResidualReport":
        values = np.abs(np.asarray(values, dtype=float).reshape(-1))
        if values.size == 0:
            raise UsageError("no points supplied")
        i = int(np.argmax(values))
        wit = Point(chart, chart.retract(x[i])) if x is not None else None
        return cls(float(values[i]), float(values.mean()), int(values.size), wit)

    @property
    def residual(self) -> float:
        return self.max_residual

    def passed(self, tol: float) -> bool:
        return self.max_residual <= tol

    def to_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "n_points": self.n_points,
            "witness_point": None if self.witness_point is None else self.witness_point.to_dict(),
        }


def _coords(pts) -> np.ndarray:
    x = forms.as_coords(pts)
    if x.shape[0] == 0:
        raise UsageError("no points supplied")
    return x


def _ensure_nondegenerate(S: LcsStructure, x: np.ndarray, W: np.ndarray):
    det = np.linalg.det(W)
    bad = np.flatnonzero(np.abs(det) < DET_TOL)
    if bad.size:
        p = Point(S.chart, S.chart.retract(x[bad[0]]))
        raise StructuralError(f"omega is degenerate at {p} (|det| = {abs(det[bad[0]]):.3g})", p)


def restricted_max(form: KForm, chart: Chart, x: np.ndarray) -> np.ndarray:
    return forms.tangent_norms(form, chart, x)


def check_lcs(S: LcsStructure, pts) -> ResidualReport:
    """Residual of ``d omega - theta ^ omega`` (max tangent-frame component)."""
    x = _coords(pts)
    frame = S.frames(x)
    _ensure_nondegenerate(S, x, S.omega_matrix(x, frame))
    dw = forms.exterior_d(S.omega).tensor(x)
    tw = forms.wedge(S.theta, S.omega).tensor(x)
    r = forms.restrict(dw - tw, 3, frame)
    return ResidualReport.from_values(S.chart, x, np.max(np.abs(r.reshape(len(x), -1)), axis=1))


def closedness_residual(S: LcsStructure, pts) -> ResidualReport:
    """Residual of ``d theta``."""
    x = _coords(pts)
    return ResidualReport.from_values(S.chart, x,
                                      restricted_max(forms.exterior_d(S.theta), S.chart, x))


def solve_dual(S: LcsStructure, x: np.ndarray, covectors: np.ndarray, frame=None) -> np.ndarray:
    """Ambient vectors ``X`` with ``omega(X, .) = a`` for tangent covectors ``a``.

    ``covectors`` holds frame components, shape ``(N, dim)``.
    """
    frame = S.frames(x) if frame is None else frame
    W = S.omega_matrix(x, frame)
    _ensure_nondegenerate(S, x, W)
    c = np.linalg.solve(np.swapaxes(W, 1, 2), covectors[..., None])[..., 0]
    return np.einsum("nia,na->ni", frame, c)


def s_lee_field(S: LcsStructure, p) -> np.ndarray:
    """The s-Lee field ``V`` with ``omega(V, .) = -theta``.

    Returns one ambient vector for a single Point, else an ``(N, m)`` array.
    """
    x = _coords(p)
    frame = S.frames(x)
    v = solve_dual(S, x, -S.theta_vector(x, frame), frame)
    return v[0] if isinstance(p, Point) else v


def s_lee_vector_field(S: LcsStructure) -> VectorField:
    return VectorField(S.chart.ambient, lambda x: solve_dual(S, x, -S.theta_vector(x)), "V")


class SpecialResult(NamedTuple):
    report: ResidualReport
    homothety_estimate: float
    homothety_variance: float


def special_residual(X: VectorField, S: LcsStructure, pts) -> SpecialResult:
    """Residual of ``L_X omega - theta(X) omega`` and the sample mean of ``theta(X)``."""
    x = _coords(pts)
    frame = S.frames(x)
    lie = forms.lie_derivative(X, S.omega).tensor(x)
    tx = S.theta(x, X(x))
    defect = lie - tx[:, None, None] * S.omega.tensor(x)
    r = forms.restrict(defect, 2, frame)
    rep = ResidualReport.from_values(S.chart, x, np.max(np.abs(r.reshape(len(x), -1)), axis=1))
    return SpecialResult(rep, float(np.mean(tx)), float(np.var(tx)))


def theta_of(X: VectorField, S: LcsStructure, pts) -> ResidualReport:
    """Report on ``|theta(X)|`` over the points."""
    x = _coords(pts)
    return ResidualReport.from_values(S.chart, x, S.theta(x, X(x)))


def twisted_ham_defect(h: ScalarField, X: VectorField, S: LcsStructure, x) -> np.ndarray:
    """Pointwise operator norm of ``i_X omega - d_theta h`` on tangent vectors."""
    x = np.atleast_2d(x)
    lhs = forms.interior(X, S.omega)
    rhs = forms.twisted_d(S.theta, h)
    diff = KForm(1, S.chart.ambient, lambda y: lhs.tensor(y) - rhs.tensor(y))
    return forms.covector_norms(diff, S.chart, x)


def twisted_ham_residual(h: ScalarField, X: VectorField, S: LcsStructure, pts) -> ResidualReport:
    """Residual of ``i_X omega = d_theta h``."""
    x = _coords(pts)
    return ResidualReport.from_values(S.chart, x, twisted_ham_defect(h, X, S, x))


class PotentialMoment(NamedTuple):
    value: float
    warnings: tuple


def moment_from_potential(beta: KForm, X: VectorField, p, structure: Optional[LcsStructure] = None,
                          tol: float = forms.FD_TOL) -> PotentialMoment:
    """Twisted Hamiltonian ``-beta(X)`` of ``X`` at ``p``.

    With a structure, the hypotheses ``omega = d_theta beta``, ``theta(X) = 0``
    and ``L_X beta = 0`` are checked at ``p`` and violations are listed in
    ``warnings``.
    """
    x = _coords(p)
    value = -beta(x, X(x))
    warnings = []
    if structure is not None:
        chart = structure.chart
        dtb = forms.twisted_d(structure.theta, beta)
        gap = KForm(2, chart.ambient, lambda y: structure.omega.tensor(y) - dtb.tensor(y))
        if np.max(forms.tangent_norms(gap, chart, x)) > tol:
            warnings.append("omega differs from d_theta beta")
        if np.max(np.abs(structure.theta(x, X(x)))) > tol:
            warnings.append("theta(X) is not zero")
        if np.max(forms.tangent_norms(forms.lie_derivative(X, beta), chart, x)) > tol:
            warnings.append("beta is not X-invariant")
    out = float(value[0]) if isinstance(p, Point) else value
    return PotentialMoment(out, tuple(warnings))


def twisted_poisson(f: ScalarField, g: ScalarField, S: LcsStructure, p):
    """Bracket ``{f, g} = omega(X_f, X_g)`` with ``i_{X_a} omega = d_theta a``."""
    x = _coords(p)
    frame = S.frames(x)
    W = S.omega_matrix(x, frame)
    _ensure_nondegenerate(S, x, W)
    df = forms.restrict(forms.twisted_d(S.theta, f).tensor(x), 1, frame)
    dg = forms.restrict(forms.twisted_d(S.theta, g).tensor(x), 1, frame)
    Wt = np.swapaxes(W, 1, 2)
    cf = np.linalg.solve(Wt, df[..., None])[..., 0]
    cg = np.linalg.solve(Wt, dg[..., None])[..., 0]
    val = np.einsum("na,nab,nb->n", cf, W, cg)
    return float(val[0]) if isinstance(p, Point) else val


# --------------------------------------------------------------------------
# Aff+(R)


@dataclass(frozen=True)
class AffinePlus:
    """The map ``t -> a t + b`` with ``a > 0``."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and np.isfinite(self.a) and np.isfinite(self.b)):
            raise UsageError(f"AffinePlus needs finite a > 0, got a={self.a}, b={self.b}")

    def __call__(self, t):
        return self.a * t + self.b

    def compose(self, other: "AffinePlus") -> "AffinePlus":
        return aff_compose(self, other)

    def inverse(self) -> "AffinePlus":
        return AffinePlus(1.0 / self.a, -self.b / self.a)

    def is_identity(self, tol: float = 1e-12) -> bool:
        return abs(self.a - 1.0) <= tol and abs(self.b) <= tol

    def fixed_point(self) -> Optional[float]:
        if self.a == 1.0:
            return None
        return self.b / (1.0 - self.a)

    @classmethod
    def identity(cls) -> "AffinePlus":
        return cls(1.0, 0.0)


def aff_compose(g1: AffinePlus, g2: AffinePlus) -> AffinePlus:
    """``g1 o g2``."""
    return AffinePlus(g1.a * g2.a, g1.a * g2.b + g1.b)


def aff_commutator(g1: AffinePlus, g2: AffinePlus) -> AffinePlus:
    """``g1 g2 g1^-1 g2^-1``, a pure translation."""
    return AffinePlus(1.0, g1.b * (1.0 - g2.a) - g2.b * (1.0 - g1.a))


class MonodromyVerdict(NamedTuple):
    twisted_hamiltonian: bool
    conjugating_offset: Optional[float]


def monodromy_classify(gens: Sequence[AffinePlus], tol: float = 1e-12) -> MonodromyVerdict:
    """Decide whether the generated subgroup of Aff+(R) is abelian.

    For an abelian image the common fixed point ``b / (1 - a)`` is returned.
    """
    gens = list(gens)
    if not gens:
        raise UsageError("no generators")
    if all(g.a == 1.0 for g in gens):
        raise PreconditionError("all generators are translations (non-strict monodromy)")
    abelian = all(
        abs(aff_commutator(g, h).b) <= tol for g, h in itertools.combinations(gens, 2)
    )
    if not abelian:
        return MonodromyVerdict(False, None)
    pivot = max(gens, key=lambda g: abs(1.0 - g.a))
    return MonodromyVerdict(True, pivot.fixed_point())
