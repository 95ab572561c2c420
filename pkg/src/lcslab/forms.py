"""Chart-based exterior calculus.

Forms are stored through their coefficient tensors: a k-form on a chart with
``m`` ambient coordinates is a callable ``x -> T`` with ``x`` of shape
``(N, m)`` and ``T`` of shape ``(N, m, ..., m)`` (k trailing axes), fully
antisymmetric, so that

    alpha(v_1, ..., v_k) = T[i_1, ..., i_k] v_1^{i_1} ... v_k^{i_k}.

With this convention ``dx^1 ^ dx^2`` has entries ``T[0, 1] = 1`` and
``T[1, 0] = -1``, which is the determinant convention for the wedge product.

Sphere factors are handled in ambient Cartesian coordinates. Every formula is
evaluated on its ambient extension, so finite-difference stencils may leave the
sphere; only user-facing evaluation projects input vectors onto the tangent
space.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import UsageError

TWO_PI = 2.0 * np.pi

#: Base finite-difference step (relative to max(1, |coordinate|)).
FD_STEP = 2.0**-10
#: Default tolerance for any residual that involves finite differences.
FD_TOL = 1e-6


# --------------------------------------------------------------------------
# charts and points


@dataclass(frozen=True)
class Chart:
    """Coordinate description of a model manifold.

    ``periodic`` lists ``(index, period)`` pairs that are wrapped into
    ``[0, period)`` when a :class:`Point` is built. ``sphere`` lists the
    coordinate indices of one unit-sphere factor (ambient Cartesian).
    """

    id: int
    name: str
    dim: int
    ambient: int
    periodic: tuple = ()
    sphere: tuple = ()

    def wrap(self, x: np.ndarray) -> np.ndarray:
        x = np.array(x, dtype=float, copy=True)
        for i, period in self.periodic:
            x[..., i] = np.mod(x[..., i], period)
            # np.mod can round up to exactly `period`
            x[..., i] = np.where(x[..., i] >= period, 0.0, x[..., i])
        return x

    def retract(self, x: np.ndarray) -> np.ndarray:
        """Push arbitrary ambient coordinates back onto the manifold."""
        x = self.wrap(x)
        if self.sphere:
            idx = list(self.sphere)
            z = x[..., idx]
            x[..., idx] = z / np.linalg.norm(z, axis=-1, keepdims=True)
        return x

    def tangent_basis(self, x: np.ndarray) -> np.ndarray:
        """Orthonormal tangent frames, shape ``(N, ambient, dim)``."""
        x = np.atleast_2d(x)
        n = x.shape[0]
        if not self.sphere:
            return np.broadcast_to(np.eye(self.ambient), (n, self.ambient, self.ambient)).copy()
        idx = list(self.sphere)
        other = [i for i in range(self.ambient) if i not in self.sphere]
        z = x[:, idx]
        z = z / np.linalg.norm(z, axis=1, keepdims=True)
        m = len(idx)
        proj = np.eye(m)[None] - z[:, :, None] * z[:, None, :]
        _, vecs = np.linalg.eigh(proj)
        sphere_frame = vecs[:, :, 1:]  # eigenvalue 0 comes first
        frame = np.zeros((n, self.ambient, self.dim))
        for col, i in enumerate(other):
            frame[:, i, col] = 1.0
        frame[:, idx, len(other):] = sphere_frame
        return frame

    def project_tangent(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        v = np.array(v, dtype=float, copy=True)
        if not self.sphere:
            return v
        idx = list(self.sphere)
        z = np.atleast_2d(x)[..., idx]
        z = z / np.linalg.norm(z, axis=-1, keepdims=True)
        vz = v[..., idx]
        v[..., idx] = vz - np.sum(vz * z, axis=-1, keepdims=True) * z
        return v

    def tangency_residual(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        if not self.sphere:
            return np.zeros(np.atleast_2d(v).shape[0])
        idx = list(self.sphere)
        z = np.atleast_2d(x)[:, idx]
        return np.abs(np.sum(np.atleast_2d(v)[:, idx] * z, axis=1))


class Point:
    """A point given by chart coordinates.

    Periodic coordinates are wrapped at construction; sphere blocks must have
    unit norm to 1e-12 (inputs within 1e-8 are renormalised).
    """

    __slots__ = ("chart", "coords")

    def __init__(self, chart: Chart, coords):
        c = np.asarray(coords, dtype=float).reshape(-1)
        if c.shape[0] != chart.ambient:
            raise UsageError(
                f"chart {chart.name!r} expects {chart.ambient} coordinates, got {c.shape[0]}"
            )
        c = chart.wrap(c)
        if chart.sphere:
            idx = list(chart.sphere)
            r = np.linalg.norm(c[idx])
            if abs(r - 1.0) > 1e-8:
                raise UsageError(f"sphere block has norm {r}, expected 1")
            c[idx] = c[idx] / r
        c.flags.writeable = False
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "coords", c)

    def __setattr__(self, name, value):
        raise AttributeError("Point is immutable")

    @property
    def chart_id(self) -> int:
        return self.chart.id

    def __repr__(self):
        return f"Point({self.chart.name}, {np.array2string(self.coords, precision=6)})"

    def to_dict(self) -> dict:
        return {"chart_id": self.chart.id, "coords": [float(v) for v in self.coords]}


def as_coords(pts) -> np.ndarray:
    """Stack a Point, a sequence of Points or a coordinate array to ``(N, m)``."""
    if isinstance(pts, Point):
        return pts.coords[None, :].copy()
    if isinstance(pts, np.ndarray):
        return np.atleast_2d(np.asarray(pts, dtype=float))
    pts = list(pts)
    if not pts:
        raise UsageError("empty point list")
    if isinstance(pts[0], Point):
        return np.stack([p.coords for p in pts])
    return np.atleast_2d(np.asarray(pts, dtype=float))


# --------------------------------------------------------------------------
# finite differences


def _steps(x: np.ndarray) -> np.ndarray:
    return FD_STEP * np.maximum(1.0, np.abs(x))


def partials(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    """All coordinate partials of ``fn`` at ``x``: shape ``(N, m) + fn_shape``.

    Central differences at steps h and h/2 combined by one Richardson step.
    """
    x = np.atleast_2d(x)
    n, m = x.shape
    h = _steps(x)  # (N, m)
    eye = np.eye(m)

    def central(scale):
        # shifted batch of shape (m * N, m): block i shifts coordinate i
        shift = (eye[:, None, :] * (scale * h)[None, :, :])
        plus = (x[None] + shift).reshape(m * n, m)
        minus = (x[None] - shift).reshape(m * n, m)
        fp = np.asarray(fn(plus))
        fm = np.asarray(fn(minus))
        tail = fp.shape[1:]
        diff = (fp - fm).reshape((m, n) + tail)
        denom = (2.0 * scale * h).T.reshape((m, n) + (1,) * len(tail))
        return diff / denom

    d1 = central(1.0)
    d2 = central(0.5)
    rich = (4.0 * d2 - d1) / 3.0
    return np.moveaxis(rich, 0, 1)


def directional(fn, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Directional derivative of ``fn`` along ``v`` (batched), Richardson once."""
    x = np.atleast_2d(x)
    v = np.atleast_2d(v)
    h = FD_STEP * np.maximum(1.0, np.max(np.abs(x), axis=1))[:, None]

    def central(scale):
        fp = np.asarray(fn(x + scale * h * v))
        fm = np.asarray(fn(x - scale * h * v))
        denom = (2.0 * scale * h).reshape((-1,) + (1,) * (fp.ndim - 1))
        return (fp - fm) / denom

    return (4.0 * central(0.5) - central(1.0)) / 3.0


# --------------------------------------------------------------------------
# tensor algebra on coefficient arrays


def _parity(perm: Sequence[int]) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def alternate(t: np.ndarray, k: int) -> np.ndarray:
    """Antisymmetrise the last ``k`` axes (average over permutations with sign)."""
    if k <= 1:
        return t
    lead = t.ndim - k
    out = np.zeros_like(t)
    for perm in itertools.permutations(range(k)):
        axes = list(range(lead)) + [lead + p for p in perm]
        out += _parity(perm) * np.transpose(t, axes)
    return out / math.factorial(k)


def wedge_coeffs(a: np.ndarray, ka: int, b: np.ndarray, kb: int) -> np.ndarray:
    if ka == 0:
        return a.reshape(a.shape + (1,) * kb) * b
    if kb == 0:
        return a * b.reshape(b.shape + (1,) * ka)
    n = a.shape[0]
    outer = np.einsum(
        "n" + "abcd"[:ka] + ",n" + "efgh"[:kb] + "->n" + "abcd"[:ka] + "efgh"[:kb], a, b
    )
    del n
    factor = math.factorial(ka + kb) / (math.factorial(ka) * math.factorial(kb))
    return factor * alternate(outer, ka + kb)


def contract_first(v: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Insert ``v`` into the first slot of the coefficient tensor ``t``."""
    return np.einsum("ni,ni...->n...", v, t)


def restrict(t: np.ndarray, k: int, frame: np.ndarray) -> np.ndarray:
    """Express the last ``k`` axes of ``t`` in the frame ``(N, m, dim)``."""
    for _ in range(k):
        # contract the leading form axis and append the frame axis at the end
        t = np.einsum("ni...,nia->n...a", t, frame)
    return t


# --------------------------------------------------------------------------
# forms, scalars and vector fields


@dataclass(frozen=True, eq=False)
class KForm:
    """A k-form given by its coefficient function (see module docstring)."""

    degree: int
    ambient: int
    coeffs: Callable[[np.ndarray], np.ndarray]
    exact_d: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    def tensor(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.asarray(self.coeffs(x))

    def __call__(self, x, *vs) -> np.ndarray:
        """Raw batched evaluation on ambient coordinates and vectors."""
        if len(vs) != self.degree:
            raise UsageError(f"{self.degree}-form evaluated on {len(vs)} vectors")
        t = self.tensor(x)
        for v in vs:
            t = contract_first(np.atleast_2d(v), t)
        return t

    def __add__(self, other: "KForm") -> "KForm":
        _check_compatible(self, other)
        ed = None
        if self.exact_d is not None and other.exact_d is not None:
            ed = lambda x, a=self.exact_d, b=other.exact_d: a(x) + b(x)
        return KForm(self.degree, self.ambient,
                     lambda x, a=self.coeffs, b=other.coeffs: a(x) + b(x), ed,
                     f"({self.name}+{other.name})")

    def __sub__(self, other: "KForm") -> "KForm":
        return self + other.scaled(-1.0)

    def scaled(self, c: float) -> "KForm":
        ed = None if self.exact_d is None else (lambda x, f=self.exact_d: c * f(x))
        return KForm(self.degree, self.ambient, lambda x, f=self.coeffs: c * f(x), ed,
                     f"{c}*{self.name}")


def _check_compatible(a: KForm, b: KForm):
    if a.degree != b.degree or a.ambient != b.ambient:
        raise UsageError("forms of different degree or chart cannot be added")


class ScalarField(KForm):
    """A smooth function, i.e. a 0-form, with an optional exact gradient."""

    def __init__(self, ambient: int, fn, grad=None, name: str = ""):
        super().__init__(0, ambient, fn, grad, name)

    def __call__(self, x) -> np.ndarray:  # type: ignore[override]
        return self.tensor(x)


def constant(ambient: int, c: float) -> ScalarField:
    return ScalarField(ambient, lambda x: np.full(x.shape[0], float(c)),
                       lambda x: np.zeros(x.shape), name=str(c))


def coordinate_form(ambient: int, i: int) -> KForm:
    """The closed 1-form ``dx^i``."""

    def coeffs(x):
        out = np.zeros(x.shape)
        out[:, i] = 1.0
        return out

    return KForm(1, ambient, coeffs, lambda x: np.zeros((x.shape[0], ambient, ambient)),
                 f"dx{i}")


def multiply(f: ScalarField, alpha: KForm) -> KForm:
    """Pointwise product ``f * alpha``; the exact derivative is kept when possible."""
    k = alpha.degree

    def coeffs(x):
        return wedge_coeffs(f.tensor(x), 0, alpha.tensor(x), k)

    ed = None
    if f.exact_d is not None and alpha.exact_d is not None:
        def ed(x):
            return wedge_coeffs(f.exact_d(x), 1, alpha.tensor(x), k) + wedge_coeffs(
                f.tensor(x), 0, alpha.exact_d(x), k + 1)
    return KForm(k, alpha.ambient, coeffs, ed, f"{f.name}*{alpha.name}")


@dataclass(frozen=True, eq=False)
class VectorField:
    """A vector field evaluated in ambient chart coordinates."""

    ambient: int
    fn: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.fn(np.atleast_2d(np.asarray(x, dtype=float))))


# --------------------------------------------------------------------------
# operations


def eval_form(form: KForm, p: Point, vs: Sequence) -> float:
    """Value of ``form`` at ``p`` on the tangent vectors ``vs``.

    Vectors are projected onto the tangent space first (sphere charts).
    """
    if len(vs) != form.degree:
        raise UsageError(f"{form.degree}-form needs {form.degree} vectors, got {len(vs)}")
    if p.chart.ambient != form.ambient:
        raise UsageError("point and form live on different charts")
    x = p.coords[None, :]
    proj = []
    for v in vs:
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.shape[0] != form.ambient:
            raise UsageError(f"tangent vector has length {v.shape[0]}, expected {form.ambient}")
        proj.append(p.chart.project_tangent(x, v[None, :]))
    return float(form(x, *proj)[0])


def exterior_d(form: KForm, method: str = "auto") -> KForm:
    """Exterior derivative.

    ``method="auto"`` uses the supplied exact derivative when present and
    finite differences otherwise; ``"fd"`` forces finite differences.
    """
    k = form.degree
    if method not in ("auto", "fd", "exact"):
        raise UsageError(f"unknown method {method!r}")
    if method != "fd" and form.exact_d is not None:
        return KForm(k + 1, form.ambient, form.exact_d, None, f"d{form.name}")
    if method == "exact":
        raise UsageError(f"form {form.name!r} has no exact derivative")

    def coeffs(x):
        t = partials(form.tensor, x)  # (N, i0, i1..ik)
        out = np.zeros_like(t)
        for j in range(k + 1):
            out += (-1) ** j * np.moveaxis(t, 1, 1 + j)
        return out

    return KForm(k + 1, form.ambient, coeffs, None, f"d{form.name}")


def wedge(a: KForm, b: KForm) -> KForm:
    if a.ambient != b.ambient:
        raise UsageError("forms live on different charts")
    return KForm(a.degree + b.degree, a.ambient,
                 lambda x: wedge_coeffs(a.tensor(x), a.degree, b.tensor(x), b.degree),
                 None, f"{a.name}^{b.name}")


def interior(X: VectorField, form: KForm) -> KForm:
    if form.degree == 0:
        raise UsageError("interior product of a function")
    return KForm(form.degree - 1, form.ambient,
                 lambda x: contract_first(X(x), form.tensor(x)), None,
                 f"i_{X.name}{form.name}")


def twisted_d(theta: KForm, alpha: KForm) -> KForm:
    """The twisted differential ``d_theta alpha = d alpha - theta ^ alpha``."""
    if theta.degree != 1:
        raise UsageError("the twisting form must have degree 1")
    da = exterior_d(alpha)
    ta = wedge(theta, alpha)
    return KForm(alpha.degree + 1, alpha.ambient,
                 lambda x: da.tensor(x) - ta.tensor(x), None,
                 f"d_{theta.name}{alpha.name}")


def lie_derivative(X: VectorField, alpha: KForm) -> KForm:
    """Lie derivative by Cartan's formula ``i_X d alpha + d i_X alpha``."""
    da = exterior_d(alpha)
    if alpha.degree == 0:
        return KForm(0, alpha.ambient, lambda x: contract_first(X(x), da.tensor(x)),
                     None, f"L_{X.name}{alpha.name}")
    first = interior(X, da)
    second = exterior_d(interior(X, alpha))
    return KForm(alpha.degree, alpha.ambient,
                 lambda x: first.tensor(x) + second.tensor(x), None,
                 f"L_{X.name}{alpha.name}")


def tangent_norms(form: KForm, chart: Chart, x: np.ndarray) -> np.ndarray:
    """Largest absolute tangent-frame component of ``form`` at each point."""
    x = np.atleast_2d(x)
    t = form.tensor(x)
    if form.degree == 0:
        return np.abs(t)
    r = restrict(t, form.degree, chart.tangent_basis(x))
    return np.max(np.abs(r.reshape(r.shape[0], -1)), axis=1)


def covector_norms(form: KForm, chart: Chart, x: np.ndarray) -> np.ndarray:
    """Operator norm of a 1-form restricted to the tangent space."""
    if form.degree != 1:
        raise UsageError("covector_norms expects a 1-form")
    x = np.atleast_2d(x)
    r = restrict(form.tensor(x), 1, chart.tangent_basis(x))
    return np.linalg.norm(r, axis=1)


def alternation_residual(form: KForm, chart: Chart, x: np.ndarray, rng) -> float:
    """Max of |alpha(..u..v..) + alpha(..v..u..)| over random tangent inputs."""
    x = np.atleast_2d(x)
    k = form.degree
    if k < 2:
        return 0.0
    vs = [chart.project_tangent(x, rng.standard_normal(x.shape)) for _ in range(k)]
    base = form(x, *vs)
    worst = 0.0
    for i in range(k - 1):
        sw = list(vs)
        sw[i], sw[i + 1] = sw[i + 1], sw[i]
        worst = max(worst, float(np.max(np.abs(base + form(x, *sw)))))
    return worst
