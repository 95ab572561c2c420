"""Example lcs manifolds with torus actions, coverings and moment maps.

Every model carries

* a base chart and an :class:`~lcslab.lcs.LcsStructure` on it,
* a :class:`TorusAction` given by fundamental fields and the group action,
* :class:`PresentationData` describing the minimal covering, the primitive
  ``lam`` of the Lee form there and the deck generators,
* optionally a closed-form moment map, a potential ``beta`` with
  ``omega = d_theta beta`` and contact/complex data.

Covering points use a second chart with the same ambient coordinates in which
the circle coordinate is unwrapped; ``project`` wraps it again.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from scipy import stats
from scipy.stats import qmc

from . import forms
from .errors import CapabilityError, UsageError
from .forms import TWO_PI, Chart, KForm, Point, ScalarField, VectorField
from .lcs import LcsStructure

SAMPLERS = ("prng", "halton", "grid")


@dataclass(frozen=True, eq=False)
class TorusAction:
    """Effective action of a rank-``k`` torus; angles are in radians."""

    rank: int
    fundamental_fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    act_fn: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def fundamental(self, Y, p) -> np.ndarray:
        """Fundamental field of ``Y`` at ``p`` (batched over points)."""
        x = forms.as_coords(p)
        Y = np.asarray(Y, dtype=float)
        if Y.shape[-1] != self.rank:
            raise UsageError(f"Lie algebra vector must have {self.rank} components")
        Y = np.broadcast_to(Y, (x.shape[0], self.rank))
        out = self.fundamental_fn(Y, x)
        return out[0] if isinstance(p, Point) else out

    def field(self, Y) -> VectorField:
        Y = np.asarray(Y, dtype=float)
        return VectorField(-1, lambda x: self.fundamental_fn(
            np.broadcast_to(Y, (x.shape[0], self.rank)), x), f"X{tuple(Y)}")

    def basis_fields(self) -> List[VectorField]:
        return [self.field(e) for e in np.eye(self.rank)]

    def act(self, t, p):
        """Apply the torus element ``t`` to ``p``; returns the same kind as ``p``."""
        x = forms.as_coords(p)
        t = np.broadcast_to(np.asarray(t, dtype=float), (x.shape[0], self.rank))
        y = self.act_fn(t, x)
        if isinstance(p, Point):
            return Point(p.chart, p.chart.retract(y[0]))
        return y


@dataclass(frozen=True)
class DeckGenerator:
    """A deck transformation translating coordinate ``index`` by ``step``."""

    index: int
    step: float
    rho: float
    name: str = ""

    def apply(self, x, k: int = 1) -> np.ndarray:
        y = np.array(forms.as_coords(x), dtype=float)
        y[:, self.index] += k * self.step
        return y


@dataclass(frozen=True, eq=False)
class PresentationData:
    """Minimal covering of a model.

    ``lift(x, L)`` returns covering coordinates over a base point with the
    same transverse coordinates as ``x`` and primitive value ``L``.
    ``translate(xhat, s)`` (when available) is the flow with
    ``lam(translate(xhat, s)) = lam(xhat) + s`` that rescales the covering
    symplectic form by ``e^s``.
    """

    chart: Chart
    project_fn: Callable[[np.ndarray], np.ndarray]
    lam: Callable[[np.ndarray], np.ndarray]
    deck_generators: Tuple[DeckGenerator, ...]
    rank: int
    lift: Callable[[np.ndarray, np.ndarray], np.ndarray]
    translate: Optional[Callable[[np.ndarray, float], np.ndarray]] = None

    def project(self, xhat):
        x = forms.as_coords(xhat)
        return self.project_fn(x)

    def rhos(self) -> np.ndarray:
        return np.array([g.rho for g in self.deck_generators], dtype=float)


@dataclass(frozen=True, eq=False)
class LcsModel:
    name: str
    chart: Chart
    structure: LcsStructure
    action: TorusAction
    presentation: PresentationData
    unit_dim: int
    from_unit: Callable[[np.ndarray], np.ndarray]
    reference_moment: Optional[Callable[[np.ndarray], np.ndarray]] = None
    printed_moment: Optional[Callable[[np.ndarray], np.ndarray]] = None
    potential_beta: Optional[KForm] = None
    complex_Jtheta: Optional[KForm] = None
    contact_form: Optional[KForm] = None
    lee_element: Optional[np.ndarray] = None
    flows: Dict[str, Callable[[np.ndarray, float], np.ndarray]] = field(default_factory=dict)
    params: Dict[str, object] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.structure.dim

    @property
    def rank(self) -> int:
        return self.action.rank

    @property
    def is_lee_type(self) -> bool:
        return self.lee_element is not None

    def point(self, coords) -> Point:
        return Point(self.chart, coords)

    def covering_point(self, coords) -> Point:
        return Point(self.presentation.chart, coords)

    def describe(self) -> dict:
        return {"name": self.name, "params": {k: _plain(v) for k, v in self.params.items()}}


def _plain(v):
    if isinstance(v, np.ndarray):
        return [float(t) for t in v]
    if isinstance(v, (tuple, list)):
        return [_plain(t) for t in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


# --------------------------------------------------------------------------
# profiles for conformal factors and deformations


@dataclass(frozen=True)
class Profile:
    """A smooth real function of one variable with derivative and antiderivative."""

    kind: str
    param: float
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    F: Callable[[np.ndarray], np.ndarray]
    periodic: bool

    @property
    def label(self) -> str:
        return f"{self.kind}:{self.param:g}"

    @property
    def is_constant(self) -> bool:
        return self.kind == "const" or self.param == 0.0


def make_profile(kind: str, param: float) -> Profile:
    c = float(param)
    if kind == "const":
        return Profile(kind, c, lambda u: np.full(np.shape(u), c), lambda u: np.zeros(np.shape(u)),
                       lambda u: c * np.asarray(u), True)
    if kind == "poly":
        return Profile(kind, c, lambda u: c * np.asarray(u) ** 2, lambda u: 2 * c * np.asarray(u),
                       lambda u: c * np.asarray(u) ** 3 / 3.0, False)
    if kind == "cos":
        return Profile(kind, c, lambda u: c * np.cos(u), lambda u: -c * np.sin(u),
                       lambda u: c * np.sin(u), True)
    raise UsageError(f"unknown profile kind {kind!r} (use const, poly or cos)")


def parse_profile(text) -> Profile:
    """Parse ``const:c``, ``poly:c2`` or ``cos:amp``."""
    if isinstance(text, Profile):
        return text
    kind, sep, val = str(text).partition(":")
    if not sep:
        raise UsageError(f"profile {text!r} must look like kind:value")
    try:
        num = float(val)
    except ValueError as exc:
        raise UsageError(f"bad profile parameter in {text!r}") from exc
    if not np.isfinite(num):
        raise UsageError(f"profile parameter must be finite in {text!r}")
    return make_profile(kind.strip(), num)


# --------------------------------------------------------------------------
# helpers


def lattice_rank(rhos: Sequence[float], tol: float = 1e-9) -> int:
    """Rank of the subgroup of R generated by ``rhos``."""
    basis: List[float] = []
    for r in rhos:
        r = float(r)
        if abs(r) <= tol:
            continue
        if not basis:
            basis.append(r)
            continue
        with mpmath.workdps(30):
            rel = mpmath.pslq(basis + [r], tol=tol, maxcoeff=10**6, maxsteps=10**5)
        if rel is None or rel[-1] == 0:
            basis.append(r)
    return len(basis)


def _unit_to_gauss(u: np.ndarray) -> np.ndarray:
    return stats.norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))


def _normalize(z: np.ndarray) -> np.ndarray:
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sample_units(dim: int, n: int, sampler: str = "prng", seed: int = 0) -> np.ndarray:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise UsageError(f"need at least one sample, got n={n}")
    if sampler == "prng":
        return np.random.default_rng(seed).random((n, dim))
    if sampler == "halton":
        return qmc.Halton(d=dim, scramble=True, seed=seed).random(n)
    if sampler == "grid":
        side = max(2, int(np.ceil(n ** (1.0 / dim))))
        ticks = (np.arange(side) + 0.5) / side
        if side**dim > 4_000_000:
            raise UsageError("grid sampler too large for this dimension; use halton")
        mesh = np.stack(np.meshgrid(*([ticks] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
        idx = np.unique(np.linspace(0, mesh.shape[0] - 1, n).round().astype(int))
        return mesh[idx]
    raise UsageError(f"unknown sampler {sampler!r} (use {', '.join(SAMPLERS)})")


def sample_coords(model: LcsModel, n: int, sampler: str = "prng", seed: int = 0) -> np.ndarray:
    """Deterministic base sample as an ``(n, ambient)`` coordinate array."""
    u = sample_units(model.unit_dim, n, sampler, seed)
    return model.chart.retract(model.from_unit(u))


def sample_points(model: LcsModel, n: int, sampler: str = "prng", seed: int = 0) -> List[Point]:
    x = sample_coords(model, n, sampler, seed)
    return [Point(model.chart, row) for row in x]


def sample_covering(model: LcsModel, n: int, lambda_range: float, sampler: str = "prng",
                    seed: int = 0) -> np.ndarray:
    """Covering points with ``lam`` uniform in ``[-lambda_range, lambda_range]``."""
    if not lambda_range > 0:
        raise UsageError("lambda_range must be positive")
    base = sample_coords(model, n, sampler, seed)
    rng = np.random.default_rng([seed, 7])
    lam = rng.uniform(-lambda_range, lambda_range, size=base.shape[0])
    return model.presentation.lift(base, lam)


def covering_maps(model: LcsModel, xhat) -> dict:
    """Projection, primitive and deck maps at a covering point."""
    pres = model.presentation
    x = forms.as_coords(xhat)
    base = pres.project(x)

    def deck_apply(index: int, y=None):
        y = x if y is None else forms.as_coords(y)
        return pres.deck_generators[index].apply(y)

    return {
        "base": Point(model.chart, base[0]) if isinstance(xhat, Point) else base,
        "lambda": float(pres.lam(x)[0]) if isinstance(xhat, Point) else pres.lam(x),
        "deck_apply": deck_apply,
        "rho": pres.rhos(),
    }


def circle_map(model: LcsModel, p) -> np.ndarray:
    """The map ``M -> R / rho Z`` induced by ``lam`` (rank-1 models)."""
    pres = model.presentation
    if pres.rank != 1 or len(pres.deck_generators) != 1:
        raise CapabilityError("circle map needs a single deck generator")
    x = forms.as_coords(p)
    rho = pres.deck_generators[0].rho
    return np.mod(pres.lam(x), rho)


def circle_distance(a, b, period: float) -> np.ndarray:
    d = np.mod(np.asarray(a) - np.asarray(b), period)
    return np.minimum(d, period - d)


def covering_omega(model: LcsModel) -> KForm:
    """The covering symplectic form ``e^{-lam} p^* omega``."""
    pres = model.presentation
    om = model.structure.omega
    return KForm(2, om.ambient, lambda x: np.exp(-pres.lam(x))[:, None, None] * om.tensor(x),
                 None, "omega0")


def covering_structure(model: LcsModel) -> LcsStructure:
    """The covering symplectic form as a (globally conformal) structure with theta = 0."""
    amb = model.chart.ambient
    zero = KForm(1, amb, lambda x: np.zeros(x.shape), lambda x: np.zeros((x.shape[0], amb, amb)))
    return LcsStructure(model.dim, model.presentation.chart, covering_omega(model), zero)


# --------------------------------------------------------------------------
# Istrati's 4-torus


def build_istrati() -> LcsModel:
    """Strict lcs 4-torus with Lee form ``d theta_4`` and a rank-2 action.

    Coordinates are the four angles; ``omega = d_theta eta`` with
    ``eta = sin(theta_3) d theta_1 + cos(theta_3) d theta_2``.
    """
    amb = 4
    chart = Chart(1, "istrati", 4, 4, periodic=tuple((i, TWO_PI) for i in range(4)))
    cover = Chart(101, "istrati-cover", 4, 4, periodic=tuple((i, TWO_PI) for i in range(3)))

    def eta(x):
        out = np.zeros(x.shape)
        out[:, 0] = np.sin(x[:, 2])
        out[:, 1] = np.cos(x[:, 2])
        return out

    def deta(x):
        out = np.zeros((x.shape[0], amb, amb))
        c, s = np.cos(x[:, 2]), np.sin(x[:, 2])
        out[:, 2, 0], out[:, 0, 2] = c, -c
        out[:, 2, 1], out[:, 1, 2] = -s, s
        return out

    def omega(x):
        out = deta(x)
        e = eta(x)
        out[:, 3, :] -= e
        out[:, :, 3] += e
        return out

    theta = forms.coordinate_form(amb, 3)
    eta_form = KForm(1, amb, eta, deta, "eta")
    structure = LcsStructure(4, chart, KForm(2, amb, omega, None, "omega"), theta)

    def fundamental(Y, x):
        out = np.zeros(x.shape)
        out[:, :2] = Y
        return out

    def act(t, x):
        y = np.array(x, dtype=float)
        y[:, :2] += t
        return y

    def lift(x, L):
        y = np.array(x, dtype=float)
        y[:, 3] = L
        return y

    def shift(v):
        def apply(x):
            y = np.array(forms.as_coords(x), dtype=float)
            y[:, 3] += v
            return y
        return apply

    pres = PresentationData(
        chart=cover,
        project_fn=chart.wrap,
        lam=lambda x: np.asarray(x)[:, 3].copy(),
        deck_generators=(DeckGenerator(3, TWO_PI, TWO_PI, "theta4+2pi"),),
        rank=1,
        lift=lift,
        translate=lambda x, s: shift(s)(x),
    )

    def mu(x):
        return -np.stack([np.sin(x[:, 2]), np.cos(x[:, 2])], axis=1)

    return LcsModel(
        name="istrati", chart=chart, structure=structure,
        action=TorusAction(2, fundamental, act), presentation=pres,
        unit_dim=4, from_unit=lambda u: TWO_PI * u,
        reference_moment=mu, printed_moment=lambda x: -mu(x),
        potential_beta=eta_form,
    )


# --------------------------------------------------------------------------
# Hopf-type models on S^1_c x S^{2n-1}


def _split(x):
    z = x[:, 1:]
    return z[:, 0::2], z[:, 1::2]


def _hopf_forms(w: np.ndarray):
    n = w.size
    amb = 1 + 2 * n

    def q(x):
        a, b = _split(x)
        return np.sum(w * (a * a + b * b), axis=1)

    def dq(x):
        a, b = _split(x)
        out = np.zeros(x.shape)
        out[:, 1::2] = 2 * w * a
        out[:, 2::2] = 2 * w * b
        return out

    def eta0(x):
        a, b = _split(x)
        out = np.zeros(x.shape)
        out[:, 1::2] = -b
        out[:, 2::2] = a
        return out

    def deta0(x):
        out = np.zeros((x.shape[0], amb, amb))
        for j in range(n):
            out[:, 1 + 2 * j, 2 + 2 * j] = 2.0
            out[:, 2 + 2 * j, 1 + 2 * j] = -2.0
        return out

    def outer(a, b):
        return a[:, :, None] * b[:, None, :] - b[:, :, None] * a[:, None, :]

    def eta_w(x):
        return eta0(x) / q(x)[:, None]

    def deta_w(x):
        qq = q(x)[:, None, None]
        return deta0(x) / qq - outer(dq(x), eta0(x)) / qq**2

    def ds(x):
        out = np.zeros(x.shape)
        out[:, 0] = 1.0
        return out

    def omega(x):
        return outer(ds(x), eta_w(x)) - deta_w(x)

    return dict(q=q, eta_w=eta_w, deta_w=deta_w, ds=ds, omega=omega, outer=outer)


def _hopf_action(n: int):
    def fundamental(Y, x):
        a, b = _split(x)
        out = np.zeros(x.shape)
        out[:, 1::2] = -Y * b
        out[:, 2::2] = Y * a
        return out

    def act(t, x):
        a, b = _split(x)
        c, s = np.cos(t), np.sin(t)
        y = np.array(x, dtype=float)
        y[:, 1::2] = c * a - s * b
        y[:, 2::2] = s * a + c * b
        return y

    return TorusAction(n, fundamental, act)


def _check_weights(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size < 2:
        raise UsageError("weighted Hopf model needs n >= 2 weights")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise UsageError(f"weights must be positive, got {w.tolist()}")
    return w


def _hopf_from_unit(n: int, c: float):
    def from_unit(u):
        s = c * u[:, :1]
        z = _normalize(_unit_to_gauss(u[:, 1:]))
        return np.hstack([s, z])
    return from_unit


def _s_shift(v):
    def apply(x):
        y = np.array(forms.as_coords(x), dtype=float)
        y[:, 0] += v
        return y
    return apply


def build_weighted_hopf(weights=(np.log(2.0), np.log(3.0)), c: float = 1.0) -> LcsModel:
    """Mapping torus ``S^1_c x S^{2n-1}`` of the weighted Sasakian sphere.

    Coordinates ``(s, x_1, y_1, ..., x_n, y_n)``; ``theta = ds`` and
    ``omega = ds ^ eta_w - d eta_w`` with the contact form
    ``eta_w = eta_0 / sum w_j |z_j|^2``.
    """
    w = _check_weights(weights)
    if not c > 0:
        raise UsageError("circle length c must be positive")
    n = w.size
    amb = 1 + 2 * n
    fs = _hopf_forms(w)
    sphere = tuple(range(1, amb))
    chart = Chart(2, f"weighted-hopf-{n}", 2 * n, amb, periodic=((0, c),), sphere=sphere)
    cover = Chart(102, f"weighted-hopf-{n}-cover", 2 * n, amb, sphere=sphere)

    theta = forms.coordinate_form(amb, 0)
    omega = KForm(2, amb, fs["omega"], None, "omega")
    eta_w = KForm(1, amb, fs["eta_w"], fs["deta_w"], "eta_w")
    beta = eta_w.scaled(-1.0)
    structure = LcsStructure(2 * n, chart, omega, theta)
    action = _hopf_action(n)

    def mu(x):
        a, b = _split(x)
        r = a * a + b * b
        return r / np.sum(w * r, axis=1, keepdims=True)

    def lift(x, L):
        y = np.array(x, dtype=float)
        y[:, 0] = L
        return y

    pres = PresentationData(
        chart=cover, project_fn=chart.wrap, lam=lambda x: np.asarray(x)[:, 0].copy(),
        deck_generators=(DeckGenerator(0, c, c, f"s+{c:g}"),), rank=1,
        lift=lift, translate=lambda x, s: _s_shift(s)(x),
    )

    def reeb_flow(x, t):
        return action.act_fn(np.broadcast_to(w * t, (x.shape[0], n)), x)

    def lee_flow(x, t):
        return chart.wrap(_s_shift(t)(x))

    return LcsModel(
        name="weighted-hopf", chart=chart, structure=structure, action=action,
        presentation=pres, unit_dim=1 + 2 * n, from_unit=_hopf_from_unit(n, c),
        reference_moment=mu, potential_beta=beta, complex_Jtheta=beta, contact_form=eta_w,
        lee_element=w.copy(), flows={"reeb": reeb_flow, "lee": lee_flow},
        params={"weights": w.copy(), "c": float(c)},
    )


def build_equal_hopf(n: int = 2, c: float = 1.0) -> LcsModel:
    return build_weighted_hopf(np.ones(n), c)


def build_diagonal_hopf_conformal(f="const:0", c: float = 1.0) -> LcsModel:
    """Equal-weight Hopf surface rescaled by ``e^{-f(t)}``, ``t = |z_1|^2/|z|^2``.

    ``omega' = e^{-f} omega`` with Lee form ``ds - df``; the twisted moment
    is ``e^{-f} mu``.
    """
    prof = parse_profile(f)
    base = build_weighted_hopf(np.ones(2), c)
    amb = base.chart.ambient

    def t_of(x):
        a, b = _split(x)
        r = a * a + b * b
        return r[:, 0] / np.sum(r, axis=1)

    def dt(x):
        a, b = _split(x)
        r = a * a + b * b
        tot = np.sum(r, axis=1)
        t = r[:, 0] / tot
        out = np.zeros(x.shape)
        out[:, 1] = 2 * a[:, 0] / tot
        out[:, 2] = 2 * b[:, 0] / tot
        out[:, 1::2] -= 2 * t[:, None] * a / tot[:, None]
        out[:, 2::2] -= 2 * t[:, None] * b / tot[:, None]
        return out

    def fval(x):
        return prof.f(t_of(x))

    def theta(x):
        out = -prof.df(t_of(x))[:, None] * dt(x)
        out[:, 0] += 1.0
        return out

    om0 = base.structure.omega
    omega = KForm(2, amb, lambda x: np.exp(-fval(x))[:, None, None] * om0.tensor(x), None,
                  "omega'")
    structure = LcsStructure(4, base.chart, omega, KForm(1, amb, theta, None, "theta'"))
    beta0 = base.potential_beta
    beta = KForm(1, amb, lambda x: np.exp(-fval(x))[:, None] * beta0.tensor(x), None, "beta'")
    mu0 = base.reference_moment

    def mu(x):
        return np.exp(-fval(x))[:, None] * mu0(x)

    def lam(x):
        return np.asarray(x)[:, 0] - fval(x)

    def lift(x, L):
        y = np.array(x, dtype=float)
        y[:, 0] = L + fval(x)
        return y

    bp = base.presentation
    pres = replace(bp, lam=lam, lift=lift)
    lee = None
    if prof.is_constant:
        lee = np.exp(prof.f(np.zeros(1))[0]) * np.ones(2)
    return LcsModel(
        name="diagonal-hopf", chart=base.chart, structure=structure, action=base.action,
        presentation=pres, unit_dim=base.unit_dim, from_unit=base.from_unit,
        reference_moment=mu, potential_beta=beta, lee_element=lee, flows=dict(base.flows),
        params={"f": prof.label, "c": float(c)},
    )


def build_vaisman_deformation(base: LcsModel, f="cos:0.5") -> LcsModel:
    """Deform a Hopf model by ``omega + f ds ^ eta_w`` with Lee form ``(1 + f) ds``.

    ``f`` is a periodic profile in the fiber angle ``u = 2 pi s / c``.
    """
    if base.complex_Jtheta is None:
        raise CapabilityError(f"model {base.name!r} exposes no complex structure data")
    prof = parse_profile(f)
    if not prof.periodic:
        raise UsageError(f"profile {prof.label} is not periodic in the fiber angle")
    grid = np.linspace(0.0, TWO_PI, 4096, endpoint=False)
    fgrid = prof.f(grid)
    if np.min(fgrid) <= -1.0:
        raise UsageError(f"deformation needs f > -1, but min f = {np.min(fgrid):.6g}")
    c = float(base.params["c"])
    amb = base.chart.ambient
    k = TWO_PI / c

    def fs(x):
        return prof.f(k * np.asarray(x)[:, 0])

    om0 = base.structure.omega
    jt = base.complex_Jtheta  # theta o J = -eta_w

    def omega(x):
        ds = np.zeros(x.shape)
        ds[:, 0] = 1.0
        e = -jt.tensor(x)
        extra = ds[:, :, None] * e[:, None, :] - e[:, :, None] * ds[:, None, :]
        return om0.tensor(x) + fs(x)[:, None, None] * extra

    def theta(x):
        out = np.zeros(x.shape)
        out[:, 0] = 1.0 + fs(x)
        return out

    structure = LcsStructure(base.dim, base.chart, KForm(2, amb, omega, None, "omega_bar"),
                             KForm(1, amb, theta, None, "theta_bar"))
    mean_f = float(np.mean(fgrid))
    rho = c * (1.0 + mean_f)

    def big_f(s):
        return prof.F(k * s) / k - prof.F(np.zeros(1))[0] / k

    def lam(x):
        s = np.asarray(x)[:, 0]
        return s + big_f(s)

    fmin = float(np.min(fgrid))

    def lift(x, L):
        L = np.broadcast_to(np.asarray(L, dtype=float), (np.asarray(x).shape[0],))
        span = np.abs(L) / (1.0 + fmin) + 1.0
        lo, hi = -span, span
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            val = mid + big_f(mid)
            lo = np.where(val < L, mid, lo)
            hi = np.where(val < L, hi, mid)
        y = np.array(x, dtype=float)
        y[:, 0] = 0.5 * (lo + hi)
        return y

    bp = base.presentation
    pres = PresentationData(
        chart=bp.chart, project_fn=bp.project_fn, lam=lam,
        deck_generators=(DeckGenerator(0, c, rho, f"s+{c:g}"),), rank=1,
        lift=lift, translate=None,
    )
    return LcsModel(
        name="vaisman-deformation", chart=base.chart, structure=structure, action=base.action,
        presentation=pres, unit_dim=base.unit_dim, from_unit=base.from_unit,
        reference_moment=base.reference_moment, potential_beta=None,
        contact_form=base.contact_form, lee_element=base.lee_element,
        flows=dict(base.flows), params={**base.params, "f": prof.label, "base": base.name},
    )


# --------------------------------------------------------------------------
# globally conformally symplectic control


def build_flat_torus() -> LcsModel:
    """Flat symplectic 4-torus (theta = 0); a non-strict control without moment map."""
    amb = 4
    chart = Chart(3, "flat-torus", 4, 4, periodic=tuple((i, TWO_PI) for i in range(4)))

    def omega(x):
        out = np.zeros((x.shape[0], amb, amb))
        out[:, 0, 1], out[:, 1, 0] = 1.0, -1.0
        out[:, 2, 3], out[:, 3, 2] = 1.0, -1.0
        return out

    zero = KForm(1, amb, lambda x: np.zeros(x.shape),
                 lambda x: np.zeros((x.shape[0], amb, amb)), "0")
    structure = LcsStructure(4, chart, KForm(2, amb, omega, None, "omega"), zero)

    def fundamental(Y, x):
        out = np.zeros(x.shape)
        out[:, 0], out[:, 2] = Y[:, 0], Y[:, 1]
        return out

    def act(t, x):
        y = np.array(x, dtype=float)
        y[:, 0] += t[:, 0]
        y[:, 2] += t[:, 1]
        return y

    pres = PresentationData(
        chart=chart, project_fn=chart.wrap, lam=lambda x: np.zeros(np.asarray(x).shape[0]),
        deck_generators=(), rank=0, lift=lambda x, L: np.array(x, dtype=float),
    )
    return LcsModel(
        name="flat-torus", chart=chart, structure=structure,
        action=TorusAction(2, fundamental, act), presentation=pres,
        unit_dim=4, from_unit=lambda u: TWO_PI * u,
    )


MODEL_NAMES = ("istrati", "weighted-hopf", "equal-hopf", "diagonal-hopf", "vaisman", "flat-torus")


def build_model(name: str, weights=None, f=None, c: float = 1.0) -> LcsModel:
    """Build a model by CLI name."""
    if name == "istrati":
        return build_istrati()
    if name == "weighted-hopf":
        return build_weighted_hopf((np.log(2.0), np.log(3.0)) if weights is None else weights, c)
    if name == "equal-hopf":
        return build_weighted_hopf(np.ones(2) if weights is None else np.ones(len(weights)), c)
    if name == "diagonal-hopf":
        return build_diagonal_hopf_conformal("const:0" if f is None else f, c)
    if name == "vaisman":
        base = build_weighted_hopf(np.ones(2) if weights is None else weights, c)
        return build_vaisman_deformation(base, "cos:0.5" if f is None else f)
    if name == "flat-torus":
        return build_flat_torus()
    raise UsageError(f"unknown model {name!r} (choose from {', '.join(MODEL_NAMES)})")
