"""Twisted and symplectic moment maps and their identities.

Covectors are plain numpy arrays of length ``rank`` (or ``(N, rank)`` when
batched), written in the basis dual to the standard basis of the torus Lie
algebra.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from . import forms, lcs
from .errors import CapabilityError, DomainError, StructuralError, UsageError
from .forms import Point, ScalarField
from .lcs import ResidualReport
from .models import LcsModel, sample_coords, sample_covering

LEE_TOL = 1e-6


def _coords(p) -> np.ndarray:
    return forms.as_coords(p)


def _single(p, arr):
    return arr[0] if isinstance(p, Point) else arr


# --------------------------------------------------------------------------
# moment maps


def moment_components(model: LcsModel):
    """Scalar fields ``mu^{e_j}`` for the basis of the Lie algebra."""
    amb = model.chart.ambient
    return [ScalarField(amb, lambda x, j=j: _raw_moment(model, x)[:, j], name=f"mu{j}")
            for j in range(model.rank)]


def _raw_moment(model: LcsModel, x: np.ndarray) -> np.ndarray:
    if model.reference_moment is not None:
        return model.reference_moment(x)
    if model.potential_beta is not None:
        beta = model.potential_beta
        cols = [-beta(x, model.action.fundamental_fn(
            np.broadcast_to(e, (x.shape[0], model.rank)), x)) for e in np.eye(model.rank)]
        return np.stack(cols, axis=1)
    raise CapabilityError(f"model {model.name!r} has no moment map construction")


def moment_residuals(model: LcsModel, pts) -> list:
    """Componentwise reports for ``d_theta mu^X - i_X omega``."""
    x = _coords(pts)
    S = model.structure
    return [lcs.twisted_ham_residual(h, X, S, x)
            for h, X in zip(moment_components(model), model.action.basis_fields())]


def twisted_moment(model: LcsModel, p, validate: bool = True, tol: float = forms.FD_TOL):
    """Twisted moment map at ``p``.

    Uses the closed form when the model has one and ``-beta(X)`` otherwise.
    With ``validate`` the defining identity is checked at the points.
    """
    x = _coords(p)
    val = _raw_moment(model, x)
    if validate:
        worst = max(r.max_residual for r in moment_residuals(model, x))
        if worst > tol:
            raise StructuralError(f"moment map residual {worst:.3g} exceeds {tol:g}")
    return _single(p, val)


def symplectic_moment(model: LcsModel, xhat, validate: bool = False):
    """``e^{-lam} mu o p`` on covering points."""
    x = _coords(xhat)
    pres = model.presentation
    base = pres.project(x)
    val = np.exp(-pres.lam(x))[:, None] * twisted_moment(model, base, validate=validate)
    return _single(xhat, val)


def psi_rescale(alpha, Y):
    """Central projection ``alpha / alpha(Y)`` onto the slice ``alpha(Y) = 1``."""
    a = np.asarray(alpha, dtype=float)
    Y = np.asarray(Y, dtype=float)
    pair = a @ Y
    if np.any(~(pair > 0)):
        raise DomainError("psi_rescale needs alpha(Y) > 0")
    return a / (pair[..., None] if a.ndim > 1 else pair)


# --------------------------------------------------------------------------
# Lee type


class LeeFit(NamedTuple):
    Y: np.ndarray
    residual: float


def _lee_system(model: LcsModel, x: np.ndarray):
    S = model.structure
    frame = S.frames(x)
    V = lcs.solve_dual(S, x, -S.theta_vector(x, frame), frame)
    cols = [model.action.fundamental_fn(np.broadcast_to(e, (x.shape[0], model.rank)), x)
            for e in np.eye(model.rank)]
    A = np.stack(cols, axis=2)  # (N, m, k)
    return A, V


def fit_lee_element(model: LcsModel, pts) -> LeeFit:
    """Least-squares ``Y`` with ``X_Y = V``; residual is the max pointwise error."""
    x = _coords(pts)
    if x.shape[0] * model.dim < model.rank:
        raise UsageError("not enough points for the Lee fit")
    A, V = _lee_system(model, x)
    Y, *_ = np.linalg.lstsq(A.reshape(-1, model.rank), V.reshape(-1), rcond=None)
    res = np.linalg.norm(np.einsum("nmk,k->nm", A, Y) - V, axis=1)
    return LeeFit(Y, float(np.max(res)))


def lee_type_witness(model: LcsModel, pts, tol: float = LEE_TOL, n_validate: int = 100,
                     seed: int = 12345) -> Optional[LeeFit]:
    """Lie algebra element inducing the s-Lee field, or ``None``.

    The fit is accepted only when it also reproduces ``V`` at fresh points.
    """
    x = _coords(pts)
    if x.shape[0] < 2 * model.rank:
        raise UsageError(f"need at least {2 * model.rank} points")
    fit = fit_lee_element(model, x)
    if fit.residual > tol:
        return None
    fresh = sample_coords(model, n_validate, "prng", seed)
    A, V = _lee_system(model, fresh)
    val = float(np.max(np.linalg.norm(np.einsum("nmk,k->nm", A, fit.Y) - V, axis=1)))
    if val > tol:
        return None
    return LeeFit(fit.Y, max(fit.residual, val))


# --------------------------------------------------------------------------
# Vaisman and Sasakian identities


class ContactPair(NamedTuple):
    vaisman: np.ndarray
    contact: np.ndarray


def vaisman_contact_pair(model: LcsModel, p, X=None) -> ContactPair:
    """``-(theta o J)(X)`` and ``eta(X)`` for the basis (or a given ``X``)."""
    if model.complex_Jtheta is None or model.contact_form is None:
        raise CapabilityError(f"model {model.name!r} exposes no Vaisman/contact data")
    x = _coords(p)
    basis = np.eye(model.rank) if X is None else np.atleast_2d(np.asarray(X, dtype=float))
    vs, cs = [], []
    for Y in basis:
        Xb = model.action.fundamental_fn(np.broadcast_to(Y, (x.shape[0], model.rank)), x)
        vs.append(-model.complex_Jtheta(x, Xb))
        cs.append(model.contact_form(x, Xb))
    v, c = np.stack(vs, axis=1), np.stack(cs, axis=1)
    if X is not None:
        v, c = v[:, 0], c[:, 0]
    return ContactPair(_single(p, v), _single(p, c))


def _report(model: LcsModel, chart, x, values) -> ResidualReport:
    return ResidualReport.from_values(chart, x, values)


def muss_scaling_check(model: LcsModel, s_values: Sequence[float], pts) -> ResidualReport:
    """Residual of ``mu_hat(phi_s(x)) - e^{-s} mu_hat(x)`` on covering points."""
    pres = model.presentation
    if pres.translate is None:
        raise CapabilityError(f"model {model.name!r} has no symplectization flow")
    x = _coords(pts)
    base = symplectic_moment(model, x)
    worst = np.zeros(x.shape[0])
    for s in s_values:
        moved = symplectic_moment(model, pres.translate(x, float(s)))
        worst = np.maximum(worst, np.max(np.abs(moved - np.exp(-s) * base), axis=1))
    return _report(model, pres.chart, x, worst)


DESCENT_TIMES = (1e-3, 1e-2, 0.1, 0.5)


def descent_invariance_check(model: LcsModel, pts, times: Iterable[float] = DESCENT_TIMES
                             ) -> ResidualReport:
    """Change of ``mu`` along the Reeb and Lee flows on the base."""
    if "reeb" not in model.flows or "lee" not in model.flows:
        raise CapabilityError(f"model {model.name!r} does not expose the Reeb and Lee flows")
    x = _coords(pts)
    mu = twisted_moment(model, x, validate=False)
    worst = np.zeros(x.shape[0])
    for name in ("reeb", "lee"):
        for t in times:
            moved = twisted_moment(model, model.flows[name](x, float(t)), validate=False)
            worst = np.maximum(worst, np.max(np.abs(moved - mu), axis=1))
    return _report(model, model.chart, x, worst)


# --------------------------------------------------------------------------
# sample sets


@dataclass
class MomentSampleSet:
    """Source points (base or covering coordinates) and their moment values."""

    sources: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sources = np.atleast_2d(np.asarray(self.sources, dtype=float))
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.sources.shape[0] != self.values.shape[0]:
            raise UsageError("sources and values differ in length")

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def rank(self) -> int:
        return self.values.shape[1]

    def extended(self, sources, values, **meta) -> "MomentSampleSet":
        return MomentSampleSet(np.vstack([self.sources, sources]),
                               np.vstack([self.values, values]), {**self.meta, **meta})

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        for k in sorted(self.meta):
            buf.write(f"# {k}={self.meta[k]}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"src_{i}" for i in range(self.sources.shape[1])]
                   + [f"mu_{j}" for j in range(self.rank)])
        for s, v in zip(self.sources, self.values):
            w.writerow([repr(float(t)) for t in s] + [repr(float(t)) for t in v])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text_or_path) -> "MomentSampleSet":
        text = str(text_or_path)
        if "\n" not in text:
            with open(text, encoding="utf-8") as fh:
                text = fh.read()
        meta, rows = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k] = v
            elif line.strip():
                rows.append(line)
        reader = list(csv.reader(rows))
        header, body = reader[0], np.array(reader[1:], dtype=float).reshape(-1, len(reader[0]))
        ns = sum(h.startswith("src_") for h in header)
        return cls(body[:, :ns], body[:, ns:], meta)


def sample_moment_image(model: LcsModel, n: int, sampler: str = "prng", seed: int = 0,
                        space: str = "twisted", lambda_range: Optional[float] = None,
                        validate: int = 200) -> MomentSampleSet:
    """Deterministic sample of the twisted or symplectic moment image.

    ``validate`` points of the base sample are checked against the defining
    identity of the moment map.
    """
    if space == "twisted":
        if lambda_range is not None:
            raise UsageError("lambda_range applies only to the symplectic space")
        src = sample_coords(model, n, sampler, seed)
        vals = twisted_moment(model, src, validate=False)
        check = src
    elif space == "symplectic":
        if lambda_range is None:
            raise UsageError("symplectic sampling needs lambda_range")
        src = sample_covering(model, n, lambda_range, sampler, seed)
        vals = symplectic_moment(model, src)
        check = model.presentation.project(src)
    else:
        raise UsageError(f"unknown space {space!r}")
    if validate:
        twisted_moment(model, check[:validate], validate=True)
    meta = {"model": model.name, "seed": seed, "sampler": sampler, "n": int(src.shape[0]),
            "space": space}
    if lambda_range is not None:
        meta["lambda_range"] = float(lambda_range)
    return MomentSampleSet(src, vals, meta)


def deck_orbit(model: LcsModel, xhat, lambda_range: float, rhos: Optional[Sequence[float]] = None,
               max_word: Optional[int] = None) -> MomentSampleSet:
    """Symplectic moment values along deck translates of one covering point.

    With ``rhos`` the deck group is replaced by a synthetic free abelian
    group with those periods (words with ``|k_i| <= max_word``); only the
    values ``e^{-lam} mu`` are then meaningful.
    """
    x = _coords(xhat)[:1]
    pres = model.presentation
    lam0 = float(pres.lam(x)[0])
    mu = twisted_moment(model, pres.project(x), validate=False)[0]
    if rhos is None:
        if len(pres.deck_generators) != 1:
            raise CapabilityError("deck orbits need exactly one deck generator")
        g = pres.deck_generators[0]
        kmax = int(np.floor((lambda_range + abs(lam0)) / abs(g.rho))) + 1
        src = np.vstack([g.apply(x, k) for k in range(-kmax, kmax + 1)])
        src = src[np.abs(pres.lam(src)) <= lambda_range]
        return MomentSampleSet(src, symplectic_moment(model, src),
                               {"model": model.name, "orbit": "deck"})
    rhos = np.asarray(rhos, dtype=float)
    K = int(max_word if max_word is not None else np.ceil(lambda_range / np.min(np.abs(rhos))))
    words = np.array(list(itertools.product(range(-K, K + 1), repeat=rhos.size)), dtype=float)
    lam = lam0 + words @ rhos
    lam = np.unique(lam[np.abs(lam) <= lambda_range])
    vals = np.exp(-lam)[:, None] * mu[None, :]
    return MomentSampleSet(np.repeat(x, lam.size, axis=0), vals,
                           {"model": model.name, "orbit": "synthetic"})


def orbit_log_spacing(values: np.ndarray) -> np.ndarray:
    """Consecutive differences of ``log |v|`` for values on one ray, sorted."""
    r = np.sort(np.log(np.linalg.norm(np.atleast_2d(values), axis=1)))
    return np.diff(r)


def hamiltonian_monodromy(model: LcsModel, xhat, Y) -> list:
    """Affine maps ``H o gamma = a H + b`` of the covering Hamiltonian of ``Y``.

    ``H = <mu_hat, Y>``; one fitted :class:`~lcslab.lcs.AffinePlus` per deck
    generator, with the max fit residual.
    """
    x = _coords(xhat)
    Y = np.asarray(Y, dtype=float)
    H = symplectic_moment(model, x) @ Y
    out = []
    for g in model.presentation.deck_generators:
        Hg = symplectic_moment(model, g.apply(x)) @ Y
        A = np.stack([H, np.ones_like(H)], axis=1)
        (a, b), *_ = np.linalg.lstsq(A, Hg, rcond=None)
        res = float(np.max(np.abs(A @ np.array([a, b]) - Hg)))
        out.append((lcs.AffinePlus(float(a), float(b)), res))
    return out
