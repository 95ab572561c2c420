"""Convex hulls and sampling-based checks of convexity and cone statements."""

from __future__ import annotations

import functools
import itertools
import json
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from scipy import optimize
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull, cKDTree

from . import forms, lcs
from .errors import CapabilityError, UsageError
from .moment import MomentSampleSet, psi_rescale, twisted_moment
from .models import LcsModel, sample_coords

MERGE_TOL = 1e-9
MAX_PROBES = 200_000


# --------------------------------------------------------------------------
# polytopes


@dataclass
class Polytope:
    """Convex polytope ``{x : normal . x <= offset}`` inside its affine span.

    ``origin`` and the orthonormal columns of ``basis`` parameterise the span;
    ``equalities`` are ``(normal, offset)`` pairs cutting it out.
    """

    dim: int
    vertices: np.ndarray
    facets: List[tuple]
    origin: np.ndarray
    basis: np.ndarray
    equalities: List[tuple] = field(default_factory=list)

    @property
    def ambient_dim(self) -> int:
        return self.vertices.shape[1]

    def _violation(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        worst = np.zeros(x.shape[0])
        if self.facets:
            Nm = np.array([n for n, _ in self.facets])
            bv = np.array([b for _, b in self.facets])
            for start in range(0, x.shape[0], 512):
                blk = x[start:start + 512] @ Nm.T - bv
                worst[start:start + 512] = np.maximum(0.0, blk.max(axis=1))
        for n, b in self.equalities:
            worst = np.maximum(worst, np.abs(x @ n - b))
        return worst

    def contains(self, x, tol: float = 1e-9):
        x = np.asarray(x, dtype=float)
        out = self._violation(x) <= tol
        return bool(out[0]) if x.ndim == 1 else out

    def distance(self, x) -> np.ndarray:
        """Euclidean distance from each point to the polytope."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.array([_dist_to_hull(self, p) for p in x])

    def ray_intervals(self, directions, chunk: int = 512):
        """Parameter ranges ``[lo, hi]`` with ``t * d`` in the polytope for ``t >= 0``.

        Rows with an empty range get ``lo = inf``.
        """
        D = np.atleast_2d(np.asarray(directions, dtype=float))
        lo_all = np.empty(D.shape[0])
        hi_all = np.empty(D.shape[0])
        rows = [(n, b, False) for n, b in self.facets] + [(n, b, True) for n, b in self.equalities]
        Nm = np.array([r[0] for r in rows])
        bv = np.array([r[1] for r in rows])
        is_eq = np.array([r[2] for r in rows])
        for start in range(0, D.shape[0], chunk):
            d = D[start:start + chunk]
            nd = d @ Nm.T
            flat = np.abs(nd) <= 1e-15
            with np.errstate(divide="ignore", invalid="ignore"):
                t = bv / np.where(flat, 1.0, nd)
            upper = (~flat) & ((nd > 0) | is_eq)
            lower = (~flat) & ((nd < 0) | is_eq)
            hi = np.min(np.where(upper, t, np.inf), axis=1)
            lo = np.maximum(0.0, np.max(np.where(lower, t, -np.inf), axis=1))
            bad = np.any(flat & ((bv < -1e-9) | (is_eq & (np.abs(bv) > 1e-9))), axis=1)
            bad |= (hi < lo - 1e-9) | (hi <= 0)
            lo_all[start:start + chunk] = np.where(bad, np.inf, lo)
            hi_all[start:start + chunk] = hi
        return lo_all, hi_all

    def ray_interval(self, direction) -> Optional[tuple]:
        """Parameters ``t > 0`` with ``t * direction`` in the polytope, or None."""
        lo, hi = self.ray_intervals(direction)
        if not np.isfinite(lo[0]):
            return None
        return float(lo[0]), float(hi[0])

    def to_dict(self) -> dict:
        return {
            "dim": int(self.dim),
            "ambient_dim": int(self.ambient_dim),
            "vertices": [[float(v) for v in row] for row in self.vertices],
            "facets": [{"normal": [float(v) for v in n], "offset": float(b)}
                       for n, b in self.facets],
            "equalities": [{"normal": [float(v) for v in n], "offset": float(b)}
                           for n, b in self.equalities],
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, indent=2)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "Polytope":
        return convex_hull(np.asarray(d["vertices"], dtype=float))


def _dist_to_hull(poly: "Polytope", p: np.ndarray) -> float:
    """Distance from ``p`` to ``poly``: projection onto the span plus a small QP there."""
    rel = p - poly.origin
    q = rel @ poly.basis
    perp = rel - poly.basis @ q
    perp2 = float(perp @ perp)
    if poly.dim == 0:
        return float(np.linalg.norm(p - poly.vertices[0]))
    Nm = np.array([n for n, _ in poly.facets]) @ poly.basis
    bv = np.array([b for _, b in poly.facets]) - np.array([n for n, _ in poly.facets]) @ poly.origin
    scale = max(1.0, float(np.abs(bv).max()))
    if np.all(Nm @ q - bv <= 1e-12 * scale):
        return float(np.sqrt(perp2))
    if poly.dim == 1:
        u = poly.basis[:, 0]
        lo, hi = sorted(float((v - poly.origin) @ u) for v in poly.vertices)
        inside2 = (q[0] - np.clip(q[0], lo, hi)) ** 2
        return float(np.sqrt(perp2 + inside2))
    y0 = ((poly.vertices - poly.origin) @ poly.basis).mean(axis=0)
    res = optimize.minimize(
        lambda y: float((y - q) @ (y - q)), y0, jac=lambda y: 2 * (y - q),
        constraints=[{"type": "ineq", "fun": lambda y: bv - Nm @ y, "jac": lambda y: -Nm}],
        method="SLSQP", options={"ftol": 1e-16, "maxiter": 500})
    best = float((res.x - q) @ (res.x - q))
    # polish: exact projections onto faces cut out by near-active facets
    near = np.flatnonzero(bv - Nm @ res.x <= 1e-6 * scale)
    for size in range(1, poly.dim + 1):
        for act in itertools.combinations(near, size):
            A = Nm[list(act)]
            lam, *_ = np.linalg.lstsq(A @ A.T, A @ q - bv[list(act)], rcond=None)
            y = q - A.T @ lam
            if np.all(lam >= -1e-12) and np.all(Nm @ y - bv <= 1e-12 * scale):
                best = min(best, float((y - q) @ (y - q)))
    return float(np.sqrt(perp2 + best))


def convex_hull(points) -> Polytope:
    """Convex hull of up to 4-dimensional points, computed inside their affine span."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.ndim != 2 or P.shape[0] == 0:
        raise UsageError("convex_hull needs a nonempty point list")
    D = P.shape[1]
    if D > 4:
        raise UsageError("convex_hull supports dimension at most 4")
    key = np.round(P / MERGE_TOL).astype(np.int64)
    _, first = np.unique(key, axis=0, return_index=True)
    P = P[np.sort(first)]
    origin = P.mean(axis=0)
    X = P - origin
    if X.shape[0] < D:
        X = np.vstack([X, np.zeros((D - X.shape[0], D))])
    _, sv, vt = np.linalg.svd(X, full_matrices=False)
    scale = max(1.0, float(np.max(np.abs(P))))
    r = int(np.sum(sv > 1e-9 * scale))
    basis = vt[:r].T
    normal_space = vt[r:]
    equalities = [(n, float(n @ origin)) for n in normal_space]
    Q = (P - origin) @ basis
    if r == 0:
        return Polytope(0, P[:1], [], origin, basis, equalities)
    if r == 1:
        i, j = int(np.argmin(Q[:, 0])), int(np.argmax(Q[:, 0]))
        verts = P[[i, j]]
        u = basis[:, 0]
        facets = [(u, float(u @ P[j])), (-u, float(-u @ P[i]))]
        return Polytope(1, verts, facets, origin, basis, equalities)
    hull = ConvexHull(Q)
    verts = P[np.sort(hull.vertices)]
    facets = []
    seen = set()
    for eq in hull.equations:
        n_span, off = eq[:-1], eq[-1]
        n = basis @ n_span
        b = float(-off + n @ origin)
        k = tuple(np.round(np.concatenate([n, [b]]) / 1e-9).astype(np.int64))
        if k in seen:
            continue
        seen.add(k)
        facets.append((n, b))
    return Polytope(r, verts, facets, origin, basis, equalities)


def hausdorff(a: Polytope, b: Polytope) -> float:
    """Hausdorff distance between two polytopes (attained at vertices)."""
    d1 = float(np.max(b.distance(a.vertices)))
    d2 = float(np.max(a.distance(b.vertices)))
    return max(d1, d2)


def _in_polygon(Q: np.ndarray, G: np.ndarray, tol: float) -> np.ndarray:
    """Membership in the convex polygon with vertices ``Q`` via the angular wedge of each point."""
    c = Q.mean(axis=0)
    ang = np.arctan2(Q[:, 1] - c[1], Q[:, 0] - c[0])
    order = np.argsort(ang)
    V, ang = Q[order], ang[order]
    g = np.arctan2(G[:, 1] - c[1], G[:, 0] - c[0])
    i = np.searchsorted(ang, g) % V.shape[0]
    a, b = V[i - 1], V[i]
    e = b - a
    cross = e[:, 0] * (G[:, 1] - a[:, 1]) - e[:, 1] * (G[:, 0] - a[:, 0])
    return cross >= -tol * np.linalg.norm(e, axis=1)


def probe_grid(poly: Polytope, eps: float, cap: int = MAX_PROBES) -> np.ndarray:
    """Grid points with spacing about ``eps`` inside the polytope (span coordinates)."""
    Q = (poly.vertices - poly.origin) @ poly.basis
    lo, hi = Q.min(axis=0), Q.max(axis=0)
    r = poly.dim
    side = np.maximum(1, np.ceil((hi - lo) / eps).astype(int) + 1)
    while np.prod(side.astype(float)) > cap:
        side = np.maximum(1, (side * 0.9).astype(int))
    ticks = [np.linspace(lo[i], hi[i], side[i]) for i in range(r)]
    G = np.stack(np.meshgrid(*ticks, indexing="ij"), axis=-1).reshape(-1, r)
    if r == 2 and len(poly.facets) > 64:
        X = poly.origin + G[_in_polygon(Q, G, 1e-9)] @ poly.basis.T
    else:
        X = poly.origin + G @ poly.basis.T
        X = X[poly.contains(X, tol=1e-9)]
    return np.vstack([X, poly.vertices])


# --------------------------------------------------------------------------
# convexity verdicts


@dataclass
class ConvexityReport:
    verdict: str
    hull: Polytope
    coverage_gap: float
    witness: Optional[np.ndarray]
    witness_distance: float
    delta: float
    eps: float
    n_probes: int

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "coverage_gap": float(self.coverage_gap),
            "witness": None if self.witness is None else [float(v) for v in self.witness],
            "witness_distance": float(self.witness_distance),
            "delta": float(self.delta),
            "eps": float(self.eps),
            "n_probes": int(self.n_probes),
            "hull": self.hull.to_dict(),
        }


def _values(samples) -> np.ndarray:
    if isinstance(samples, MomentSampleSet):
        return samples.values
    return np.atleast_2d(np.asarray(samples, dtype=float))


def convexity_verdict(samples, eps: Optional[float] = None, delta: float = 1e-2
                      ) -> ConvexityReport:
    """Three-valued convexity verdict for a sampled image.

    Probes the hull on a grid with spacing ``eps``: convex when all probes are
    within ``delta`` of a sample, nonconvex when one is at least ``3 delta``
    away, inconclusive otherwise.
    """
    V = _values(samples)
    if V.shape[0] < 100:
        raise UsageError("convexity_verdict needs at least 100 samples")
    if not delta > 0:
        raise UsageError("delta must be positive")
    eps = 0.5 * delta if eps is None else eps
    hull = convex_hull(V)
    probes = probe_grid(hull, eps)
    dist, _ = cKDTree(V).query(probes)
    i = int(np.argmax(dist))
    gap = float(dist[i])
    if gap <= delta:
        verdict = "convex"
    elif gap >= 3 * delta:
        verdict = "nonconvex"
    else:
        verdict = "inconclusive"
    witness = None if verdict == "convex" else probes[i]
    return ConvexityReport(verdict, hull, gap, witness, gap if witness is not None else 0.0,
                           delta, eps, int(probes.shape[0]))


class HyperplaneWitness(NamedTuple):
    status: str  # accepted | rejected | inconclusive
    Y: Optional[np.ndarray]
    residual: float


def hyperplane_witness(samples, tol: float = 1e-8) -> HyperplaneWitness:
    """Least-squares ``Y`` with ``alpha(Y) = 1`` on all sample values."""
    V = _values(samples)
    k = V.shape[1]
    if V.shape[0] < k + 1:
        raise UsageError(f"need at least {k + 1} samples")
    Y, _, rank, _ = np.linalg.lstsq(V, np.ones(V.shape[0]), rcond=None)
    res = float(np.max(np.abs(V @ Y - 1.0)))
    if rank < k:
        return HyperplaneWitness("inconclusive", None, res)
    if res <= tol:
        return HyperplaneWitness("accepted", Y, res)
    return HyperplaneWitness("rejected", None, res)


# --------------------------------------------------------------------------
# support refinement and extremal set


def _tangent_search(model: LcsModel, x0: np.ndarray, objective, maxiter: int = 200):
    """Minimise ``objective(x)`` over the manifold near ``x0`` by BFGS in a tangent chart."""
    chart = model.chart
    E = chart.tangent_basis(x0[None])[0]

    def g(u):
        return float(objective(chart.retract((x0 + E @ u)[None]))[0])

    res = optimize.minimize(g, np.zeros(E.shape[1]), method="BFGS",
                            options={"gtol": 1e-13, "maxiter": maxiter})
    return chart.retract((x0 + E @ res.x)[None])[0]


def support_directions(V: np.ndarray, max_dirs: int = 64) -> np.ndarray:
    hull = convex_hull(V)
    dirs = [n / np.linalg.norm(n) for n, _ in hull.facets]
    if len(dirs) > max_dirs:
        idx = np.linspace(0, len(dirs) - 1, max_dirs).round().astype(int)
        dirs = [dirs[i] for i in idx]
    return np.array(dirs)


def refine_support(model: LcsModel, samples: MomentSampleSet, max_dirs: int = 64
                   ) -> MomentSampleSet:
    """Append points maximising ``<mu, n>`` along the hull facet normals.

    Random samples approach the extreme values of the moment map only slowly;
    local maximisation from the best sample recovers them to optimiser
    accuracy.
    """
    if samples.meta.get("space", "twisted") != "twisted":
        raise UsageError("support refinement works on twisted samples")
    V = samples.values
    new_src = []
    for d in support_directions(V, max_dirs):
        x0 = samples.sources[int(np.argmax(V @ d))]
        new_src.append(_tangent_search(
            model, x0, lambda x, d=d: -(twisted_moment(model, x, validate=False) @ d)))
    new_src = np.array(new_src)
    new_val = twisted_moment(model, new_src, validate=False)
    return samples.extended(new_src, new_val, refined=len(new_src))


def _rank_matrix(model: LcsModel, x: np.ndarray) -> np.ndarray:
    """Fundamental fields and the s-Lee field in tangent-frame components."""
    S = model.structure
    frame = S.frames(x)
    V = lcs.solve_dual(S, x, -S.theta_vector(x, frame), frame)
    cols = [model.action.fundamental_fn(np.broadcast_to(e, (x.shape[0], model.rank)), x)
            for e in np.eye(model.rank)] + [V]
    M = np.stack(cols, axis=2)
    return np.einsum("nia,nik->nak", frame, M)


def _tail_sv2(model: LcsModel, x: np.ndarray) -> np.ndarray:
    sv = np.linalg.svd(_rank_matrix(model, x), compute_uv=False)
    return np.sum(sv[:, 1:] ** 2, axis=1)


def moment_jacobian_rank(model: LcsModel, x: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Numerical rank of ``d mu`` on tangent vectors (FD Jacobian)."""
    x = np.atleast_2d(x)
    frame = model.chart.tangent_basis(x)
    J = forms.partials(lambda y: twisted_moment(model, y, validate=False), x)  # (N, m, k)
    Jt = np.einsum("nia,nik->nka", frame, J)
    sv = np.linalg.svd(Jt, compute_uv=False)
    return np.sum(sv > tol, axis=1)


@dataclass
class ExtremalResult:
    C_points: np.ndarray
    muC: np.ndarray
    match: bool
    hausdorff: float
    dmu_rank: np.ndarray
    sv_tol: float

    def to_dict(self) -> dict:
        return {
            "n_C_points": int(self.C_points.shape[0]),
            "muC_hull_vertices": [[float(v) for v in row]
                                  for row in (convex_hull(self.muC).vertices
                                              if len(np.unique(np.round(self.muC, 9), axis=0)) > 1
                                              else self.muC[:1])],
            "match": bool(self.match),
            "hausdorff": float(self.hausdorff),
            "max_dmu_rank": int(np.max(self.dmu_rank)) if self.dmu_rank.size else 0,
            "sv_tol": self.sv_tol,
        }


def extremal_set_C(model: LcsModel, pts, sv_tol: float = 1e-7, refine_frac: float = 0.01,
                   match_tol: float = 1e-5) -> ExtremalResult:
    """Points where every fundamental field is parallel to the s-Lee field.

    The lowest-scoring fraction of ``pts`` is pushed onto the set by local
    minimisation of the non-leading singular values before the rank test.
    """
    if not model.is_lee_type:
        raise CapabilityError(f"model {model.name!r} is not of Lee type")
    x = forms.as_coords(pts)
    score = _tail_sv2(model, x)
    n_ref = max(1, int(np.ceil(refine_frac * x.shape[0])))
    order = np.argsort(score)[:n_ref]
    refined = np.array([_tangent_search(model, x[i], lambda y: _tail_sv2(model, y))
                        for i in order])
    cand = np.vstack([x, refined])
    sv = np.linalg.svd(_rank_matrix(model, cand), compute_uv=False)
    inC = sv[:, 1] <= sv_tol
    C = cand[inC]
    if C.shape[0] == 0:
        return ExtremalResult(C, np.zeros((0, model.rank)), False, np.inf,
                              np.zeros(0, dtype=int), sv_tol)
    muC = twisted_moment(model, C, validate=False)
    mu_all = twisted_moment(model, x, validate=False)
    union = np.vstack([mu_all, muC])
    if len(np.unique(np.round(muC / MERGE_TOL), axis=0)) < 2:
        hC = None
    else:
        hC = convex_hull(muC)
    if hC is None:
        hd = float(np.max(np.linalg.norm(union - muC[0], axis=1)))
    else:
        hd = hausdorff(hC, convex_hull(union))
    ranks = moment_jacobian_rank(model, C)
    return ExtremalResult(C, muC, hd <= match_tol, hd, ranks, sv_tol)


# --------------------------------------------------------------------------
# cones


@dataclass
class ConeReport:
    is_cone: bool
    base: Polytope
    radial_gap: float
    apex_excluded: bool
    max_violation: float
    method: str
    base_verdict: Optional[str] = None
    tol: float = 1e-8

    def to_dict(self) -> dict:
        return {
            "is_cone": bool(self.is_cone),
            "radial_gap": float(self.radial_gap),
            "apex_excluded": bool(self.apex_excluded),
            "max_violation": float(self.max_violation),
            "method": self.method,
            "base_verdict": self.base_verdict,
            "tol": self.tol,
            "base": self.base.to_dict(),
        }


def cone_check(hat_samples, base, lee_element=None, tol: float = 1e-8, n_rays: int = 64,
               ray_tol: float = 1e-2) -> ConeReport:
    """Check ``mu_hat(samples) in R_{>0} . base``.

    ``base`` is a Polytope or a ConvexityReport of the twisted image. With a
    Lee element membership is tested after the central projection onto the
    slice, otherwise by casting the ray through each sample against the base.
    """
    base_verdict = None
    if isinstance(base, ConvexityReport):
        base_verdict = base.verdict
        base = base.hull
    H = _values(hat_samples)
    norms = np.linalg.norm(H, axis=1)
    apex_excluded = bool(np.all(norms > 1e-10))
    if lee_element is not None:
        Y = np.asarray(lee_element, dtype=float)
        pair = H @ Y
        if np.any(pair <= 0):
            viol = np.inf
        else:
            viol = float(np.max(base._violation(H / pair[:, None])))
        method = "psi"
    else:
        lo, _ = base.ray_intervals(H)
        viol = 0.0 if np.all(np.isfinite(lo)) else np.inf
        method = "ray"
    is_cone = bool(viol <= tol) and apex_excluded
    gap = radial_gap(H, base, n_rays=n_rays, ray_tol=ray_tol)
    return ConeReport(is_cone, base, gap, apex_excluded, float(max(viol, 0.0)), method,
                      base_verdict, tol)


def radial_gap(H: np.ndarray, base: Polytope, n_rays: int = 64, ray_tol: float = 1e-2) -> float:
    """Largest gap in ``log |v|`` among samples near each probe ray.

    Probe rays pass through base vertices; samples within angle ``ray_tol``
    of a ray are collected.
    """
    dirs = base.vertices
    if dirs.shape[0] > n_rays:
        dirs = dirs[np.linspace(0, dirs.shape[0] - 1, n_rays).round().astype(int)]
    nh = np.linalg.norm(H, axis=1, keepdims=True)
    H, U = H[nh[:, 0] > 0], H[nh[:, 0] > 0] / nh[nh[:, 0] > 0]
    worst = 0.0
    for d in dirs:
        nd = np.linalg.norm(d)
        if nd == 0:
            continue
        near = np.linalg.norm(U - d / nd, axis=1) <= ray_tol
        if np.count_nonzero(near) < 2:
            continue
        r = np.sort(np.log(np.linalg.norm(H[near], axis=1)))
        worst = max(worst, float(np.max(np.diff(r))))
    return worst


# --------------------------------------------------------------------------
# fibers and paths


def epsilon_graph_components(points: np.ndarray, eps: Optional[float] = None,
                             periods: Optional[Sequence[Optional[float]]] = None,
                             min_fraction: float = 0.01):
    """Connected components of the ``eps``-neighbourhood graph.

    ``periods[i]`` wraps coordinate ``i`` (None for non-periodic ones).
    Components holding fewer than ``min_fraction`` of the points are sampling
    noise: they get label -1 and are not counted.
    Returns ``(n_components, labels, eps)``.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    n, m = P.shape
    if n == 0:
        raise UsageError("no points")
    periods = [None] * m if periods is None else list(periods)
    shifted = P.copy()
    box = np.zeros(m)
    for i, per in enumerate(periods):
        if per:
            shifted[:, i] = np.mod(shifted[:, i], per)
            shifted[:, i] = np.where(shifted[:, i] >= per, 0.0, shifted[:, i])
            box[i] = per
        else:
            lo = shifted[:, i].min()
            shifted[:, i] -= lo
            box[i] = 10.0 * (shifted[:, i].max() + 1.0)
    tree = cKDTree(shifted, boxsize=box)
    if eps is None:
        if n < 2:
            return 1, np.zeros(1, dtype=int), 0.0
        d, _ = tree.query(shifted, k=2)
        eps = 4.0 * float(np.median(d[:, 1]))
    pairs = tree.query_pairs(eps, output_type="ndarray")
    g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(g, directed=False)
    sizes = np.bincount(labels)
    big = np.flatnonzero(sizes >= max(1.0, min_fraction * n))
    remap = np.full(sizes.size, -1)
    remap[big] = np.arange(big.size)
    return int(big.size), remap[labels], float(eps)


class FiberResult(NamedTuple):
    connected: bool
    components: int
    n_points: int
    eps: float


def fiber_connectivity(model: LcsModel, alpha, slab_width: float = 0.05, n: int = 50_000,
                       eps: Optional[float] = None, sampler: str = "halton", seed: int = 0
                       ) -> FiberResult:
    """Components of the eps-graph on sampled points with ``|mu - alpha| <= slab_width``."""
    x = sample_coords(model, n, sampler, seed)
    mu = twisted_moment(model, x, validate=False)
    sel = x[np.linalg.norm(mu - np.asarray(alpha, dtype=float), axis=1) <= slab_width]
    if sel.shape[0] == 0:
        raise UsageError("no samples in the slab; widen it or move alpha into the image")
    per = dict(model.chart.periodic)
    periods = [per.get(i) for i in range(model.chart.ambient)]
    k, _, e = epsilon_graph_components(sel, eps, periods)
    return FiberResult(k == 1, k, int(sel.shape[0]), e)


def _segment_dist(a, b, p):
    ab = b - a
    L = np.einsum("...i,...i->...", ab, ab)
    t = np.where(L > 0, np.einsum("...i,...i->...", p - a, ab) / np.where(L > 0, L, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.linalg.norm(a + t[..., None] * ab - p, axis=-1)


@functools.lru_cache(maxsize=8)
def _triples(n: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(n), 3)), dtype=int).reshape(-1, 3)


def monotone_straight(path_values, tol: float = 1e-8, exact_limit: int = 200) -> bool:
    """Whether the path weakly monotonically parameterises a segment.

    Checks that value ``j`` lies on the segment ``[value i, value k]`` for all
    ``i <= j <= k``; long paths are checked on a subsample plus all
    consecutive triples and all triples through both endpoints.
    """
    P = np.atleast_2d(np.asarray(path_values, dtype=float))
    n = P.shape[0]
    if n < 2:
        raise UsageError("monotone_straight needs at least two samples")
    if n <= exact_limit:
        idx = np.arange(n)
    else:
        idx = np.unique(np.linspace(0, n - 1, exact_limit).round().astype(int))
    tri = _triples(len(idx))
    if tri.size:
        I, J, K = idx[tri[:, 0]], idx[tri[:, 1]], idx[tri[:, 2]]
        if np.max(_segment_dist(P[I], P[K], P[J])) > tol:
            return False
    if n > exact_limit:
        j = np.arange(1, n - 1)
        if np.max(_segment_dist(P[j - 1], P[j + 1], P[j])) > tol:
            return False
        if np.max(_segment_dist(P[np.zeros_like(j)], P[np.full_like(j, n - 1)], P[j])) > tol:
            return False
    return True


def psi_segment_path(a, b, Y, n: int = 50) -> np.ndarray:
    """``Psi`` applied to ``n`` evenly spaced points of the segment ``[a, b]``."""
    t = np.linspace(0.0, 1.0, n)[:, None]
    return psi_rescale((1 - t) * np.asarray(a) + t * np.asarray(b), Y)
