import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lcslab import convexity as cv, models, moment
from lcslab.errors import CapabilityError, UsageError


def square(n=400, seed=0):
    return np.random.default_rng(seed).uniform(0, 1, (n, 2))


def test_hull_square():
    pts = np.vstack([square(), [[0, 0], [1, 0], [0, 1], [1, 1]]])
    h = cv.convex_hull(pts)
    assert h.dim == 2 and len(h.vertices) == 4 and len(h.facets) == 4
    assert np.all(h.contains(pts))
    assert not h.contains([1.5, 0.5])
    assert h.distance(np.array([[2.0, 0.5]]))[0] == pytest.approx(1.0)


def test_hull_segment_in_plane():
    t = np.linspace(0, 1, 50)
    pts = np.stack([t, 1 - t], axis=1)
    h = cv.convex_hull(pts)
    assert h.dim == 1 and len(h.vertices) == 2 and len(h.equalities) == 1
    assert np.all(h.contains(pts)) and not h.contains([0.5, 0.6])


def test_hull_single_point():
    h = cv.convex_hull(np.ones((5, 2)))
    assert h.dim == 0 and len(h.vertices) == 1 and h.contains([1.0, 1.0])
    assert not h.contains([1.0, 1.1])
    assert h.distance(np.array([[1.0, 2.0]]))[0] == pytest.approx(1.0)
    with pytest.raises(UsageError):
        cv.convex_hull(np.zeros((0, 2)))


def test_distance_matches_brute_force():
    rng = np.random.default_rng(5)
    h = cv.convex_hull(rng.standard_normal((40, 2)))
    V = h.vertices
    edges = [(V[i], V[j]) for i in range(len(V)) for j in range(len(V))]
    for p in rng.normal(0, 4, (30, 2)):
        outside = not h.contains(p)
        ref = min(cv._segment_dist(a, b, p) for a, b in edges) if outside else 0.0
        assert h.distance(p[None])[0] == pytest.approx(ref, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 3))
def test_hull_idempotent_and_contains(seed, k):
    pts = np.random.default_rng(seed).standard_normal((60, k))
    h = cv.convex_hull(pts)
    assert np.all(h.contains(pts, tol=1e-9))
    h2 = cv.convex_hull(h.vertices)
    assert cv.hausdorff(h, h2) <= 1e-10
    assert len(h2.vertices) == len(h.vertices)


def test_hull_json_round_trip(tmp_path):
    h = cv.convex_hull(square())
    text = h.to_json(tmp_path / "hull.json")
    d = json.loads(text)
    assert set(d) >= {"dim", "ambient_dim", "vertices", "facets", "equalities"}
    assert all(set(f) == {"normal", "offset"} for f in d["facets"])
    back = cv.Polytope.from_dict(d)
    assert cv.hausdorff(back, h) <= 1e-15


def test_verdict_examples():
    assert cv.convexity_verdict(square(3000), delta=0.05).verdict == "convex"
    t = np.random.default_rng(1).uniform(0, np.pi / 2, 3000)
    arc = np.stack([np.cos(t), np.sin(t)], axis=1)
    r = cv.convexity_verdict(arc)
    assert r.verdict == "nonconvex" and r.witness is not None
    assert r.witness_distance >= 0.25
    with pytest.raises(UsageError):
        cv.convexity_verdict(square(50))


def test_verdict_inconclusive_band():
    # a square with a hole of radius 0.02 sits between delta and 3 delta
    pts = square(40_000, 2)
    pts = pts[np.linalg.norm(pts - 0.5, axis=1) > 0.02]
    r = cv.convexity_verdict(pts, delta=1e-2)
    assert r.verdict == "inconclusive"


def test_hyperplane_witness():
    t = np.linspace(0, 1, 200)
    w = np.array([np.log(2), np.log(3)])
    seg = np.stack([t / w[0], (1 - t) / w[1]], axis=1)
    hw = cv.hyperplane_witness(seg)
    assert hw.status == "accepted" and np.allclose(hw.Y, w, atol=1e-10)
    assert cv.hyperplane_witness(square()).status == "rejected"
    # all values on one line through the origin: Y is not determined
    line = np.outer(np.linspace(1, 2, 20), [1.0, 2.0])
    assert cv.hyperplane_witness(line).status == "inconclusive"
    with pytest.raises(UsageError):
        cv.hyperplane_witness(seg[:2])


def test_weighted_hopf_convexity(hopf):
    s = moment.sample_moment_image(hopf, 10_000, seed=0)
    s = cv.refine_support(hopf, s)
    r = cv.convexity_verdict(s)
    assert r.verdict == "convex"
    w = hopf.lee_element
    V = r.hull.vertices
    targets = np.array([[1 / w[0], 0.0], [0.0, 1 / w[1]]])
    for t in targets:
        assert np.min(np.linalg.norm(V - t, axis=1)) <= 1e-5


def test_istrati_nonconvex(istrati):
    r = cv.convexity_verdict(moment.sample_moment_image(istrati, 10_000, seed=0))
    assert r.verdict == "nonconvex" and r.witness_distance >= 0.9


def test_extremal_set(hopf, istrati):
    x = models.sample_coords(hopf, 4000, seed=1)
    ex = cv.extremal_set_C(hopf, x)
    assert ex.match and ex.hausdorff <= 1e-5
    assert np.all(ex.dmu_rank == 0)
    assert json.dumps(ex.to_dict())
    with pytest.raises(CapabilityError):
        cv.extremal_set_C(istrati, models.sample_coords(istrati, 100, seed=1))


def test_moment_jacobian_rank(hopf):
    generic = models.sample_coords(hopf, 20, seed=2)
    assert np.all(cv.moment_jacobian_rank(hopf, generic) == 1)
    pole = np.array([[0.0, 1.0, 0.0, 0.0, 0.0], [0.3, 0.0, 0.0, 0.0, 1.0]])
    assert np.all(cv.moment_jacobian_rank(hopf, pole) == 0)


def test_cone_weighted_hopf(hopf):
    hat = moment.sample_moment_image(hopf, 5000, seed=3, space="symplectic", lambda_range=3.0)
    base = cv.convexity_verdict(cv.refine_support(hopf, moment.sample_moment_image(hopf, 5000)))
    rep = cv.cone_check(hat, base, hopf.lee_element)
    assert rep.is_cone and rep.apex_excluded and rep.max_violation <= 1e-8
    assert rep.method == "psi" and rep.base_verdict == "convex"
    ray = cv.cone_check(hat, base.hull)
    assert ray.is_cone and ray.method == "ray"


def test_cone_istrati(istrati):
    hat = moment.sample_moment_image(istrati, 3000, seed=4, space="symplectic",
                                     lambda_range=8.0)
    base = cv.convexity_verdict(moment.sample_moment_image(istrati, 3000, seed=4))
    rep = cv.cone_check(hat, base)
    assert rep.is_cone and rep.base_verdict == "nonconvex"


def test_cone_rejects_offset_samples():
    base = cv.convex_hull(np.array([[1.0, 0.0], [0.0, 1.0]]))
    bad = np.array([[1.0, 1.0], [0.5, 0.5], [2.0, 0.0], [-1.0, 0.0]])
    rep = cv.cone_check(bad, base)
    assert not rep.is_cone
    rep = cv.cone_check(bad[:3], base, lee_element=[1.0, 1.0])
    assert rep.is_cone
    rep = cv.cone_check(np.array([[0.0, 0.0], [1.0, 0.0]]), base, lee_element=[1.0, 1.0])
    assert not rep.apex_excluded and not rep.is_cone


def test_radial_gap_shrinks_with_rank():
    base = cv.convex_hull(np.array([[1.0, 0.0], [0.0, 1.0]]))
    mu = np.array([1.0, 0.0])
    gaps = []
    for R in (2, 4, 8):
        K = R
        lam = (np.arange(-K, K + 1)[:, None] * 1.0 + np.arange(-K, K + 1)[None, :] * np.sqrt(2))
        lam = np.unique(lam[np.abs(lam) <= R])
        H = np.exp(-lam)[:, None] * mu
        gaps.append(cv.radial_gap(H, base))
    assert gaps[0] > gaps[1] > gaps[2]
    lam = np.arange(-5, 6) * 1.0
    assert cv.radial_gap(np.exp(-lam)[:, None] * mu, base) == pytest.approx(1.0, abs=1e-12)


def boxes(n, seed, gap=0.5):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0, 1, (n // 2, 2))
    b = rng.uniform(0, 1, (n - n // 2, 2)) + [1.0 + gap, 0.0]
    return np.vstack([a, b])


def test_epsilon_graph_controls():
    k, labels, eps = cv.epsilon_graph_components(boxes(4000, 0))
    assert k == 2 and eps > 0
    left, right = set(labels[:2000]) - {-1}, set(labels[2000:]) - {-1}
    assert len(left) == 1 and len(right) == 1 and left != right
    # stragglers below the size threshold are labelled noise, not counted
    lone = np.vstack([square(4000), [[5.0, 5.0]]])
    k, labels, _ = cv.epsilon_graph_components(lone)
    assert k == 1 and labels[-1] == -1
    assert cv.epsilon_graph_components(lone, min_fraction=0.0)[0] == 2
    k, _, _ = cv.epsilon_graph_components(square(4000))
    assert k == 1
    # wrapping joins two islands that touch across the period
    pts = np.array([[0.01, 0.0], [6.27, 0.0]])
    assert cv.epsilon_graph_components(pts, 0.1, [2 * np.pi, None])[0] == 1
    assert cv.epsilon_graph_components(pts, 0.1)[0] == 2
    with pytest.raises(UsageError):
        cv.epsilon_graph_components(np.zeros((0, 2)))


def test_fiber_connectivity(istrati, hopf):
    assert cv.fiber_connectivity(istrati, [1.0, 0.0], n=20_000).connected
    w = hopf.lee_element
    alpha = 0.5 * np.array([1 / w[0], 1 / w[1]])
    assert cv.fiber_connectivity(hopf, alpha, n=20_000).connected
    with pytest.raises(UsageError):
        cv.fiber_connectivity(istrati, [5.0, 5.0], n=1000)


def test_monotone_straight_examples():
    t = np.linspace(0, 1, 30)[:, None]
    seg = t * np.array([1.0, 2.0])
    assert cv.monotone_straight(seg)
    assert cv.monotone_straight(np.vstack([seg, seg[-1:], seg[-1:]]))
    assert not cv.monotone_straight(seg[::-1][[0, 5, 3, 10]])
    q = np.linspace(0, np.pi / 2, 30)
    assert not cv.monotone_straight(np.stack([np.cos(q), np.sin(q)], axis=1))
    long = np.linspace(0, 1, 2000)[:, None] * np.array([1.0, -1.0])
    assert cv.monotone_straight(long)
    bent = long.copy()
    bent[1001] += [1e-6, 1e-6]
    assert not cv.monotone_straight(bent)
    with pytest.raises(UsageError):
        cv.monotone_straight(seg[:1])


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_psi_segments_are_monotone_straight(seed):
    rng = np.random.default_rng(seed)
    Y = rng.uniform(0.1, 2.0, 2)
    a, b = rng.uniform(0.05, 3.0, (2, 2))
    assert cv.monotone_straight(cv.psi_segment_path(a, b, Y), tol=1e-8)
