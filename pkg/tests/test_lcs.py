import itertools

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from lcslab import forms, lcs, models, moment
from lcslab.errors import PreconditionError, StructuralError, UsageError
from lcslab.forms import KForm, Point, ScalarField, VectorField
from lcslab.lcs import AffinePlus, aff_commutator, aff_compose, monodromy_classify

T = sp.symbols("t1:5")


def const_field(v):
    v = np.asarray(v, dtype=float)
    return VectorField(len(v), lambda x: np.tile(v, (x.shape[0], 1)))


def mu_fields(model):
    return moment.moment_components(model)


# ---------------------------------------------------------------- check_lcs


def test_istrati_lcs_residual(istrati):
    x = models.sample_coords(istrati, 1000, seed=1)
    assert lcs.check_lcs(istrati.structure, x).max_residual <= 1e-7


def test_flat_model_lcs_residual(flat):
    x = models.sample_coords(flat, 200, seed=1)
    assert lcs.check_lcs(flat.structure, x).max_residual <= 1e-8


def test_perturbed_omega_violates_lcs(istrati):
    S = istrati.structure

    def pert(x):
        out = S.omega.tensor(x).copy()
        out[:, 0, 1] += 0.1
        out[:, 1, 0] -= 0.1
        return out

    bad = lcs.LcsStructure(4, istrati.chart, KForm(2, 4, pert), S.theta)
    rep = lcs.check_lcs(bad, models.sample_coords(istrati, 1000, seed=2))
    # symbolic defect: -d theta_4 ^ 0.1 d theta_1 ^ d theta_2 has unit-size component 0.1
    assert rep.max_residual >= 0.05
    assert rep.max_residual == pytest.approx(0.1, abs=1e-8)
    assert rep.witness_point is not None


def test_degenerate_omega_names_point(istrati):
    zero2 = KForm(2, 4, lambda x: np.zeros((x.shape[0], 4, 4)))
    S = lcs.LcsStructure(4, istrati.chart, zero2, istrati.structure.theta)
    with pytest.raises(StructuralError) as err:
        lcs.check_lcs(S, [Point(istrati.chart, [0.1, 0.2, 0.3, 0.4])])
    assert err.value.point is not None
    with pytest.raises(StructuralError):
        lcs.s_lee_field(S, Point(istrati.chart, [0, 0, 0, 0]))


def test_report_invariants(istrati):
    rep = lcs.check_lcs(istrati.structure, models.sample_coords(istrati, 50, seed=3))
    assert rep.max_residual >= rep.mean_residual >= 0
    assert rep.n_points == 50
    with pytest.raises(UsageError):
        lcs.check_lcs(istrati.structure, np.zeros((0, 4)))


# ---------------------------------------------------------------- s-Lee field


def test_s_lee_symbolic(istrati):
    # symbolic solve of omega(V, .) = -theta with V tangent to the theta_1, theta_2 plane
    a, b = sp.symbols("a b")
    s3 = sp.symbols("s3")
    sol = sp.solve([a * sp.cos(s3) - b * sp.sin(s3), a * sp.sin(s3) + b * sp.cos(s3) + 1], [a, b])
    for th3, expect in ((np.pi / 2, [-1, 0, 0, 0]), (0.0, [0, -1, 0, 0])):
        V = lcs.s_lee_field(istrati.structure, Point(istrati.chart, [0.3, 1.0, th3, 2.0]))
        assert np.allclose(V, expect, atol=1e-12)
        ref = [float(sol[a].subs(s3, th3)), float(sol[b].subs(s3, th3)), 0, 0]
        assert np.allclose(V, ref, atol=1e-12)


def test_s_lee_residual_and_flat(istrati, flat):
    x = models.sample_coords(istrati, 100, seed=4)
    S = istrati.structure
    V = lcs.s_lee_field(S, x)
    assert np.max(np.abs(S.omega(x, V, np.eye(4)[[0] * 100]) + S.theta(x, np.eye(4)[[0] * 100]))) <= 1e-10
    for i in range(4):
        e = np.tile(np.eye(4)[i], (100, 1))
        assert np.max(np.abs(S.omega(x, V, e) + S.theta(x, e))) <= 1e-10
    assert np.allclose(lcs.s_lee_field(flat.structure, Point(flat.chart, [1, 2, 3, 4])), 0)


# ---------------------------------------------------------------- special fields


def test_special_residual_examples(istrati):
    S = istrati.structure
    x = models.sample_coords(istrati, 300, seed=5)
    r = lcs.special_residual(const_field([1, 0, 0, 0]), S, x)
    assert r.report.max_residual <= 1e-7 and abs(r.homothety_estimate) <= 1e-12
    rv = lcs.special_residual(lcs.s_lee_vector_field(S), S, x)
    assert rv.report.max_residual <= 1e-7
    r3 = lcs.special_residual(const_field([0, 0, 1, 0]), S, x)
    assert r3.report.max_residual >= 0.1


@pytest.mark.parametrize("name", ["istrati", "hopf", "equal_hopf", "vaisman"])
def test_torus_generators_special_and_theta_free(name, request):
    m = request.getfixturevalue(name)
    x = models.sample_coords(m, 200, seed=6)
    for X in m.action.basis_fields():
        r = lcs.special_residual(X, m.structure, x)
        assert r.report.max_residual <= forms.FD_TOL
        assert abs(r.homothety_estimate) <= 1e-7
    V = lcs.s_lee_vector_field(m.structure)
    assert lcs.special_residual(V, m.structure, x).report.max_residual <= forms.FD_TOL


# ---------------------------------------------------------------- twisted Hamiltonians


def test_twisted_ham_examples(istrati):
    S = istrati.structure
    x = models.sample_coords(istrati, 300, seed=7)
    one = forms.constant(4, 1.0)
    assert lcs.twisted_ham_residual(one, lcs.s_lee_vector_field(S), S, x).max_residual <= 1e-7
    mu1 = mu_fields(istrati)[0]
    e1 = const_field([1, 0, 0, 0])
    assert lcs.twisted_ham_residual(mu1, e1, S, x).max_residual <= 1e-7
    zero = forms.constant(4, 0.0)
    assert lcs.twisted_ham_residual(zero, e1, S, x).max_residual >= 0.5
    # the printed sign is not a twisted Hamiltonian of d/d theta_1
    printed = ScalarField(4, lambda y: np.sin(y[:, 2]))
    assert lcs.twisted_ham_residual(printed, e1, S, x).max_residual >= 1.0


def test_twisted_hamiltonians_are_unique(istrati, rng):
    """Two candidates with small residual for the same field agree pointwise."""
    S = istrati.structure
    x = models.sample_coords(istrati, 200, seed=8)
    e1 = const_field([1, 0, 0, 0])
    cands = [mu_fields(istrati)[0],
             moment.moment_components(istrati)[0],
             ScalarField(4, lambda y: -lcs.moment_from_potential(
                 istrati.potential_beta, const_field([-1, 0, 0, 0]), y).value)]
    vals = []
    for h in cands:
        assert lcs.twisted_ham_residual(h, e1, S, x).max_residual <= forms.FD_TOL
        vals.append(h(x))
    for a, b in itertools.combinations(vals, 2):
        assert np.max(np.abs(a - b)) <= 10 * forms.FD_TOL


def test_moment_from_potential_examples(istrati):
    beta = istrati.potential_beta
    p = Point(istrati.chart, [0.1, 0.2, np.pi / 2, 0.3])
    r = lcs.moment_from_potential(beta, const_field([1, 0, 0, 0]), p, istrati.structure)
    assert r.value == pytest.approx(-1.0) and r.warnings == ()
    assert lcs.moment_from_potential(beta, const_field([0, 0, 0, 0]), p).value == 0.0
    q = Point(istrati.chart, [0.1, 0.2, 0.0, 0.3])
    assert lcs.moment_from_potential(beta, const_field([0, 1, 0, 0]), q).value == pytest.approx(-1.0)
    bad = lcs.moment_from_potential(beta, const_field([0, 0, 0, 1]), p, istrati.structure)
    assert "theta(X) is not zero" in bad.warnings


def test_potential_field_is_twisted_hamiltonian(istrati):
    S = istrati.structure
    X = const_field([0.4, -1.1, 0, 0])
    h = ScalarField(4, lambda y: lcs.moment_from_potential(istrati.potential_beta, X, y).value)
    x = models.sample_coords(istrati, 200, seed=9)
    assert lcs.twisted_ham_residual(h, X, S, x).max_residual <= forms.FD_TOL


# ---------------------------------------------------------------- Poisson bracket


def test_poisson_examples(istrati):
    S = istrati.structure
    m1, m2 = mu_fields(istrati)
    p = Point(istrati.chart, [0.3, 0.4, 0.0, 0.5])
    assert lcs.twisted_poisson(m1, m1, S, p) == pytest.approx(0.0, abs=1e-12)
    x = models.sample_coords(istrati, 200, seed=10)
    assert np.max(np.abs(lcs.twisted_poisson(m1, m2, S, x))) <= 1e-7
    one = forms.constant(4, 1.0)
    # {1, g} = -d_theta g (V), FD oracle along V
    V = lcs.s_lee_field(S, p)
    xp = p.coords[None]
    dg = forms.directional(lambda y: m1(y), xp, V[None])[0]
    oracle = -(dg - m1(xp)[0] * S.theta(xp, V[None])[0])
    assert lcs.twisted_poisson(one, m1, S, p) == pytest.approx(oracle, abs=1e-6)


@pytest.mark.parametrize("name", ["istrati", "hopf", "vaisman"])
def test_moment_components_commute(name, request):
    m = request.getfixturevalue(name)
    comps = mu_fields(m)
    x = models.sample_coords(m, 200, seed=12)
    for f, g in itertools.combinations(comps, 2):
        assert np.max(np.abs(lcs.twisted_poisson(f, g, m.structure, x))) <= 1e-6


# ---------------------------------------------------------------- Aff+(R)


def test_aff_compose_examples():
    assert aff_compose(AffinePlus(2, 1), AffinePlus(3, 4)) == AffinePlus(6, 9)
    g = AffinePlus(0.7, -2.5)
    assert aff_compose(g, AffinePlus.identity()) == g
    r1, r2, b1, b2 = 0.3, 1.7, 0.25, -4.0
    c = aff_compose(AffinePlus(np.exp(-r1), b1), AffinePlus(np.exp(-r2), b2))
    assert c.b == pytest.approx(b1 + np.exp(-r1) * b2, abs=1e-15)
    assert c.a == pytest.approx(np.exp(-(r1 + r2)))


def brute_commutator(g1, g2):
    return aff_compose(aff_compose(aff_compose(g1, g2), g1.inverse()), g2.inverse())


def test_aff_commutator_examples():
    c = aff_commutator(AffinePlus(1, 2.0), AffinePlus(0.25, 5.0))
    assert c == AffinePlus(1.0, 2.0 * 0.75)
    assert aff_commutator(AffinePlus(2, 0), AffinePlus(3, 0)).is_identity()
    c = aff_commutator(AffinePlus(0.5, 0), AffinePlus(1, 1))
    d = brute_commutator(AffinePlus(0.5, 0), AffinePlus(1, 1))
    assert c.a == 1.0 and c.b == pytest.approx(-0.5) and d.b == pytest.approx(-0.5)


affines = st.builds(AffinePlus, st.floats(0.05, 20.0), st.floats(-10, 10))


@settings(max_examples=300, deadline=None)
@given(affines, affines, affines)
def test_aff_group_laws(g1, g2, g3):
    a = aff_compose(aff_compose(g1, g2), g3)
    b = aff_compose(g1, aff_compose(g2, g3))
    assert a.a == pytest.approx(b.a, rel=1e-12) and a.b == pytest.approx(b.b, rel=1e-9, abs=1e-9)
    c = aff_commutator(g1, g2)
    assert c.a == 1.0
    d = brute_commutator(g1, g2)
    assert d.a == pytest.approx(1.0, rel=1e-12)
    assert c.b == pytest.approx(d.b, rel=1e-9, abs=1e-9)


def test_affine_rejects_nonpositive_scale():
    with pytest.raises(UsageError):
        AffinePlus(0.0, 1.0)
    with pytest.raises(UsageError):
        AffinePlus(-1.0, 1.0)


def test_monodromy_examples():
    v = monodromy_classify([AffinePlus(0.5, 0), AffinePlus(1 / 3, 0)])
    assert v.twisted_hamiltonian and v.conjugating_offset == pytest.approx(0.0)
    v = monodromy_classify([AffinePlus(0.5, 0.5), AffinePlus(0.25, 0.75)])
    assert v.twisted_hamiltonian and v.conjugating_offset == pytest.approx(1.0)
    assert not monodromy_classify([AffinePlus(0.5, 0), AffinePlus(1, 1)]).twisted_hamiltonian
    with pytest.raises(PreconditionError):
        monodromy_classify([AffinePlus(1, 1), AffinePlus(1, 2)])


def common_fixed_point_oracle(gens, tol=1e-9):
    fixed = [g.b / (1 - g.a) for g in gens if g.a != 1.0]
    t = fixed[0]
    return all(abs(g(t) - t) <= tol * max(1.0, abs(t)) for g in gens)


@settings(max_examples=500, deadline=None)
@given(st.data())
def test_monodromy_matches_fixed_point_oracle(data):
    k = data.draw(st.integers(2, 4))
    shared = data.draw(st.booleans())
    t0 = data.draw(st.sampled_from([0.0, 1.0, -2.0, 0.5]))
    gens = []
    for i in range(k):
        a = data.draw(st.sampled_from([0.25, 0.5, 1.0, 2.0, 4.0]))
        if i == 0 and a == 1.0:
            a = 0.5
        if shared:
            b = t0 * (1 - a)
        else:
            b = data.draw(st.sampled_from([-1.0, 0.0, 0.5, 1.0, 3.0]))
        gens.append(AffinePlus(a, b))
    assert monodromy_classify(gens).twisted_hamiltonian == common_fixed_point_oracle(gens)
