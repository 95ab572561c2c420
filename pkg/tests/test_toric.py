import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lcslab import toric
from lcslab.errors import DomainError, PreconditionError, UsageError


def test_flat_cone_blocks():
    m = toric.flat_cone(2)
    assert np.allclose(m.hessian([1.0, 1.0]), 0.5 * np.eye(2))
    rng = np.random.default_rng(0)
    for x in rng.uniform(0.2, 3.0, (20, 2)):
        om, J = toric.omega_J_blocks(m, x)
        assert np.allclose(J @ J, -np.eye(4), atol=1e-12)
        assert np.allclose(J.T @ om @ J, om, atol=1e-12)
        # with these blocks the metric is omega(J ., .) = diag(S, S^-1)
        g = J.T @ om
        assert np.allclose(g, g.T) and np.all(np.linalg.eigvalsh(g) > 0)
    with pytest.raises(DomainError):
        m.hessian([-1.0, 1.0])
    with pytest.raises(UsageError):
        m.hessian([1.0, 1.0, 1.0])


def test_fd_hessian_agrees():
    m = toric.flat_cone(3)
    x = np.array([0.7, 1.3, 2.0])
    assert np.allclose(toric.fd_hessian(m.potential, x), m.hessian(x), atol=1e-6)
    fd = toric.from_potential(m.potential, 3)
    assert np.allclose(fd.hessian(x), m.hessian(x), atol=1e-6)


def test_homogeneity():
    m = toric.flat_cone(2)
    rng = np.random.default_rng(1)
    x = rng.uniform(0.5, 2.0, (50, 2))
    x = x[np.sum(x * x, axis=1) >= 1]
    for xi in x:
        rep = toric.hessian_homogeneity(m, xi, np.linspace(-1, 1, 9))
        assert rep.max_residual <= 1e-10
    # s = sum x_j^3 has S(e^{2t} x) = e^{2t} S(x)
    cube = toric.ActionAngleModel(2, lambda y: float(np.sum(y ** 3)), lambda y: True,
                                  lambda y: np.diag(6 * y))
    assert toric.hessian_homogeneity(cube, [1.0, 1.0], [0.5]).max_residual > 1


def test_holomorphy():
    m = toric.flat_cone(2)
    rng = np.random.default_rng(2)
    grid = rng.uniform(0.5, 2.0, (10, 2))
    for _ in range(20):
        alpha, y0 = rng.uniform(0.05, 2.0), rng.uniform(0, 2 * np.pi, 2)
        assert toric.holomorphy_residual(m, alpha, y0, np.zeros((2, 2)), grid) <= 1e-8
    A = 0.1 * np.eye(2) / np.sqrt(2)
    assert np.linalg.norm(A) == pytest.approx(0.1)
    assert toric.holomorphy_residual(m, 0.3, [0, 0], A, grid) >= 1e-3


def test_holomorphy_needs_homogeneous_potential():
    quad = toric.ActionAngleModel(2, lambda y: float(np.sum(y ** 2)), lambda y: True,
                                  lambda y: 2 * np.eye(2))
    with pytest.raises(PreconditionError):
        toric.holomorphy_residual(quad, 0.3, [0, 0], np.zeros((2, 2)), [[1.0, 1.0]])


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 3), st.integers(1, 4))
def test_omega_rescaling(alpha, rank):
    r = toric.omega_rescaling(alpha, rank=rank)
    assert r.factor == pytest.approx(np.exp(-2 * alpha), rel=1e-10, abs=0)
    assert r.residual <= 1e-12


def test_omega_rescaling_with_shear():
    # symmetric shears keep the form conformal; antisymmetric ones do not
    sym = toric.omega_rescaling(0.4, np.array([[0.1, 0.2], [0.2, 0.0]]))
    assert sym.residual <= 1e-14
    anti = toric.omega_rescaling(0.4, np.array([[0.0, 0.2], [-0.2, 0.0]]))
    assert anti.residual > 1e-3


def test_mapping_torus_compare_examples():
    a = toric.MappingTorusData("S3", 1.0, (0.5, 1.0))
    assert toric.mapping_torus_compare(a, toric.MappingTorusData("S3", 1.0, (0.5 + 2 * np.pi, 1.0))
                                       ).isomorphic
    assert not toric.mapping_torus_compare(a, toric.MappingTorusData("S3", 1.1, (0.5, 1.0))
                                           ).isomorphic
    assert not toric.mapping_torus_compare(a, toric.MappingTorusData("S3", 1.0, (0.6, 1.0))
                                           ).isomorphic
    assert not toric.mapping_torus_compare(a, toric.MappingTorusData("S5", 1.0, (0.5, 1.0))
                                           ).isomorphic
    with pytest.raises(UsageError):
        toric.MappingTorusData("S3", 0.0, (0.0,))


def test_mapping_torus_equivalence():
    rng = np.random.default_rng(3)
    data = [toric.MappingTorusData(str(rng.integers(2)), float(rng.choice([0.5, 1.0])),
                                   tuple(rng.choice([0.0, 1.0], 2) + 2 * np.pi * rng.integers(-2, 3, 2)))
            for _ in range(100)]
    iso = np.array([[toric.mapping_torus_compare(a, b).isomorphic for b in data] for a in data])
    assert np.all(np.diag(iso)) and np.array_equal(iso, iso.T)
    assert np.array_equal((iso.astype(int) @ iso.astype(int) > 0), iso)


def test_user_grid(tmp_path):
    m = toric.flat_cone(2)
    ax = np.linspace(0.5, 3.0, 26)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    S = 0.5 * (X * np.log(X) + Y * np.log(Y))
    path = tmp_path / "grid.csv"
    with open(path, "w") as fh:
        fh.write("x_0,x_1,s\n")
        for a, b, c in zip(X.ravel(), Y.ravel(), S.ravel()):
            fh.write(f"{float(a)!r},{float(b)!r},{float(c)!r}\n")
    g = toric.load_user_grid(path)
    x = np.array([1.3, 1.7])
    assert np.allclose(g.hessian(x), m.hessian(x), atol=1e-2)
    with pytest.raises(DomainError):
        g.hessian([5.0, 1.0])
    with open(path, "a") as fh:
        fh.write("9.0,9.0,1.0\n")
    with pytest.raises(UsageError):
        toric.load_user_grid(path)
