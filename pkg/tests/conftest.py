import numpy as np
import pytest
import sympy as sp

from lcslab import models


@pytest.fixture(scope="session")
def istrati():
    return models.build_istrati()


@pytest.fixture(scope="session")
def hopf():
    return models.build_weighted_hopf((np.log(2.0), np.log(3.0)))


@pytest.fixture(scope="session")
def equal_hopf():
    return models.build_weighted_hopf((1.0, 1.0))


@pytest.fixture(scope="session")
def vaisman(equal_hopf):
    return models.build_vaisman_deformation(equal_hopf, "cos:0.5")


@pytest.fixture(scope="session")
def flat():
    return models.build_flat_torus()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def sym_d(coeffs, xs):
    """Symbolic exterior derivative of a dense antisymmetric coefficient array."""
    coeffs = sp.Array(coeffs)
    k = coeffs.rank()
    m = len(xs)
    if k == 0:
        return sp.Array([sp.diff(coeffs[()], x) for x in xs])
    shape = (m,) * (k + 1)
    out = sp.MutableDenseNDimArray.zeros(*shape)
    import itertools
    for idx in itertools.product(range(m), repeat=k + 1):
        val = 0
        for j in range(k + 1):
            rest = idx[:j] + idx[j + 1:]
            val += (-1) ** j * sp.diff(coeffs[rest], xs[idx[j]])
        out[idx] = sp.simplify(val)
    return out


def sym_wedge1(a, b):
    """Wedge of a 1-form with a k-form (k <= 2), symbolic, determinant convention."""
    import itertools
    b = sp.Array(b)
    k = b.rank()
    m = len(a)
    out = sp.MutableDenseNDimArray.zeros(*((m,) * (k + 1)))
    for idx in itertools.product(range(m), repeat=k + 1):
        val = 0
        for j in range(k + 1):
            rest = idx[:j] + idx[j + 1:]
            val += (-1) ** j * a[idx[j]] * (b[rest] if k else b[()])
        out[idx] = val
    return out


def lambdify_array(expr, xs):
    f = sp.lambdify(xs, sp.Array(expr).tolist(), "numpy")

    def call(x):
        x = np.atleast_2d(x)
        vals = [f(*row) for row in x]
        return np.array(vals, dtype=float)

    return call
