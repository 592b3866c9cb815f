import math

import numpy as np
import pytest
from scipy.special import binom, eval_gegenbauer

from netconstruct.errors import ConstructionError, ShapeError
from netconstruct.harmonic import (
    HarmonicActivation,
    HarmonicNet,
    HarmonicTerm,
    OrthProjection,
    differentiate_via_bias,
    dim_hp,
    eval_harmonic_net,
    fundamental_system_det,
    gegenbauer,
    homogeneous_decompose,
    hp_basis,
    is_harmonic,
    random_harmonic_net,
    random_orthogonal,
    random_sphere_points,
    rotation_average,
    rotation_span_rank,
    verify_network_harmonic,
    zonal_harmonic,
)
from netconstruct.numerics import MPoly, laplacian_fd, symbolic_laplacian

E3 = np.eye(3)


SADDLE = MPoly(3, {(2, 0, 0): 1.0, (0, 2, 0): -1.0})


# -- networks ------------------------------------------------------------------------


def test_projection_must_be_orthonormal():
    OrthProjection(E3[:2])
    with pytest.raises(ConstructionError):
        OrthProjection(2 * E3[:2])
    with pytest.raises(ShapeError):
        OrthProjection(np.eye(3)[:, :2])


def test_eval_examples():
    act = HarmonicActivation.named("u2-v2")
    net = HarmonicNet(act, (HarmonicTerm(1.0, 1.0, E3[:2], [0.0, 0.0]),))
    assert eval_harmonic_net(net, [3.0, 1.0, 7.0]) == 8.0
    const = HarmonicNet(act, (HarmonicTerm(1.0, 0.0, E3[:2], [2.0, 1.0]),))
    x = np.random.default_rng(0).uniform(-1, 1, (5, 3))
    assert np.all(const(x) == 3.0)
    with pytest.raises(ShapeError):
        net(np.zeros(4))


def test_eval_matches_direct_composition(rng):
    act = HarmonicActivation.named("exp-cos")
    net = random_harmonic_net(rng, act, 4, 3)
    x = rng.uniform(-1, 1, 4)
    direct = 0.0
    for t in net.terms:
        u, v = t.rho * (t.P.P @ x) + t.b
        direct += t.a * math.exp(u) * math.cos(v)
    assert abs(net(x) - direct) <= 1e-14


def test_random_orthogonal(rng):
    for d in (2, 3, 5):
        q = random_orthogonal(rng, d)
        assert np.allclose(q @ q.T, np.eye(d), atol=1e-14) and np.linalg.det(q) == pytest.approx(1.0)


@pytest.mark.parametrize("name", ["u2-v2", "u3-3uv2", "exp-cos"])
def test_named_activations_are_harmonic(name, rng):
    act = HarmonicActivation.named(name)
    assert act.is_harmonic()
    for d in (3, 4, 5):
        net = random_harmonic_net(rng, act, d, 4)
        assert verify_network_harmonic(net, rng.uniform(-1, 1, (100, d)), 1e-3) <= 1e-5


def test_quadratic_activation_laplacian_is_roundoff(rng):
    net = random_harmonic_net(rng, HarmonicActivation.named("u2-v2"), 3, 5)
    assert verify_network_harmonic(net, rng.uniform(-1, 1, (50, 3)), 1e-2) <= 1e-10


def test_negative_control(rng):
    act = HarmonicActivation.named("u2")
    assert act.is_harmonic() is False
    t = HarmonicTerm(0.7, 1.3, random_orthogonal(rng, 3)[:2], [0.1, -0.2])
    net = HarmonicNet(act, (t,))
    lap = laplacian_fd(net, rng.uniform(-1, 1, (10, 3)), 1e-3)
    assert np.allclose(lap, 2 * 1.3**2 * 0.7, rtol=1e-5)


# -- Gegenbauer and zonal harmonics ---------------------------------------------------


@pytest.mark.parametrize("lam", [0.5, 1.0, 1.5, 2.5])
def test_gegenbauer_matches_scipy(lam):
    t = np.linspace(-1, 1, 21)
    for n in range(8):
        assert np.allclose(gegenbauer(n, lam, t), eval_gegenbauer(n, lam, t), rtol=1e-13, atol=1e-13)


def test_gegenbauer_examples():
    assert gegenbauer(0, 0.7, 0.3) == 1.0
    t = np.linspace(-1, 1, 7)
    assert np.allclose(gegenbauer(2, 0.5, t), (3 * t**2 - 1) / 2)
    for n in range(7):
        for lam in (0.5, 1.0, 2.0):
            assert gegenbauer(n, lam, 1.0) == pytest.approx(binom(n + 2 * lam - 1, n), rel=1e-13)
    with pytest.raises(ValueError):
        gegenbauer(2, 0.0, 0.5)


def test_zonal_examples(rng):
    x = rng.uniform(-1, 1, (10, 3))
    assert np.all(zonal_harmonic(0, 3, E3[0], x) == 1.0)
    assert zonal_harmonic(2, 3, E3[0], [1.0, 0.0, 0.0]) == pytest.approx(1.0)
    r2 = np.sum(x**2, axis=1)
    assert np.allclose(zonal_harmonic(2, 3, E3[0], x), (3 * x[:, 0] ** 2 - r2) / 2)
    with pytest.raises(ValueError):
        zonal_harmonic(2, 3, [1.0, 1.0, 0.0], x)


@pytest.mark.parametrize("d,n", [(3, 2), (3, 4), (4, 3), (5, 2)])
def test_zonal_extension_is_harmonic(d, n, rng):
    y = random_sphere_points(rng, 1, d)[0]
    lap = laplacian_fd(lambda x: zonal_harmonic(n, d, y, x), rng.uniform(-1, 1, (50, d)), 1e-3)
    assert np.max(np.abs(lap)) <= 1e-5


def test_zonal_agrees_with_gegenbauer_on_sphere(rng):
    y = random_sphere_points(rng, 1, 4)[0]
    x = random_sphere_points(rng, 20, 4)
    assert np.allclose(zonal_harmonic(3, 4, y, x), gegenbauer(3, 1.0, x @ y), atol=1e-13)


# -- harmonic homogeneous polynomials ------------------------------------------------


def test_hp_dimensions():
    assert [len(hp_basis(3, j)) for j in range(7)] == [2 * j + 1 for j in range(7)]
    assert len(hp_basis(2, 2)) == 2
    for d in (1, 2, 3, 4, 5):
        assert len(hp_basis(d, 1)) == d
        for j in range(5):
            assert len(hp_basis(d, j)) == dim_hp(d, j)


def test_hp_basis_elements_are_harmonic_and_homogeneous():
    for d, j in ((2, 3), (3, 4), (4, 2)):
        for p in hp_basis(d, j):
            assert p.is_homogeneous and p.degree == j
            assert not symbolic_laplacian(p).prune(1e-12).terms


def test_homogeneous_decompose(rng):
    x = MPoly.variable(0, 1)
    parts = homogeneous_decompose(1 + x + x * x)
    assert len(parts) == 3 and sum(parts[1:], parts[0]) == 1 + x + x * x
    assert homogeneous_decompose(MPoly(2, {})) == []
    p = MPoly(3, {})
    for j in range(4):
        for q in hp_basis(3, j):
            p = p + q * rng.uniform(-1, 1)
    assert is_harmonic(p)
    assert all(is_harmonic(part) for part in homogeneous_decompose(p))


# -- rotations --------------------------------------------------------------------------


def test_rotation_average_about_e1(rng):
    f = rotation_average(SADDLE, E3[0])
    x = rng.uniform(-1, 1, (50, 3))
    expected = (2 * x[:, 0] ** 2 - x[:, 1] ** 2 - x[:, 2] ** 2) / 2
    assert np.max(np.abs(f(x) - expected)) <= 1e-10


def test_rotation_average_about_e3_vanishes(rng):
    f = rotation_average(SADDLE, E3[2])
    assert f.terms == {} or np.max(np.abs(f(rng.uniform(-1, 1, (50, 3))))) <= 1e-12


def test_rotation_average_linear(rng):
    y = random_sphere_points(rng, 1, 3)[0]
    p = MPoly(3, {(1, 0, 0): 0.3, (0, 1, 0): -1.2, (0, 0, 1): 0.5})
    f = rotation_average(p, y)
    x = rng.uniform(-1, 1, (10, 3))
    assert np.allclose(f(x), (x @ y) * p(y), atol=1e-13)


def test_rotation_average_preconditions():
    with pytest.raises(ConstructionError):
        rotation_average(SADDLE, E3[0], K=4)
    with pytest.raises(ValueError):
        rotation_average(SADDLE, [1.0, 1.0, 0.0])
    with pytest.raises(ConstructionError):
        rotation_average(MPoly(2, {(2, 0): 1.0}), E3[0])


def test_rotation_span_rank():
    assert rotation_span_rank(SADDLE, 3, 2, 12, seed=11) == 5
    assert rotation_span_rank(MPoly.variable(0, 3), 3, 1, 6, seed=11) == 3
    for j in range(1, 5):
        p = hp_basis(3, j)[0]
        assert rotation_span_rank(p, 3, j, 3 * (2 * j + 1), seed=3) == 2 * j + 1


def test_rotation_span_rank_preconditions():
    with pytest.raises(ConstructionError):
        rotation_span_rank(MPoly(3, {}), 3, 2, 12, 0)
    with pytest.raises(ConstructionError):
        rotation_span_rank(MPoly(3, {(2, 0, 0): 1.0}), 3, 2, 12, 0)
    with pytest.raises(ConstructionError):
        rotation_span_rank(SADDLE + MPoly.variable(0, 3), 3, 2, 12, 0)


def test_fundamental_system(rng):
    assert fundamental_system_det(E3[:1], 0) == 1.0
    pts = random_sphere_points(np.random.default_rng(4), 5, 3)
    assert fundamental_system_det(pts, 2) > 0
    rep = np.vstack([pts[:4], pts[:1]])
    assert abs(fundamental_system_det(rep, 2)) <= 1e-12
    with pytest.warns(RuntimeWarning):
        fundamental_system_det(pts[:3], 2)


# -- bias differentiation -------------------------------------------------------------


def test_bias_derivative_polynomial(rng):
    p = MPoly(2, {(2, 0): 1.0, (0, 2): -1.0})
    diff = differentiate_via_bias(p, 0, 1e-5)
    assert diff.exact == MPoly(2, {(1, 0): 2.0})
    x = rng.uniform(-1, 1, (100, 2))
    assert np.max(np.abs(diff.fd(x) - diff.exact(x))) <= 1e-4
    assert differentiate_via_bias(MPoly.constant(3.0, 2), 1).exact.terms == {}


def test_bias_derivative_network_stays_harmonic(rng):
    net = random_harmonic_net(rng, HarmonicActivation.named("u3-3uv2"), 3, 3)
    diff = differentiate_via_bias(net, 1, 1e-5)
    x = rng.uniform(-1, 1, (30, 3))
    assert np.max(np.abs(diff.fd(x) - diff.exact(x))) <= 1e-3
    assert verify_network_harmonic(diff.fd, x, 1e-3) <= 1e-3
    assert verify_network_harmonic(diff.exact, x, 1e-3) <= 1e-6
