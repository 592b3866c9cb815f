import math

import numpy as np
import pytest

from netconstruct.errors import CancellationWarning, ConstructionError, FieldMismatchError, ShapeError
from netconstruct.numerics import Activation, BoxGrid, FieldTag, MPoly, eval_mpoly, sup_norm_diff
from netconstruct.shallow import (
    ShallowNet,
    build_monomial_1d,
    build_monomial_multi,
    build_monomial_via_higher,
    build_polynomial,
    eval_shallow,
    random_shallow,
    truncate_to_polynomial,
)

R, C = FieldTag.REAL, FieldTag.COMPLEX
EXP = Activation.named("exp")


def _exp_quotient(z, m, gamma):
    # closed form of the order-m exp network: ((e^{gamma z} - 1) / gamma)^m / m!
    return (np.expm1(gamma * z) / gamma) ** m / math.factorial(m)


def test_single_neuron_example(backend):
    net = ShallowNet(Activation.polynomial((0, 0, 1)), [2.0], [[1.0]], [0.0])
    assert eval_shallow(net, [3.0], backend=backend) == 18.0


def test_conjugated_inner_product():
    act = Activation.polynomial((0, 1), C)
    net = ShallowNet(act, [1.0], [[1j]], [0.0])
    # <w, z> = conj(i) * z = -i z
    assert net([2.0 + 0j]) == pytest.approx(-2j)


def test_shape_errors():
    with pytest.raises(ShapeError):
        ShallowNet(EXP, [1.0, 2.0], [[1.0]], [0.0])
    with pytest.raises(FieldMismatchError):
        ShallowNet(EXP, [1j], [[1.0]], [0.0])
    net = ShallowNet(EXP, [1.0], [[1.0, 2.0]], [0.0])
    with pytest.raises(ShapeError):
        net(np.zeros((3, 3)))


def test_backends_agree(rng, field):
    backends = pytest.importorskip("netconstruct.kernels").available_backends()
    for name in ("exp", "sin", "cosh"):
        act = Activation.named(name, field)
        net = random_shallow(rng, act, 3, 7)
        z = rng.uniform(-1, 1, (50, 3))
        if field is C:
            z = z + 1j * rng.uniform(-1, 1, (50, 3))
        outs = [net(z, backend=b) for b in backends]
        for o in outs[1:]:
            assert np.max(np.abs(o - outs[0])) <= 1e-13 * (1 + np.max(np.abs(outs[0])))


def test_monomial_identity_activation_exact():
    act = Activation.polynomial((0, 1))
    net = build_monomial_1d(act, 1, 0.5)
    z = np.linspace(-1, 1, 11)[:, None]
    assert np.max(np.abs(net(z) - z[:, 0])) <= 1e-15


def test_monomial_matches_closed_form(backend):
    z = np.linspace(-1, 1, 201)
    for m in (1, 2, 3):
        for gamma in (1e-2, 5e-3):
            net = build_monomial_1d(EXP, m, gamma)
            err = np.max(np.abs(net(z[:, None], backend=backend) - _exp_quotient(z, m, gamma)))
            # rounding in the alternating sum grows like eps / gamma^m
            assert err <= 100 * np.finfo(float).eps / gamma**m


def test_monomial_error_values():
    # frozen from the closed form at z = 1: (((e^g - 1)/g)^2 - 1) / 2
    grid = BoxGrid.cube(1)
    net = build_monomial_1d(EXP, 2, 1e-2)
    err = sup_norm_diff(net, lambda x: x[:, 0] ** 2 / 2, grid)
    assert err == pytest.approx(0.0050292921005166, rel=1e-8)
    assert err == pytest.approx((math.expm1(1e-2) / 1e-2) ** 2 / 2 - 0.5, rel=1e-8)


def test_monomial_pure_divides_by_alpha():
    net = build_monomial_1d(Activation.named("sin"), 3, 1e-2, pure=True)
    z = np.linspace(-1, 1, 41)[:, None]
    assert np.max(np.abs(net(z) - z[:, 0] ** 3)) <= 5e-2
    with pytest.raises(ConstructionError):
        build_monomial_1d(Activation.named("sin"), 2, 1e-2, pure=True)


def test_monomial_rejects_relu_and_bad_steps():
    with pytest.raises(ConstructionError):
        build_monomial_1d(Activation.named("relu"), 2)
    with pytest.raises(ConstructionError):
        build_monomial_1d(EXP, 2, 0.0)
    with pytest.raises(ConstructionError):
        build_monomial_1d(EXP, -1)


def test_cancellation_warning():
    with pytest.warns(CancellationWarning):
        build_monomial_1d(EXP, 8, 1e-2)
    with pytest.warns(CancellationWarning):
        build_monomial_1d(EXP, 2, 1e-5)


def test_via_higher_neuron_count_and_accuracy():
    sin = Activation.named("sin")
    net = build_monomial_via_higher(sin, 2, 3, beta=1e-2, gamma=1e-2)
    assert net.n_neurons == 4 * 2
    z = np.linspace(-1, 1, 41)
    assert np.max(np.abs(net(z[:, None]) - z**2)) <= 5e-2


def test_via_higher_reduces_to_1d_when_equal():
    a = build_monomial_via_higher(EXP, 2, 2, 1e-2, 1e-2)
    b = build_monomial_1d(EXP, 2, 1e-2, pure=True)
    z = np.linspace(-1, 1, 21)[:, None]
    assert np.max(np.abs(a(z) - b(z))) <= 1e-12


def test_monomial_multi():
    net = build_monomial_multi(EXP, (1, 1), 1e-3, 1e-3)
    grid = BoxGrid.cube(2, samples=21)
    assert sup_norm_diff(net, lambda x: x[:, 0] * x[:, 1], grid) <= 1e-2
    with pytest.raises(ConstructionError):
        build_monomial_multi(EXP, (0, 0))
    with pytest.raises(ConstructionError):
        build_monomial_multi(Activation.polynomial((0, 0, 1)), (2, 1))


def test_polynomial_constant_example():
    p = MPoly.constant(7.0, 1)
    net = build_polynomial(EXP, p)
    z = np.linspace(-1, 1, 5)[:, None]
    assert np.max(np.abs(net(z) - 7.0)) <= 1e-12


def test_polynomial_complex_example():
    p = MPoly(1, {(2,): 3.0}, C)
    net = build_polynomial(Activation.named("exp", C), p, 1e-3, 1e-3)
    grid = BoxGrid.cube(1, 1.0, C, samples=21)
    assert sup_norm_diff(net, p, grid) <= 3e-2


def test_polynomial_two_variables():
    p = MPoly(2, {(0, 0): 1.0, (1, 0): -2.0, (1, 1): 0.5, (0, 2): 1.5})
    net = build_polynomial(EXP, p, 1e-3, 1e-3)
    grid = BoxGrid.cube(2, samples=21)
    assert sup_norm_diff(net, p, grid) <= 3e-2


def test_polynomial_field_and_degree_checks():
    with pytest.raises(FieldMismatchError):
        build_polynomial(EXP, MPoly(1, {(1,): 1.0}, C))
    with pytest.raises(ConstructionError):
        build_polynomial(Activation.polynomial((0, 0, 1)), MPoly(1, {(3,): 1.0}))


def test_truncation_examples():
    sq = Activation.polynomial((0, 0, 1))
    net = ShallowNet(sq, [1.0], [[2.0, -1.0]], [0.5])
    p = truncate_to_polynomial(net, 2)
    lin = MPoly.affine([2.0, -1.0], 0.5)
    assert p == lin * lin
    q = truncate_to_polynomial(random_shallow(np.random.default_rng(1), EXP, 2, 4), 0)
    assert q.degree <= 0


def test_truncation_matches_eval_for_cubic_activation(rng, field):
    act = Activation.polynomial((0, 0, 0, 1), field)
    for _ in range(5):
        net = random_shallow(rng, act, 2, 4)
        z = rng.uniform(-1, 1, (30, 2))
        if field is C:
            z = z + 1j * rng.uniform(-1, 1, (30, 2))
        ref = net(z)
        got = eval_mpoly(truncate_to_polynomial(net, 3), z)
        assert np.max(np.abs(got - ref)) <= 1e-12 * np.max(np.abs(ref))


def test_embed_and_concat():
    net = build_monomial_1d(EXP, 1, 1e-2).embed(3, axis=2)
    assert net.dim == 3 and np.all(net.w[:, :2] == 0)
    both = net.concat(net.scaled(-1.0))
    x = np.random.default_rng(3).uniform(-1, 1, (10, 3))
    assert np.max(np.abs(both(x))) <= 1e-12
    with pytest.raises(ShapeError):
        net.embed(4)
