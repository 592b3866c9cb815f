import os
import subprocess
import sys

import numpy as np
import pytest

from netconstruct import kernels
from netconstruct.numerics import Activation, FieldTag
from netconstruct.shallow import random_shallow


def test_default_backend_listed():
    assert kernels.BACKEND in kernels.available_backends()
    assert "python" in kernels.available_backends()


def test_pure_python_env_forces_fallback():
    env = dict(os.environ, NETCONSTRUCT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import netconstruct; print(netconstruct.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("name", ["exp", "sin", "cos", "sinh", "cosh", "relu", "leaky_relu"])
def test_real_families_match_numpy(name, backend, rng):
    act = Activation.named(name)
    net = random_shallow(rng, act, 2, 5)
    z = rng.uniform(-2, 2, (40, 2))
    pre = z @ net.w.T + net.b
    assert np.allclose(net(z, backend=backend), act(pre) @ net.a, rtol=1e-13, atol=1e-13)


def test_polynomial_family_complex(backend, rng):
    act = Activation.polynomial((1 - 1j, 0.5, 0, 2j), FieldTag.COMPLEX)
    net = random_shallow(rng, act, 3, 6)
    z = rng.uniform(-1, 1, (25, 3)) + 1j * rng.uniform(-1, 1, (25, 3))
    pre = z @ net.w.conj().T + net.b
    assert np.allclose(net(z, backend=backend), act(pre) @ net.a, rtol=1e-13, atol=1e-13)


@pytest.mark.skipif("cython" not in kernels.available_backends(), reason="extension not built")
def test_requesting_missing_backend_is_an_error(monkeypatch):
    monkeypatch.setattr(kernels, "_ext", None)
    net = random_shallow(np.random.default_rng(0), Activation.named("exp"), 1, 2)
    with pytest.raises(RuntimeError):
        net(np.zeros((1, 1)), backend="cython")
