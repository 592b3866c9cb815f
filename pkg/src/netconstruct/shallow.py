"""Shallow networks and the finite-difference monomial/polynomial builders."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import CancellationWarning, ConstructionError, FieldMismatchError, ShapeError
from .numerics import (
    Activation,
    FieldTag,
    MPoly,
    _as_points,
    activation_coefficient,
    as_field_array,
    forward_difference_weights,
    product_range,
    smallest_nonzero_order,
)

DEFAULT_STEP = 1e-3
MIN_PURE_COEFFICIENT = 1e-30


@dataclass(eq=False)
class ShallowNet:
    """``z -> sum_k a_k sigma(<w_k, z> + b_k)`` with ``<w, z> = sum_i conj(w_i) z_i``.

    The field is the activation's field.
    """

    activation: Activation
    a: np.ndarray
    w: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        f = self.activation.field
        self.a = as_field_array(self.a, f, what="outer weights").ravel()
        self.w = as_field_array(self.w, f, what="inner weights")
        self.b = as_field_array(self.b, f, what="biases").ravel()
        if self.w.ndim == 1:
            self.w = self.w[:, None]
        n = self.a.size
        if n < 1:
            raise ShapeError("a shallow network needs at least one neuron")
        if self.w.ndim != 2 or self.w.shape[0] != n or self.b.size != n:
            raise ShapeError(f"inconsistent neuron arrays: a{self.a.shape} w{self.w.shape} b{self.b.shape}")

    @property
    def field(self) -> FieldTag:
        return self.activation.field

    @property
    def dim(self) -> int:
        return self.w.shape[1]

    @property
    def n_neurons(self) -> int:
        return self.a.size

    def __call__(self, z, backend=None):
        return eval_shallow(self, z, backend=backend)

    def scaled(self, c) -> "ShallowNet":
        return ShallowNet(self.activation, self.a * c, self.w, self.b)

    def concat(self, other: "ShallowNet") -> "ShallowNet":
        if other.activation != self.activation:
            raise FieldMismatchError("cannot concatenate networks with different activations")
        if other.dim != self.dim:
            raise ShapeError("cannot concatenate networks of different input dimension")
        return ShallowNet(self.activation, np.concatenate([self.a, other.a]),
                          np.vstack([self.w, other.w]), np.concatenate([self.b, other.b]))

    def embed(self, dim: int, axis: int = 0) -> "ShallowNet":
        """Lift a one-dimensional network to ``dim`` inputs along coordinate ``axis``."""
        if self.dim != 1:
            raise ShapeError("only one-dimensional networks can be embedded")
        w = np.zeros((self.n_neurons, dim), dtype=self.w.dtype)
        w[:, axis] = self.w[:, 0]
        return ShallowNet(self.activation, self.a, w, self.b)


def eval_shallow(net: ShallowNet, z, backend=None):
    """Evaluate at a point ``(d,)`` or a batch ``(N, d)``."""
    pts, single = _as_points(z, net.dim, net.field)
    out = kernels.shallow_forward(net.activation, net.a, net.w.conj(), net.b, pts, backend=backend)
    return out[0] if single else out


def _require_series(act: Activation):
    if not act.has_power_series:
        raise ConstructionError(f"{act.family} activation has no power series; use the ReLU builders")


def _warn_cancellation(order: int, step: float):
    if order > 6 or abs(step) < 1e-4:
        warnings.warn(f"difference quotient of order {order} with step {step:g} loses roughly "
                      f"{order * -math.log10(abs(step)):.0f} digits to cancellation",
                      CancellationWarning, stacklevel=3)


def build_monomial_1d(act: Activation, m: int, gamma: float = DEFAULT_STEP, pure: bool = False) -> ShallowNet:
    """``m + 1`` neurons whose output tends to ``alpha_m z^m`` as ``gamma -> 0``.

    Neuron ``l`` has inner weight ``l*gamma``, zero bias and outer weight
    ``(-1)^(m-l) C(m,l) / (gamma^m m!)``.  With ``pure=True`` the outer
    weights are divided by ``alpha_m`` so the target is ``z^m`` itself.
    """
    _require_series(act)
    if m < 0:
        raise ConstructionError("degree must be non-negative")
    if gamma == 0:
        raise ConstructionError("step gamma must be nonzero")
    _warn_cancellation(m, gamma)
    scale = 1.0 / (gamma**m * math.factorial(m))
    if pure:
        alpha = activation_coefficient(act, m)
        if abs(alpha) < MIN_PURE_COEFFICIENT:
            raise ConstructionError(f"alpha_{m} = 0; use build_monomial_via_higher")
        scale /= alpha
    l = np.arange(m + 1)
    return ShallowNet(act, forward_difference_weights(m) * scale, (l * gamma)[:, None], np.zeros(m + 1))


def build_monomial_via_higher(act: Activation, m: int, M: int, beta: float = DEFAULT_STEP,
                              gamma: float = DEFAULT_STEP) -> ShallowNet:
    """Approximate ``z^m`` through a higher nonzero coefficient ``alpha_M``.

    Uses ``z^m = m!/M! d^(M-m)/dz^(M-m) z^M``: an ``(M-m)``-th difference in
    the shift ``n*beta`` of the order-``M`` difference quotient of
    ``sigma(l*gamma*(z + n*beta))``.  The result has ``(M+1)(M-m+1)`` neurons and
    converges as ``gamma -> 0`` first, then ``beta -> 0``.
    """
    _require_series(act)
    if not 0 <= m <= M:
        raise ConstructionError("need 0 <= m <= M")
    if beta == 0 or gamma == 0:
        raise ConstructionError("steps must be nonzero")
    alpha = activation_coefficient(act, M)
    if abs(alpha) < MIN_PURE_COEFFICIENT:
        raise ConstructionError(f"alpha_{M} = 0")
    _warn_cancellation(M, gamma)
    pre = math.factorial(m) / (alpha * math.factorial(M) ** 2 * beta ** (M - m) * gamma**M)
    cl = forward_difference_weights(M)
    dn = forward_difference_weights(M - m)
    n_idx, l_idx = np.meshgrid(np.arange(M - m + 1), np.arange(M + 1), indexing="ij")
    n_idx, l_idx = n_idx.ravel(), l_idx.ravel()
    a = pre * dn[n_idx] * cl[l_idx]
    w = l_idx * gamma
    b = l_idx * gamma * n_idx * beta
    return ShallowNet(act, a, w[:, None], b)


def build_monomial_multi(act: Activation, idx, beta: float = DEFAULT_STEP, gamma: float = DEFAULT_STEP) -> ShallowNet:
    """Approximate ``z_1^m_1 ... z_d^m_d`` by a shallow network.

    The monomial is ``1/mbar!`` times the mixed ``(m_1, ..., m_d)`` difference
    in ``h`` of ``(h . z)^mbar``; that difference is exact for this
    homogeneous polynomial of degree ``mbar`` so it is taken over the integer
    lattice ``h = k``.  Each slice ``(k . z)^mbar`` comes from
    :func:`build_monomial_via_higher`.
    """
    _require_series(act)
    idx = tuple(int(e) for e in idx)
    mbar = sum(idx)
    if mbar < 1 or any(e < 0 for e in idx):
        raise ConstructionError("multi-index must have positive total degree; use build_monomial_1d for constants")
    if act.is_polynomial and act.degree < mbar:
        raise ConstructionError(f"polynomial activation of degree {act.degree} only spans degree <= {act.degree}")
    M = smallest_nonzero_order(act, mbar)
    base = build_monomial_via_higher(act, mbar, M, beta, gamma)
    inv = 1.0 / math.factorial(mbar)
    a_parts, w_parts, b_parts = [], [], []
    for k in product_range(idx):
        c = inv
        for mi, ki in zip(idx, k):
            c *= (-1) ** (mi - ki) * math.comb(mi, ki)
        a_parts.append(base.a * c)
        w_parts.append(base.w[:, :1] * np.asarray(k, dtype=float)[None, :])
        b_parts.append(base.b)
    return ShallowNet(act, np.concatenate(a_parts), np.vstack(w_parts), np.concatenate(b_parts))


def build_polynomial(act: Activation, p: MPoly, beta: float = DEFAULT_STEP, gamma: float = DEFAULT_STEP) -> ShallowNet:
    """Sum of per-monomial builders with the coefficients folded into the outer weights."""
    _require_series(act)
    if p.field is not act.field:
        raise FieldMismatchError("polynomial and activation fields differ")
    if act.is_polynomial and p.degree > act.degree:
        raise ConstructionError(f"degree {p.degree} exceeds the activation degree {act.degree}")
    d = p.dim
    if not p.terms:
        return ShallowNet(act, [0.0], np.zeros((1, d)), [0.0])
    net = None
    for idx, c in sorted(p.terms.items(), key=lambda kv: (sum(kv[0]), kv[0])):
        deg = sum(idx)
        if d == 1 or deg == 0:
            piece = build_monomial_via_higher(act, deg, smallest_nonzero_order(act, deg), beta, gamma)
            if d > 1:
                piece = piece.embed(d)
        else:
            piece = build_monomial_multi(act, idx, beta, gamma)
        piece = piece.scaled(c)
        net = piece if net is None else net.concat(piece)
    return net


def truncate_to_polynomial(net: ShallowNet, cutoff: int) -> MPoly:
    """``sum_k a_k sum_{j <= cutoff} alpha_j (<w_k, z> + b_k)^j`` expanded."""
    act = net.activation
    _require_series(act)
    alphas = [activation_coefficient(act, j) for j in range(cutoff + 1)]
    result = MPoly(net.dim, {}, net.field)
    for a, w, b in zip(net.a, net.w, net.b):
        lin = MPoly.affine(w.conj(), b, net.field)
        acc = MPoly.constant(alphas[-1], net.dim, net.field)
        for alpha in reversed(alphas[:-1]):
            acc = acc * lin + alpha
        result = result + acc * a
    return result


def random_shallow(rng: np.random.Generator, act: Activation, dim: int, n: int, scale: float = 1.0) -> ShallowNet:
    """Random network with entries uniform in ``[-scale, scale]`` (and imaginary parts over C)."""
    def draw(*shape):
        x = rng.uniform(-scale, scale, size=shape)
        if act.field is FieldTag.COMPLEX:
            x = x + 1j * rng.uniform(-scale, scale, size=shape)
        return x

    return ShallowNet(act, draw(n), draw(n, dim), draw(n))
