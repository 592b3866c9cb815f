"""Residual, fully connected and DenseNet containers, embeddings and deep polynomial builders."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConstructionError, ShapeError
from .numerics import (
    Activation,
    FieldTag,
    MPoly,
    _as_points,
    as_field_array,
    graded_lex_key,
)
from .shallow import ShallowNet

CONDITIONING_FLOOR = 1e-8


def _mat(x, f: FieldTag, what: str) -> np.ndarray:
    arr = as_field_array(x, f, what=what)
    if arr.ndim != 2:
        raise ShapeError(f"{what} must be a matrix, got shape {arr.shape}")
    return arr


def _vec(x, f: FieldTag, what: str) -> np.ndarray:
    return as_field_array(x, f, what=what).ravel()


# --------------------------------------------------------------------------
# containers
# --------------------------------------------------------------------------


@dataclass(eq=False)
class ResBlock:
    A: np.ndarray  # (d0, D)
    W: np.ndarray  # (D, d0)
    b: np.ndarray  # (D,)

    @property
    def width(self) -> int:
        return self.W.shape[0]


@dataclass(eq=False)
class ResNet:
    """``z0 = A0 z + b0``; ``z_l = z_{l-1} + A_l sigma(W_l z_{l-1} + b_l)``; output ``AL . z``."""

    activation: Activation
    A0: np.ndarray
    b0: np.ndarray
    blocks: list = field(default_factory=list)
    AL: np.ndarray = None

    def __post_init__(self):
        f = self.activation.field
        self.A0 = _mat(self.A0, f, "A0")
        self.b0 = _vec(self.b0, f, "b0")
        self.AL = _vec(self.AL, f, "AL")
        d0 = self.A0.shape[0]
        if self.b0.size != d0 or self.AL.size != d0:
            raise ShapeError("entry bias and exit row must match the inner width")
        blocks = []
        for i, blk in enumerate(self.blocks):
            if not isinstance(blk, ResBlock):
                blk = ResBlock(*blk)
            A, W, b = _mat(blk.A, f, "A"), _mat(blk.W, f, "W"), _vec(blk.b, f, "b")
            D = W.shape[0]
            if D < 1 or A.shape != (d0, D) or W.shape != (D, d0) or b.size != D:
                raise ShapeError(f"block {i + 1} shapes do not chain: A{A.shape} W{W.shape} b{b.shape}")
            blocks.append(ResBlock(A, W, b))
        self.blocks = blocks

    @property
    def field(self) -> FieldTag:
        return self.activation.field

    @property
    def dim(self) -> int:
        return self.A0.shape[1]

    @property
    def inner_width(self) -> int:
        return self.A0.shape[0]

    @property
    def block_widths(self) -> list[int]:
        return [blk.width for blk in self.blocks]

    def __call__(self, z):
        return eval_resnet(self, z)


@dataclass(eq=False)
class Layer:
    A: np.ndarray
    b: np.ndarray


def _check_layers(layers, f: FieldTag, first_in: int, dense: bool) -> list[Layer]:
    out = []
    widths = [first_in]
    for i, layer in enumerate(layers):
        if not isinstance(layer, Layer):
            layer = Layer(*layer)
        A, b = _mat(layer.A, f, "A"), _vec(layer.b, f, "b")
        expected_in = sum(widths) if dense else widths[-1]
        if A.shape[1] != expected_in or A.shape[0] != b.size or b.size < 1:
            raise ShapeError(f"layer {i + 1}: A{A.shape} b{b.shape} does not accept width {expected_in}")
        widths.append(A.shape[0])
        out.append(Layer(A, b))
    if not out or widths[-1] != 1:
        raise ShapeError("network must have at least one layer and scalar output")
    return out


@dataclass(eq=False)
class MLP:
    """``z_l = A_l zhat_{l-1} + b_l``, ``zhat_l = sigma(z_l)`` except after the last layer."""

    activation: Activation
    dim: int
    layers: list

    def __post_init__(self):
        self.layers = _check_layers(self.layers, self.activation.field, self.dim, dense=False)

    @property
    def field(self) -> FieldTag:
        return self.activation.field

    @property
    def widths(self) -> list[int]:
        return [self.dim] + [layer.A.shape[0] for layer in self.layers]

    def __call__(self, z):
        return eval_mlp(self, z)


@dataclass(eq=False)
class DenseNet:
    """Each layer reads the concatenation of the input and all earlier activated states."""

    activation: Activation
    dim: int
    layers: list

    def __post_init__(self):
        self.layers = _check_layers(self.layers, self.activation.field, self.dim, dense=True)

    @property
    def field(self) -> FieldTag:
        return self.activation.field

    @property
    def widths(self) -> list[int]:
        return [self.dim] + [layer.A.shape[0] for layer in self.layers]

    @property
    def read_widths(self) -> list[int]:
        """``n_l = d_0 + ... + d_{l-1}`` for every layer."""
        w = self.widths
        return [sum(w[:i + 1]) for i in range(len(self.layers))]

    def __call__(self, z):
        return eval_densenet(self, z)


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------


def eval_resnet(net: ResNet, z):
    pts, single = _as_points(z, net.dim, net.field)
    state = pts @ net.A0.T + net.b0
    sigma = net.activation
    for blk in net.blocks:
        state = state + sigma(state @ blk.W.T + blk.b) @ blk.A.T
    out = state @ net.AL
    return out[0] if single else out


def eval_mlp(net: MLP, z, trace: bool = False):
    """Evaluate; with ``trace=True`` also return the activated hidden states."""
    pts, single = _as_points(z, net.dim, net.field)
    h = pts
    hidden = []
    last = len(net.layers) - 1
    for i, layer in enumerate(net.layers):
        h = h @ layer.A.T + layer.b
        if i < last:
            h = net.activation(h)
            hidden.append(h)
    out = h[:, 0]
    if single:
        out = out[0]
        hidden = [x[0] for x in hidden]
    return (out, hidden) if trace else out


def eval_densenet(net: DenseNet, z):
    pts, single = _as_points(z, net.dim, net.field)
    states = [pts]
    last = len(net.layers) - 1
    out = None
    for i, layer in enumerate(net.layers):
        pre = np.concatenate(states, axis=1) @ layer.A.T + layer.b
        if i < last:
            states.append(net.activation(pre))
        else:
            out = pre[:, 0]
    return out[0] if single else out


# --------------------------------------------------------------------------
# exact embeddings of shallow networks
# --------------------------------------------------------------------------


def _check_partition(widths: Sequence[int], n: int) -> list[int]:
    widths = [int(w) for w in widths]
    if not widths or any(w < 1 for w in widths) or sum(widths) != n:
        raise ConstructionError(f"widths {widths} must be positive and sum to the neuron count {n}")
    return widths


def resnet_from_shallow(s: ShallowNet, widths: Sequence[int] | None = None) -> ResNet:
    """Exact residual form of ``s`` with inner width ``d + 1``.

    The inputs ride along unchanged in slots ``0..d-1``; block ``l`` adds its
    ``widths[l]`` neurons into the accumulator slot ``d``.
    """
    n, d = s.n_neurons, s.dim
    widths = _check_partition(widths or [n], n)
    dt = s.field.dtype
    A0 = np.vstack([np.eye(d, dtype=dt), np.zeros((1, d), dtype=dt)])
    AL = np.zeros(d + 1, dtype=dt)
    AL[d] = 1
    wc = s.w.conj()
    blocks, start = [], 0
    for D in widths:
        sl = slice(start, start + D)
        A = np.zeros((d + 1, D), dtype=dt)
        A[d] = s.a[sl]
        W = np.hstack([wc[sl], np.zeros((D, 1), dtype=dt)])
        blocks.append(ResBlock(A, W, s.b[sl].copy()))
        start += D
    return ResNet(s.activation, A0, np.zeros(d + 1, dtype=dt), blocks, AL)


def densenet_from_shallow(s: ShallowNet, widths: Sequence[int] | None = None) -> DenseNet:
    """Exact DenseNet: every hidden layer reads only the raw input, the last reads every hidden block."""
    n, d = s.n_neurons, s.dim
    widths = _check_partition(widths or [n], n)
    dt = s.field.dtype
    wc = s.w.conj()
    layers, start, read = [], 0, d
    for D in widths:
        sl = slice(start, start + D)
        A = np.zeros((D, read), dtype=dt)
        A[:, :d] = wc[sl]
        layers.append(Layer(A, s.b[sl].copy()))
        read += D
        start += D
    last = np.zeros((1, read), dtype=dt)
    last[0, d:] = s.a
    layers.append(Layer(last, np.zeros(1, dtype=dt)))
    return DenseNet(s.activation, d, layers)


def densenet_from_mlp(m: MLP) -> DenseNet:
    """Exact DenseNet whose layer ``l`` reads only the block produced by layer ``l-1``."""
    dt = m.field.dtype
    layers, read = [], 0
    for layer in m.layers:
        prev = layer.A.shape[1]
        A = np.hstack([np.zeros((layer.A.shape[0], read), dtype=dt), layer.A])
        layers.append(Layer(A, layer.b.copy()))
        read += prev
    return DenseNet(m.activation, m.dim, layers)


def locate_base_point(act: Activation, order: int, lo: float = -2.0, hi: float = 2.0, samples: int = 101) -> float:
    """Grid point in ``[lo, hi]`` maximizing the finite-difference ``|sigma^(order)|``.

    Ties go to the point nearest the origin.
    """
    grid = np.linspace(lo, hi, samples)
    grid = grid[np.argsort(np.abs(grid), kind="stable")]
    h = 1e-3
    if order == 1:
        vals = (act(grid + h) - act(grid - h)) / (2 * h)
    else:
        vals = (act(grid + h) - 2 * act(grid) + act(grid - h)) / h**2
    mag = np.abs(vals)
    best = int(np.argmax(mag >= mag.max() * (1 - 1e-9)))
    return float(grid[best])


def mlp_from_shallow(s: ShallowNet, widths: Sequence[int], eps: float = 1e-3, zstar: float | None = None) -> MLP:
    """Fully connected network of widths ``d + 1 + m_l`` approximating ``s`` as ``eps -> 0``.

    Affine data passes through each activation as ``sigma(z* + eps t) ~ c0 + c1 eps t``
    and is recovered by the next linear map.  Slot layout per hidden layer:
    ``[accumulator, m_l neurons, d input lanes]``.
    """
    act = s.activation
    if not act.has_power_series:
        raise ConstructionError("ReLU networks are embedded exactly by mlp_exact_from_shallow_relu")
    if act.is_constant:
        raise ConstructionError("activation is constant")
    n, d = s.n_neurons, s.dim
    widths = _check_partition(widths, n)
    if zstar is None:
        zstar = locate_base_point(act, 1)
    c0 = complex(act(zstar)) if s.field is FieldTag.COMPLEX else float(act(zstar))
    c1 = complex(act.derivative(zstar, 1)) if s.field is FieldTag.COMPLEX else float(act.derivative(zstar, 1))
    if abs(c1 * eps) < CONDITIONING_FLOOR:
        raise ConstructionError(f"|sigma'(z*) * eps| = {abs(c1 * eps):.3g} is below {CONDITIONING_FLOOR:g}; "
                                "the recovery maps would be ill conditioned")
    dt = s.field.dtype
    wc = s.w.conj()
    starts = np.concatenate([[0], np.cumsum(widths)])
    layers = []

    # first layer reads the raw input
    m1 = widths[0]
    A = np.zeros((1 + m1 + d, d), dtype=dt)
    A[1:1 + m1] = wc[:m1]
    A[1 + m1:] = eps * np.eye(d)
    b = np.concatenate([[zstar], s.b[:m1], np.full(d, zstar)]).astype(dt)
    layers.append(Layer(A, b))

    inv = 1.0 / (c1 * eps)
    for ell in range(1, len(widths) + 1):
        m_prev = widths[ell - 1]
        prev_a = s.a[starts[ell - 1]:starts[ell]]
        in_prev = slice(1 + m_prev, 1 + m_prev + d)
        width_in = 1 + m_prev + d
        if ell == len(widths):
            A = np.zeros((1, width_in), dtype=dt)
            A[0, 0] = inv
            A[0, 1:1 + m_prev] = prev_a
            layers.append(Layer(A, np.array([-c0 * inv], dtype=dt)))
            break
        m_new = widths[ell]
        sl = slice(starts[ell], starts[ell + 1])
        A = np.zeros((1 + m_new + d, width_in), dtype=dt)
        b = np.zeros(1 + m_new + d, dtype=dt)
        # accumulator: z* + eps * (recovered partial sum + this layer's neurons)
        A[0, 0] = 1.0 / c1
        A[0, 1:1 + m_prev] = eps * prev_a
        b[0] = zstar - c0 / c1
        # next neurons read the recovered input
        A[1:1 + m_new, in_prev] = wc[sl] * inv
        b[1:1 + m_new] = s.b[sl] - wc[sl].sum(axis=1) * c0 * inv
        # input lanes: z* + eps * recovered input
        A[1 + m_new:, in_prev] = np.eye(d) / c1
        b[1 + m_new:] = zstar - c0 / c1
        layers.append(Layer(A, b))
    return MLP(act, d, layers)


# --------------------------------------------------------------------------
# depth-unrolled polynomial builders
# --------------------------------------------------------------------------


def _poly_entry(p: MPoly):
    """Entry layer writing the constant and linear part of ``p`` into slot 0."""
    d = p.dim
    dt = p.field.dtype
    A0 = np.zeros((d + 2, d), dtype=dt)
    b0 = np.zeros(d + 2, dtype=dt)
    for i in range(d):
        e = [0] * d
        e[i] = 1
        A0[0, i] = p.coefficient(tuple(e))
        A0[1 + i, i] = 1
    b0[0] = p.coefficient((0,) * d)
    AL = np.zeros(d + 2, dtype=dt)
    AL[0] = 1
    return A0, b0, AL


def _factor_plan(idx: tuple[int, ...]):
    """Split a monomial into an initial square or product and a list of extra factors."""
    rest = list(idx)
    sq = next((i for i, e in enumerate(rest) if e >= 2), None)
    if sq is not None:
        rest[sq] -= 2
        init = ("square", sq)
    else:
        i, j = [k for k, e in enumerate(rest) if e][:2]
        rest[i] -= 1
        rest[j] -= 1
        init = ("product", i, j)
    extra = [i for i, e in enumerate(rest) for _ in range(e)]
    return init, extra


def _block(neurons, d0: int, dt) -> ResBlock:
    """``neurons``: list of (W row, bias, A column)."""
    W = np.array([n[0] for n in neurons], dtype=dt).reshape(len(neurons), d0)
    b = np.array([n[1] for n in neurons], dtype=dt)
    A = np.array([n[2] for n in neurons], dtype=dt).reshape(len(neurons), d0).T
    return ResBlock(A, W, b)


def resnet_poly_square(p: MPoly) -> ResNet:
    """Exact ResNet with ``sigma(z) = z^2``, inner width ``d + 2`` and blocks of width <= 2.

    Slots: 0 accumulator, ``1..d`` inputs, ``d+1`` workspace.  Per monomial of
    degree >= 2 (graded-lex order): initialise the workspace with ``z_i^2`` or
    ``z_i z_j``, multiply in each remaining factor with
    ``w (z_j - 1) = [sigma(w + z_j - 1) - sigma(w - z_j + 1)] / 4``, then deposit
    ``c w`` into the accumulator while clearing the workspace using
    ``w = [sigma(w + 1) - sigma(w - 1)] / 4``.
    """
    d = p.dim
    d0, ws, dt = d + 2, d + 1, p.field.dtype
    A0, b0, AL = _poly_entry(p)
    e = np.eye(d0)
    blocks = []
    for idx in sorted((k for k in p.terms if sum(k) >= 2), key=graded_lex_key):
        c = p.terms[idx]
        init, extra = _factor_plan(idx)
        if init[0] == "square":
            blocks.append(_block([(e[1 + init[1]], 0.0, e[ws])], d0, dt))
        else:
            i, j = 1 + init[1], 1 + init[2]
            blocks.append(_block([(e[i] + e[j], 0.0, e[ws] / 4), (e[i] - e[j], 0.0, -e[ws] / 4)], d0, dt))
        for j in extra:
            blocks.append(_block([(e[ws] + e[1 + j], -1.0, e[ws] / 4),
                                  (e[ws] - e[1 + j], 1.0, -e[ws] / 4)], d0, dt))
        deposit = c * e[0] / 4
        blocks.append(_block([(e[ws], 1.0, deposit - e[ws] / 4),
                              (e[ws], -1.0, -deposit + e[ws] / 4)], d0, dt))
    return ResNet(Activation.polynomial((0, 0, 1), p.field), A0, b0, blocks, AL)


def resnet_poly_general(p: MPoly, act: Activation, h: float = 1e-3, zstar: float | None = None) -> ResNet:
    """ResNet with inner width ``d + 2`` and blocks of width <= 4 approximating ``p``.

    Same slot plan as :func:`resnet_poly_square`, with exact squares replaced by
    ``[sigma(z* + h u) - 2 sigma(z*) + sigma(z* - h u)] / (h^2 sigma''(z*))`` and
    products by the four-neuron difference of such squares, in which the
    ``sigma(z*)`` terms cancel.  Error is O(h^2).
    """
    if not act.has_power_series:
        raise ConstructionError("the general deep builder needs an analytic activation")
    if act.field is not p.field:
        raise ConstructionError("activation and polynomial fields differ")
    if act.is_affine:
        raise ConstructionError("activation is affine, so sigma'' vanishes identically")
    if h == 0:
        raise ConstructionError("step h must be nonzero")
    if zstar is None:
        zstar = locate_base_point(act, 2)
    s2 = act.derivative(zstar, 2)
    if abs(s2) < 1e-12:
        raise ConstructionError(f"sigma''({zstar}) = 0; choose another base point")
    d = p.dim
    d0, ws, dt = d + 2, d + 1, p.field.dtype
    A0, b0, AL = _poly_entry(p)
    e = np.eye(d0)
    zero = np.zeros(d0)

    def product(ru, cu, rv, cv, out):
        # neurons for u*v with u = ru.s + cu, v = rv.s + cv; out is the A column for u*v
        k = out / (4 * h * h * s2)
        return [(h * (ru + rv), zstar + h * (cu + cv), k),
                (-h * (ru + rv), zstar - h * (cu + cv), k),
                (h * (ru - rv), zstar + h * (cu - cv), -k),
                (-h * (ru - rv), zstar - h * (cu - cv), -k)]

    def square(ru, out):
        k = out / (h * h * s2)
        return [(h * ru, zstar, k), (-h * ru, zstar, k), (zero, zstar, -2 * k)]

    blocks = []
    for idx in sorted((k for k in p.terms if sum(k) >= 2), key=graded_lex_key):
        c = p.terms[idx]
        init, extra = _factor_plan(idx)
        if init[0] == "square":
            blocks.append(_block(square(e[1 + init[1]], e[ws]), d0, dt))
        else:
            blocks.append(_block(product(e[1 + init[1]], 0.0, e[1 + init[2]], 0.0, e[ws]), d0, dt))
        for j in extra:
            blocks.append(_block(product(e[ws], 0.0, e[1 + j], -1.0, e[ws]), d0, dt))
        blocks.append(_block(product(e[ws], 0.0, zero, 1.0, c * e[0] - e[ws]), d0, dt))
    return ResNet(act, A0, b0, blocks, AL)


def resnet_to_polynomial(net: ResNet) -> MPoly:
    """Exact polynomial computed by a ResNet with polynomial activation."""
    act = net.activation
    if not act.is_polynomial:
        raise ConstructionError("symbolic expansion needs a polynomial activation")
    d, f = net.dim, net.field
    state = [MPoly.affine(net.A0[i], net.b0[i], f) for i in range(net.inner_width)]

    def combine(row, polys, const=0.0):
        acc = MPoly.constant(const, d, f)
        for coef, q in zip(row, polys):
            if coef != 0:
                acc = acc + q * coef
        return acc

    for blk in net.blocks:
        posts = []
        for j in range(blk.width):
            pre = combine(blk.W[j], state, blk.b[j])
            out = MPoly.constant(act.coeffs[-1], d, f)
            for c in reversed(act.coeffs[:-1]):
                out = out * pre + c
            posts.append(out)
        state = [state[i] + combine(blk.A[i], posts) for i in range(net.inner_width)]
    return combine(net.AL, state)


# --------------------------------------------------------------------------
# parameter accounting
# --------------------------------------------------------------------------


def param_count(net) -> int:
    """Number of stored scalar weights, explicit zeros included."""
    if isinstance(net, ShallowNet):
        return net.n_neurons * (net.dim + 2)
    if isinstance(net, ResNet):
        return (net.A0.size + net.b0.size + net.AL.size
                + sum(blk.A.size + blk.W.size + blk.b.size for blk in net.blocks))
    if isinstance(net, (MLP, DenseNet)):
        return sum(layer.A.size + layer.b.size for layer in net.layers)
    from .harmonic import HarmonicNet

    if isinstance(net, HarmonicNet):
        return sum(2 + t.P.P.size + t.b.size for t in net.terms)
    raise TypeError(f"no parameter count for {type(net).__name__}")


def shallow_param_formula(d: int, n: int) -> int:
    return (d + 2) * n


def resnet_embedding_param_formula(d: int, n: int) -> int:
    """Closed form ``2(n+1)(d+1) + n`` quoted for the residual embedding."""
    return 2 * (n + 1) * (d + 1) + n


def resnet_embedding_param_sum(d: int, widths: Sequence[int]) -> int:
    """Term-by-term sum ``(d+1) + sum_l (2 D_l (d+1) + D_l) + d(d+1) + (d+1)``."""
    return (d + 1) + sum(2 * D * (d + 1) + D for D in widths) + d * (d + 1) + (d + 1)


def mlp_param_formula(widths: Sequence[int]) -> int:
    """``sum_l d_{l-1} d_l + d_l``."""
    return sum(widths[i - 1] * widths[i] + widths[i] for i in range(1, len(widths)))


def random_mlp(rng: np.random.Generator, act: Activation, widths: Sequence[int], scale: float = 1.0) -> MLP:
    def draw(*shape):
        x = rng.uniform(-scale, scale, size=shape)
        if act.field is FieldTag.COMPLEX:
            x = x + 1j * rng.uniform(-scale, scale, size=shape)
        return x

    layers = [Layer(draw(widths[i], widths[i - 1]), draw(widths[i])) for i in range(1, len(widths))]
    return MLP(act, widths[0], layers)


def max_block_width(net: ResNet) -> int:
    return max(net.block_widths, default=0)


def degree_bound(activation_degree: int, depth: int) -> int:
    return int(math.pow(activation_degree, depth))
