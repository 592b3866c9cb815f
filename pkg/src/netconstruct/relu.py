"""Exact and Riemann-sum ReLU constructions: max-affine residual nets, dc functions, log-depth max."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .deep import MLP, Layer, ResBlock, ResNet, _check_partition, eval_mlp
from .errors import ConstructionError, ShapeError
from .numerics import Activation, BoxGrid
from .shallow import ShallowNet

RELU = Activation.named("relu")


@dataclass(frozen=True)
class AffinePiece:
    """``x -> <w, x> + b`` on R^d."""

    w: tuple
    b: float

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.w, dtype=float))
        if w.ndim != 1 or not np.all(np.isfinite(w)) or not math.isfinite(self.b):
            raise ShapeError("affine piece needs a finite weight vector and bias")
        object.__setattr__(self, "w", tuple(w.tolist()))
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self) -> int:
        return len(self.w)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x @ np.asarray(self.w) + self.b


def max_affine(pieces: Sequence[AffinePiece], x, include_zero: bool = True):
    """Direct evaluation of ``max{0, pieces...}`` at points ``x`` of shape (N, d)."""
    vals = np.stack([p(x) for p in pieces])
    out = vals.max(axis=0)
    return np.maximum(out, 0.0) if include_zero else out


@dataclass(frozen=True)
class C2FunctionSpec:
    f: Callable
    df: Callable
    d2f: Callable
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("interval [a, b] must be nondegenerate")


def shallow_from_c2(spec: C2FunctionSpec, T: int) -> ShallowNet:
    """``f(a) ReLU(1) + f'(a) ReLU(x - a) + sum_j f''(t_j) (b-a)/T ReLU(x - t_j)``.

    Left-endpoint nodes ``t_j = a + j (b - a) / T``, ``j = 0..T-1``; ``T + 2`` neurons.
    """
    if T < 1:
        raise ConstructionError("need at least one Riemann node")
    a, b = float(spec.a), float(spec.b)
    dt = (b - a) / T
    t = a + dt * np.arange(T)
    outer = np.concatenate([[spec.f(a), spec.df(a)], np.asarray(spec.d2f(t), dtype=float) * dt])
    w = np.concatenate([[0.0, 1.0], np.ones(T)])
    bias = np.concatenate([[1.0, -a], -t])
    return ShallowNet(RELU, outer, w[:, None], bias)


def _pieces_dim(pieces) -> int:
    if not pieces:
        raise ConstructionError("need at least one affine piece")
    d = pieces[0].dim
    if any(p.dim != d for p in pieces):
        raise ShapeError("affine pieces have different dimensions")
    return d


def resnet_max_affine(pieces: Sequence[AffinePiece]) -> ResNet:
    """Exact ReLU ResNet of inner width ``d + 1`` computing ``max{0, pieces...}``.

    Slot 0 holds the running maximum ``g``; block ``l`` adds ``ReLU(piece_l(x) - g)``.
    """
    d = _pieces_dim(pieces)
    A0 = np.vstack([np.zeros((1, d)), np.eye(d)])
    e0 = np.zeros(d + 1)
    e0[0] = 1
    blocks = [ResBlock(e0[:, None], np.concatenate([[-1.0], p.w])[None, :], np.array([p.b])) for p in pieces]
    return ResNet(RELU, A0, np.zeros(d + 1), blocks, e0)


def resnet_dc(f1_pieces: Sequence[AffinePiece], f2_pieces: Sequence[AffinePiece]) -> ResNet:
    """Exact ReLU ResNet of inner width ``d + 2`` for ``max{0, f1...} - max{0, f2...}``.

    Both running maxima (slots 0 and 1) are advanced in the same block while both
    lists last; the exit row is ``(1, -1, 0, ..., 0)``.
    """
    d = _pieces_dim(f1_pieces)
    if _pieces_dim(f2_pieces) != d:
        raise ShapeError("the two convex parts must share the input dimension")
    A0 = np.vstack([np.zeros((2, d)), np.eye(d)])
    blocks = []
    for i in range(max(len(f1_pieces), len(f2_pieces))):
        rows, bias, cols = [], [], []
        for slot, plist in ((0, f1_pieces), (1, f2_pieces)):
            if i < len(plist):
                row = np.zeros(d + 2)
                row[slot] = -1
                row[2:] = plist[i].w
                col = np.zeros(d + 2)
                col[slot] = 1
                rows.append(row)
                bias.append(plist[i].b)
                cols.append(col)
        blocks.append(ResBlock(np.array(cols).T, np.array(rows), np.array(bias)))
    AL = np.zeros(d + 2)
    AL[:2] = (1, -1)
    return ResNet(RELU, A0, np.zeros(d + 2), blocks, AL)


def _sq_norm(x):
    x = np.asarray(x, dtype=float)
    return x**2 if x.ndim <= 1 else np.sum(x**2, axis=-1)


@dataclass(frozen=True)
class DCPair:
    """``g = f1 - f2`` with ``f1 = g + lam/2 |x|^2 + c`` and ``f2 = lam/2 |x|^2 + c``.

    Callables take a 1-d array of scalars (d = 1) or an (N, d) batch.
    """

    g: Callable
    lam: float
    c: float

    def f1(self, x):
        return self.g(x) + self.f2(x)

    def f2(self, x):
        return 0.5 * self.lam * _sq_norm(x) + self.c

    def diagnose(self, points, h: float = 1e-3) -> dict:
        """Sampled convexity and positivity diagnostics (evidence, not proof).

        Returns the smallest eigenvalue of the finite-difference Hessian of each
        part and the smallest sampled value of each part.
        """
        pts = np.asarray(points, dtype=float)
        flat = pts.ndim == 1
        if flat:
            pts = pts[:, None]
        d = pts.shape[1]

        def call(fn, q):
            return np.asarray(fn(q[:, 0] if flat else q), dtype=float)

        out = {}
        for name, fn in (("f1", self.f1), ("f2", self.f2)):
            hess = np.empty((len(pts), d, d))
            f0 = call(fn, pts)
            for i in range(d):
                for j in range(i, d):
                    ei, ej = np.eye(d)[i] * h, np.eye(d)[j] * h
                    val = (call(fn, pts + ei + ej) - call(fn, pts + ei - ej)
                           - call(fn, pts - ei + ej) + call(fn, pts - ei - ej)) / (4 * h * h)
                    hess[:, i, j] = hess[:, j, i] = val
            out[f"{name}_min_hessian_eig"] = float(np.linalg.eigvalsh(hess).min())
            out[f"{name}_min_value"] = float(f0.min())
        return out


def dc_decompose(g: Callable, lam: float, c: float = 0.0) -> DCPair:
    if not lam > 0:
        raise ConstructionError("the Hessian bound lambda must be positive")
    return DCPair(g, float(lam), float(c))


# --------------------------------------------------------------------------
# log-depth maximum
# --------------------------------------------------------------------------


def _max_stage_maps(k: int):
    """Per stage: neuron matrix ``N`` (width x k_s) and recovery ``R`` (k_{s+1} x width)."""
    stages = []
    ks = k
    while ks > 1:
        pairs, odd = divmod(ks, 2)
        width = 3 * pairs + 2 * odd
        N = np.zeros((width, ks))
        R = np.zeros((pairs + odd, width))
        for i in range(pairs):
            a, b, r = 2 * i, 2 * i + 1, 3 * i
            N[r, a] = 1            # ReLU(a)
            N[r + 1, a] = -1       # ReLU(-a)
            N[r + 2, b] = 1        # ReLU(b - a)
            N[r + 2, a] = -1
            R[i, r:r + 3] = (1, -1, 1)
        if odd:
            r = 3 * pairs
            N[r, ks - 1] = 1
            N[r + 1, ks - 1] = -1
            R[pairs, r:r + 2] = (1, -1)
        stages.append((N, R))
        ks = pairs + odd
    return stages


def log_depth_max(k: int) -> MLP:
    """ReLU MLP with ``ceil(log2 k)`` hidden layers returning the maximum of its k inputs.

    Each stage pairs up the current values with ``max{a, b} = a + ReLU(b - a)``
    (``a`` itself carried as ``ReLU(a) - ReLU(-a)``); an odd value passes through.
    """
    if k < 1:
        raise ConstructionError("need at least one input")
    stages = _max_stage_maps(k)
    if not stages:
        return MLP(RELU, 1, [Layer(np.ones((1, 1)), np.zeros(1))])
    layers = []
    prev_R = None
    for N, R in stages:
        A = N if prev_R is None else N @ prev_R
        layers.append(Layer(A, np.zeros(A.shape[0])))
        prev_R = R
    layers.append(Layer(prev_R, np.zeros(1)))
    return MLP(RELU, k, layers)


def log_depth_stage_values(k: int, x) -> list[np.ndarray]:
    """Values held after each stage of :func:`log_depth_max` at inputs ``x`` (N, k)."""
    net = log_depth_max(k)
    _, hidden = eval_mlp(net, np.atleast_2d(np.asarray(x, dtype=float)), trace=True)
    return [h @ R.T for h, (_, R) in zip(hidden, _max_stage_maps(k))]


def n_stages(k: int) -> int:
    return math.ceil(math.log2(k)) if k > 1 else 0


# --------------------------------------------------------------------------
# exact fully connected representation of a shallow ReLU net on a box
# --------------------------------------------------------------------------


def _box_bounds(box, d: int):
    if isinstance(box, BoxGrid):
        lower, upper = box.lower, box.upper
    else:
        lower, upper = box
    lower = np.broadcast_to(np.asarray(lower, dtype=float), (d,))
    upper = np.broadcast_to(np.asarray(upper, dtype=float), (d,))
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise ConstructionError("the box must be bounded")
    if np.any(lower >= upper):
        raise ConstructionError("the box needs lower < upper")
    return lower, upper


def mlp_exact_from_shallow_relu(s: ShallowNet, box, widths: Sequence[int]) -> MLP:
    """Exact MLP of widths ``d + 2 + m_l`` agreeing with ``s`` on ``box``.

    Lanes per hidden layer: ``[I+, I-, m_l neurons, x + beta]`` with
    ``beta = 1 - lower`` so every carried lane is positive on the box and ReLU
    acts as the identity on it.  ``I+`` and ``I-`` accumulate the positive and
    negative parts of the outer weights.  Outside the box there is no contract.
    """
    if s.activation.family != "relu":
        raise ConstructionError("the quadrant-shift representation needs the ReLU activation")
    n, d = s.n_neurons, s.dim
    widths = _check_partition(widths, n)
    lower, _ = _box_bounds(box, d)
    beta = 1.0 - lower
    starts = np.concatenate([[0], np.cumsum(widths)])
    pos, neg = np.maximum(s.a, 0), np.maximum(-s.a, 0)
    w = s.w.real
    layers = []

    m1 = widths[0]
    A = np.zeros((2 + m1 + d, d))
    A[2:2 + m1] = w[:m1]
    A[2 + m1:] = np.eye(d)
    b = np.concatenate([[0.0, 0.0], s.b[:m1].real, beta])
    layers.append(Layer(A, b))

    for ell in range(1, len(widths) + 1):
        mp = widths[ell - 1]
        sl_prev = slice(starts[ell - 1], starts[ell])
        inp = slice(2 + mp, 2 + mp + d)
        width_in = 2 + mp + d
        if ell == len(widths):
            A = np.zeros((1, width_in))
            A[0, :2] = (1, -1)
            A[0, 2:2 + mp] = s.a[sl_prev].real
            layers.append(Layer(A, np.zeros(1)))
            break
        mn = widths[ell]
        sl = slice(starts[ell], starts[ell + 1])
        A = np.zeros((2 + mn + d, width_in))
        b = np.zeros(2 + mn + d)
        A[0, 0] = 1
        A[0, 2:2 + mp] = pos[sl_prev]
        A[1, 1] = 1
        A[1, 2:2 + mp] = neg[sl_prev]
        A[2:2 + mn, inp] = w[sl]
        b[2:2 + mn] = s.b[sl].real - w[sl] @ beta
        A[2 + mn:, inp] = np.eye(d)
        layers.append(Layer(A, b))
    return MLP(RELU, d, layers)


def random_pieces(rng: np.random.Generator, count: int, dim: int, scale: float = 1.0) -> list[AffinePiece]:
    return [AffinePiece(rng.uniform(-scale, scale, dim), float(rng.uniform(-scale, scale))) for _ in range(count)]
