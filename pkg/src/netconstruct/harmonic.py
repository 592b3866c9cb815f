"""Harmonic polynomials, Gegenbauer and zonal harmonics, rotation spans, and harmonic networks."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import ConstructionError, ShapeError
from .numerics import FieldTag, MPoly, laplacian_fd, monomials, symbolic_laplacian

RANK_RTOL = 1e-8


# --------------------------------------------------------------------------
# harmonic networks
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OrthProjection:
    """``k x d`` matrix with orthonormal rows, ``P P^T = I_k``."""

    P: np.ndarray

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        k, d = P.shape
        if k > d:
            raise ShapeError("a projection cannot have more rows than columns")
        if np.max(np.abs(P @ P.T - np.eye(k))) > 1e-12:
            raise ConstructionError("rows of P are not orthonormal")
        object.__setattr__(self, "P", P)

    @property
    def k(self) -> int:
        return self.P.shape[0]

    @property
    def d(self) -> int:
        return self.P.shape[1]


def _u2v2(u):
    return u[:, 0] ** 2 - u[:, 1] ** 2


def _u3(u):
    return u[:, 0] ** 3 - 3 * u[:, 0] * u[:, 1] ** 2


def _expcos(u):
    return np.exp(u[:, 0]) * np.cos(u[:, 1])


def _u2(u):
    return u[:, 0] ** 2


_NAMED = {
    "u2-v2": (_u2v2, {(2, 0): 1.0, (0, 2): -1.0}),
    "u3-3uv2": (_u3, {(3, 0): 1.0, (1, 2): -3.0}),
    "exp-cos": (_expcos, None),
    "u2": (_u2, {(2, 0): 1.0}),
}
HARMONIC_NAMES = tuple(_NAMED)


@dataclass(frozen=True, eq=False)
class HarmonicActivation:
    """Function on R^k given by an evaluator and, when available, a polynomial form."""

    name: str
    k: int
    fn: Callable
    poly: MPoly | None = None

    @classmethod
    def named(cls, name: str) -> "HarmonicActivation":
        if name not in _NAMED:
            raise ValueError(f"unknown harmonic activation {name!r}; choose from {sorted(_NAMED)}")
        fn, terms = _NAMED[name]
        return cls(name, 2, fn, MPoly(2, terms) if terms else None)

    @classmethod
    def from_poly(cls, p: MPoly, name: str = "poly") -> "HarmonicActivation":
        if p.field is not FieldTag.REAL:
            raise ConstructionError("harmonic activations are real")
        return cls(name, p.dim, p, p)

    def is_harmonic(self) -> bool | None:
        """Symbolic check when a polynomial form exists, otherwise ``None``."""
        if self.poly is None:
            return True if self.name == "exp-cos" else None
        return not symbolic_laplacian(self.poly).prune(1e-12).terms

    def __call__(self, u):
        return self.fn(np.atleast_2d(np.asarray(u, dtype=float)))


@dataclass(frozen=True, eq=False)
class HarmonicTerm:
    a: float
    rho: float
    P: OrthProjection
    b: np.ndarray

    def __post_init__(self):
        P = self.P if isinstance(self.P, OrthProjection) else OrthProjection(self.P)
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if b.shape != (P.k,):
            raise ShapeError("bias length must equal the projection rank k")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "rho", float(self.rho))


@dataclass(frozen=True, eq=False)
class HarmonicNet:
    """``x -> sum_i a_i sigma(rho_i P_i x + b_i)`` on R^d."""

    activation: HarmonicActivation
    terms: tuple

    def __post_init__(self):
        terms = tuple(t if isinstance(t, HarmonicTerm) else HarmonicTerm(*t) for t in self.terms)
        if not terms:
            raise ShapeError("a harmonic network needs at least one term")
        shapes = {(t.P.k, t.P.d) for t in terms}
        if len(shapes) != 1:
            raise ShapeError("all projections must share (k, d)")
        if terms[0].P.k != self.activation.k:
            raise ShapeError("projection rank must equal the activation's input dimension")
        object.__setattr__(self, "terms", terms)

    @property
    def dim(self) -> int:
        return self.terms[0].P.d

    @property
    def k(self) -> int:
        return self.terms[0].P.k

    def __call__(self, x):
        return eval_harmonic_net(self, x)


def eval_harmonic_net(net: HarmonicNet, x):
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != net.dim:
        raise ShapeError(f"expected points of dimension {net.dim}, got {pts.shape[1]}")
    out = np.zeros(len(pts))
    for t in net.terms:
        out += t.a * net.activation(t.rho * pts @ t.P.P.T + t.b)
    return out[0] if single else out


def verify_network_harmonic(net: HarmonicNet, points, h: float = 1e-3) -> float:
    """Largest finite-difference Laplacian magnitude over the sample points."""
    return float(np.max(np.abs(laplacian_fd(net, np.atleast_2d(points), h))))


def random_orthogonal(rng: np.random.Generator, d: int) -> np.ndarray:
    """Orthonormalized Gaussian matrix with sign correction and determinant +1."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_harmonic_net(rng: np.random.Generator, act: HarmonicActivation, d: int, n: int,
                        scale: float = 1.0) -> HarmonicNet:
    terms = []
    for _ in range(n):
        P = random_orthogonal(rng, d)[:act.k]
        terms.append(HarmonicTerm(rng.uniform(-scale, scale), rng.uniform(-scale, scale), OrthProjection(P),
                                  rng.uniform(-scale, scale, act.k)))
    return HarmonicNet(act, tuple(terms))


# --------------------------------------------------------------------------
# Gegenbauer polynomials and zonal harmonics
# --------------------------------------------------------------------------


def gegenbauer(n: int, lam: float, t):
    """``C_n^lam(t)`` by the three-term recurrence."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    t = np.asarray(t, dtype=float)
    prev, cur = np.ones_like(t), 2 * lam * t
    if n == 0:
        return prev if prev.ndim else float(prev)
    for m in range(2, n + 1):
        prev, cur = cur, (2 * (m + lam - 1) * t * cur - (m + 2 * lam - 2) * prev) / m
    return cur if cur.ndim else float(cur)


def zonal_harmonic(n: int, d: int, y, x):
    """``|x|^n C_n^lam(<x/|x|, y>)`` with ``lam = (d-2)/2``.

    Evaluated through the homogeneous form of the recurrence,
    ``m H_m = 2(m+lam-1) s H_{m-1} - (m+2lam-2) |x|^2 H_{m-2}`` with ``s = <x, y>``,
    which is a polynomial in ``x`` and needs no division by ``|x|``.
    """
    if d < 3:
        raise ValueError("zonal harmonics need d >= 3")
    y = np.asarray(y, dtype=float)
    if y.shape != (d,) or abs(np.linalg.norm(y) - 1) > 1e-12:
        raise ValueError("axis y must be a unit vector in R^d")
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    lam = (d - 2) / 2
    s = pts @ y
    r2 = np.sum(pts**2, axis=1)
    prev, cur = np.ones_like(s), 2 * lam * s
    if n == 0:
        cur = prev
    for m in range(2, n + 1):
        prev, cur = cur, (2 * (m + lam - 1) * s * cur - (m + 2 * lam - 2) * r2 * prev) / m
    return float(cur[0]) if single else cur


def dim_hp(d: int, j: int) -> int:
    """``dim HP^d_j`` from the monomial counts."""
    if j < 0:
        return 0
    total = math.comb(j + d - 1, d - 1)
    return total - (math.comb(j + d - 3, d - 1) if j >= 2 else 0)


# --------------------------------------------------------------------------
# harmonic homogeneous polynomials
# --------------------------------------------------------------------------


def laplacian_matrix(d: int, j: int) -> tuple[list, list, list[list[int]]]:
    """Integer matrix of the Laplacian from degree-``j`` to degree-``j-2`` monomials."""
    src = monomials(d, j)
    dst = monomials(d, j - 2) if j >= 2 else []
    row = {idx: r for r, idx in enumerate(dst)}
    mat = [[0] * len(src) for _ in dst]
    for c, idx in enumerate(src):
        for i in range(d):
            if idx[i] >= 2:
                new = list(idx)
                new[i] -= 2
                mat[row[tuple(new)]][c] += idx[i] * (idx[i] - 1)
    return src, dst, mat


def _rational_nullspace(mat: list[list[int]], ncols: int) -> list[list[Fraction]]:
    rows = [[Fraction(v) for v in r] for r in mat]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [v * inv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * ncols
        vec[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            vec[pc] = -rows[i][fc]
        basis.append(vec)
    return basis


def hp_basis(d: int, j: int) -> list[MPoly]:
    """Basis of the harmonic homogeneous polynomials of degree ``j`` in ``d`` variables.

    Exact rational elimination on the Laplacian's monomial-coefficient matrix.
    """
    if d < 1 or j < 0:
        raise ValueError("need d >= 1 and j >= 0")
    src, _, mat = laplacian_matrix(d, j)
    if not mat:
        return [MPoly(d, {idx: 1.0}) for idx in src]
    return [MPoly(d, {idx: float(v) for idx, v in zip(src, vec) if v != 0})
            for vec in _rational_nullspace(mat, len(src))]


def homogeneous_decompose(p: MPoly) -> list[MPoly]:
    """``[p_0, ..., p_deg]`` with ``p_j`` the degree-``j`` part; empty for the zero polynomial."""
    return [p.homogeneous_part(j) for j in range(p.degree + 1)]


def is_harmonic(p: MPoly, tol: float = 1e-12) -> bool:
    return not symbolic_laplacian(p).prune(tol * max(1.0, p.scale_norm())).terms


# --------------------------------------------------------------------------
# rotations
# --------------------------------------------------------------------------


def axis_rotation(y, theta: float) -> np.ndarray:
    """Rotation of R^3 by ``theta`` about the unit axis ``y`` (Rodrigues)."""
    y = np.asarray(y, dtype=float)
    K = np.array([[0, -y[2], y[1]], [y[2], 0, -y[0]], [-y[1], y[0], 0]])
    return math.cos(theta) * np.eye(3) + math.sin(theta) * K + (1 - math.cos(theta)) * np.outer(y, y)


def rotation_average(p: MPoly, y, K: int | None = None) -> MPoly:
    """``x -> (1/K) sum_s p(R(y, 2 pi s / K) x)``, the average over rotations fixing ``y``.

    Exact for polynomial ``p`` once ``K >= 2 deg p + 1``.
    """
    if p.dim != 3:
        raise ConstructionError("rotation averaging is implemented for d = 3")
    y = np.asarray(y, dtype=float)
    if y.shape != (3,) or abs(np.linalg.norm(y) - 1) > 1e-12:
        raise ValueError("axis y must be a unit vector")
    need = 2 * max(p.degree, 0) + 1
    if K is None:
        K = need
    if K < need:
        raise ConstructionError(f"K = {K} nodes alias a degree-{p.degree} integrand; need K >= {need}")
    acc = MPoly(3, {}, p.field)
    for s in range(K):
        acc = acc + p.compose_linear(axis_rotation(y, 2 * math.pi * s / K))
    acc = acc * (1.0 / K)
    return acc.prune(1e-14 * max(1.0, p.scale_norm()))


def _numerical_rank(C: np.ndarray, rtol: float = RANK_RTOL) -> int:
    """Rank of ``C`` by diagonally pivoted elimination on its Gram matrix."""
    G = C.T @ C
    n = G.shape[0]
    diag0 = np.max(np.abs(np.diag(G))) if n else 0.0
    if diag0 == 0:
        return 0
    G = G.copy()
    rank = 0
    remaining = list(range(n))
    while remaining:
        piv = max(remaining, key=lambda i: G[i, i])
        if G[piv, piv] <= rtol * diag0:
            break
        col = G[:, piv] / G[piv, piv]
        G = G - np.outer(col, G[piv, :])
        remaining.remove(piv)
        rank += 1
    return rank


def rotation_span_rank(p: MPoly, d: int, j: int, R: int, seed: int) -> int:
    """Numerical rank of ``{p(O_r x)}`` for ``R`` seeded random rotations, in ``hp_basis(d, j)`` coordinates."""
    if p.dim != d:
        raise ShapeError("polynomial dimension differs from d")
    if not p.terms:
        raise ConstructionError("p must be nonzero")
    if not p.is_homogeneous or p.degree != j:
        raise ConstructionError(f"p must be homogeneous of degree {j}")
    if not is_harmonic(p):
        raise ConstructionError("p is not harmonic")
    basis = hp_basis(d, j)
    if R < len(basis):
        raise ConstructionError(f"need at least {len(basis)} rotations")
    mons = monomials(d, j)
    B = np.column_stack([q.coefficient_vector(mons) for q in basis]).real
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(R):
        q = p.compose_linear(random_orthogonal(rng, d))
        coords, *_ = np.linalg.lstsq(B, q.coefficient_vector(mons).real, rcond=None)
        rows.append(coords)
    return _numerical_rank(np.array(rows))


def fundamental_system_det(points, n: int, lam: float | None = None) -> float:
    """``det[C_n^lam(<x_i, x_j>)]`` for unit vectors ``x_i``; positive for a fundamental system."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    d = X.shape[1]
    if np.max(np.abs(np.linalg.norm(X, axis=1) - 1)) > 1e-12:
        raise ValueError("points must lie on the unit sphere")
    if lam is None:
        lam = (d - 2) / 2
    if len(X) != dim_hp(d, n):
        warnings.warn(f"{len(X)} points given but dim HP^{d}_{n} = {dim_hp(d, n)}", RuntimeWarning, stacklevel=2)
    G = gegenbauer(n, lam, np.clip(X @ X.T, -1.0, 1.0))
    return float(np.linalg.det(np.atleast_2d(G)))


def random_sphere_points(rng: np.random.Generator, count: int, d: int) -> np.ndarray:
    x = rng.standard_normal((count, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


# --------------------------------------------------------------------------
# derivative in the bias
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BiasDifference:
    """Finite difference in a bias coordinate together with the exact derivative when known."""

    fd: Callable
    exact: Callable | None


def differentiate_via_bias(target, ell: int, h: float = 1e-5) -> BiasDifference:
    """``[p(x + h e_ell) - p(x)] / h`` for an MPoly, or the same shift applied to every bias of a net.

    ``ell`` is a 0-based coordinate of the activation's input (the bias vector).
    For a network the difference is again a :class:`HarmonicNet` (harmonic for every h).
    """
    if h == 0:
        raise ValueError("step must be nonzero")
    if isinstance(target, MPoly):
        if not 0 <= ell < target.dim:
            raise ValueError("coordinate out of range")
        e = np.zeros(target.dim)
        e[ell] = h

        def fd(x):
            x = np.asarray(x, dtype=float)
            return (target(x + e) - target(x)) / h

        return BiasDifference(fd, target.derivative(ell))
    if isinstance(target, HarmonicNet):
        if not 0 <= ell < target.k:
            raise ValueError("coordinate out of range")
        e = np.zeros(target.k)
        e[ell] = h
        terms = []
        for t in target.terms:
            terms.append(HarmonicTerm(t.a / h, t.rho, t.P, t.b + e))
            terms.append(HarmonicTerm(-t.a / h, t.rho, t.P, t.b))
        exact = None
        if target.activation.poly is not None:
            dp = target.activation.poly.derivative(ell)
            if dp.terms:
                act = HarmonicActivation.from_poly(dp, f"d{ell}({target.activation.name})")
                exact = HarmonicNet(act, target.terms)
            else:
                exact = lambda x: np.zeros(len(np.atleast_2d(x)))  # noqa: E731
        return BiasDifference(HarmonicNet(target.activation, tuple(terms)), exact)
    raise TypeError("expected an MPoly or a HarmonicNet")
