"""Field-generic scalars, activations, multivariate polynomials and finite differences.

Everything here works on numpy arrays of dtype float64 (real field) or
complex128 (complex field).  Functions of several variables take points as
arrays of shape ``(d,)`` or ``(N, d)``.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ConstructionError, FieldMismatchError, ShapeError

MAX_SERIES_TERMS = 200
SERIES_RTOL = 1e-17
COEFF_SCAN_LIMIT = 64


class FieldTag(enum.Enum):
    REAL = "R"
    COMPLEX = "C"

    @property
    def dtype(self):
        return np.float64 if self is FieldTag.REAL else np.complex128

    @classmethod
    def parse(cls, text: str | "FieldTag") -> "FieldTag":
        if isinstance(text, FieldTag):
            return text
        key = str(text).strip().upper()
        if key in ("R", "REAL"):
            return cls.REAL
        if key in ("C", "COMPLEX"):
            return cls.COMPLEX
        raise ValueError(f"unknown field {text!r}; expected R or C")


def as_field_array(values, field: FieldTag, *, what: str = "value", finite: bool = True) -> np.ndarray:
    """Convert ``values`` to the dtype of ``field``.

    Complex data with a nonzero imaginary part is rejected under the real tag.
    """
    arr = np.asarray(values)
    if field is FieldTag.REAL:
        if np.iscomplexobj(arr):
            if np.any(arr.imag != 0):
                raise FieldMismatchError(f"{what} has nonzero imaginary part under the real field")
            arr = arr.real
        arr = arr.astype(np.float64, copy=True)
    else:
        arr = arr.astype(np.complex128, copy=True)
    if finite and not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains NaN or Inf")
    return arr


def _as_points(z, dim: int, field: FieldTag) -> tuple[np.ndarray, bool]:
    """Return ``(points of shape (N, dim), was_single_point)``."""
    arr = as_field_array(z, field, what="evaluation point", finite=False)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ShapeError(f"expected points with {dim} coordinates, got shape {np.shape(z)}")
    return arr, single


# --------------------------------------------------------------------------
# Activations
# --------------------------------------------------------------------------

ENTIRE_FAMILIES = ("exp", "sin", "cos", "sinh", "cosh")
FAMILIES = ENTIRE_FAMILIES + ("polynomial", "relu", "leaky_relu")

_DERIVATIVE_CYCLES = {
    "exp": ((1, np.exp),),
    "sin": ((1, np.sin), (1, np.cos), (-1, np.sin), (-1, np.cos)),
    "cos": ((1, np.cos), (-1, np.sin), (-1, np.cos), (1, np.sin)),
    "sinh": ((1, np.sinh), (1, np.cosh)),
    "cosh": ((1, np.cosh), (1, np.sinh)),
}


@dataclass(frozen=True)
class Activation:
    """A scalar activation function with its field marker.

    ``family`` is one of ``exp, sin, cos, sinh, cosh, polynomial, relu,
    leaky_relu``.  Polynomial activations carry their coefficients in
    increasing-degree order.
    """

    family: str
    field: FieldTag = FieldTag.REAL
    coeffs: tuple = ()
    slope: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown activation family {self.family!r}")
        if self.family in ("relu", "leaky_relu") and self.field is not FieldTag.REAL:
            raise FieldMismatchError("ReLU-type activations exist only over the reals")
        if self.family == "polynomial":
            c = as_field_array(self.coeffs, self.field, what="polynomial coefficients")
            if c.ndim != 1 or c.size == 0 or c[-1] == 0:
                raise ValueError("polynomial activation needs a nonzero leading coefficient")
            object.__setattr__(self, "coeffs", tuple(c.tolist()))
        elif self.coeffs:
            raise ValueError("only polynomial activations take coefficients")
        if self.family == "leaky_relu" and not (0.0 <= self.slope < 1.0):
            raise ValueError("leaky ReLU slope must lie in [0, 1)")

    # convenience constructors -------------------------------------------
    @classmethod
    def named(cls, name: str, field: FieldTag | str = FieldTag.REAL) -> "Activation":
        """Build from a short name: exp, sin, ..., square, cube, identity, relu."""
        field = FieldTag.parse(field)
        name = name.strip().lower()
        if name in ENTIRE_FAMILIES or name == "relu":
            return cls(name, field)
        shortcuts = {"identity": (0, 1), "linear": (0, 1), "square": (0, 0, 1), "cube": (0, 0, 0, 1)}
        if name in shortcuts:
            return cls("polynomial", field, coeffs=shortcuts[name])
        if name.startswith("leaky_relu"):
            _, _, slope = name.partition(":")
            return cls("leaky_relu", field, slope=float(slope or 0.01))
        if name.startswith("poly:"):
            coeffs = [complex(c) if "j" in c else float(c) for c in name[5:].split(",")]
            return cls("polynomial", field, coeffs=tuple(coeffs))
        raise ValueError(f"unknown activation name {name!r}")

    @classmethod
    def polynomial(cls, coeffs: Sequence, field: FieldTag = FieldTag.REAL) -> "Activation":
        return cls("polynomial", field, coeffs=tuple(coeffs))

    # properties ----------------------------------------------------------
    @property
    def has_power_series(self) -> bool:
        return self.family not in ("relu", "leaky_relu")

    @property
    def is_polynomial(self) -> bool:
        return self.family == "polynomial"

    @property
    def degree(self) -> float:
        return len(self.coeffs) - 1 if self.is_polynomial else math.inf

    @property
    def is_affine(self) -> bool:
        return self.is_polynomial and self.degree <= 1

    @property
    def is_constant(self) -> bool:
        return self.is_polynomial and self.degree == 0

    # evaluation -------------------------------------------------------------
    def __call__(self, z):
        z = np.asarray(z, dtype=self.field.dtype)
        fam = self.family
        if fam == "exp":
            return np.exp(z)
        if fam in ("sin", "cos", "sinh", "cosh"):
            return getattr(np, fam)(z)
        if fam == "polynomial":
            return _horner(self.coeffs, z)
        if fam == "relu":
            return np.maximum(z, 0.0)
        return np.where(z >= 0, z, self.slope * z)

    def derivative(self, z, order: int = 1):
        """Exact ``order``-th derivative (power-series families only)."""
        if not self.has_power_series:
            raise ConstructionError("ReLU-type activations have no power series")
        z = np.asarray(z, dtype=self.field.dtype)
        if self.family == "polynomial":
            c = np.array(self.coeffs, dtype=self.field.dtype)
            for _ in range(order):
                if c.size == 1:
                    return np.zeros_like(z)
                c = c[1:] * np.arange(1, c.size)
            return _horner(tuple(c.tolist()), z)
        cycle = _DERIVATIVE_CYCLES[self.family]
        sign, fn = cycle[order % len(cycle)]
        return sign * fn(z)

    def coefficient(self, k: int):
        return activation_coefficient(self, k)


def _horner(coeffs: Sequence, z: np.ndarray):
    out = np.zeros_like(z) + coeffs[-1]
    for c in reversed(coeffs[:-1]):
        out = out * z + c
    return out


def _check_scalar_field(z, field: FieldTag):
    if field is FieldTag.REAL and np.iscomplexobj(z) and np.any(np.imag(z) != 0):
        raise FieldMismatchError("complex argument passed to a real activation")


def eval_activation(act: Activation, z):
    """Value of ``act`` at ``z`` (scalar or array)."""
    _check_scalar_field(z, act.field)
    out = act(z)
    return out.item() if np.ndim(out) == 0 else out


def activation_coefficient(act: Activation, k: int):
    """Taylor coefficient alpha_k of ``act`` at the origin."""
    if k < 0:
        raise ValueError("coefficient index must be non-negative")
    fam = act.family
    if fam in ("relu", "leaky_relu"):
        raise ConstructionError(f"{fam} has no power series expansion")
    if fam == "polynomial":
        return act.coeffs[k] if k < len(act.coeffs) else 0.0
    inv_fact = math.exp(-math.lgamma(k + 1)) if k > 20 else 1.0 / math.factorial(k)
    if fam == "exp":
        return inv_fact
    if fam == "sinh":
        return inv_fact if k % 2 else 0.0
    if fam == "cosh":
        return 0.0 if k % 2 else inv_fact
    if fam == "sin":
        return (-1.0) ** ((k - 1) // 2) * inv_fact if k % 2 else 0.0
    return 0.0 if k % 2 else (-1.0) ** (k // 2) * inv_fact  # cos


def smallest_nonzero_order(act: Activation, start: int, limit: int = COEFF_SCAN_LIMIT) -> int:
    """Smallest ``M >= start`` with a nonzero Taylor coefficient."""
    for k in range(start, limit + 1):
        if activation_coefficient(act, k) != 0:
            return k
    raise ConstructionError(f"no nonzero Taylor coefficient of order >= {start} (scanned to {limit})")


def eval_series(act: Activation, z):
    """Evaluate ``act`` by summing its Taylor series.

    Independent of the closed-form path; used as an oracle.  Stops once
    a nonzero term past the peak falls below 1e-17 of the partial sum, or
    after 200 terms.
    """
    z = complex(z) if act.field is FieldTag.COMPLEX else float(z)
    total = 0.0
    power = 1.0
    for k in range(MAX_SERIES_TERMS):
        c = activation_coefficient(act, k)
        if c != 0:
            term = c * power
            total += term
            if k > abs(z) and abs(term) < SERIES_RTOL * abs(total):
                break
        elif act.is_polynomial and k >= len(act.coeffs):
            break
        power *= z
    return total


# --------------------------------------------------------------------------
# Multivariate polynomials
# --------------------------------------------------------------------------


def monomials(dim: int, degree: int) -> list[tuple[int, ...]]:
    """All exponent tuples of total degree ``degree``, in lexicographically decreasing order."""
    if dim == 0:
        return [()] if degree == 0 else []
    out = []
    for first in range(degree, -1, -1):
        for rest in monomials(dim - 1, degree - first):
            out.append((first,) + rest)
    return out


def graded_lex_key(idx: tuple[int, ...]):
    return (sum(idx), tuple(-e for e in idx))


class MPoly:
    """Multivariate polynomial stored as ``{exponent tuple: coefficient}``.

    Zero coefficients are never stored.  Instances are treated as immutable.
    """

    __slots__ = ("dim", "field", "terms")

    def __init__(self, dim: int, terms: Mapping | Iterable = (), field: FieldTag = FieldTag.REAL):
        if dim < 1:
            raise ValueError("polynomial dimension must be positive")
        self.dim = dim
        self.field = FieldTag.parse(field)
        items = terms.items() if isinstance(terms, Mapping) else terms
        clean: dict[tuple[int, ...], complex | float] = {}
        for idx, c in items:
            idx = tuple(int(e) for e in idx)
            if len(idx) != dim or any(e < 0 for e in idx):
                raise ShapeError(f"bad multi-index {idx} for dimension {dim}")
            c = as_field_array(c, self.field, what="coefficient").item()
            clean[idx] = clean.get(idx, 0) + c
        self.terms = {k: v for k, v in clean.items() if v != 0}

    # constructors ---------------------------------------------------------
    @classmethod
    def constant(cls, c, dim: int, field: FieldTag = FieldTag.REAL) -> "MPoly":
        return cls(dim, {(0,) * dim: c}, field)

    @classmethod
    def variable(cls, i: int, dim: int, field: FieldTag = FieldTag.REAL) -> "MPoly":
        idx = [0] * dim
        idx[i] = 1
        return cls(dim, {tuple(idx): 1.0}, field)

    @classmethod
    def affine(cls, coeffs: Sequence, const, field: FieldTag = FieldTag.REAL) -> "MPoly":
        """``sum_i coeffs[i] * z_i + const``."""
        dim = len(coeffs)
        terms = {(0,) * dim: const}
        for i, c in enumerate(coeffs):
            idx = [0] * dim
            idx[i] = 1
            terms[tuple(idx)] = c
        return cls(dim, terms, field)

    # basic protocol ---------------------------------------------------------
    def __repr__(self):
        if not self.terms:
            return f"MPoly(dim={self.dim}, 0)"
        parts = []
        for idx in sorted(self.terms, key=graded_lex_key):
            mono = "*".join(f"z{i + 1}^{e}" if e > 1 else f"z{i + 1}" for i, e in enumerate(idx) if e)
            parts.append(f"{self.terms[idx]!r}" + (f"*{mono}" if mono else ""))
        return f"MPoly(dim={self.dim}, " + " + ".join(parts) + ")"

    def __eq__(self, other):
        if not isinstance(other, MPoly):
            return NotImplemented
        return self.dim == other.dim and self.terms == other.terms

    __hash__ = None

    def __bool__(self):
        return bool(self.terms)

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(i) for i in self.terms), default=-1)

    @property
    def is_homogeneous(self) -> bool:
        return len({sum(i) for i in self.terms}) <= 1

    def coefficient(self, idx) -> complex | float:
        return self.terms.get(tuple(idx), 0.0)

    def scale_norm(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    # arithmetic -------------------------------------------------------------
    def _check(self, other: "MPoly"):
        if other.dim != self.dim:
            raise ShapeError("polynomial dimensions differ")
        if other.field is not self.field:
            raise FieldMismatchError("polynomial fields differ")

    def _lift(self, other) -> "MPoly":
        if isinstance(other, MPoly):
            self._check(other)
            return other
        return MPoly.constant(other, self.dim, self.field)

    def __add__(self, other):
        other = self._lift(other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0) + v
        return MPoly(self.dim, terms, self.field)

    __radd__ = __add__

    def __neg__(self):
        return MPoly(self.dim, {k: -v for k, v in self.terms.items()}, self.field)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, MPoly):
            return MPoly(self.dim, {k: v * other for k, v in self.terms.items()}, self.field)
        self._check(other)
        terms: dict = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                terms[k] = terms.get(k, 0) + v1 * v2
        return MPoly(self.dim, terms, self.field)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not polynomials")
        result = MPoly.constant(1.0, self.dim, self.field)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __call__(self, z):
        return eval_mpoly(self, z)

    # calculus ---------------------------------------------------------------
    def derivative(self, i: int) -> "MPoly":
        terms = {}
        for idx, c in self.terms.items():
            if idx[i]:
                new = list(idx)
                new[i] -= 1
                terms[tuple(new)] = c * idx[i]
        return MPoly(self.dim, terms, self.field)

    def homogeneous_part(self, j: int) -> "MPoly":
        return MPoly(self.dim, {k: v for k, v in self.terms.items() if sum(k) == j}, self.field)

    def compose_linear(self, matrix) -> "MPoly":
        """The polynomial ``x -> p(M x)`` for a square or rectangular ``M`` (rows = self.dim)."""
        m = as_field_array(matrix, self.field, what="linear map")
        if m.ndim != 2 or m.shape[0] != self.dim:
            raise ShapeError("linear map rows must equal the polynomial dimension")
        new_dim = m.shape[1]
        rows = [MPoly.affine(m[i], 0.0, self.field) for i in range(self.dim)]
        result = MPoly(new_dim, {}, self.field)
        power_cache: dict[tuple[int, int], MPoly] = {}
        for idx, c in self.terms.items():
            term = MPoly.constant(c, new_dim, self.field)
            for i, e in enumerate(idx):
                if e:
                    key = (i, e)
                    if key not in power_cache:
                        power_cache[key] = rows[i] ** e
                    term = term * power_cache[key]
            result = result + term
        return result

    def coefficient_vector(self, basis: Sequence[tuple[int, ...]]) -> np.ndarray:
        return np.array([self.terms.get(idx, 0.0) for idx in basis], dtype=self.field.dtype)

    def prune(self, tol: float) -> "MPoly":
        """Drop coefficients with magnitude at most ``tol``."""
        return MPoly(self.dim, {k: v for k, v in self.terms.items() if abs(v) > tol}, self.field)


def eval_mpoly(p: MPoly, z):
    """Evaluate ``p`` at one point ``(d,)`` or a batch ``(N, d)``."""
    pts, single = _as_points(z, p.dim, p.field)
    out = np.zeros(pts.shape[0], dtype=p.field.dtype)
    if p.terms:
        max_exp = np.max(np.array(list(p.terms), dtype=int), axis=0)
        powers = [np.cumprod(np.column_stack([np.ones(len(pts), pts.dtype)] + [pts[:, i]] * int(max_exp[i])), axis=1)
                  for i in range(p.dim)]
        for idx, c in p.terms.items():
            term = np.full(len(pts), c, dtype=p.field.dtype)
            for i, e in enumerate(idx):
                if e:
                    term = term * powers[i][:, e]
            out += term
    return out[0] if single else out


def symbolic_laplacian(p: MPoly) -> MPoly:
    """Exact Laplacian ``sum_i d^2 p / dx_i^2``."""
    if p.field is not FieldTag.REAL:
        raise FieldMismatchError("the Laplacian is defined here for real polynomials")
    result = MPoly(p.dim, {}, p.field)
    for i in range(p.dim):
        result = result + p.derivative(i).derivative(i)
    return result


# --------------------------------------------------------------------------
# Finite differences and grids
# --------------------------------------------------------------------------


def forward_difference_weights(m: int) -> np.ndarray:
    """Weights ``(-1)^(m-l) C(m, l)`` for ``l = 0..m``."""
    return np.array([(-1) ** (m - l) * math.comb(m, l) for l in range(m + 1)], dtype=float)


def iterated_difference(f: Callable, m: int, gamma: float, h0=0.0) -> Callable:
    """Return ``args -> gamma^-m sum_l (-1)^(m-l) C(m,l) f(h0 + l gamma, *args)``.

    With this sign convention the quotient tends to the m-th derivative of
    ``f`` in its first argument as ``gamma -> 0``.
    """
    if m < 0:
        raise ValueError("order must be non-negative")
    if gamma == 0:
        raise ValueError("step must be nonzero")
    weights = forward_difference_weights(m)

    def quotient(*args):
        total = 0
        for l, c in enumerate(weights):
            total = total + c * f(h0 + l * gamma, *args)
        return total / gamma**m

    return quotient


def laplacian_fd(f: Callable, x, h: float):
    """Central-difference Laplacian of ``f`` at a point or a batch of points.

    ``f`` maps an ``(N, d)`` array to ``N`` real values.
    """
    if h <= 0:
        raise ValueError("step must be positive")
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    n, d = pts.shape
    shifts = np.concatenate([np.zeros((1, d)), h * np.eye(d), -h * np.eye(d)])
    stacked = (pts[None, :, :] + shifts[:, None, :]).reshape(-1, d)
    vals = np.asarray(f(stacked), dtype=float).reshape(2 * d + 1, n)
    lap = (vals[1:d + 1].sum(axis=0) + vals[d + 1:].sum(axis=0) - 2 * d * vals[0]) / h**2
    return lap[0] if single else lap


def default_samples(axes: int) -> int:
    if axes <= 2:
        return 201
    if axes == 3:
        return 41
    if axes == 4:
        return 21
    return max(3, int(round(2e5 ** (1.0 / axes))))


@dataclass(frozen=True)
class BoxGrid:
    """Tensor grid on a box in R^d, or on a box of (re, im) rectangles in C^d."""

    lower: tuple
    upper: tuple
    field: FieldTag = FieldTag.REAL
    samples: int | None = None
    _axes: tuple = dc_field(init=False, repr=False, compare=False, default=())

    def __post_init__(self):
        lo = as_field_array(self.lower, self.field, what="grid lower bound").ravel()
        hi = as_field_array(self.upper, self.field, what="grid upper bound").ravel()
        if lo.shape != hi.shape or lo.size == 0:
            raise ShapeError("grid bounds must be nonempty and of equal length")
        axes = []
        for a, b in zip(lo, hi):
            if self.field is FieldTag.REAL:
                axes.append((float(a), float(b)))
            else:
                axes.append((a.real, b.real))
                axes.append((a.imag, b.imag))
        if any(not a < b for a, b in axes):
            raise ValueError("grid needs lower < upper on every axis")
        samples = self.samples or default_samples(len(axes))
        if samples < 2:
            raise ValueError("need at least 2 samples per axis")
        object.__setattr__(self, "lower", tuple(lo.tolist()))
        object.__setattr__(self, "upper", tuple(hi.tolist()))
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "_axes", tuple(axes))

    @classmethod
    def cube(cls, dim: int, radius: float = 1.0, field: FieldTag = FieldTag.REAL, samples: int | None = None):
        """``[-r, r]^d``, or the product of squares ``|re|, |im| <= r`` over C."""
        if field is FieldTag.REAL:
            lo, hi = [-radius] * dim, [radius] * dim
        else:
            lo, hi = [complex(-radius, -radius)] * dim, [complex(radius, radius)] * dim
        return cls(tuple(lo), tuple(hi), field, samples)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def n_points(self) -> int:
        return self.samples ** len(self._axes)

    def points(self) -> np.ndarray:
        lines = [np.linspace(a, b, self.samples) for a, b in self._axes]
        mesh = np.stack(np.meshgrid(*lines, indexing="ij"), axis=-1).reshape(-1, len(lines))
        if self.field is FieldTag.REAL:
            return mesh
        return mesh[:, 0::2] + 1j * mesh[:, 1::2]


def sup_norm_diff(f: Callable, g: Callable, grid: BoxGrid) -> float:
    """Grid maximum of ``|f - g|``; a lower bound for the true sup norm."""
    pts = grid.points()
    return float(np.max(np.abs(np.asarray(f(pts)) - np.asarray(g(pts)))))


def random_points(rng: np.random.Generator, n: int, dim: int, field: FieldTag, radius: float = 1.0) -> np.ndarray:
    """Uniform samples from the cube (real) or polydisc-enclosing box (complex)."""
    pts = rng.uniform(-radius, radius, size=(n, dim))
    if field is FieldTag.COMPLEX:
        pts = pts + 1j * rng.uniform(-radius, radius, size=(n, dim))
    return pts


def multi_indices_up_to(dim: int, degree: int) -> list[tuple[int, ...]]:
    return [idx for j in range(degree + 1) for idx in monomials(dim, j)]


def product_range(limits: Sequence[int]):
    return itertools.product(*(range(m + 1) for m in limits))
