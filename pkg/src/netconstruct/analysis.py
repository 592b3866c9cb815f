"""Contour integrals, Lagrange interpolation, the Runge table, C^k errors and convergence studies."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .numerics import BoxGrid, FieldTag, MPoly, sup_norm_diff

DEFAULT_CONTOUR_NODES = 256
RUNGE_GRID = 1001


# --------------------------------------------------------------------------
# tables
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceTable:
    """Rows of (parameter, sup error, ratio to the previous error).

    Parameters must be strictly monotone; errors non-negative.
    """

    param_name: str
    params: tuple
    errors: tuple

    def __post_init__(self):
        params = tuple(float(p) for p in self.params)
        errors = tuple(float(e) for e in self.errors)
        if len(params) != len(errors):
            raise ValueError("one error per parameter")
        steps = np.diff(params)
        if len(params) > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError("parameters must be strictly monotone")
        if any(not e >= 0 for e in errors):
            raise ValueError("errors must be non-negative numbers")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "errors", errors)

    @property
    def ratios(self) -> tuple:
        return tuple(b / a if a > 0 else math.inf for a, b in zip(self.errors, self.errors[1:]))

    def rows(self) -> list[tuple]:
        r = (math.nan,) + self.ratios
        return [(p, e, q) for p, e, q in zip(self.params, self.errors, r)]

    def header(self) -> list[str]:
        return [self.param_name, "sup_error", "ratio"]


# --------------------------------------------------------------------------
# contour integrals
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ContourSpec:
    center: complex = 0j
    radius: float = 1.0
    nodes: int = DEFAULT_CONTOUR_NODES

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.nodes < 8:
            raise ValueError("need at least 8 nodes")

    def points(self) -> np.ndarray:
        theta = 2 * np.pi * np.arange(self.nodes) / self.nodes
        return self.center + self.radius * np.exp(1j * theta)


def _call_scalar(f, z: np.ndarray) -> np.ndarray:
    if isinstance(f, MPoly):
        return np.asarray(f(z[:, None]), dtype=complex)
    return np.asarray(f(z), dtype=complex)


def contour_integral(f: Callable, spec: ContourSpec, k: int = 1) -> complex:
    """Trapezoid rule for ``oint z^(k-1) f(z) dz`` on the circle of ``spec``."""
    z = spec.points()
    vals = _call_scalar(f, z)
    if not np.all(np.isfinite(vals)):
        raise ValueError("integrand is not finite on the contour")
    dz = 1j * (z - spec.center) * (2 * np.pi / spec.nodes)
    return complex(np.sum(z ** (k - 1) * vals * dz))


@dataclass(frozen=True)
class ObstructionReport:
    k: int
    radius: float
    target: complex
    poly_integrals: tuple

    @property
    def gap(self) -> float:
        """``|oint z^(k-1) z^(-k) dz|`` minus the largest polynomial integral."""
        worst = max((abs(v) for v in self.poly_integrals), default=0.0)
        return abs(self.target) - worst

    def rows(self) -> list[tuple[str, float]]:
        out = [(f"z^-{self.k}", abs(self.target))]
        out += [(f"poly{i}", abs(v)) for i, v in enumerate(self.poly_integrals)]
        return out


def cauchy_obstruction_report(k: int, polys: Sequence, r: float, R: float,
                              nodes: int = DEFAULT_CONTOUR_NODES) -> ObstructionReport:
    """Integrals of ``z^(k-1) p`` and ``z^(k-1) z^(-k)`` on the mid-annulus circle.

    Polynomials integrate to zero while ``z^(-k)`` gives ``2 pi i``, so no
    sequence of polynomials converges uniformly to ``z^(-k)`` on the annulus.
    """
    if not 0 < r < R:
        raise ValueError("need 0 < r < R")
    spec = ContourSpec(0j, (r + R) / 2, nodes)
    target = contour_integral(lambda z: z ** (-k), spec, k)
    vals = tuple(contour_integral(p, spec, k) for p in polys)
    return ObstructionReport(k, spec.radius, target, vals)


# --------------------------------------------------------------------------
# interpolation
# --------------------------------------------------------------------------


class LagrangeInterpolant:
    """Barycentric form of the interpolant through ``(z_i, y_i)``."""

    def __init__(self, nodes, values):
        z = np.asarray(nodes)
        y = np.asarray(values)
        if z.ndim != 1 or z.shape != y.shape or z.size == 0:
            raise ValueError("need matching one-dimensional node and value arrays")
        complex_data = np.iscomplexobj(z) or np.iscomplexobj(y)
        dtype = complex if complex_data else float
        self.field = FieldTag.COMPLEX if complex_data else FieldTag.REAL
        self.nodes = z.astype(dtype)
        self.values = y.astype(dtype)
        diff = self.nodes[:, None] - self.nodes[None, :]
        np.fill_diagonal(diff, 1)
        if np.any(diff == 0):
            raise ValueError("interpolation nodes must be distinct")
        self.weights = 1.0 / np.prod(diff, axis=1)

    @property
    def degree_bound(self) -> int:
        return self.nodes.size - 1

    def __call__(self, z):
        z = np.asarray(z)
        scalar = z.ndim == 0
        z = np.atleast_1d(z).astype(self.nodes.dtype if not np.iscomplexobj(z) else complex)
        diff = z[:, None] - self.nodes[None, :]
        exact = diff == 0
        with np.errstate(divide="ignore", invalid="ignore"):
            t = self.weights / diff
            out = (t @ self.values) / t.sum(axis=1)
        hit = exact.any(axis=1)
        if hit.any():
            out[hit] = self.values[np.argmax(exact[hit], axis=1)]
        return out[0] if scalar else out

    def to_mpoly(self) -> MPoly:
        """Monomial expansion; ill conditioned for many nodes (warned above 30)."""
        n = self.nodes.size
        if n > 30:
            warnings.warn(f"monomial expansion of a degree-{n - 1} interpolant is ill conditioned",
                          RuntimeWarning, stacklevel=2)
        coeffs = np.zeros(n, dtype=self.nodes.dtype)
        for i in range(n):
            others = np.delete(self.nodes, i)
            basis = np.poly(others) if n > 1 else np.ones(1)
            coeffs += self.values[i] * self.weights[i] * basis
        low_first = coeffs[::-1]
        return MPoly(1, {(j,): c for j, c in enumerate(low_first)}, self.field)


def lagrange_interpolate(points) -> LagrangeInterpolant:
    """Interpolant through a sequence of ``(z_i, y_i)`` pairs."""
    pts = list(points)
    return LagrangeInterpolant([p[0] for p in pts], [p[1] for p in pts])


def runge_function(x):
    return 1.0 / (1.0 + 25.0 * np.asarray(x) ** 2)


def runge_error(n: int, grid_points: int = RUNGE_GRID) -> float:
    if n < 2:
        raise ValueError("need at least 2 nodes")
    nodes = np.linspace(-1, 1, n)
    interp = LagrangeInterpolant(nodes, runge_function(nodes))
    x = np.linspace(-1, 1, grid_points)
    return float(np.max(np.abs(interp(x) - runge_function(x))))


def runge_table(counts: Sequence[int], grid_points: int = RUNGE_GRID) -> ConvergenceTable:
    """Max error of equidistant interpolation of ``1/(1+25x^2)`` on [-1, 1] per node count."""
    return ConvergenceTable("nodes", tuple(counts), tuple(runge_error(n, grid_points) for n in counts))


# --------------------------------------------------------------------------
# C^k error and convergence studies
# --------------------------------------------------------------------------


def _fd_derivatives(f: Callable, pts: np.ndarray, k: int, h: float) -> list[np.ndarray]:
    out = []
    d = pts.shape[1]
    f0 = np.asarray(f(pts))
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        fp, fm = np.asarray(f(pts + e)), np.asarray(f(pts - e))
        if k >= 1:
            out.append((fp - fm) / (2 * h))
        if k >= 2:
            out.append((fp - 2 * f0 + fm) / h**2)
    return out


def ck_error(f: Callable, g: Callable, k: int, grid: BoxGrid, h: float = 1e-3) -> float:
    """Grid max over derivative orders ``<= k`` of ``|D f - D g|``.

    Derivatives are central differences along each coordinate axis (for
    holomorphic functions on complex grids this is the complex derivative).
    """
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1 or 2")
    err = sup_norm_diff(f, g, grid)
    if k == 0:
        return err
    pts = grid.points()
    for df, dg in zip(_fd_derivatives(f, pts, k, h), _fd_derivatives(g, pts, k, h)):
        err = max(err, float(np.max(np.abs(df - dg))))
    return err


def _registry():
    from . import deep, relu, shallow

    return {
        "monomial_1d": ("gamma", lambda p, act, m, pure=False: shallow.build_monomial_1d(act, m, p, pure)),
        "monomial_via_higher": ("beta", lambda p, act, m, M, gamma=1e-3: shallow.build_monomial_via_higher(
            act, m, M, p, gamma)),
        "monomial_multi": ("step", lambda p, act, idx: shallow.build_monomial_multi(act, idx, p, p)),
        "polynomial": ("step", lambda p, act, poly: shallow.build_polynomial(act, poly, p, p)),
        "resnet_poly_general": ("h", lambda p, poly, act, zstar=None: deep.resnet_poly_general(poly, act, p, zstar)),
        "mlp_from_shallow": ("eps", lambda p, net, widths, zstar=None: deep.mlp_from_shallow(net, widths, p, zstar)),
        "shallow_from_c2": ("T", lambda p, spec: relu.shallow_from_c2(spec, int(p))),
    }


def builder_ids() -> list[str]:
    return sorted(_registry())


def convergence_study(builder: str, args: dict, params: Sequence[float], target: Callable,
                      grid: BoxGrid) -> ConvergenceTable:
    """Build once per parameter value and tabulate the grid sup error against ``target``."""
    reg = _registry()
    if builder not in reg:
        raise KeyError(f"unknown builder {builder!r}; choose from {sorted(reg)}")
    if any(not p > 0 for p in params):
        raise ValueError("parameters must be positive")
    name, make = reg[builder]
    errors = [sup_norm_diff(make(p, **args), target, grid) for p in params]
    return ConvergenceTable(name, tuple(params), tuple(errors))
