"""Command-line interface: build, embed, eval, verify, report.

Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
3 construction precondition violated.
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Sequence

import numpy as np

from . import analysis, deep, documents, harmonic, relu, shallow
from .documents import DocumentError, render_table
from .errors import ConstructionError, FieldMismatchError, ShapeError
from .numerics import Activation, BoxGrid, FieldTag, MPoly, activation_coefficient, sup_norm_diff

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_CONSTRUCTION = 0, 1, 2, 3
EXACT_RTOL = 1e-12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------
# argument helpers
# --------------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _field(text: str) -> FieldTag:
    try:
        return FieldTag.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _common(p: argparse.ArgumentParser, inp: bool = False):
    p.add_argument("--field", type=_field, default=FieldTag.REAL, help="R or C")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", default=None, help="output path (stdout when omitted)")
    if inp:
        p.add_argument("-i", "--input", required=True, help="network document")


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc}") from exc


def _write(text: str, path: str | None, out) -> None:
    if path is None:
        out.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _activation(name: str, field: FieldTag) -> Activation:
    try:
        return Activation.named(name, field)
    except ValueError as exc:
        raise UsageError(str(exc))


def _self_check_grid(dim: int, field: FieldTag) -> BoxGrid:
    axes = dim * (2 if field is FieldTag.COMPLEX else 1)
    samples = {1: 201, 2: 41, 3: 21, 4: 11}.get(axes, 5)
    return BoxGrid.cube(dim, 1.0, field, samples)


# --------------------------------------------------------------------------
# build
# --------------------------------------------------------------------------

C2_FUNCTIONS = {
    "square": (lambda t: t**2, lambda t: 2 * t, lambda t: 2 + 0 * np.asarray(t, dtype=float)),
    "exp": (np.exp, np.exp, np.exp),
    "sin": (np.sin, np.cos, lambda t: -np.sin(t)),
    "cube": (lambda t: t**3, lambda t: 3 * t**2, lambda t: 6 * np.asarray(t, dtype=float)),
}


def _emit_net(args, net, construction, out) -> None:
    _write(documents.dumps(net, construction), args.output, out)
    info = f"kind={documents.kind_of(net)} params={deep.param_count(net)}"
    if isinstance(net, shallow.ShallowNet):
        info = f"neurons={net.n_neurons} " + info
    print(info, file=sys.stderr if args.output is None else out)


def cmd_build(args, out) -> int:
    what = args.what
    f = args.field
    if what == "shallow-monomial":
        act = _activation(args.activation, f)
        if args.higher is not None:
            net = shallow.build_monomial_via_higher(act, args.degree, args.higher, args.beta, args.gamma)
        else:
            net = shallow.build_monomial_1d(act, args.degree, args.gamma, args.pure)
        construction = {"builder": "monomial", "degree": args.degree}
    elif what == "shallow-poly":
        act = _activation(args.activation, f)
        p = documents.parse_poly_csv(_read(args.poly), f, args.dim)
        net = shallow.build_polynomial(act, p, args.beta, args.gamma)
        construction = {"builder": "polynomial", "dim": p.dim}
    elif what == "resnet-poly":
        p = documents.parse_poly_csv(_read(args.poly), f, args.dim)
        if args.activation == "square":
            net = deep.resnet_poly_square(p)
        else:
            net = deep.resnet_poly_general(p, _activation(args.activation, f), args.h, args.zstar)
        construction = {"builder": "resnet_poly", "dim": p.dim}
    elif what == "relu-c2":
        a, b = args.interval
        fns = C2_FUNCTIONS[args.function]
        net = relu.shallow_from_c2(relu.C2FunctionSpec(*fns, a, b), args.T)
        construction = {"builder": "relu_c2", "function": args.function, "interval": [a, b]}
    elif what == "relu-maxaffine":
        pieces = documents.parse_pieces_csv(_read(args.pieces))
        if args.minus:
            net = relu.resnet_dc(pieces, documents.parse_pieces_csv(_read(args.minus)))
        else:
            net = relu.resnet_max_affine(pieces)
        construction = {"builder": "relu_dc" if args.minus else "relu_max_affine"}
    elif what == "harmonic-net":
        if args.seed is None:
            raise UsageError("harmonic-net draws random weights and requires --seed")
        act = harmonic.HarmonicActivation.named(args.activation)
        net = harmonic.random_harmonic_net(np.random.default_rng(args.seed), act, args.dim, args.terms)
        construction = {"builder": "random_harmonic", "seed": args.seed}
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(what)
    _emit_net(args, net, construction, out)
    return EXIT_OK


# --------------------------------------------------------------------------
# embed
# --------------------------------------------------------------------------


def _formula_rows(net, construction: dict | None) -> list[tuple[str, str, int]]:
    """(label, closed form, value) rows for recognized architectures."""
    rows = []
    if isinstance(net, shallow.ShallowNet):
        rows.append(("shallow", "(d+2)n", deep.shallow_param_formula(net.dim, net.n_neurons)))
    elif isinstance(net, deep.ResNet) and construction and construction.get("builder") == "resnet_from_shallow":
        d, n = construction["dim"], construction["neurons"]
        rows.append(("resnet embedding", "2(n+1)(d+1)+n", deep.resnet_embedding_param_formula(d, n)))
        rows.append(("resnet embedding", "(d+1)(d+2)+2n(d+1)+n",
                     deep.resnet_embedding_param_sum(d, construction["widths"])))
    elif isinstance(net, deep.MLP):
        rows.append(("mlp", "sum d_{l-1} d_l + d_l", deep.mlp_param_formula(net.widths)))
    return rows


def _rounding_scale(src, pts) -> float:
    """Magnitude that rounding in an exact re-expression is relative to.

    For shallow sources this is the sum of neuron term sizes, which can far
    exceed |f| when the weights come from a difference quotient.
    """
    if isinstance(src, shallow.ShallowNet):
        terms = np.abs(src.a * src.activation(pts @ src.w.conj().T + src.b))
        return max(1.0, float(np.max(terms.sum(axis=1))))
    return max(1.0, float(np.max(np.abs(src(pts)))))


def cmd_embed(args, out) -> int:
    src, src_info = documents.load(args.input)
    target = args.target
    exact = True
    if target == "densenet":
        if isinstance(src, shallow.ShallowNet):
            net = deep.densenet_from_shallow(src, args.widths)
        elif isinstance(src, deep.MLP):
            net = deep.densenet_from_mlp(src)
        else:
            raise UsageError("densenet embedding needs a shallow or mlp document")
        construction = {"builder": "densenet", "dim": src.dim}
    else:
        if not isinstance(src, shallow.ShallowNet):
            raise UsageError(f"{target} embedding needs a shallow document")
        widths = args.widths or [src.n_neurons]
        if target == "resnet":
            net = deep.resnet_from_shallow(src, widths)
            construction = {"builder": "resnet_from_shallow", "dim": src.dim, "neurons": src.n_neurons,
                            "widths": list(widths)}
        elif src.activation.family == "relu":
            lo, hi = args.box
            net = relu.mlp_exact_from_shallow_relu(src, ([lo] * src.dim, [hi] * src.dim), widths)
            construction = {"builder": "mlp_exact_relu", "box": [lo, hi]}
        else:
            net = deep.mlp_from_shallow(src, widths, args.epsilon, args.zstar)
            construction = {"builder": "mlp_from_shallow", "epsilon": args.epsilon}
            exact = False
    grid = _self_check_grid(src.dim, src.field)
    if construction["builder"] == "mlp_exact_relu":
        lo, hi = args.box
        grid = BoxGrid([lo] * src.dim, [hi] * src.dim, FieldTag.REAL, grid.samples)
    err = sup_norm_diff(net, src, grid)
    scale = _rounding_scale(src, grid.points())
    _write(documents.dumps(net, construction), args.output, out)
    log = sys.stderr if args.output is None else out
    print(f"source params={deep.param_count(src)} target params={deep.param_count(net)}", file=log)
    for label, form, value in _formula_rows(src, src_info) + _formula_rows(net, construction):
        print(f"formula {label} {form} = {value}", file=log)
    print(f"grid max |target - source| = {err:.3e} over {grid.n_points} points "
          f"(rounding scale {scale:.3e})", file=log)
    if not math.isfinite(err):
        print("self-check failed: non-finite deviation (overflow in the embedded network)", file=log)
        return EXIT_VERIFY
    if args.tol is not None:
        if not err <= args.tol:
            print(f"self-check failed: exceeds --tol {args.tol:g}", file=log)
            return EXIT_VERIFY
    elif exact and err > EXACT_RTOL * scale:
        print(f"self-check failed: exceeds {EXACT_RTOL:g} relative", file=log)
        return EXIT_VERIFY
    return EXIT_OK


# --------------------------------------------------------------------------
# eval
# --------------------------------------------------------------------------


def cmd_eval(args, out) -> int:
    net, _ = documents.load(args.input)
    field = FieldTag.REAL if isinstance(net, harmonic.HarmonicNet) else net.field
    pts = documents.parse_points_csv(_read(args.points), net.dim, field)
    vals = net(pts) if len(pts) else np.zeros(0, dtype=field.dtype)
    if field is FieldTag.COMPLEX:
        table = render_table(["re", "im"], [(v.real, v.imag) for v in vals])
    else:
        table = render_table(["value"], [(v,) for v in vals])
    _write(table, args.output, out)
    return EXIT_OK


# --------------------------------------------------------------------------
# verify
# --------------------------------------------------------------------------


def _verify_cauchy(args):
    r, R = args.annulus
    polys = [MPoly(1, {(j,): 1.0}, FieldTag.COMPLEX) for j in range(args.degree + 1)]
    rep = analysis.cauchy_obstruction_report(args.k, polys, r, R, args.nodes)
    ok = abs(rep.target - 2j * math.pi) <= 1e-10
    rows = [(rep.rows()[0][0], rep.rows()[0][1], 2 * math.pi, ok)]
    for (label, val), p in zip(rep.rows()[1:], polys):
        tol = 1e-12 * max(1.0, rep.radius ** (p.degree + args.k))
        rows.append((f"z^{p.degree}", val, 0.0, val <= tol))
    return ["integrand", "abs_integral", "expected", "pass"], rows


def _verify_harmonic(args):
    if args.seed is None:
        raise UsageError("verify harmonic samples random points and requires --seed")
    net, _ = documents.load(args.input)
    if not isinstance(net, harmonic.HarmonicNet):
        raise UsageError("verify harmonic needs a harmonic network document")
    pts = np.random.default_rng(args.seed).uniform(-1, 1, (args.points, net.dim))
    lap = harmonic.verify_network_harmonic(net, pts, args.h)
    return ["points", "h", "max_abs_laplacian", "tol", "pass"], [(args.points, args.h, lap, args.tol, lap <= args.tol)]


def _verify_runge(args):
    try:
        table = analysis.runge_table(args.nodes)
    except ValueError as exc:
        raise UsageError(str(exc))
    errs = table.errors
    rows = [(int(n), e, e > errs[i - 1] if i else True) for i, (n, e) in enumerate(zip(table.params, errs))]
    return ["nodes", "max_error", "pass"], rows


def _verify_convergence(args):
    f = args.field
    b = args.builder
    m = args.degree
    if b == "monomial_1d":
        act = _activation(args.activation, f)
        fixed = {"act": act, "m": m}
        alpha = activation_coefficient(act, m)
        target = lambda x: alpha * x[:, 0] ** m  # noqa: E731
        grid = BoxGrid.cube(1, 1.0, f)
    elif b == "resnet_poly_general":
        p = MPoly(1, {(m,): 1.0}, f)
        fixed = {"poly": p, "act": _activation(args.activation, f)}
        target = p
        grid = BoxGrid.cube(1, 1.0, f)
    elif b == "mlp_from_shallow":
        if args.input is None:
            raise UsageError("mlp_from_shallow needs -i with a shallow document")
        src, _ = documents.load(args.input)
        if not isinstance(src, shallow.ShallowNet):
            raise UsageError("mlp_from_shallow needs a shallow document")
        fixed = {"net": src, "widths": args.widths or [src.n_neurons]}
        target = src
        grid = _self_check_grid(src.dim, src.field)
    elif b == "shallow_from_c2":
        fns = C2_FUNCTIONS[args.function]
        fixed = {"spec": relu.C2FunctionSpec(*fns, 0.0, 1.0)}
        target = lambda x: fns[0](x[:, 0])  # noqa: E731
        grid = BoxGrid((0.0,), (1.0,), FieldTag.REAL, 201)
    else:
        raise UsageError(f"unknown builder {b!r}")
    table = analysis.convergence_study(b, fixed, args.params, target, grid)
    rows = []
    for p, e, q in table.rows():
        # errors at the rounding floor carry no rate information
        ok = math.isfinite(e) and (math.isnan(q) or q <= args.max_ratio or e <= args.floor)
        rows.append((p, e, q, ok))
    return table.header() + ["pass"], rows


def _verify_rotation_span(args):
    if args.seed is None:
        raise UsageError("verify rotation-span draws random rotations and requires --seed")
    d, j = args.dim, args.degree
    basis = harmonic.hp_basis(d, j)
    R = args.rotations or 3 * len(basis)
    rows = []
    for i, p in enumerate(basis):
        rank = harmonic.rotation_span_rank(p, d, j, R, args.seed)
        rows.append((i, rank, len(basis), rank == len(basis)))
    return ["basis_element", "rank", "dim_hp", "pass"], rows


def _verify_fundamental(args):
    if args.seed is None:
        raise UsageError("verify fundamental draws random points and requires --seed")
    d, n = args.dim, args.degree
    N = harmonic.dim_hp(d, n)
    pts = harmonic.random_sphere_points(np.random.default_rng(args.seed), N, d)
    det = harmonic.fundamental_system_det(pts, n)
    return ["points", "degree", "det", "pass"], [(N, n, det, det > 0)]


VERIFIERS = {
    "cauchy": _verify_cauchy,
    "harmonic": _verify_harmonic,
    "runge": _verify_runge,
    "convergence": _verify_convergence,
    "rotation-span": _verify_rotation_span,
    "fundamental": _verify_fundamental,
}


def cmd_verify(args, out) -> int:
    header, rows = VERIFIERS[args.what](args)
    _write(render_table(header, rows), args.output, out)
    return EXIT_OK if all(bool(r[-1]) for r in rows) else EXIT_VERIFY


# --------------------------------------------------------------------------
# report
# --------------------------------------------------------------------------


def cmd_report(args, out) -> int:
    net, construction = documents.load(args.input)
    kind = documents.kind_of(net)
    lines = [f"kind: {kind}", f"input dim: {net.dim}"]
    if kind == "harmonic":
        lines.append(f"field: R\nactivation: {net.activation.name}\nterms: {len(net.terms)}\nk: {net.k}")
    else:
        lines.append(f"field: {net.field.value}")
        lines.append(f"activation: {net.activation.family}")
    if kind == "shallow":
        lines.append(f"neurons: {net.n_neurons}")
    elif kind == "resnet":
        lines.append(f"inner width: {net.inner_width}")
        lines.append(f"block widths: {','.join(map(str, net.block_widths))}")
    elif kind in ("mlp", "densenet"):
        lines.append(f"widths: {','.join(map(str, net.widths))}")
    count = deep.param_count(net)
    lines.append(f"param_count: {count}")
    for label, form, value in _formula_rows(net, construction):
        mark = "matches" if value == count else "differs"
        lines.append(f"formula {form}: {value} ({mark})")
    _write("\n".join(lines) + "\n", args.output, out)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="netconstruct", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build", help="construct a network")
    bsub = b.add_subparsers(dest="what", required=True, parser_class=_Parser)
    p = bsub.add_parser("shallow-monomial")
    _common(p)
    p.add_argument("--activation", default="exp")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--gamma", type=float, default=shallow.DEFAULT_STEP)
    p.add_argument("--beta", type=float, default=shallow.DEFAULT_STEP)
    p.add_argument("--higher", type=int, default=None, help="build through coefficient M >= degree")
    p.add_argument("--pure", action="store_true", help="divide by alpha_m to target z^m")
    for name in ("shallow-poly", "resnet-poly"):
        p = bsub.add_parser(name)
        _common(p)
        p.add_argument("--poly", required=True, help="CSV rows e1,...,ed,re[,im]")
        p.add_argument("--dim", type=int, default=None)
        p.add_argument("--activation", default="exp" if name == "shallow-poly" else "square")
        if name == "shallow-poly":
            p.add_argument("--gamma", type=float, default=shallow.DEFAULT_STEP)
            p.add_argument("--beta", type=float, default=shallow.DEFAULT_STEP)
        else:
            p.add_argument("--h", type=float, default=1e-3)
            p.add_argument("--zstar", type=float, default=None)
    p = bsub.add_parser("relu-c2")
    _common(p)
    p.add_argument("--function", choices=sorted(C2_FUNCTIONS), required=True)
    p.add_argument("--interval", type=_floats, default=[0.0, 1.0])
    p.add_argument("--T", type=int, required=True)
    p = bsub.add_parser("relu-maxaffine")
    _common(p)
    p.add_argument("--pieces", required=True, help="CSV rows w1,...,wd,b")
    p.add_argument("--minus", default=None, help="second piece list for a difference of maxima")
    p = bsub.add_parser("harmonic-net")
    _common(p)
    p.add_argument("--activation", choices=harmonic.HARMONIC_NAMES, default="exp-cos")
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--terms", type=int, default=4)

    e = sub.add_parser("embed", help="re-express a network in another architecture")
    esub = e.add_subparsers(dest="target", required=True, parser_class=_Parser)
    for name in ("resnet", "mlp", "densenet"):
        p = esub.add_parser(name)
        _common(p, inp=True)
        p.add_argument("--widths", type=_ints, default=None)
        p.add_argument("--tol", type=float, default=None,
                       help="absolute bound on the grid self-check (exact embeddings default to 1e-12 relative)")
        if name == "mlp":
            p.add_argument("--epsilon", type=float, default=1e-3)
            p.add_argument("--zstar", type=float, default=None)
            p.add_argument("--box", type=_floats, default=[-1.0, 1.0], help="lo,hi for ReLU sources")

    p = sub.add_parser("eval", help="evaluate a network at points from a CSV file")
    _common(p, inp=True)
    p.add_argument("--points", required=True)

    v = sub.add_parser("verify", help="run a numerical check and write a CSV table")
    vsub = v.add_subparsers(dest="what", required=True, parser_class=_Parser)
    p = vsub.add_parser("cauchy")
    _common(p)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--annulus", type=_floats, default=[0.5, 2.0])
    p.add_argument("--degree", type=int, default=4, help="test polynomials z^0..z^degree")
    p.add_argument("--nodes", type=int, default=analysis.DEFAULT_CONTOUR_NODES)
    p = vsub.add_parser("harmonic")
    _common(p, inp=True)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--tol", type=float, default=1e-5)
    p = vsub.add_parser("runge")
    _common(p)
    p.add_argument("--nodes", type=_ints, default=[5, 9, 13])
    p = vsub.add_parser("convergence")
    _common(p)
    p.add_argument("-i", "--input", default=None)
    p.add_argument("--builder", required=True,
                   choices=["monomial_1d", "resnet_poly_general", "mlp_from_shallow", "shallow_from_c2"])
    p.add_argument("--activation", default="exp")
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--function", choices=sorted(C2_FUNCTIONS), default="square")
    p.add_argument("--widths", type=_ints, default=None)
    p.add_argument("--params", type=_floats, required=True)
    p.add_argument("--max-ratio", type=float, default=0.6)
    p.add_argument("--floor", type=float, default=1e-12, help="errors at or below this pass regardless of ratio")
    p = vsub.add_parser("rotation-span")
    _common(p)
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--rotations", type=int, default=None)
    p = vsub.add_parser("fundamental")
    _common(p)
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--degree", type=int, default=2)

    p = sub.add_parser("report", help="summarize a network document")
    _common(p, inp=True)
    return parser


COMMANDS = {"build": cmd_build, "embed": cmd_embed, "eval": cmd_eval, "verify": cmd_verify, "report": cmd_report}


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DocumentError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConstructionError, ShapeError, FieldMismatchError) as exc:
        print(f"construction error: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
