"""JSON network documents, polynomial/point CSV input, and CSV result tables."""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable, Sequence

import numpy as np

from .deep import MLP, DenseNet, Layer, ResBlock, ResNet
from .harmonic import HARMONIC_NAMES, HarmonicActivation, HarmonicNet, HarmonicTerm, OrthProjection
from .numerics import Activation, FieldTag, MPoly
from .shallow import ShallowNet

SCHEMA = 1
KINDS = ("shallow", "resnet", "mlp", "densenet", "harmonic")


class DocumentError(ValueError):
    """A network document or input file does not parse."""


# --------------------------------------------------------------------------
# arrays and activations
# --------------------------------------------------------------------------


def _encode_array(x: np.ndarray) -> dict:
    x = np.asarray(x)
    flat = x.ravel()
    if np.iscomplexobj(flat):
        data = [[float(v.real), float(v.imag)] for v in flat]
    else:
        data = [float(v) for v in flat]
    return {"shape": list(x.shape), "data": data}


def _decode_array(obj, field: FieldTag) -> np.ndarray:
    try:
        shape = tuple(int(s) for s in obj["shape"])
        data = obj["data"]
        if field is FieldTag.COMPLEX:
            arr = np.array([complex(float(re), float(im)) for re, im in data], dtype=complex)
        else:
            arr = np.array([float(v) for v in data], dtype=float)
        return arr.reshape(shape)
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError(f"malformed array: {exc}") from exc


def _encode_scalar(c):
    if isinstance(c, complex) or np.iscomplexobj(c):
        return [float(np.real(c)), float(np.imag(c))]
    return float(c)


def _decode_scalar(v, field: FieldTag):
    if field is FieldTag.COMPLEX:
        if isinstance(v, list):
            return complex(float(v[0]), float(v[1]))
        return complex(float(v))
    if isinstance(v, list):
        raise DocumentError("complex scalar in a real document")
    return float(v)


def encode_activation(act: Activation) -> dict:
    out = {"family": act.family}
    if act.is_polynomial:
        out["coeffs"] = [_encode_scalar(c) for c in act.coeffs]
    if act.family == "leaky_relu":
        out["slope"] = act.slope
    return out


def decode_activation(obj, field: FieldTag) -> Activation:
    try:
        coeffs = tuple(_decode_scalar(c, field) for c in obj.get("coeffs", ()))
        return Activation(obj["family"], field, coeffs, float(obj.get("slope", 0.0)))
    except (KeyError, TypeError, AttributeError) as exc:
        raise DocumentError(f"malformed activation: {exc}") from exc


def encode_mpoly(p: MPoly) -> list:
    return [[list(idx), _encode_scalar(c)] for idx, c in sorted(p.terms.items())]


def decode_mpoly(obj, dim: int, field: FieldTag) -> MPoly:
    return MPoly(dim, {tuple(idx): _decode_scalar(c, field) for idx, c in obj}, field)


# --------------------------------------------------------------------------
# networks
# --------------------------------------------------------------------------


def kind_of(net) -> str:
    for kind, cls in (("shallow", ShallowNet), ("resnet", ResNet), ("mlp", MLP), ("densenet", DenseNet),
                      ("harmonic", HarmonicNet)):
        if isinstance(net, cls):
            return kind
    raise TypeError(f"cannot serialize {type(net).__name__}")


def to_document(net, construction: dict | None = None) -> dict:
    kind = kind_of(net)
    doc = {"schema": SCHEMA, "kind": kind}
    if kind == "harmonic":
        act = net.activation
        doc["field"] = "R"
        named = act.name in HARMONIC_NAMES
        doc["activation"] = {"name": act.name, "k": act.k, "poly": None if named else encode_mpoly(act.poly)}
        doc["dim"] = net.dim
        doc["weights"] = {"terms": [{"a": t.a, "rho": t.rho, "P": _encode_array(t.P.P), "b": _encode_array(t.b)}
                                    for t in net.terms]}
    else:
        doc["field"] = net.field.value
        doc["activation"] = encode_activation(net.activation)
        doc["dim"] = net.dim
        if kind == "shallow":
            w = {"a": _encode_array(net.a), "w": _encode_array(net.w), "b": _encode_array(net.b)}
        elif kind == "resnet":
            w = {"A0": _encode_array(net.A0), "b0": _encode_array(net.b0),
                 "blocks": [{"A": _encode_array(b.A), "W": _encode_array(b.W), "b": _encode_array(b.b)}
                            for b in net.blocks],
                 "AL": _encode_array(net.AL)}
        else:
            w = {"layers": [{"A": _encode_array(layer.A), "b": _encode_array(layer.b)} for layer in net.layers]}
        doc["weights"] = w
    if construction:
        doc["construction"] = construction
    return doc


def from_document(doc: dict):
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    if doc.get("schema") != SCHEMA:
        raise DocumentError(f"unsupported schema {doc.get('schema')!r}")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise DocumentError(f"unknown network kind {kind!r}")
    try:
        field = FieldTag.parse(doc["field"])
        w = doc["weights"]
        dim = int(doc["dim"])
        if kind == "harmonic":
            spec = doc["activation"]
            if spec.get("poly") is not None:
                act = HarmonicActivation.from_poly(decode_mpoly(spec["poly"], int(spec["k"]), FieldTag.REAL),
                                                   spec["name"])
            else:
                act = HarmonicActivation.named(spec["name"])
            terms = tuple(HarmonicTerm(float(t["a"]), float(t["rho"]),
                                       OrthProjection(_decode_array(t["P"], FieldTag.REAL)),
                                       _decode_array(t["b"], FieldTag.REAL)) for t in w["terms"])
            net = HarmonicNet(act, terms)
        else:
            act = decode_activation(doc["activation"], field)
            arr = lambda o: _decode_array(o, field)  # noqa: E731
            if kind == "shallow":
                net = ShallowNet(act, arr(w["a"]), arr(w["w"]), arr(w["b"]))
            elif kind == "resnet":
                blocks = [ResBlock(arr(b["A"]), arr(b["W"]), arr(b["b"])) for b in w["blocks"]]
                net = ResNet(act, arr(w["A0"]), arr(w["b0"]), blocks, arr(w["AL"]))
            else:
                layers = [Layer(arr(layer["A"]), arr(layer["b"])) for layer in w["layers"]]
                net = (MLP if kind == "mlp" else DenseNet)(act, dim, layers)
    except DocumentError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise DocumentError(f"invalid {kind} document: {exc}") from exc
    if net.dim != dim:
        raise DocumentError("stored dim does not match the weights")
    return net


def dumps(net, construction: dict | None = None) -> str:
    return json.dumps(to_document(net, construction), indent=1, allow_nan=False) + "\n"


def loads(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"not valid JSON: {exc}") from exc
    return from_document(doc), doc.get("construction")


def save(path: str, net, construction: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(net, construction))


def load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc}") from exc


# --------------------------------------------------------------------------
# CSV input
# --------------------------------------------------------------------------


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _rows(text: str) -> list[tuple[int, list[str]]]:
    out = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        cells = [c.strip() for c in row]
        if not cells or all(c == "" for c in cells):
            continue
        out.append((lineno, cells))
    if out and not _is_number(out[0][1][0]):
        out = out[1:]
    return out


def parse_poly_csv(text: str, field: FieldTag, dim: int | None = None) -> MPoly:
    """Rows ``e1,...,ed,re[,im]``; an optional header row is skipped."""
    rows = _rows(text)
    if not rows:
        raise DocumentError("polynomial file has no terms")
    terms: dict[tuple, complex | float] = {}
    for lineno, cells in rows:
        n = len(cells)
        d = dim if dim is not None else (n - 2 if field is FieldTag.COMPLEX else n - 1)
        if d < 1 or n not in (d + 1, d + 2):
            raise DocumentError(f"line {lineno}: expected {d} exponents and a coefficient, got {n} columns")
        try:
            idx = tuple(int(c) for c in cells[:d])
            re = float(cells[d])
            im = float(cells[d + 1]) if n == d + 2 else 0.0
        except ValueError as exc:
            raise DocumentError(f"line {lineno}: {exc}") from exc
        if any(e < 0 for e in idx):
            raise DocumentError(f"line {lineno}: exponents must be non-negative")
        if field is FieldTag.REAL and im != 0:
            raise DocumentError(f"line {lineno}: nonzero imaginary part under the real field")
        if dim is None:
            dim = d
        terms[idx] = terms.get(idx, 0) + (complex(re, im) if field is FieldTag.COMPLEX else re)
    return MPoly(dim, terms, field)


def parse_points_csv(text: str, dim: int, field: FieldTag) -> np.ndarray:
    """One point per row; complex coordinates as ``re,im`` column pairs."""
    width = 2 * dim if field is FieldTag.COMPLEX else dim
    pts = []
    for lineno, cells in _rows(text):
        if len(cells) != width:
            raise DocumentError(f"line {lineno}: expected {width} columns, got {len(cells)}")
        try:
            vals = [float(c) for c in cells]
        except ValueError as exc:
            raise DocumentError(f"line {lineno}: {exc}") from exc
        if not all(math.isfinite(v) for v in vals):
            raise DocumentError(f"line {lineno}: non-finite coordinate")
        pts.append(vals)
    arr = np.array(pts, dtype=float).reshape(len(pts), width)
    if field is FieldTag.COMPLEX:
        return arr[:, 0::2] + 1j * arr[:, 1::2]
    return arr


def parse_pieces_csv(text: str):
    """Rows ``w1,...,wd,b`` of affine pieces."""
    from .relu import AffinePiece

    pieces = []
    for lineno, cells in _rows(text):
        try:
            vals = [float(c) for c in cells]
        except ValueError as exc:
            raise DocumentError(f"line {lineno}: {exc}") from exc
        if len(vals) < 2:
            raise DocumentError(f"line {lineno}: need at least one weight and a bias")
        pieces.append(AffinePiece(vals[:-1], vals[-1]))
    if not pieces:
        raise DocumentError("no affine pieces")
    if len({p.dim for p in pieces}) != 1:
        raise DocumentError("affine pieces have different dimensions")
    return pieces


# --------------------------------------------------------------------------
# result tables
# --------------------------------------------------------------------------


def format_cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def render_table(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError("table rows must match the header width")
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue()
