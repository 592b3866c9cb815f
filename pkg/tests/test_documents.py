import json

import numpy as np
import pytest

from netconstruct.deep import ResBlock, ResNet, densenet_from_mlp, random_mlp, resnet_from_shallow
from netconstruct.documents import (
    KINDS,
    DocumentError,
    dumps,
    format_cell,
    kind_of,
    loads,
    parse_pieces_csv,
    parse_points_csv,
    parse_poly_csv,
    render_table,
)
from netconstruct.harmonic import HarmonicActivation, HarmonicNet, random_harmonic_net
from netconstruct.numerics import Activation, FieldTag, MPoly
from netconstruct.shallow import ShallowNet, random_shallow

R, C = FieldTag.REAL, FieldTag.COMPLEX
FAMILIES = ("exp", "sin", "cos", "sinh", "cosh")


def _activation(rng, field):
    pick = int(rng.integers(0, len(FAMILIES) + 3))
    if pick < len(FAMILIES):
        return Activation.named(FAMILIES[pick], field)
    if pick == len(FAMILIES) and field is R:
        return Activation.named("relu")
    if pick == len(FAMILIES) + 1 and field is R:
        return Activation("leaky_relu", R, slope=float(rng.uniform(0.01, 0.3)))
    coeffs = rng.standard_normal(int(rng.integers(1, 5)))
    if field is C:
        coeffs = coeffs + 1j * rng.standard_normal(coeffs.size)
    return Activation.polynomial(tuple(coeffs), field)


def _random_net(kind, rng):
    field = R if rng.random() < 0.5 else C
    act = _activation(rng, field)
    d = int(rng.integers(1, 4))
    if kind == "shallow":
        return random_shallow(rng, act, d, int(rng.integers(1, 6)), scale=rng.uniform(0.1, 10))
    if kind == "resnet":
        s = random_shallow(rng, act, d, 4)
        net = resnet_from_shallow(s, [1, 3])
        blocks = [ResBlock(b.A + rng.standard_normal(b.A.shape), b.W, b.b) for b in net.blocks]
        return ResNet(act, net.A0, net.b0 + rng.standard_normal(net.b0.shape), blocks, net.AL)
    widths = [d] + [int(w) for w in rng.integers(1, 5, int(rng.integers(1, 4)))] + [1]
    m = random_mlp(rng, act, widths, scale=rng.uniform(0.1, 1))
    if kind == "mlp":
        return m
    return densenet_from_mlp(m)


def _random_harmonic(rng):
    if rng.random() < 0.7:
        act = HarmonicActivation.named(str(rng.choice(["u2-v2", "u3-3uv2", "exp-cos", "u2"])))
    else:
        act = HarmonicActivation.from_poly(MPoly(3, {(1, 1, 1): float(rng.standard_normal())}), "xyz")
    return random_harmonic_net(rng, act, int(rng.integers(act.k, act.k + 3)), int(rng.integers(1, 5)))


def _arrays(net):
    if isinstance(net, HarmonicNet):
        return [np.array([t.a, t.rho]) for t in net.terms] + [t.P.P for t in net.terms] + [t.b for t in net.terms]
    if isinstance(net, ShallowNet):
        return [net.a, net.w, net.b]
    if isinstance(net, ResNet):
        out = [net.A0, net.b0, net.AL]
        for b in net.blocks:
            out += [b.A, b.W, b.b]
        return out
    return [a for layer in net.layers for a in (layer.A, layer.b)]


@pytest.mark.parametrize("kind", KINDS)
def test_roundtrip_bit_exact(kind):
    rng = np.random.default_rng(1000 + KINDS.index(kind))
    for _ in range(50):
        net = _random_harmonic(rng) if kind == "harmonic" else _random_net(kind, rng)
        text = dumps(net, {"builder": "test"})
        back, info = loads(text)
        assert kind_of(back) == kind and info == {"builder": "test"}
        for a, b in zip(_arrays(net), _arrays(back)):
            assert a.dtype == b.dtype and a.shape == b.shape
            assert np.array_equal(a, b)
        assert dumps(back, info) == text
        x = rng.uniform(-1, 1, (5, net.dim))
        if kind != "harmonic" and net.field is C:
            x = x + 1j * rng.uniform(-1, 1, (5, net.dim))
        assert np.array_equal(net(x), back(x), equal_nan=True)


def test_activation_identity_survives():
    act = Activation("leaky_relu", R, slope=0.125)
    net = random_shallow(np.random.default_rng(0), act, 2, 3)
    back, _ = loads(dumps(net))
    assert back.activation == act


def test_rejects_bad_documents():
    net = random_shallow(np.random.default_rng(0), Activation.named("exp"), 1, 2)
    doc = json.loads(dumps(net))
    for mutate in (lambda d: d.update(schema=99), lambda d: d.update(kind="cnn"),
                   lambda d: d["weights"].pop("a"), lambda d: d.update(dim=3),
                   lambda d: d["weights"]["w"].update(shape=[5, 5])):
        bad = json.loads(json.dumps(doc))
        mutate(bad)
        with pytest.raises(DocumentError):
            loads(json.dumps(bad))
    with pytest.raises(DocumentError):
        loads("{not json")
    with pytest.raises(DocumentError):
        loads("[]")


def test_complex_entries_in_real_document_rejected():
    net = random_shallow(np.random.default_rng(0), Activation.polynomial((0, 1), C), 1, 2)
    doc = json.loads(dumps(net))
    doc["field"] = "R"
    doc["activation"]["coeffs"] = [0.0, 1.0]
    with pytest.raises(DocumentError):
        loads(json.dumps(doc))


# -- CSV input --------------------------------------------------------------------------


def test_parse_poly_csv():
    p = parse_poly_csv("e1,e2,coef\n2,0,1.5\n0,1,-2\n2,0,0.5\n", R)
    assert p == MPoly(2, {(2, 0): 2.0, (0, 1): -2.0})
    q = parse_poly_csv("1,1,2\n", C, dim=1)
    assert q == MPoly(1, {(1,): 1 + 2j}, C)


@pytest.mark.parametrize("text,field", [
    ("1,0.5,2\n", R),
    ("", R),
    ("-1,2\n", R),
    ("1,x\n", R),
    ("1,2\n1,1,1\n", R),
])
def test_parse_poly_csv_errors(text, field):
    with pytest.raises(DocumentError):
        parse_poly_csv(text, field, dim=1)


def test_parse_points_csv():
    pts = parse_points_csv("x,y\n1,2\n3,4\n", 2, R)
    assert pts.tolist() == [[1, 2], [3, 4]]
    z = parse_points_csv("1,2\n", 1, C)
    assert z.tolist() == [[1 + 2j]]
    assert parse_points_csv("", 2, R).shape == (0, 2)
    with pytest.raises(DocumentError, match="line 2"):
        parse_points_csv("1,2\n3\n", 2, R)
    with pytest.raises(DocumentError):
        parse_points_csv("1,2\n", 2, C)
    with pytest.raises(DocumentError):
        parse_points_csv("nan,1\n", 2, R)


def test_parse_pieces_csv():
    pieces = parse_pieces_csv("1,0,0.5\n-1,2,0\n")
    assert len(pieces) == 2 and pieces[0].w == (1.0, 0.0) and pieces[0].b == 0.5
    with pytest.raises(DocumentError):
        parse_pieces_csv("1,2\n1,2,3\n")
    with pytest.raises(DocumentError):
        parse_pieces_csv("")


def test_render_table():
    text = render_table(["n", "err", "pass"], [(5, 0.1, True), (9, 1 / 3, False)])
    lines = text.splitlines()
    assert lines[0] == "n,err,pass" and lines[1] == "5,0.10000000000000001,true"
    assert float(lines[2].split(",")[1]) == 1 / 3
    assert format_cell("x") == "x"
    with pytest.raises(ValueError):
        render_table(["a"], [(1, 2)])
