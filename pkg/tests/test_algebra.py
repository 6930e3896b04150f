import json

import pytest
from hypothesis import given, strategies as st

from qpb.algebra import (
    AlgebraError,
    Generator,
    Presentation,
    PresentationMismatch,
    Rule,
    TensorElement,
    UnknownGenerator,
    check_local_confluence,
    multiply,
    normalize,
    star_map,
)
from qpb.hopf import preset
from qpb.scalar import ONE, as_scalar, q

SU = preset("su_q_2").pres
U1 = preset("u1").pres
Z2 = preset("cyclic2").pres


def elements(pres, degree=2):
    words = pres.window(degree)
    coeffs = st.integers(-3, 3).map(as_scalar)
    return st.dictionaries(st.sampled_from(words), coeffs, max_size=4).map(pres.element)


def test_su_q_2_rule_applies_once():
    a, g = SU.gen("alpha"), SU.gen("gamma")
    assert a * g - q * g * a == SU.zero()
    # the opposite ordering is not a relation of this presentation
    assert g * a - q * a * g != SU.zero()


def test_u1_and_z2_relations():
    z, zi = U1.gen("z"), U1.gen("zi")
    assert z * zi == U1.one() == zi * z
    d = Z2.gen("d_1")
    assert multiply(d, d) == d


def test_star_of_alpha():
    a = SU.gen("alpha")
    assert star_map(a) == SU.gen("alpha*")
    assert (q * a * SU.gen("gamma")).star() == q * SU.gen("gamma*") * SU.gen("alpha*")


@pytest.mark.parametrize("name", ["u1", "cyclic2", "cyclic3", "s3", "su_q_2", "torus2"])
def test_presets_confluent(name):
    rep = check_local_confluence(preset(name).pres, 4)
    assert rep["unresolved"] == []


def test_non_confluent_system_is_reported():
    gens = [Generator("x", 0, "x"), Generator("y", 0, "y")]
    p = Presentation("bad", gens, [Rule(("y", "x"), ((ONE, ("x",)),)), Rule(("x", "x"), ((ONE, ()),))])
    # yxx rewrites to xx = 1 one way and to y the other
    rep = p.local_confluence(3)
    assert rep["unresolved"]
    assert rep["unresolved"][0]["word"] == ["y", "x", "x"]


def test_order_violation_rejected():
    gens = [Generator("x", 0, "x"), Generator("y", 0, "y")]
    with pytest.raises(AlgebraError):
        Presentation("grow", gens, [Rule(("x",), ((ONE, ("y", "y")),))])


def test_unknown_generator_and_mismatch():
    with pytest.raises(UnknownGenerator):
        U1.gen("w")
    with pytest.raises(PresentationMismatch):
        U1.gen("z") + SU.gen("alpha")


@given(elements(SU), elements(SU), elements(SU))
def test_associative_on_window(a, b, c):
    assert (a * b) * c == a * (b * c)


@given(elements(SU), elements(SU))
def test_normalize_then_multiply(a, b):
    raw: dict = {}
    for u, x in a.terms.items():
        for v, y in b.terms.items():
            raw[u + v] = raw.get(u + v, 0) + x * y
    assert normalize(raw, SU) == a * b


@given(elements(SU), elements(SU))
def test_star_is_antimultiplicative_involution(a, b):
    assert (a * b).star() == b.star() * a.star()
    assert a.star().star() == a


@given(elements(SU, 3))
def test_specialize_commutes_with_product(a):
    b = SU.gen("gamma") * SU.gen("alpha")
    assert (a * b).specialize(3) == a.specialize(3) * b.specialize(3)


def test_json_round_trip():
    data = json.loads(SU.dumps())
    back = Presentation.from_json(data)
    assert back.dumps() == SU.dumps()
    x = back.word("alpha", "gamma")
    assert x.terms == (q * back.word("gamma", "alpha")).terms


def test_tensor_products():
    a, g = SU.gen("alpha"), SU.gen("gamma")
    t = TensorElement.pure(a, g)
    s = TensorElement.pure(g, a)
    assert (t * s) == TensorElement.pure(a * g, g * a)
    assert t.star() == TensorElement.pure(a.star(), g.star())
    assert TensorElement.pure(a, g).multiply_legs() == a * g
