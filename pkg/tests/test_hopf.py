import json
import time

import pytest
from hypothesis import given, strategies as st

from qpb.algebra import TensorElement
from qpb.hopf import HopfStructure, adjoint_action, antipode, coproduct_iterate, counit, preset, verify_hopf_axioms
from qpb.scalar import ONE, q


@pytest.mark.parametrize("name", ["u1", "cyclic2", "cyclic3", "su_q_2"])
def test_axioms_degree_four(name):
    start = time.perf_counter()
    rep = verify_hopf_axioms(preset(name), 4)
    assert rep["ok"], rep["failures"]
    assert time.perf_counter() - start < 10


@pytest.mark.parametrize("name", ["s3", "torus2"])
def test_axioms_other_presets(name):
    assert preset(name).verify_axioms(3)["ok"]


def test_cyclic2_coproduct_and_counit():
    h = preset("cyclic2")
    d = h.pres.gen("d_1")
    e = h.delta("0")
    assert coproduct_iterate(h, d, 1) == TensorElement.pure(e, d) + TensorElement.pure(d, e)
    assert counit(h, d) == 0
    assert counit(h, e) == 1


def test_su_q_2_antipode_contracts_to_counit():
    h = preset("su_q_2")
    a = h.pres.gen("alpha")
    cop = h.coproduct(a)
    contracted = cop.map_leg(0, lambda w: h.antipode_word(w).terms).multiply_legs()
    assert contracted == h.pres.one()


def test_u1_adjoint_trivial():
    h = preset("u1")
    for k in range(1, 4):
        zk = h.pres.gen("z") ** k
        assert adjoint_action(h, zk) == TensorElement.pure(zk, h.pres.one())


def test_su_q_2_adjoint_counit_leg():
    h = preset("su_q_2")
    for g in ("alpha", "gamma", "alpha*"):
        a = h.pres.gen(g)
        ad = adjoint_action(h, a)
        # (id⊗ε)ad = id
        assert ad.contract_scalar_leg(1, h.counit_word).to_element() == a


def test_corrupted_antipode_detected():
    h = preset("u1")
    bad = h.replace(antipode={"z": h.pres.gen("z"), "zi": h.pres.gen("zi")})
    rep = bad.verify_axioms(2)
    assert not rep["ok"]
    assert ["z"] in rep["failures"]["antipode_law"]


def test_specialized_su_q_2():
    h = preset("su_q_2").specialized(2)
    assert h.verify_axioms(3)["ok"]
    a, g = h.pres.gen("alpha"), h.pres.gen("gamma")
    assert a * g == 2 * g * a


def test_json_round_trip():
    h = preset("su_q_2")
    back = HopfStructure.from_json(json.loads(json.dumps(h.to_json())))
    assert back.verify_axioms(2)["ok"]
    a = back.pres.gen("alpha")
    assert back.coproduct(a) == TensorElement.pure(a, a) - q * TensorElement.pure(back.pres.gen("gamma*"), back.pres.gen("gamma"))


words = st.sampled_from(preset("su_q_2").pres.window(3))


@given(words, words)
def test_coproduct_multiplicative(u, v):
    h = preset("su_q_2")
    p = h.pres
    a, b = p.element({u: ONE}), p.element({v: ONE})
    assert h.coproduct(a * b) == h.coproduct(a) * h.coproduct(b)
    assert antipode(h, a * b) == antipode(h, b) * antipode(h, a)
