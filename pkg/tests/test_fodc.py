import pytest
from hypothesis import given, strategies as st

from qpb.fodc import (
    IdealSpec,
    InvariantFormSpace,
    check_eps_derivation,
    classical_ideal,
    counit_kernel_basis,
    full_ideal,
    group_calculus,
)
from qpb.hopf import preset
from qpb.scalar import ONE


@pytest.fixture(scope="module")
def u1_classical():
    h = preset("u1")
    return InvariantFormSpace(h, classical_ideal(h, None, 3), 3)


@pytest.fixture(scope="module")
def z2_universal():
    return InvariantFormSpace(preset("cyclic2"), IdealSpec([]), 2)


def test_u1_classical_dim(u1_classical):
    assert u1_classical.dim == 1
    assert u1_classical.stabilization()["stable"]
    assert u1_classical.verify()["ok"]


def test_classical_ideal_members(u1_classical):
    p = u1_classical.h.pres
    z, zi, one = p.gen("z"), p.gen("zi"), p.one()
    assert u1_classical.project((z - 1) * (z - 1)) == {}
    assert u1_classical.project(z + zi - 2) == {}
    assert u1_classical.project(z - 1) != {}


def test_u1_circ_star_varpi(u1_classical):
    s = u1_classical
    p = s.h.pres
    z, zi = p.gen("z"), p.gen("zi")
    v = s.project(z - 1)
    assert s.circ(v, z) == s.project(z * z - z) == v
    # π(b)* = −π(κ(b)*), and κ(z − 1)* = z − 1
    kb = s.h.antipode(z - 1).star()
    assert kb == z - 1
    assert s.star(v) == {k: -c for k, c in s.project(kb).items()} == {0: -ONE}
    assert s.varpi(v) == {(0, ()): ONE}


def test_z2_universal(z2_universal):
    s = z2_universal
    d = s.h.pres.gen("d_1")
    v = s.project(d)
    assert s.dim == 1 and v == {0: ONE}
    assert s.circ(v, d) == v
    assert s.star(v) == {0: -ONE}
    assert s.varpi(v) == {(0, ()): ONE}
    assert s.verify()["ok"]


def test_cyclic3_universal_has_two_forms():
    s = InvariantFormSpace(preset("cyclic3"), IdealSpec([]), 2)
    assert s.dim == 2 and s.verify()["ok"]


def test_counit_kernel_kills_everything():
    h = preset("u1")
    assert InvariantFormSpace(h, full_ideal(h, 2), 2).dim == 0
    assert all(h.counit(a) == 0 for a in counit_kernel_basis(h, 2))


def test_non_invariant_ideal_reports_witness():
    h = preset("su_q_2")
    s = InvariantFormSpace(h, IdealSpec([h.pres.gen("alpha") - 1]), 2, check_stable=False)
    rep = s.verify()
    assert not rep["ok"]
    assert rep["checks"]["ad_invariance"] is not None
    assert s.bicovariance_witness() is not None


def test_s3_transposition_calculus(s3_space):
    assert s3_space.dim == 3
    assert s3_space.verify()["ok"]


def test_group_calculus_rejects_non_conjugation_closed():
    h = preset("s3")
    s = InvariantFormSpace(h, group_calculus(h, ["132"]), 2, check_stable=False)
    assert s.bicovariance_witness() is not None


def test_bad_eps_derivation():
    h = preset("u1")
    assert check_eps_derivation(h, {"z": 1, "zi": 1}, 2) is not None
    assert check_eps_derivation(h, {"z": 1, "zi": -1}, 3) is None


def test_ideal_json_round_trip():
    h = preset("u1")
    ci = classical_ideal(h, None, 2)
    back = IdealSpec.from_json(h.pres, ci.to_json())
    assert [g.terms for g in back.generators] == [g.terms for g in ci.generators]


@given(st.sampled_from(preset("u1").pres.window(3)), st.sampled_from(preset("u1").pres.window(3)))
def test_u1_module_law(u, v):
    # π(b)∘a = π(ba) − ε(b)π(a)
    h = preset("u1")
    s = InvariantFormSpace(h, classical_ideal(h, None, 3), 3)
    p = h.pres
    a, b = p.element({u: ONE}), p.element({v: ONE})
    b0 = b - h.counit(b) * p.one()
    lhs = s.circ(s.project(b0), a)
    rhs = dict(s.project(b0 * a))
    for k, c in s.project(a - h.counit(a) * p.one()).items():
        rhs[k] = rhs.get(k, 0) - h.counit(b0) * c
    assert lhs == {k: c for k, c in rhs.items() if c}
