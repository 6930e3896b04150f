import pytest
from hypothesis import given, strategies as st

from qpb.bundle import (
    BundleError,
    BundleSpec,
    base_invariants,
    bundle_preset,
    check_witness,
    classical_reference,
    d_lambda,
    extend_antiderivation,
    freeness_witness,
    half_identity_witness,
    hopf_fibration,
    natural_maps_agree,
    regular_multiplets,
    rho_chi_natural,
    sum_identity_witness,
    trivial_bundle,
    trivial_witness,
    verify_natural_map,
    verify_preconnection_lemmas,
    witness_table,
    zero_delta,
)
from qpb.fodc import InvariantFormSpace
from qpb.linalg import same_span
from qpb.scalar import ONE, q


@pytest.fixture(scope="module")
def hf():
    return hopf_fibration()


def test_trivial_bundle_coaction(u1_bundle):
    hor = u1_bundle["hor"]
    assert hor.verify(3)["ok"]
    assert u1_bundle["mt"].verify()["ok"]
    assert u1_bundle["mt"].coverage_gap(6) is None


def test_base_forms_are_scalars_on_the_fiber(u1_bundle):
    hor = u1_bundle["hor"]
    base = base_invariants(hor, 3)
    assert base.dims() == {0: 2, 1: 4, 2: 2}
    assert base.verify()["ok"]
    p = hor.pres
    assert base.contains(p.gen("p") * p.gen("th"))
    assert not base.contains(p.gen("z"))
    assert base.contains(p.gen("z") * p.gen("zi"))


def test_hopf_fibration_weights(hf):
    assert hf.verify(2)["ok"]
    base = base_invariants(hf, 2)
    for x in base.basis(0):
        for w in x.terms:
            plus = sum(1 for s in w if s in ("alpha", "gamma"))
            assert 2 * plus == len(w)


def test_hopf_fibration_witness(hf):
    B = hf.pres
    z = hf.A.gen("z")
    pairs = freeness_witness(hf, z)
    got = sorted((repr(a), repr(b)) for a, b in pairs)
    want = sorted([(repr(B.gen("alpha*")), repr(B.gen("alpha"))), (repr(B.gen("gamma*")), repr(B.gen("gamma")))])
    assert got == want
    assert B.gen("alpha*") * B.gen("alpha") + B.gen("gamma*") * B.gen("gamma") == B.one()
    assert check_witness(hf, z, pairs)


def test_hopf_fibration_zi_witness_carries_q(hf):
    B = hf.pres
    zi = hf.A.gen("zi")
    pairs = freeness_witness(hf, zi)
    assert check_witness(hf, zi, pairs)
    assert any(a == q * q * B.gen("gamma") for a, _ in pairs)


@pytest.mark.parametrize("name", ["hopf_fibration", "trivial_u1", "trivial_cyclic3", "trivial_s3"])
def test_witness_table(name):
    hor = bundle_preset(name)
    table = witness_table(hor, 2)
    for w, pairs in table.items():
        a = hor.A.element({w: ONE})
        assert check_witness(hor, a, pairs)
        if hor.embed_map is not None:
            assert check_witness(hor, a, trivial_witness(hor, a))


def test_d_lambda_axioms(u1_bundle, u1_charts):
    base = base_invariants(u1_bundle["hor"], 3)
    for D in u1_charts + tuple(u1_bundle["family"]):
        rep = D.verify(base, 3)
        assert rep["ok"], rep


def test_non_covariant_values_fail(u1_bundle):
    hor = u1_bundle["hor"]
    p = hor.pres
    th, zi = p.gen("th"), p.gen("zi")
    bad = extend_antiderivation({"z": th, "zi": -th * zi * zi}, hor, "preconnection", "bad")
    rep = bad.verify(base_invariants(hor, 2), 2)
    assert rep["checks"]["pre3_covariance"] is not None


def test_incompatible_values_rejected(u1_bundle):
    hor = u1_bundle["hor"]
    with pytest.raises(BundleError):
        extend_antiderivation({"z": hor.pres.gen("th")}, hor, "preconnection", "bad")


def test_rho_of_z_two_ways(u1_bundle, u1_charts):
    hor, mt = u1_bundle["hor"], u1_bundle["mt"]
    D = u1_charts[0]
    p = hor.pres
    rho = rho_chi_natural(D, mt)
    z, zi = p.gen("z"), p.gen("zi")
    assert rho(hor.A.gen("z")) == -(zi * D(D(z)))
    P, TH, TA = p.gen("p"), p.gen("th"), p.gen("ta")
    assert rho(hor.A.gen("z")) == -(P * TH * TA + 2 * (1 - P) * TH * TA)
    assert rho(hor.A.gen("z") ** 2) == 2 * rho(hor.A.gen("z"))


def test_natural_maps_full_window(u1_bundle, u1_charts):
    mt = u1_bundle["mt"]
    D, D2, _ = u1_charts
    assert verify_natural_map(rho_chi_natural(D, mt), 3, D)["ok"]
    assert verify_natural_map(rho_chi_natural(D2 - D, mt), 3)["ok"]


def test_witness_route_agrees(u1_bundle, u1_charts):
    mt = u1_bundle["mt"]
    D, D2, _ = u1_charts
    for src in (D, D2 - D):
        assert natural_maps_agree(rho_chi_natural(src, mt), rho_chi_natural(src, mt, via="witness"), 3) is None


def test_corrupted_natural_map_fails(u1_bundle, u1_charts):
    mt = u1_bundle["mt"]
    D = u1_charts[0]
    bad = rho_chi_natural(D, mt).corrupted(2 * ONE)
    assert verify_natural_map(bad, 2, D)["checks"]["reconstruction"] is not None


@pytest.mark.parametrize("pair", [(0, None), (0, 1), (1, 2), (2, 0)])
def test_sum_identity(u1_bundle, u1_charts, pair):
    mt = u1_bundle["mt"]
    D = u1_charts[pair[0]]
    E = zero_delta(D.hor) if pair[1] is None else u1_charts[pair[1]] - D
    rep = verify_preconnection_lemmas(D, E, mt, 3)
    assert rep["ok"], rep["checks"]


def test_sum_identity_detects_sign_error(u1_bundle, u1_charts):
    mt = u1_bundle["mt"]
    D, D2, _ = u1_charts
    E = D2 - D
    chi = rho_chi_natural(E, mt)
    assert sum_identity_witness(rho_chi_natural(D, mt), rho_chi_natural(D2, mt), chi.corrupted(), D, 2) is not None
    assert half_identity_witness(chi, 3) is None


def test_hat_r_is_classical(u1_bundle):
    hor = u1_bundle["hor"]
    fam = u1_bundle["hat"]
    assert fam.ok, fam.checks
    space = u1_bundle["space"]
    classical = InvariantFormSpace(hor.hopf, classical_reference(hor, 3), 3)
    assert same_span(space.ideal.basis(), classical.ideal.basis())
    assert space.dim == classical.dim == 1


def test_bundle_spec_json(tmp_path):
    spec = BundleSpec.from_json(
        {"preset": "trivial_u1", "preconnections": [{"label": "Da", "params": ["1", "2"]}, {"label": "Db", "params": [0, "5/2"]}]}
    )
    assert [d.label for d in spec.preconnections] == ["Da", "Db"]
    hor = spec.hor
    explicit = BundleSpec.from_json(
        {
            "name": "trivial_u1_explicit",
            "structure_group": "u1",
            "horizontal": hor.pres.to_json(),
            "coaction": {
                g.name: [[str(c), list(u), list(v)] for (u, v), c in hor.table[g.name].terms.items()] for g in hor.pres.generators
            },
            "base_generators": ["p", "th", "ta"],
            "base_differential": {"p": 0, "th": [["1", ["th", "ta"]]], "ta": 0},
            "embed": {"z": "z", "zi": "zi"},
        }
    )
    assert explicit.hor.verify(2)["ok"]
    D = d_lambda(explicit.hor, [1, 2])
    assert D.verify(base_invariants(explicit.hor, 2), 2)["ok"]


@given(st.lists(st.fractions(min_value=-4, max_value=4, max_denominator=3), min_size=2, max_size=2))
def test_lambda_family_property(params):
    hor = trivial_bundle("u1")
    D = d_lambda(hor, params)
    assert D.verify(base_invariants(hor, 2), 2)["ok"]
