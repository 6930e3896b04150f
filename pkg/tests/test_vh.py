import pytest

from qpb.braided import BraidOperator, EnvelopeSpace, shuffles, sign
from qpb.bundle import d_lambda, regular_multiplets, rho_chi_natural, trivial_bundle
from qpb.fodc import InvariantFormSpace, group_calculus
from qpb.linalg import LinMap, vaxpy
from qpb.scalar import ONE
from qpb.vh import (
    Atlas,
    Chart,
    ChartError,
    FHat,
    GaugeIso,
    GluedForm,
    VHAlgebra,
    _chi_power,
    connection_of,
    exterior_variant_suite,
    free_odd_horizontal,
    gauge_suite,
    horizontality,
    truncation_forms,
    universal_truncation_suite,
    vh_multiply,
    vh_star,
)


@pytest.fixture(scope="module", params=["wedge", "vee"])
def u1_setup(request, u1_bundle, u1_charts):
    sp = u1_bundle["space"]
    alg = VHAlgebra(u1_bundle["hor"], sp, EnvelopeSpace(sp, request.param, 3))
    atlas = Atlas(alg, list(u1_charts), u1_bundle["mt"])
    return alg, atlas


def test_algebra_laws(u1_setup):
    alg, _ = u1_setup
    assert alg.associativity_witness(1, 1) is None
    assert alg.star_witness(1, 1) is None
    assert alg.commutation_witness(2) is None


def test_star_of_invariant_form(u1_setup):
    alg, _ = u1_setup
    sp = alg.space
    x = alg.gen(0)
    assert vh_star(x) == alg.env_part({(i,): c for i, c in sp.star({0: ONE}).items()})
    z = alg.hor_part(alg.pres.gen("z"))
    assert vh_star(vh_multiply(z, x)) == vh_multiply(vh_star(x), vh_star(z))


def test_partial_square_on_degree_zero(u1_setup):
    alg, atlas = u1_setup
    for ch in atlas.charts.values():
        rep = ch.verify(1, 1)
        assert rep["ok"], rep
        for g in ("z", "zi", "p"):
            x = alg.hor_part(alg.pres.gen(g))
            assert not ch.partial(ch.partial(x))


def test_gauge_suite(u1_setup, u1_charts):
    alg, atlas = u1_setup
    D, D2, D3 = u1_charts
    rep = gauge_suite(alg, D, D2 - D, D3 - D, atlas.multiplets)
    assert rep["ok"], rep["checks"]


def test_gluing(u1_setup):
    alg, atlas = u1_setup
    rep = atlas.independence_suite()
    assert rep["ok"], rep["checks"]
    f = atlas.form("D", alg.gen(0))
    g = atlas.glue(f, "D2")
    assert g.chart == "D2" and atlas.equal(f, g)
    assert hash(f) == hash(GluedForm.of("D", alg.gen(0)))
    with pytest.raises(ChartError):
        atlas.glue(f, "nowhere")


def test_fhat_and_horizontality(u1_setup):
    alg, atlas = u1_setup
    fh = FHat(atlas)
    rep = fh.verify()
    assert rep["ok"], rep["checks"]
    # 1⊗ϑ has a nonzero positive Γ-part, so it is not horizontal
    assert fh.positive_part(fh.apply_terms({((), (0,)): ONE}))
    h = horizontality(fh, 1)
    assert h["equal"] and h["kernel_dim"] == h["hor_dim"]


def test_connection(u1_setup):
    alg, atlas = u1_setup
    for label in atlas.labels:
        rep = connection_of(atlas, label).verify()
        assert rep["ok"], rep["checks"]


def test_connection_shift_sign(u1_setup, u1_charts):
    alg, atlas = u1_setup
    D, D2, _ = u1_charts
    chi = rho_chi_natural(D2 - D, atlas.multiplets).descend(alg.space)
    assert chi[0]
    w_D = connection_of(atlas, "D").table[0]
    w_D2 = connection_of(atlas, "D2").table[0]
    diff = dict(w_D2.as_dict())
    vaxpy(diff, atlas.glue(w_D, "D2").as_dict(), -ONE)
    assert diff == {(w, ()): c for w, c in chi[0].terms.items()}


def test_exterior_suite(u1_bundle, u1_charts):
    sp = u1_bundle["space"]
    alg = VHAlgebra(u1_bundle["hor"], sp, EnvelopeSpace(sp, "vee", 3))
    rep = exterior_variant_suite(alg, list(u1_charts), u1_bundle["mt"], 3)
    assert rep["ok"], rep["checks"]


def test_negated_chi_breaks_intertwining(u1_bundle, u1_charts):
    sp, mt = u1_bundle["space"], u1_bundle["mt"]
    alg = VHAlgebra(u1_bundle["hor"], sp, EnvelopeSpace(sp, "wedge", 3))
    D, D2, _ = u1_charts
    good = GaugeIso.from_delta(alg, D2 - D, mt)
    bad = GaugeIso(alg, [-x for x in good.chi])
    cD, cD2 = Chart(alg, D, mt), Chart(alg, D2, mt)
    x = {((), (0,)): ONE}
    assert good.apply_terms(cD.partial_terms(x)) == cD2.partial_terms(good.apply_terms(x))
    assert bad.apply_terms(cD.partial_terms(x)) != cD2.partial_terms(bad.apply_terms(x))


def test_negated_rho_breaks_square(u1_bundle, u1_charts):
    sp, mt = u1_bundle["space"], u1_bundle["mt"]
    alg = VHAlgebra(u1_bundle["hor"], sp, EnvelopeSpace(sp, "wedge", 3))
    ch = Chart(alg, u1_charts[0], mt)
    ch.rho = [-r for r in ch.rho]
    ch._dk.clear()
    assert not ch.verify(1, 1)["ok"]


@pytest.fixture(scope="module")
def s3_setup():
    hor = trivial_bundle("s3")
    sp = InvariantFormSpace(hor.hopf, group_calculus(hor.hopf, ["132", "213", "321"]), 2)
    mt = regular_multiplets(hor, 1)
    D0 = d_lambda(hor, [], "D0")
    alg = VHAlgebra(hor, sp, EnvelopeSpace(sp, "vee", 3))
    return alg, Atlas(alg, [D0], mt), D0, mt


def test_s3_single_chart(s3_setup):
    alg, atlas, D0, mt = s3_setup
    assert alg.associativity_witness(1, 1) is None
    assert alg.star_witness(1, 1) is None
    assert atlas.chart("D0").verify(1, 1)["ok"]
    assert connection_of(atlas, "D0").verify(1)["ok"]
    assert exterior_variant_suite(alg, [D0], mt, 3)["ok"]


def test_s3_fhat(s3_setup):
    alg, atlas, _, _ = s3_setup
    rep = FHat(atlas).verify()
    assert rep["ok"], rep["checks"]


@pytest.fixture(scope="module")
def free_odd(s3_space):
    T, chi = free_odd_horizontal(s3_space)
    alg = VHAlgebra(T, s3_space, EnvelopeSpace(s3_space, "tensor", 3))
    return T, chi, alg, BraidOperator.from_space(s3_space)


def test_free_odd_truncation(free_odd):
    T, chi, alg, br = free_odd
    assert T.verify(3)["ok"]
    g = GaugeIso(alg, [-x for x in chi])
    power = _chi_power(chi, T.pres)
    for n in (1, 2, 3):
        for key in br.keys(n):
            f1, f2 = truncation_forms(br, power, {key: ONE}, n)
            assert f1 == f2 == g.key_image(key)


def test_wrong_shuffle_convention_detected(free_odd):
    T, chi, alg, br = free_odd

    def wrong(k, l):
        keys = br.keys(k + l)
        acc = {x: {} for x in keys}
        for p in shuffles(k, l):
            sg = ONE if sign(p) > 0 else -ONE
            for x, col in br.sigma_word(p).cols.items():
                vaxpy(acc[x], col, sg)
        return LinMap(acc, keys)

    bad = BraidOperator(br.dim, br.sigma, br.space)
    bad.shuffle_antisymmetrizer = wrong
    g = GaugeIso(alg, [-x for x in chi])
    power = _chi_power(chi, T.pres)
    mismatches = sum(truncation_forms(bad, power, {k: ONE}, 3)[0] != g.key_image(k) for k in br.keys(3))
    assert mismatches > 0


def test_universal_truncation(s3_space, u1_bundle):
    assert universal_truncation_suite(s3_space, 3)["ok"]
    assert universal_truncation_suite(u1_bundle["space"], 3)["ok"]
