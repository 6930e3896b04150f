import pytest
from fractions import Fraction

from hypothesis import HealthCheck, settings, strategies as st

from qpb.scalar import RatFunc, as_scalar, q

settings.register_profile("qpb", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("qpb")

small_rationals = st.fractions(min_value=-6, max_value=6, max_denominator=5)


@st.composite
def q_polys(draw, max_degree=3):
    coeffs = draw(st.lists(small_rationals, min_size=1, max_size=max_degree + 1))
    acc = as_scalar(0)
    for k, c in enumerate(coeffs):
        acc = acc + as_scalar(c) * q**k
    return acc


@st.composite
def q_scalars(draw):
    num = draw(q_polys())
    den = draw(q_polys(2).filter(lambda d: d != 0))
    return num / den


@pytest.fixture(scope="session")
def u1_bundle():
    """Trivial U(1) bundle with its multiplets, λ-family and ℛ̂ calculus."""
    from qpb.bundle import hat_R, lambda_family, regular_multiplets, trivial_bundle
    from qpb.fodc import InvariantFormSpace

    hor = trivial_bundle("u1")
    mt = regular_multiplets(hor, 6)
    family = lambda_family(hor)
    fam = hat_R(family, mt, 3)
    space = InvariantFormSpace(hor.hopf, fam.hat, 3)
    return {"hor": hor, "mt": mt, "family": family, "hat": fam, "space": space}


@pytest.fixture(scope="session")
def u1_charts(u1_bundle):
    from qpb.bundle import d_lambda

    hor = u1_bundle["hor"]
    D = d_lambda(hor, [1, 2], "D")
    D2 = d_lambda(hor, [3, -1], "D2")
    D3 = d_lambda(hor, ["0", "5/2"], "D3")
    return D, D2, D3


@pytest.fixture(scope="session")
def s3_space():
    from qpb.fodc import InvariantFormSpace, group_calculus
    from qpb.hopf import preset

    h = preset("s3")
    return InvariantFormSpace(h, group_calculus(h, ["132", "213", "321"]), 2)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, title, seconds = RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}  ({seconds:.1f} s)")
