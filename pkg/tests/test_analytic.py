import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jitcluster.analytic import (
    ArchitectureParams,
    Variant,
    bitflip_not_error,
    buffer_factor,
    buffer_fluctuation,
    growth_rate,
    mean_buffer,
    minicluster_size,
    p_grid,
    printed_buffer_ratio,
    sweep_curve,
    t2_threshold,
)
from jitcluster.errors import ConstructionUnsupportedError
from jitcluster.gates import EntanglingProcedure, catalog, get_procedure

# Hand evaluations, written out term by term.
BETA10 = math.sqrt(2 * math.log(10))
DN_DH_HALF = math.sqrt(4 / 0.5 - 1)  # sqrt(7)

probs = st.floats(min_value=1e-6, max_value=1.0, allow_nan=False)
procs = st.builds(
    lambda c1, c2: EntanglingProcedure("h", c1, c2), st.integers(0, 6), st.integers(0, 6)
)


def test_growth_rate_examples(dh, bc):
    assert growth_rate(0.5, dh, 4) == 0
    assert growth_rate(0.5, dh, 6) == pytest.approx(0.5 * 5 - 0.5 * 1 - 1)
    assert growth_rate(1.0, bc, 1) == 0


@pytest.mark.parametrize("p", [0.0, -0.1, 1.5, float("nan")])
def test_invalid_p(dh, p):
    with pytest.raises(ValueError):
        growth_rate(p, dh, 2)
    with pytest.raises(ValueError):
        minicluster_size(p, dh)


def test_minicluster_examples(dh, bc):
    assert minicluster_size(1.0, bc) == 1
    assert minicluster_size(0.5, dh) == 4
    assert minicluster_size(0.25, get_procedure("fusion1")) == pytest.approx((1 + 0.5 + 1.5) / 0.25)


@given(probs, procs)
def test_minicluster_balances_growth(p, proc):
    m = minicluster_size(p, proc)
    assert abs(growth_rate(p, proc, m)) <= 1e-12 * max(1.0, m)


def test_buffer_fluctuation_examples():
    assert buffer_fluctuation(1.0, EntanglingProcedure("a", 0, 0)) == 1
    assert buffer_fluctuation(0.5, EntanglingProcedure("b", 1, 1)) == pytest.approx(math.sqrt(7))
    assert buffer_fluctuation(0.25, EntanglingProcedure("c", 0, 2)) == pytest.approx(6)


def test_buffer_factor():
    assert buffer_factor(1) == 0
    assert buffer_factor(math.exp(0.5)) == pytest.approx(1)
    assert buffer_factor(10) == pytest.approx(2.1460, abs=1e-4)
    with pytest.raises(ValueError):
        buffer_factor(0.5)


def test_mean_buffer_examples(dh, bc):
    assert mean_buffer(ArchitectureParams(0.5), dh) == pytest.approx(BETA10 * DN_DH_HALF)
    assert mean_buffer(ArchitectureParams(0.5), dh) == pytest.approx(5.678, abs=1e-3)
    assert mean_buffer(ArchitectureParams(0.5, dimension=2), dh) == pytest.approx(22.71, abs=1e-2)
    assert mean_buffer(ArchitectureParams(0.5, dimension=2), bc) == pytest.approx(BETA10 * math.sqrt(2))


def test_params_validation():
    for kwargs in ({"p": 0}, {"p": 0.5, "alpha": 1.0}, {"p": 0.5, "dimension": 4}, {"p": 0.5, "tau": -1}):
        with pytest.raises(ValueError):
            ArchitectureParams(**kwargs)
    assert ArchitectureParams(0.25).tau_value == 4
    assert ArchitectureParams(0.25, tau=7).tau_value == 7


def test_t2_examples(dh, bc):
    one_d = t2_threshold(ArchitectureParams(0.5, 10), dh)
    assert one_d.t2 == pytest.approx(10 * (2 + BETA10 * DN_DH_HALF + 4))
    assert one_d.t2 == pytest.approx(116.78, abs=0.01)
    assert t2_threshold(ArchitectureParams(1.0, 10), bc).t2 == pytest.approx(10 * (1 + BETA10 + 1))
    nv = t2_threshold(ArchitectureParams(0.01, 10, dimension=2), bc).t2
    assert nv == pytest.approx(10 * (100 + BETA10 * 10 + 100))
    three_d = t2_threshold(ArchitectureParams(0.5, 10, dimension=3), dh).t2
    assert three_d == pytest.approx(10 * (2 + (4 * BETA10 / 0.5) * DN_DH_HALF + 4))
    assert three_d == pytest.approx(514.2, abs=0.05)


def test_breakdown_consistency(dh):
    b = t2_threshold(ArchitectureParams(0.3, 7.5, dimension=2), dh)
    assert b.t2 == 7.5 * b.qubit_age
    assert b.qubit_age == b.tau + b.mean_buffer + b.minicluster
    assert min(b.tau, b.mean_buffer, b.minicluster) >= 0
    assert b.variant is Variant.GENERAL


def test_fusion_rejected_in_2d():
    for name in ("fusion1", "fusion2"):
        with pytest.raises(ConstructionUnsupportedError):
            t2_threshold(ArchitectureParams(0.5, dimension=2), get_procedure(name))
        t2_threshold(ArchitectureParams(0.5, dimension=1), get_procedure(name))


@pytest.mark.parametrize("p", [0.05 * k for k in range(1, 21)])
def test_printed_1d_equals_general(dh, p):
    params = ArchitectureParams(p, 10)
    printed = t2_threshold(params, dh, "printed").t2
    by_hand = 10 * (1 / p + math.sqrt((8 - 2 * p) * math.log(10) / p) + 2 / p)
    assert printed == pytest.approx(by_hand, rel=1e-14)
    assert abs(t2_threshold(params, dh).t2 - printed) <= 1e-12 * printed


@pytest.mark.parametrize("p", [0.05, 0.3, 1.0])
def test_printed_2d_differs_by_sqrt2(dh, p):
    assert printed_buffer_ratio(ArchitectureParams(p, 10, dimension=2), dh) == pytest.approx(math.sqrt(2))


def test_printed_variant_scope(bc, dh):
    with pytest.raises(ValueError):
        t2_threshold(ArchitectureParams(0.5), bc, "printed")
    with pytest.raises(ValueError):
        t2_threshold(ArchitectureParams(0.5, dimension=3), dh, "printed")


@pytest.mark.parametrize("name", ["dh", "rus", "bc"])
@pytest.mark.parametrize("dim", [1, 2, 3])
def test_t2_decreasing_in_p(name, dim):
    proc = get_procedure(name)
    values = [t2_threshold(ArchitectureParams(p, 10, dimension=dim), proc).t2 for p in p_grid(0.01, 1, 200)]
    assert all(a > b for a, b in zip(values, values[1:]))


@given(probs, st.floats(1.0001, 1e6))
def test_broker_client_dimension_independent(p, alpha):
    bc = get_procedure("bc")
    t2s = {t2_threshold(ArchitectureParams(p, alpha, dimension=d), bc).t2 for d in (1, 2, 3)}
    assert len(t2s) == 1


@given(probs, st.floats(1.0001, 1e4))
@settings(max_examples=200)
def test_small_p_never_rejected(p, alpha):
    for proc in catalog():
        assert t2_threshold(ArchitectureParams(p, alpha), proc).t2 > 0
    assert 0 <= bitflip_not_error(p, alpha) <= 1


def test_bitflip_examples():
    assert bitflip_not_error(1, 10) == pytest.approx(math.exp(-0.1) * math.cosh(0.05) ** 2, rel=1e-12)
    assert bitflip_not_error(1, 10) == pytest.approx(0.9071, abs=1e-4)
    assert bitflip_not_error(0.1, 10) == pytest.approx(math.exp(-1) * math.cosh(0.05) ** 20, rel=1e-12)
    assert bitflip_not_error(0.1, 10) == pytest.approx(0.3772, abs=1e-4)
    assert bitflip_not_error(0.5, 1e12) == pytest.approx(1, abs=1e-11)


@given(st.floats(0.01, 1.0), st.floats(1.01, 1e4))
def test_bitflip_forms_agree(p, alpha):
    delta = 0.5 * (1 - math.exp(-1 / alpha))
    stepwise = (1 - delta) ** (2 / p)
    closed = math.exp(-1 / (alpha * p)) * math.cosh(1 / (2 * alpha)) ** (2 / p)
    assert bitflip_not_error(p, alpha) == pytest.approx(closed, rel=1e-12)
    assert stepwise == pytest.approx(closed, rel=1e-12)


@given(st.floats(0.01, 0.98), st.floats(1.01, 1e3))
def test_bitflip_increasing(p, alpha):
    base = bitflip_not_error(p, alpha)
    assert bitflip_not_error(p + 0.01, alpha) > base
    assert bitflip_not_error(p, alpha * 1.5) > base


def test_sweep_examples(dh, bc):
    rows = sweep_curve(ArchitectureParams(0.5, 10), dh, 0.5, 0.5, 1, "t2")
    assert [r.p for r in rows] == [0.5]
    assert rows[0].value == pytest.approx(116.78, abs=0.01)
    rows = sweep_curve(ArchitectureParams(1.0, 10), bc, 1, 1, 1)
    assert rows[0].value == pytest.approx(41.46, abs=0.01)
    rows = sweep_curve(ArchitectureParams(1.0, 10), bc, 0.2, 0.4, 3)
    assert [r.p for r in rows] == pytest.approx([0.2, 0.3, 0.4])


def test_sweep_flags_unsupported_rows():
    rows = sweep_curve(ArchitectureParams(1.0, 10, dimension=2), get_procedure("fusion2"), 0.1, 1, 4)
    assert len(rows) == 4
    assert all(r.flagged and math.isnan(r.value) for r in rows)


def test_sweep_bitflip_ordered():
    rows = sweep_curve(ArchitectureParams(1.0, 10), None, 0.05, 1, 20, "bitflip_not_error")
    ps = [r.p for r in rows]
    assert ps == sorted(ps) and len(set(ps)) == 20
    assert rows[-1].value == pytest.approx(bitflip_not_error(1, 10))


def test_grid_validation():
    with pytest.raises(ValueError):
        p_grid(0.5, 0.2, 3)
    with pytest.raises(ValueError):
        p_grid(0.1, 0.2, 0)
