import math

import numpy as np
import pytest

from mutualcover.distributions import Exponential
from mutualcover.errors import NetProfitError, PreconditionError, UnsupportedDriftError
from mutualcover.ladder_wh import (SurplusNoteFactors, WienerHopfFactors, auxiliary_pair,
                                   estimate_wh, ladder, psi_LR, psi_ladder,
                                   wh_closed_surplus_note)
from mutualcover.risk_model import CoverageModel, RiskProcess, phi_inv


@pytest.fixture(scope="module")
def ref_factors():
    from mutualcover.validation import reference_model
    m = reference_model()
    return m, estimate_wh(m, 5000, seed=1, workers=1)


def test_ladder_rate_and_errors():
    p = RiskProcess(1.0, 0.5, Exponential(1.0))
    assert ladder(p).rate == pytest.approx(1.0 - 0.5)
    assert ladder(RiskProcess(2.0)).is_zero
    with pytest.raises(UnsupportedDriftError):
        ladder(RiskProcess(1.0, 1.5, Exponential(1.0)))


def test_psi_ladder_exponential_closed_form():
    # c=1, lam=0.5, theta=1: Phi(q) solves s^2 + (0.5 - q) s - q = 0
    p = RiskProcess(1.0, 0.5, Exponential(1.0))
    for q in (0.5, 1.0, 2.0):
        b = 0.5 - q
        phi = (-b + math.sqrt(b * b + 4 * q)) / 2
        assert psi_ladder(p, q) == pytest.approx(0.5 - q / phi, rel=1e-12)
    assert psi_ladder(p, 0.0) == 0.0
    assert psi_ladder(RiskProcess(3.0), 2.0) == pytest.approx(0.0, abs=1e-15)


def test_ladder_levels_transform():
    p = RiskProcess(1.0, 0.5, Exponential(1.0))
    y = ladder(p)
    samp = y.sample_levels(2.0, 20_000, seed=3, workers=1)
    assert abs(samp.acceptance_rate - 0.5) < 4 * samp.acceptance_se
    for q in (0.5, 2.0):
        est, se = samp.transform(q)
        assert abs(est - math.exp(2.0 * psi_ladder(p, q))) < 4 * se


def test_psi_LR_pure_drift_line2(note_model):
    # with Y2 = 0 only the L/R scaled Y1 exponent remains
    m = note_model
    for w in (0.5j, 3j):
        yl = psi_ladder(m.line1, w)
        assert psi_LR(m, "L", w) == pytest.approx(m.r1 * yl, abs=1e-12)
        assert psi_LR(m, "R", w) == pytest.approx(yl, abs=1e-12)
    assert psi_LR(m, "L", 0j) == 0
    with pytest.raises(ValueError):
        psi_LR(m, "L", 1.0 + 1j)


def test_auxiliary_constants(ref_model):
    pair = auxiliary_pair(ref_model)
    assert pair.p_L == pytest.approx(0.1 + 1.1 * 0.5)
    assert pair.p_R == pytest.approx(0.5 + 1.1 * 0.1)
    up, dn = pair.rates["L"]
    assert up == pytest.approx(1.1 * 0.5) and dn == pytest.approx(0.9)


def test_factors_start_at_one(ref_factors):
    _, f = ref_factors
    for side in "LR":
        assert f.plus(side, 0.0) == 1.0 and f.minus(side, 0.0) == 1.0


def test_factor_ordering(ref_factors):
    _, f = ref_factors
    for w in np.linspace(0.5, 10, 8):
        assert f.plus("R", w) >= f.plus("L", w) - 3 * f.plus_se("L", w)
        assert f.minus("L", -w) >= f.minus("R", -w) - 3 * f.minus_se("R", -w)


def test_wh_identity_mc(ref_factors):
    m, f = ref_factors
    for side in "LR":
        p = f.p[side]
        for y in (0.3, 2.0, 8.0):
            prod, se = f.wh_product(side, 1j * y)
            assert abs(prod - p / (p - psi_LR(m, side, 1j * y))) < 3.5 * se


def test_surplus_note_mc_matches_closed_form(note_model):
    m = note_model
    exact = SurplusNoteFactors(m)
    f = estimate_wh(m, 8000, seed=5, workers=1)
    for side in "LR":
        for w in (0.3, 1.0, 5.0):
            assert abs(f.plus(side, w) - exact.plus(side, w)) < 4 * f.plus_se(side, w)
        assert f.minus(side, -1.0) == 1.0
        se = math.sqrt(exact.plus_inf(side) * (1 - exact.plus_inf(side)) / 8000)
        assert abs(f.plus_inf(side) - exact.plus_inf(side)) < 4 * se


def test_surplus_note_closed_form_identity(note_model):
    # the closed form itself satisfies the factorisation with Psi- = 1
    m = note_model
    f = SurplusNoteFactors(m)
    for side in "LR":
        p = f.p[side]
        for y in (0.2, 1.0, 6.0):
            w = 1j * y
            assert f.plus(side, w) == pytest.approx(p / (p - psi_LR(m, side, w)), rel=1e-12)
    a, b, c, d = wh_closed_surplus_note(m, 2.0)
    assert (c, d) == (1.0, 1.0)
    assert a == pytest.approx(f.p["L"] / (0.8 + 1.5 * 2.0 / phi_inv(m.line1, 2.0)))


def test_unit_cost_coupling(unit_model):
    f = estimate_wh(unit_model, 500, seed=2, workers=1)
    assert f.coupled
    assert f.sup["L"] is f.sup["R"]
    assert f.plus("L", 1.3) == f.plus("R", 1.3)


def test_estimate_wh_preconditions(ref_model):
    from dataclasses import replace
    bad = CoverageModel(RiskProcess(1.0, 2.5, Exponential(1.0)),
                        RiskProcess(1.0, 0.1, Exponential(1.0)), 1.1, 1.1)
    with pytest.raises(NetProfitError):
        estimate_wh(bad, 10, workers=1)
    neg = CoverageModel(RiskProcess(1.0, 1.2, Exponential(1.0)),
                        RiskProcess(1.0, 0.1, Exponential(1.0)), 1.1, 1.1)
    with pytest.raises(UnsupportedDriftError):
        estimate_wh(neg, 10, workers=1)
    with pytest.raises(PreconditionError):
        estimate_wh(replace(ref_model, r2=math.inf), 10, workers=1)


def test_pure_drift_factors_trivial():
    m = CoverageModel(RiskProcess(1.0), RiskProcess(2.0), 1.0, 1.0)
    f = estimate_wh(m, 50, workers=1)
    assert f.plus_inf("L") == 1.0 and f.minus_inf("R") == 1.0


def test_csv_round_trip(ref_factors, tmp_path):
    _, f = ref_factors
    f.to_csv(tmp_path / "s.csv")
    g = WienerHopfFactors.from_csv(tmp_path / "s.csv", f.p["L"], f.p["R"])
    assert np.array_equal(g.sup["R"], f.sup["R"]) and np.array_equal(g.inf["L"], f.inf["L"])


def test_ladder_acceptance_logged(ref_factors):
    _, f = ref_factors
    for line in ("line1", "line2"):
        s = f.ladder_stats[line]
        assert abs(s["rate"] - s["expected"]) < 4 * s["se"]
