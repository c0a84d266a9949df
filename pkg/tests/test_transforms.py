import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from mutualcover.distributions import Erlang, Exponential
from mutualcover.errors import DomainError, NetProfitError, PreconditionError
from mutualcover.ladder_wh import SurplusNoteFactors, estimate_wh
from mutualcover.risk_model import CoverageModel, RiskProcess, psi1d, psi_biv
from mutualcover.transforms import (PrimeConstants, boundary_transforms, kernel_residual,
                                    kernel_rhs, oracle_1d_pointwise, oracle_1d_survival,
                                    oracle_surplus_note, oracle_unit_cost, phi00,
                                    prime_constants, restricted_F, sweep, theorem_main,
                                    write_sweep_csv)
from mutualcover.validation import Settings, run_check, surplus_note_model

INF = math.inf


@pytest.fixture(scope="module")
def ref_mc():
    from mutualcover.validation import reference_model
    m = reference_model()
    return m, estimate_wh(m, 4000, seed=3, workers=1)


def _rel(a, b):
    return abs(a - b) / abs(b)


# --- constants --------------------------------------------------------------------------

def test_prime_constants_reference(ref_model):
    pc = prime_constants(ref_model)
    assert pc.p_L == pytest.approx(0.65) and pc.p_R == pytest.approx(0.61)


def test_prime_constants_unit_cost(unit_model):
    pc = prime_constants(unit_model)
    assert pc.p_R == pytest.approx(unit_model.r2 * pc.p_L)
    assert pc.p_R == pytest.approx(unit_model.mu1 + unit_model.r2 * unit_model.mu2)


@pytest.mark.parametrize("mu1,mu2", [(0.5, 0.2), (-0.1, 0.4), (0.6, -0.2), (0.0, 0.3)])
def test_prime_constants_negative_parts(mu1, mu2):
    m = CoverageModel(RiskProcess(1 + mu1, 1.0, Exponential(1.0)),
                      RiskProcess(1 + mu2, 1.0, Exponential(1.0)), 1.3, 1.4)
    pc = prime_constants(m)
    assert pc.p_L == pytest.approx(1.3 * mu1 + max(mu2, 0) - 1.3 * 1.4 * max(-mu2, 0))
    assert pc.p_R == pytest.approx(1.4 * mu2 + max(mu1, 0) - 1.3 * 1.4 * max(-mu1, 0))
    assert pc.p_L > 0 and pc.p_R > 0


# --- kernel equation --------------------------------------------------------------------

def test_kernel_rhs_infinite_costs(ref_model):
    from dataclasses import replace
    m2 = replace(ref_model, r2=INF)
    s1, s2 = 0.7, 1.9
    a = kernel_rhs(m2, 1.0, 0.0, s1, s2)
    assert a == pytest.approx(m2.c2)
    m12 = replace(ref_model, r1=INF, r2=INF)
    assert kernel_rhs(m12, 0.3, 0.7, s1, s2) == pytest.approx(m12.c2 * 0.3 + m12.c1 * 0.7)


def test_kernel_rhs_diagonal_limit(ref_model):
    s1 = 1.0
    s2 = ref_model.r2 * s1
    exact = kernel_rhs(ref_model, 1.0, 0.0, s1, s2)
    near = kernel_rhs(ref_model, 1.0, 0.0, s1, s2 + 1e-4)
    assert exact == pytest.approx(near, rel=1e-4)


def test_kernel_consistency_theorem_and_boundary(ref_mc):
    m, f = ref_mc
    rng = np.random.default_rng(0)
    for s1, s2 in rng.uniform(0.1, 8.0, size=(50, 2)):
        tv = theorem_main(m, f, s1, s2)
        F1, F2 = boundary_transforms(m, f, s1, s2)
        res = kernel_residual(m, tv.F, F1, F2, s1, s2)
        assert abs(res) <= 1e-9 * abs(psi_biv(m, s1, s2) * tv.F)


@settings(max_examples=50, deadline=None)
@given(s1=st.floats(0.05, 20.0), s2=st.floats(0.05, 20.0))
def test_surplus_note_theorem_properties(s1, s2):
    m = surplus_note_model()
    f = SurplusNoteFactors(m)
    tv = theorem_main(m, f, s1, s2)
    assert 0.0 <= tv.F_hat.real <= 1.0 + 1e-12
    assert _rel(tv.F, oracle_surplus_note(m, s1, s2)) < 1e-8
    F1, F2 = boundary_transforms(m, f, s1, s2)
    assert abs(kernel_residual(m, tv.F, F1, F2, s1, s2)) <= 1e-9 * abs(psi_biv(m, s1, s2) * tv.F)
    # the two summands stay finite on and near the degenerate diagonals
    assert all(math.isfinite(abs(c)) for c in tv.components)


def test_fhat_monotone_on_grid(ref_mc):
    m, f = ref_mc
    grid = np.linspace(0.5, 6, 8)
    vals = np.array([[theorem_main(m, f, a, b).F_hat.real for b in grid] for a in grid])
    assert (np.diff(vals, axis=0) < 0).all() and (np.diff(vals, axis=1) < 0).all()
    assert ((vals > 0) & (vals < 1)).all()


def test_limit_chain_closed_form(note_model):
    f = SurplusNoteFactors(note_model)
    big = 1e6
    for s in (0.7, 2.0, 4.5):
        F1, _ = boundary_transforms(note_model, f, s, 1.0)
        _, F2 = boundary_transforms(note_model, f, 1.0, s)
        assert _rel(big * theorem_main(note_model, f, s, big).F, F1) < 1e-3
        assert _rel(big * theorem_main(note_model, f, big, s).F, F2) < 1e-3


def test_s1_F1_tends_to_phi00(note_model, ref_mc):
    for m, f in ((note_model, SurplusNoteFactors(note_model)), ref_mc):
        F1, _ = boundary_transforms(m, f, 1e7, 1.0)
        assert _rel(1e7 * F1, phi00(m, f).via_plus) < 1e-3


def test_boundary_F2_positive_surplus_note(note_model):
    f = SurplusNoteFactors(note_model)
    for s2 in np.linspace(0.05, 5, 12):
        _, F2 = boundary_transforms(note_model, f, 1.0, s2)
        assert math.isfinite(F2) and F2 > 0


def test_degenerate_diagonals_flagged(note_model):
    f = SurplusNoteFactors(note_model)
    tv = theorem_main(note_model, f, 3.0, 2.0)  # s1 = r1 s2
    assert tv.diagnostics["diag_s1_r1s2"]
    near = theorem_main(note_model, f, 3.0 + 1e-5, 2.0)
    assert _rel(tv.F, near.F) < 1e-4
    tv2 = theorem_main(note_model, f, 1.0, 2.0)  # s2 = r2 s1
    assert tv2.diagnostics["diag_s2_r2s1"]


def test_theorem_domain_errors(ref_mc):
    m, f = ref_mc
    with pytest.raises(DomainError):
        theorem_main(m, f, 0.0, 1.0)
    with pytest.raises(DomainError):
        theorem_main(m, f, 1.0 + 1j, 1.0)  # complex needs closed-form factors
    neg = CoverageModel(RiskProcess(1.0, 1.5, Exponential(1.0)), RiskProcess(2.0), 1.5, 1.0)
    fn = SurplusNoteFactors(neg)
    with pytest.raises(DomainError):
        theorem_main(neg, fn, neg.line1.phi0, 1.0)
    assert theorem_main(neg, fn, neg.line1.phi0 + 0.1, 1.0).F_hat.real > 0


def test_theorem_complex_arguments_closed_form(note_model):
    f = SurplusNoteFactors(note_model)
    for s1, s2 in ((1 + 1j, 2.0), (2.0, 0.5 - 2j)):
        assert _rel(theorem_main(note_model, f, s1, s2).F, oracle_surplus_note(note_model, s1, s2)) < 1e-8


def test_theorem_requires_net_profit():
    m = CoverageModel(RiskProcess(1.0, 1.6, Exponential(1.0)), RiskProcess(0.2), 1.0, 1.0)
    with pytest.raises(NetProfitError):
        theorem_main(m, SurplusNoteFactors(m), 2.0, 1.0)


def test_theorem_rejects_common_shock(shock_model):
    with pytest.raises(PreconditionError):
        theorem_main(shock_model, None, 1.0, 1.0)


# --- phi(0, 0) ----------------------------------------------------------------------------

def test_phi00_closed_form_routes_agree():
    for mu1 in (0.5, -0.3):
        m = CoverageModel(RiskProcess(1.0, (1 - mu1) * 2.0, Exponential(2.0)), RiskProcess(0.8),
                          1.5, 2.0)
        p = phi00(m, SurplusNoteFactors(m))
        assert p.via_plus == pytest.approx(p.via_minus, rel=1e-12)
        # direct: phi(0,0) = phi_Z(0) = 1 - lam/(c_Z theta)
        cz = m.c1 + m.c2 / m.r1
        assert p.via_plus == pytest.approx(1 - m.line1.claim_rate / (cz * 2.0), rel=1e-12)


def test_phi00_pure_drift_is_one():
    m = CoverageModel(RiskProcess(1.0), RiskProcess(2.0), 1.3, 1.2)
    p = phi00(m, estimate_wh(m, 20, workers=1))
    assert p.via_plus == pytest.approx(1.0) and p.via_minus == pytest.approx(1.0)


def test_phi00_mc_routes_agree(ref_mc):
    m, f = ref_mc
    p = phi00(m, f)
    assert abs(p.via_plus - p.via_minus) < 3 * math.hypot(p.se_plus, p.se_minus)
    assert 0 < p.via_plus < 1


# --- restricted transfers ------------------------------------------------------------------

def test_product_formula():
    l1 = RiskProcess(1.0, 0.5, Exponential(1.0))
    l2 = RiskProcess(1.5, 0.7, Erlang(2, 2.0))
    m = CoverageModel(l1, l2, INF, INF)
    for s1, s2 in ((0.3, 0.3), (1.0, 4.0), (7.0, 0.9)):
        want = (m.mu1 / psi1d(l1, s1)) * (m.mu2 / psi1d(l2, s2))
        assert _rel(restricted_F(m, None, s1, s2).F, want) < 1e-12


def test_restricted_matches_large_r2_mc():
    l1 = RiskProcess(1.0, 0.5, Exponential(1.0))
    l2 = RiskProcess(1.0, 0.4, Exponential(1.0))
    big = CoverageModel(l1, l2, 1.5, 1e6)
    lim = CoverageModel(l1, l2, 1.5, INF)
    f = estimate_wh(big, 20_000, seed=4, workers=1)
    for s1, s2 in ((0.5, 0.5), (1.0, 2.0), (3.0, 1.0)):
        x = theorem_main(big, f, s1, s2)
        y = restricted_F(lim, f, s1, s2)
        # L factors are shared, so only the R factors contribute noise
        assert abs(x.F - y.F) < 4 * x.se


def test_restricted_closed_form_limit():
    big, lim = surplus_note_model(1.5, 1e6), surplus_note_model(1.5, INF)
    for s1, s2 in ((0.5, 0.5), (2.0, 4.0), (5.0, 1.0)):
        assert _rel(restricted_F(lim, SurplusNoteFactors(lim), s1, s2).F,
                    theorem_main(big, SurplusNoteFactors(big), s1, s2).F) < 1e-3


def test_restricted_preconditions(ref_model):
    with pytest.raises(PreconditionError):
        restricted_F(ref_model, None, 1.0, 1.0)
    m = CoverageModel(RiskProcess(1.0, 0.5, Exponential(1.0)),
                      RiskProcess(1.0, 1.5, Exponential(1.0)), 1.5, INF)
    with pytest.raises(NetProfitError):
        restricted_F(m, None, 1.0, 1.0)


# --- oracles -------------------------------------------------------------------------------

def test_oracle_surplus_note_diagonal_limit(note_model):
    s2 = 1.2
    s1 = note_model.r1 * s2
    h = 1e-3
    mid = oracle_surplus_note(note_model, s1, s2)
    # Richardson extrapolation of the symmetric neighbours
    sym = lambda k: 0.5 * (oracle_surplus_note(note_model, s1 + k, s2) + oracle_surplus_note(note_model, s1 - k, s2))
    extrap = (4 * sym(h / 2) - sym(h)) / 3
    assert _rel(mid, extrap) < 1e-6


def test_oracle_unit_cost_diagonal_finite(unit_model):
    s1 = 1.0
    val = oracle_unit_cost(unit_model, s1, s1 * unit_model.r2)
    near = oracle_unit_cost(unit_model, s1, s1 * unit_model.r2 + 1e-4)
    assert math.isfinite(val) and _rel(val, near) < 1e-3


def test_oracle_unit_cost_matches_theorem(unit_model):
    f = estimate_wh(unit_model, 300, seed=1, workers=1)
    for s1, s2 in ((0.5, 0.5), (1.0, 3.0), (4.0, 0.7)):
        assert _rel(theorem_main(unit_model, f, s1, s2).F, oracle_unit_cost(unit_model, s1, s2)) < 1e-10


def test_oracle_preconditions(ref_model, note_model):
    with pytest.raises(PreconditionError):
        oracle_surplus_note(ref_model, 1.0, 1.0)
    with pytest.raises(PreconditionError):
        oracle_unit_cost(note_model, 1.0, 1.0)


def test_oracle_1d_pointwise_values():
    p = RiskProcess(1.0, 0.5, Exponential(1.0))
    assert oracle_1d_pointwise(p, 0.0) == pytest.approx(0.5)
    assert oracle_1d_pointwise(p, 200.0) == pytest.approx(1.0)
    assert oracle_1d_pointwise(RiskProcess(1.0, 1.5, Exponential(1.0)), 3.0) == 0.0
    assert oracle_1d_survival(RiskProcess(1.0, 1.5, Exponential(1.0)), 1.0) == 0.0


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_oracle_1d_transform_by_quadrature(s):
    p = RiskProcess(1.3, 0.8, Exponential(1.4))
    val = integrate.quad(lambda u: math.exp(-s * u) * oracle_1d_pointwise(p, u), 0, np.inf,
                         epsabs=1e-14, epsrel=1e-13)[0]
    assert val == pytest.approx(oracle_1d_survival(p, s), rel=1e-10)


def test_oracle_1d_pointwise_mc():
    from mutualcover.simulator import SimConfig, estimate_survival
    line = RiskProcess(1.0, 0.5, Exponential(1.0))
    m = CoverageModel(line, RiskProcess(1.0), INF, INF)
    est = estimate_survival(m, 0.0, 0.0, SimConfig(n_paths=20_000, workers=1))
    assert abs(est.value - 0.5) < 4 * est.std_error


# --- sweeps and mutation -------------------------------------------------------------------

def test_sweep_csv(ref_mc, tmp_path):
    m, f = ref_mc
    vals = sweep(m, f, [(1.0, 1.0), (2.0, 1.0)])
    write_sweep_csv(vals, tmp_path / "sweep.csv")
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "s1,s2,F_hat,se,term1,term2" and len(lines) == 3
    row = [float(x) for x in lines[1].split(",")]
    assert row[2] == pytest.approx(row[4] + row[5])


def test_sweep_dispatches_restricted():
    m = surplus_note_model(1.5, INF)
    vals = sweep(m, SurplusNoteFactors(m), [(1.0, 1.0)])
    assert vals[0].diagnostics["limit"] == "r2=inf"


def test_wrong_constant_sign_is_detected():
    ok = run_check("surplus_note", Settings())
    bad = run_check("surplus_note", Settings(mutate_pl_sign=True))
    assert ok.passed and not bad.passed


def test_delta_se_reasonable(ref_mc):
    # SE from the delta method against the spread over independent factor sets
    m, _ = ref_mc
    vals = [theorem_main(m, estimate_wh(m, 1000, seed=k, workers=1), 2.0, 1.0) for k in range(12)]
    spread = np.std([v.F_hat.real for v in vals], ddof=1)
    mean_se = np.mean([v.F_hat_se for v in vals])
    assert 0.5 < spread / mean_se < 2.0
