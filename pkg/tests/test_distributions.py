import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from mutualcover.distributions import (Deterministic, Erlang, Exponential, FiniteMixture,
                                       JointClaimDistribution, build_law_table, from_dict,
                                       to_dict)
from mutualcover.errors import DomainError

from conftest import LAWS

law_ids = [type(d).__name__ for d in LAWS]


def _density_lt(law, s):
    # independent oracle: integrate the scipy density
    if isinstance(law, Exponential):
        dens = stats.expon(scale=1 / law.rate).pdf
    elif isinstance(law, Erlang):
        dens = stats.gamma(law.shape, scale=1 / law.rate).pdf
    else:
        raise TypeError
    return integrate.quad(lambda x: math.exp(-s * x) * dens(x), 0, np.inf, epsabs=1e-13)[0]


@pytest.mark.parametrize("law", [Exponential(2.0), Erlang(3, 1.5), Erlang(1, 0.4)])
@pytest.mark.parametrize("s", [0.1, 1.0, 4.0])
def test_lt_matches_quadrature(law, s):
    assert law.lt(s) == pytest.approx(_density_lt(law, s), rel=1e-10)


def test_deterministic_lt():
    assert Deterministic(1.0).lt(1.0) == pytest.approx(math.exp(-1))
    assert Deterministic(2.0).lt(0.5j) == pytest.approx(complex(math.cos(1), -math.sin(1)))


@pytest.mark.parametrize("law", LAWS, ids=law_ids)
def test_moments_match_samples(law):
    rng = np.random.default_rng(3)
    x = law.sample(rng, 200_000)
    se = math.sqrt(law.variance() / len(x))
    assert abs(x.mean() - law.mean()) < 5 * se + 1e-12
    assert (x >= 0).all()


@pytest.mark.parametrize("law", LAWS, ids=law_ids)
def test_derivative_of_lt(law):
    for s in (0.3, 1.7, 0.5 + 2j):
        h = 1e-6
        fd = (law.lt(s + h) - law.lt(s - h)) / (2 * h)
        assert abs(law.dlt(s) - fd) < 1e-7


@pytest.mark.parametrize("law", LAWS, ids=law_ids)
def test_lt_at_zero_and_slope(law):
    assert law.lt(0.0) == pytest.approx(1.0)
    assert law.dlt(0.0) == pytest.approx(-law.mean())


@settings(max_examples=60, deadline=None)
@given(k=st.integers(0, len(LAWS) - 1), re=st.floats(0, 50), im=st.floats(-50, 50))
def test_lt_bounded_on_halfplane(k, re, im):
    assert abs(LAWS[k].lt(complex(re, im))) <= 1 + 1e-12


@settings(max_examples=60, deadline=None)
@given(k=st.integers(0, len(LAWS) - 1), a=st.floats(0, 20), b=st.floats(0, 20))
def test_lt_decreasing_on_reals(k, a, b):
    lo, hi = sorted((a, b))
    assert LAWS[k].lt(hi) <= LAWS[k].lt(lo) + 1e-15


def test_rejects_left_halfplane():
    with pytest.raises(DomainError):
        Exponential(1.0).lt(-0.1)


@pytest.mark.parametrize("bad", [lambda: Exponential(0.0), lambda: Deterministic(-1.0),
                                 lambda: Erlang(0, 1.0),
                                 lambda: FiniteMixture(((0.5, Exponential(1.0)),))])
def test_invalid_parameters(bad):
    with pytest.raises(ValueError):
        bad()


@pytest.mark.parametrize("law", LAWS, ids=law_ids)
def test_dict_round_trip(law):
    assert from_dict(to_dict(law)) == law


def test_from_dict_rejects_unknown():
    with pytest.raises(ValueError):
        from_dict({"type": "exponential", "rate": 1.0, "scale": 2.0})
    with pytest.raises(ValueError):
        from_dict({"type": "pareto", "alpha": 2.0})


def test_mixture_mgf_and_mean():
    m = FiniteMixture(((0.25, Exponential(2.0)), (0.75, Deterministic(1.0))))
    assert m.mean() == pytest.approx(0.25 * 0.5 + 0.75)
    assert m.mgf(1.0) == pytest.approx(0.25 * 2.0 / (2.0 - 1.0) + 0.75 * math.e)


# --- joint law -----------------------------------------------------------------------

def test_joint_independent_marginals():
    j = JointClaimDistribution.independent(0.5, Exponential(2.0), 1.5, Deterministic(1.0))
    p1, law1 = j.marginal(1)
    p2, law2 = j.marginal(2)
    assert (p1, p2) == pytest.approx((0.25, 0.75))
    assert law1 == Exponential(2.0) and law2 == Deterministic(1.0)
    # one coordinate is zero on every atom
    assert j.lt(1.0, 2.0) == pytest.approx(0.25 * 2 / 3 + 0.75 * math.exp(-2))


def test_joint_common_shock_lt_and_sample(shock_model):
    j = shock_model.joint
    x, y = j.sample(np.random.default_rng(0), 400_000)
    for s1, s2 in ((0.5, 1.0), (2.0, 0.3)):
        emp = np.exp(-s1 * x - s2 * y).mean()
        assert abs(emp - j.lt(s1, s2)) < 4e-3
    assert x.mean() == pytest.approx(j.mean(1), rel=0.02)
    assert y.mean() == pytest.approx(j.mean(2), rel=0.02)
    h = 1e-6
    fd = (j.lt(1.0 + h, 0.5) - j.lt(1.0 - h, 0.5)) / (2 * h)
    assert j.dlt(1.0, 0.5, 1) == pytest.approx(fd, abs=1e-8)


def test_joint_rejects_bad_weights():
    with pytest.raises(ValueError):
        JointClaimDistribution(((0.5, Exponential(1.0), None),))
    with pytest.raises(ValueError):
        JointClaimDistribution(((1.0, None, None),))


def test_law_table_layout():
    tab = build_law_table([Exponential(2.0), FiniteMixture(((0.3, Deterministic(1.0)),
                                                            (0.7, Erlang(2, 3.0))))])
    assert list(tab.start) == [0, 1] and list(tab.end) == [1, 3]
    assert list(tab.kind) == [1, 0, 2]
    assert tab.cumw[-1] == 1.0 and tab.cumw[1] == pytest.approx(0.3)
