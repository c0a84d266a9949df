import math

import pytest

from mutualcover.distributions import Deterministic, Erlang, Exponential, FiniteMixture
from mutualcover.risk_model import CoverageModel, RiskProcess
from mutualcover.validation import (common_shock_model, exponential_model, reference_model,
                                    surplus_note_model, unit_cost_model)


@pytest.fixture
def ref_model():
    return reference_model()


@pytest.fixture
def exp_model():
    return exponential_model()


@pytest.fixture
def note_model():
    return surplus_note_model()


@pytest.fixture
def unit_model():
    return unit_cost_model()


@pytest.fixture
def shock_model():
    return common_shock_model()


LAWS = [
    Deterministic(1.0),
    Exponential(2.0),
    Erlang(3, 1.5),
    FiniteMixture(((0.3, Exponential(1.0)), (0.7, Erlang(2, 4.0)))),
    FiniteMixture(((0.5, Deterministic(0.5)), (0.5, Exponential(0.7)))),
]
