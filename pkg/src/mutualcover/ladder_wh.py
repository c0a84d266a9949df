"""Descending ladder time processes and Wiener–Hopf factors of X_L, X_R.

For a line with positive drift the ladder time process ``Y`` is compound
Poisson with rate ``c - mu`` and jumps distributed as the first-passage time
below zero, conditioned on passage happening. From two independent ladder
processes we build

    X_L(t) = Y1(r1 t) - Y2(t),   X_R(t) = Y1(t) - Y2(r2 t),

and estimate the Wiener–Hopf factors ``E exp(-w sup X(e_p))`` and
``E exp(-w inf X(e_p))`` from simulated extremes at an independent
exponential horizon. Samples are kept, so factors can be evaluated at any
argument later.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from ._backend import (TAG_LADDER, TAG_WH_L, TAG_WH_R, KernelLine, compile_line, get_kernels,
                       run_paths)
from .errors import NetProfitError, PreconditionError, UnsupportedDriftError
from .risk_model import CoverageModel, RiskProcess, drift, net_profit, phi_inv

log = logging.getLogger(__name__)

DEFAULT_CUTOFF_CLAIMS = 1e4


def _pos(x: float) -> float:
    return max(x, 0.0)


@dataclass(frozen=True)
class LadderProcess:
    parent: RiskProcess
    rate: float
    cutoff_claims: float = DEFAULT_CUTOFF_CLAIMS

    @property
    def is_zero(self) -> bool:
        return self.rate == 0

    @property
    def kernel_line(self) -> KernelLine:
        return compile_line(self.parent, self.cutoff_claims)

    def sample_levels(self, horizon: float, n: int, seed: int = 42, workers: Optional[int] = None,
                      backend: Optional[str] = None) -> "LadderSample":
        """Draw ``n`` independent copies of ``Y(horizon)``."""
        kern = get_kernels(backend)
        parts = run_paths(kern.ladder_levels, (self.kernel_line, float(horizon), seed, TAG_LADDER),
                          n, workers)
        values = np.concatenate([p[0] for p in parts])
        attempts = sum(int(p[1]) for p in parts)
        accepted = sum(int(p[2]) for p in parts)
        return LadderSample(values, attempts, accepted, self.expected_acceptance)

    @property
    def expected_acceptance(self) -> float:
        """Probability that the parent started at zero ever drops below zero."""
        if self.is_zero:
            return 0.0
        return 1.0 - drift(self.parent) / self.parent.premium


@dataclass(frozen=True)
class LadderSample:
    values: np.ndarray
    attempts: int
    accepted: int
    expected_acceptance: float

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.attempts if self.attempts else math.nan

    @property
    def acceptance_se(self) -> float:
        p = self.expected_acceptance
        return math.sqrt(p * (1 - p) / self.attempts) if self.attempts else math.nan

    def transform(self, q: float) -> Tuple[float, float]:
        """Empirical ``E exp(-q Y)`` and its standard error."""
        z = np.exp(-q * self.values)
        return float(z.mean()), float(z.std(ddof=1) / math.sqrt(len(z)))


def ladder(proc: RiskProcess, cutoff_claims: float = DEFAULT_CUTOFF_CLAIMS) -> LadderProcess:
    mu = drift(proc)
    if proc.claim_rate == 0:
        return LadderProcess(proc, 0.0, cutoff_claims)
    if mu <= 0:
        raise UnsupportedDriftError(f"ladder sampling needs positive drift, got mu={mu}")
    return LadderProcess(proc, proc.premium - mu, cutoff_claims)


def psi_ladder(proc: RiskProcess, q) -> complex:
    """``log E exp(-q Y(1)) = mu^+ - q / Phi(q)`` for ``Re(q) >= 0``."""
    if q == 0:
        return 0.0
    return _pos(drift(proc)) - q / phi_inv(proc, q)


# --- auxiliary two-sided processes ---------------------------------------------------

@dataclass(frozen=True)
class AuxiliaryPair:
    model: CoverageModel
    p_L: float
    p_R: float

    @property
    def rates(self) -> Dict[str, Tuple[float, float]]:
        """Upward (Y1) and downward (Y2) jump rates of X_L and X_R."""
        y1 = ladder(self.model.line1).rate
        y2 = ladder(self.model.line2).rate
        return {"L": (self.model.r1 * y1, y2), "R": (y1, self.model.r2 * y2)}


def auxiliary_pair(model: CoverageModel) -> AuxiliaryPair:
    if not model.independent:
        raise PreconditionError("auxiliary processes need independent claim streams")
    mu1, mu2 = _pos(model.mu1), _pos(model.mu2)
    return AuxiliaryPair(model, mu2 + model.r1 * mu1, mu1 + model.r2 * mu2)


def psi_LR(model: CoverageModel, side: str, w: complex) -> complex:
    """``log E exp(-w X_side(1))`` for imaginary ``w``.

    In the usual exponent notation ``psi(theta) = log E exp(theta X(1))`` this
    is ``psi_side(-w)``, the quantity in ``Psi+(w) Psi-(w) = p / (p - psi(-w))``.
    """
    w = complex(w)
    if w.real != 0:
        raise ValueError("psi_LR is evaluated on the imaginary axis")
    if w == 0:
        return 0j
    pair = auxiliary_pair(model)
    l1, l2 = model.line1, model.line2
    a = w / phi_inv(l1, w)
    b = w / phi_inv(l2, -w)
    if side == "L":
        return pair.p_L - model.r1 * a + b
    if side == "R":
        return pair.p_R - a + model.r2 * b
    raise ValueError(f"side must be 'L' or 'R', got {side!r}")


# --- factor objects ---------------------------------------------------------------

class WienerHopfFactors:
    """Monte-Carlo factors from stored suprema and infima at ``e_p``."""

    exact = False

    def __init__(self, p_L: float, p_R: float, sup_L, inf_L, sup_R, inf_R,
                 ladder_stats: Optional[dict] = None, coupled: bool = False):
        self.p = {"L": p_L, "R": p_R}
        self.sup = {"L": np.asarray(sup_L), "R": np.asarray(sup_R)}
        self.inf = {"L": np.asarray(inf_L), "R": np.asarray(inf_R)}
        self.ladder_stats = ladder_stats or {}
        self.coupled = coupled

    @property
    def n(self) -> Dict[str, int]:
        return {k: len(v) for k, v in self.sup.items()}

    def samples_plus(self, side, w):
        return np.exp(-w * self.sup[side])

    def samples_minus(self, side, w):
        return np.exp(-w * self.inf[side])

    def plus(self, side: str, w):
        """``E exp(-w sup X(e_p))``, ``Re(w) >= 0``."""
        return self.samples_plus(side, w).mean()

    def minus(self, side: str, w):
        """``E exp(-w inf X(e_p))``, ``Re(w) <= 0``."""
        return self.samples_minus(side, w).mean()

    def plus_se(self, side, w) -> float:
        return _complex_se(self.samples_plus(side, w))

    def minus_se(self, side, w) -> float:
        return _complex_se(self.samples_minus(side, w))

    def plus_inf(self, side: str) -> float:
        return float(np.mean(self.sup[side] == 0.0))

    def minus_inf(self, side: str) -> float:
        return float(np.mean(self.inf[side] == 0.0))

    def wh_product(self, side: str, w) -> Tuple[complex, float]:
        """``Psi+(w) Psi-(w)`` and its delta-method SE (same paths feed both)."""
        a = self.samples_plus(side, w)
        b = self.samples_minus(side, w)
        ma, mb = a.mean(), b.mean()
        return ma * mb, _complex_se(mb * a + ma * b)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["process", "bound", "value"])
            for side in ("L", "R"):
                for bound, arr in (("sup", self.sup[side]), ("inf", self.inf[side])):
                    for x in arr:
                        out.writerow([side, bound, repr(float(x))])

    @classmethod
    def from_csv(cls, path, p_L: float, p_R: float) -> "WienerHopfFactors":
        data = {("L", "sup"): [], ("L", "inf"): [], ("R", "sup"): [], ("R", "inf"): []}
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                data[(row["process"], row["bound"])].append(float(row["value"]))
        return cls(p_L, p_R, data["L", "sup"], data["L", "inf"], data["R", "sup"], data["R", "inf"])


def _complex_se(z: np.ndarray) -> float:
    z = np.asarray(z)
    d = z - z.mean()
    return float(math.sqrt(np.mean(np.abs(d) ** 2) / (len(z) - 1)))


class SurplusNoteFactors:
    """Closed-form factors when line 2 has no claims (pure premium drift).

    Then ``Y2`` vanishes, both minus-factors are identically one, and
    ``Psi_L+(w) = p_L / (mu2 + r1 w/Phi1(w))``,
    ``Psi_R+(w) = p_R / (r2 mu2 + w/Phi1(w))``.
    """

    exact = True

    def __init__(self, model: CoverageModel):
        if not model.independent or not model.line2.pure_drift:
            raise PreconditionError("closed-form factors need line 2 without claims")
        self.model = model
        self.mu2 = model.line2.premium
        mu1 = _pos(model.mu1)
        self.p = {"L": self.mu2 + model.r1 * mu1, "R": mu1 + model.r2 * self.mu2}

    def _ratio(self, w):
        # w / Phi1(w), continuous at zero
        if w == 0:
            return _pos(self.model.mu1)
        return w / phi_inv(self.model.line1, w)

    def plus(self, side, w):
        m = self.model
        if side == "L":
            return self.p["L"] / (self.mu2 + m.r1 * self._ratio(w))
        if math.isinf(m.r2):
            return 1.0
        return self.p["R"] / (m.r2 * self.mu2 + self._ratio(w))

    def minus(self, side, w):
        return 1.0

    def plus_se(self, side, w):
        return 0.0

    def minus_se(self, side, w):
        return 0.0

    def plus_inf(self, side):
        m = self.model
        if side == "L":
            return self.p["L"] / (self.mu2 + m.r1 * m.c1)
        if math.isinf(m.r2):
            return 1.0
        return self.p["R"] / (m.r2 * self.mu2 + m.c1)

    def minus_inf(self, side):
        return 1.0


def wh_closed_surplus_note(model: CoverageModel, w) -> Tuple[complex, complex, float, float]:
    """``(Psi_L+, Psi_R+, Psi_L-, Psi_R-)`` at ``w`` for the surplus-note model."""
    f = SurplusNoteFactors(model)
    return f.plus("L", w), f.plus("R", w), 1.0, 1.0


# --- estimation -----------------------------------------------------------------

def estimate_wh(model: CoverageModel, n: int = 10_000, seed: int = 42,
                workers: Optional[int] = None, cutoff_claims: float = DEFAULT_CUTOFF_CLAIMS,
                backend: Optional[str] = None) -> WienerHopfFactors:
    """Simulate ``n`` extremes of X_L and X_R at their exponential horizons.

    When ``r1 r2 = 1``, ``X_R(t) = X_L(r2 t)`` and ``r2 e_{p_R}`` has the law of
    ``e_{p_L}``, so the R extremes are taken pathwise from the L simulation.
    """
    np_ = net_profit(model)
    if not np_.holds:
        raise NetProfitError(f"net profit condition fails: {', '.join(np_.violated)}")
    if math.isinf(model.r1) or math.isinf(model.r2):
        raise PreconditionError("MC factors need finite transfer costs")
    pair = auxiliary_pair(model)
    y1 = ladder(model.line1, cutoff_claims)
    y2 = ladder(model.line2, cutoff_claims)
    k1, k2 = y1.kernel_line, y2.kernel_line
    kern = get_kernels(backend)
    rates = pair.rates
    coupled = abs(model.r1 * model.r2 - 1.0) <= 1e-12

    def run(side, tag):
        up, dn = rates[side]
        p = pair.p_L if side == "L" else pair.p_R
        parts = run_paths(kern.wh_extremes, (k1, k2, up, dn, p, seed, tag), n, workers)
        return (np.concatenate([q[0] for q in parts]), np.concatenate([q[1] for q in parts]),
                sum(q[2] for q in parts), sum(q[3] for q in parts))

    sup_L, inf_L, att, acc = run("L", TAG_WH_L)
    if coupled:
        sup_R, inf_R = sup_L, inf_L
    else:
        sup_R, inf_R, att_R, acc_R = run("R", TAG_WH_R)
        att, acc = att + att_R, acc + acc_R
    stats = {}
    for i, y in ((0, y1), (1, y2)):
        if att[i]:
            rate = acc[i] / att[i]
            expected = y.expected_acceptance
            se = math.sqrt(expected * (1 - expected) / att[i])
            stats[f"line{i + 1}"] = {"attempts": int(att[i]), "accepted": int(acc[i]),
                                     "rate": rate, "expected": expected, "se": se}
            if abs(rate - expected) > 3 * se:
                log.warning("ladder acceptance on line %d is %.4f, expected %.4f (3 SE = %.4f); "
                            "rejection cutoff may be too short", i + 1, rate, expected, 3 * se)
    return WienerHopfFactors(pair.p_L, pair.p_R, sup_L, inf_L, sup_R, inf_R, stats, coupled)
