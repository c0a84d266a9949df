"""Kernel equation, the main transform formula, its corollaries and closed-form oracles.

``F(s1, s2)`` is the double Laplace transform of the survival probability
``phi(u, v)``; ``F_hat = s1 s2 F`` equals ``E phi(e_s1, e_s2)`` for independent
exponential initial capitals. ``F1``/``F2`` are the boundary transforms of
``phi(., 0)`` and ``phi(0, .)``.

Factor objects (see :mod:`mutualcover.ladder_wh`) provide ``plus``/``minus``
evaluations; Monte-Carlo factors also expose per-path samples, which are
used for first-order (delta-method) standard errors.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .distributions import Exponential
from .errors import DomainError, NetProfitError, PreconditionError
from .ladder_wh import SurplusNoteFactors
from .risk_model import (CoverageModel, RiskProcess, dpsi1d, dpsi_biv, drift, net_profit, phi_inv,
                         psi1d, psi_biv)

DIAG_RTOL = 1e-6


def _pos(x: float) -> float:
    return max(x, 0.0)


def _neg(x: float) -> float:
    return max(-x, 0.0)


def _is_degenerate(x, y) -> bool:
    return abs(x - y) < DIAG_RTOL * max(1.0, abs(x))


def _diff_quotient(f: Callable, df: Callable, x, y):
    """``(f(x) - f(y)) / (x - y)``, with ``f'`` at the midpoint near the diagonal."""
    if _is_degenerate(x, y):
        return df(0.5 * (x + y)), True
    return (f(x) - f(y)) / (x - y), False


# --- kernel equation ------------------------------------------------------------------

def kernel_rhs(model: CoverageModel, F1, F2, s1, s2) -> complex:
    """Right-hand side of ``psi(s1, s2) F = a(s1, s2) F1 + b(s1, s2) F2``.

    ``r = inf`` reduces the matching coefficient to the premium rate of the
    other line. Works for common-shock models too.
    """
    if not (complex(s1).real > 0 and complex(s2).real > 0):
        raise DomainError("kernel equation needs Re(s1), Re(s2) > 0")
    psi = psi_biv(model, s1, s2)
    if psi == 0:
        raise DomainError(f"psi(s1, s2) = 0 at ({s1}, {s2}); the kernel is singular")
    if math.isinf(model.r2):
        a = model.c2
    else:
        a, _ = _diff_quotient(lambda x: psi_biv(model, s1, x),
                              lambda x: dpsi_biv(model, s1, x, 2), s2, model.r2 * s1)
    if math.isinf(model.r1):
        b = model.c1
    else:
        b, _ = _diff_quotient(lambda x: psi_biv(model, x, s2),
                              lambda x: dpsi_biv(model, x, s2, 1), s1, model.r1 * s2)
    return a * F1 + b * F2


def kernel_residual(model: CoverageModel, F, F1, F2, s1, s2) -> complex:
    return psi_biv(model, s1, s2) * F - kernel_rhs(model, F1, F2, s1, s2)


# --- constants ------------------------------------------------------------------

class PrimeConstants(NamedTuple):
    p_L: float
    p_R: float


def prime_constants(model: CoverageModel) -> PrimeConstants:
    """``p_L' = r1 mu1 + mu2^+ - r1 r2 mu2^-`` and ``p_R' = r2 mu2 + mu1^+ - r1 r2 mu1^-``.

    Also cross-checks them against the normalising constant ``C`` computed
    from whichever drift is nonnegative.
    """
    r1, r2, mu1, mu2 = model.r1, model.r2, model.mu1, model.mu2
    if math.isinf(r1) or math.isinf(r2):
        raise PreconditionError("prime constants need finite transfer costs")
    pl = r1 * mu1 + _pos(mu2) - r1 * r2 * _neg(mu2)
    pr = r2 * mu2 + _pos(mu1) - r1 * r2 * _neg(mu1)
    p_L = _pos(mu2) + r1 * _pos(mu1)
    p_R = _pos(mu1) + r2 * _pos(mu2)
    routes = []
    if mu1 >= 0:
        routes.append(p_L * (mu1 + r2 * mu2))
    if mu2 >= 0:
        routes.append(p_R * (mu2 + r1 * mu1))
    for C in routes:
        for got, want in ((C / p_L, pr), (C / p_R, pl)):
            if abs(got - want) > 1e-12 * max(1.0, abs(want)):
                raise AssertionError(f"inconsistent constants: {got} vs {want}")
    return PrimeConstants(pl, pr)


# --- delta-method helper ------------------------------------------------------------

def _delta(terms) -> Tuple[complex, float]:
    """Value and first-order SE of ``sum_k coef_k prod_j mean(X_kj)^p_kj``.

    ``terms`` is a list of ``(coef, [(group, samples, power), ...])``; samples
    in the same group come from the same paths, different groups are
    independent.
    """
    value = 0j
    infl: Dict[str, np.ndarray] = {}
    for coef, facs in terms:
        means = [s.mean() for _, s, _ in facs]
        v = coef
        for m, (_, _, p) in zip(means, facs):
            v = v * m ** p
        value += v
        for m, (g, s, p) in zip(means, facs):
            d = v * p / m * (s - m)
            infl[g] = infl[g] + d if g in infl else d
    var = sum(float(np.mean(np.abs(d) ** 2)) / (len(d) - 1) for d in infl.values())
    return value, math.sqrt(var)


def _is_mc(factors) -> bool:
    return hasattr(factors, "samples_plus")


def _groups(factors) -> Dict[str, str]:
    return {"L": "L", "R": "L" if getattr(factors, "coupled", False) else "R"}


# --- main formula -------------------------------------------------------------------

@dataclass
class TransformValue:
    s1: complex
    s2: complex
    F: complex
    components: Tuple[complex, complex]
    se: float = 0.0
    diagnostics: Dict[str, object] = field(default_factory=dict)

    @property
    def F_hat(self) -> complex:
        return self.s1 * self.s2 * self.F

    @property
    def F_hat_se(self) -> float:
        return abs(self.s1 * self.s2) * self.se


def _check_args(model: CoverageModel, factors, s1, s2) -> None:
    for s, line, name in ((s1, model.line1, "s1"), (s2, model.line2, "s2")):
        z = complex(s)
        if z.imag != 0 and not getattr(factors, "exact", False):
            raise DomainError("complex arguments need closed-form factors")
        if not z.real > line.phi0:
            raise DomainError(f"{name}={s} must exceed Phi(0)={line.phi0}")


def _check_model(model: CoverageModel) -> None:
    if not model.independent:
        raise PreconditionError("the transform formula needs independent claim streams")
    np_ = net_profit(model)
    if not np_.holds:
        raise NetProfitError(f"net profit condition fails: {', '.join(np_.violated)}")


def theorem_main(model: CoverageModel, factors, s1, s2,
                 constants: Optional[PrimeConstants] = None) -> TransformValue:
    """Transform ``F(s1, s2)`` from the Wiener–Hopf factors of X_L and X_R.

    ``constants`` overrides the computed ``(p_L', p_R')``; only useful to
    check that validation notices a wrong constant.
    """
    _check_model(model)
    if math.isinf(model.r1) or math.isinf(model.r2):
        raise PreconditionError("use restricted_F when a transfer direction is disabled")
    _check_args(model, factors, s1, s2)
    l1, l2, r1, r2 = model.line1, model.line2, model.r1, model.r2
    pc = constants or prime_constants(model)
    a = psi1d(l1, s1)
    b = psi1d(l2, s2)
    q2, deg2 = _diff_quotient(lambda x: psi1d(l2, x), lambda x: dpsi1d(l2, x), s2, r2 * s1)
    q1, deg1 = _diff_quotient(lambda x: psi1d(l1, x), lambda x: dpsi1d(l1, x), s1, r1 * s2)
    k1 = pc.p_R * q2 / (a + psi1d(l2, r2 * s1))
    k2 = pc.p_L * q1 / (b + psi1d(l1, r1 * s2))
    if _is_mc(factors):
        g = _groups(factors)
        t1, se1 = _delta([(k1, [(g["L"], factors.samples_plus("L", a), 1),
                                (g["R"], factors.samples_plus("R", a), -1)])])
        t2, se2 = _delta([(k2, [(g["R"], factors.samples_minus("R", -b), 1),
                                (g["L"], factors.samples_minus("L", -b), -1)])])
        _, se = _delta([(k1, [(g["L"], factors.samples_plus("L", a), 1),
                              (g["R"], factors.samples_plus("R", a), -1)]),
                        (k2, [(g["R"], factors.samples_minus("R", -b), 1),
                              (g["L"], factors.samples_minus("L", -b), -1)])])
    else:
        t1 = k1 * factors.plus("L", a) / factors.plus("R", a)
        t2 = k2 * factors.minus("R", -b) / factors.minus("L", -b)
        se = 0.0
    tot = a + b
    return TransformValue(s1, s2, (t1 + t2) / tot, (t1 / tot, t2 / tot), se / abs(tot),
                          {"diag_s2_r2s1": deg2, "diag_s1_r1s2": deg1})


def boundary_transforms(model: CoverageModel, factors, s1, s2) -> Tuple[complex, complex]:
    """``(F1(s1), F2(s2))``, normalised with ``C = p_L p_R' = p_R p_L'``."""
    _check_model(model)
    _check_args(model, factors, s1, s2)
    l1, l2 = model.line1, model.line2
    pc = prime_constants(model)
    a = psi1d(l1, s1)
    b = psi1d(l2, s2)
    F1 = pc.p_R / (a + psi1d(l2, model.r2 * s1)) * factors.plus("L", a) / factors.plus("R", a)
    F2 = pc.p_L / (b + psi1d(l1, model.r1 * s2)) * factors.minus("R", -b) / factors.minus("L", -b)
    return F1, F2


class Phi00(NamedTuple):
    via_plus: float
    via_minus: float
    se_plus: float = 0.0
    se_minus: float = 0.0


def phi00(model: CoverageModel, factors) -> Phi00:
    """Survival from zero capitals, through the upper and the lower factor tails."""
    _check_model(model)
    pc = prime_constants(model)
    kp = pc.p_R / (model.c1 + model.r2 * model.c2)
    km = pc.p_L / (model.c2 + model.r1 * model.c1)
    if _is_mc(factors):
        g = _groups(factors)
        zs = {k: (factors.sup[k] == 0.0).astype(float) for k in "LR"}
        zi = {k: (factors.inf[k] == 0.0).astype(float) for k in "LR"}
        vp, sp = _delta([(kp, [(g["L"], zs["L"], 1), (g["R"], zs["R"], -1)])])
        vm, sm = _delta([(km, [(g["R"], zi["R"], 1), (g["L"], zi["L"], -1)])])
        return Phi00(float(vp.real), float(vm.real), sp, sm)
    vp = kp * factors.plus_inf("L") / factors.plus_inf("R")
    vm = km * factors.minus_inf("R") / factors.minus_inf("L")
    return Phi00(float(vp), float(vm))


# --- one disabled direction ------------------------------------------------------------

def _limit_plus_L(model: CoverageModel, w):
    # r1 -> inf: sup X_L(e_pL) becomes Y1 at an Exp(mu1) time
    return model.mu1 * phi_inv(model.line1, w) / w


def restricted_F(model: CoverageModel, factors, s1, s2) -> TransformValue:
    """Transform when line 1 can never help line 2 (``r2 = inf``).

    With ``r1 = inf`` as well the L factors are replaced by their limits and
    ``factors`` is not used.
    """
    if not math.isinf(model.r2):
        raise PreconditionError("restricted_F needs r2 = inf (swap the lines if r1 = inf)")
    _check_model(model)
    l1, l2, r1 = model.line1, model.line2, model.r1
    mu1, mu2 = model.mu1, model.mu2
    both = math.isinf(r1)
    if both and not (mu1 > 0 and mu2 > 0):
        raise NetProfitError("without transfers both drifts must be positive")
    if both:
        for s, line in ((s1, l1), (s2, l2)):
            if not complex(s).real > line.phi0:
                raise DomainError(f"argument {s} must exceed Phi(0)={line.phi0}")
    else:
        _check_args(model, factors, s1, s2)
    a = psi1d(l1, s1)
    b = psi1d(l2, s2)
    tot = a + b
    if both:
        t1 = mu2 * _limit_plus_L(model, a) / s1
        t2 = mu1 * mu2 / b
        return TransformValue(s1, s2, (t1 + t2) / tot, (t1 / tot, t2 / tot), 0.0,
                              {"limit": "r1=r2=inf"})
    k1 = (mu2 - r1 * _neg(mu1)) / s1
    q1, deg1 = _diff_quotient(lambda x: psi1d(l1, x), lambda x: dpsi1d(l1, x), s1, r1 * s2)
    k2 = mu2 * (mu2 + r1 * mu1) * s2 * q1 / ((b + psi1d(l1, r1 * s2)) * b)
    if _is_mc(factors):
        terms = [(k1, [("L", factors.samples_plus("L", a), 1)]),
                 (k2, [("L", factors.samples_minus("L", -b), -1)])]
        t1, _ = _delta(terms[:1])
        t2, _ = _delta(terms[1:])
        _, se = _delta(terms)
    else:
        t1 = k1 * factors.plus("L", a)
        t2 = k2 / factors.minus("L", -b)
        se = 0.0
    return TransformValue(s1, s2, (t1 + t2) / tot, (t1 / tot, t2 / tot), se / abs(tot),
                          {"limit": "r2=inf", "diag_s1_r1s2": deg1})


# --- closed-form oracles ----------------------------------------------------------------

def oracle_surplus_note(model: CoverageModel, s1, s2) -> complex:
    """Direct transform when line 2 earns premium only: ``phi(u, v) = phi_Z(u + v/r1)``."""
    if not model.independent or not model.line2.pure_drift:
        raise PreconditionError("surplus-note oracle needs line 2 without claims")
    if not net_profit(model).holds:
        raise NetProfitError("net profit condition fails")
    l1, r1 = model.line1, model.r1
    mu1, mu2 = model.mu1, model.line2.premium

    def g(x):
        return r1 / (r1 * psi1d(l1, x) + mu2 * x)

    def dg(x):
        den = r1 * psi1d(l1, x) + mu2 * x
        return -r1 * (r1 * dpsi1d(l1, x) + mu2) / den ** 2

    # 1/(psi1(r1 s2) + mu2 s2) = g(r1 s2)
    q, _ = _diff_quotient(g, dg, s1, r1 * s2)
    return -(mu2 + mu1 * r1) * q


def oracle_unit_cost(model: CoverageModel, s1, s2) -> complex:
    """Direct transform for ``r1 r2 = 1``: ruin of ``Z = X1 + r2 X2`` from ``u + r2 v``."""
    if abs(model.r1 * model.r2 - 1.0) > 1e-12:
        raise PreconditionError("unit-cost oracle needs r1 r2 = 1")
    if not model.independent:
        raise PreconditionError("unit-cost oracle needs independent claim streams")
    if not net_profit(model).holds:
        raise NetProfitError("net profit condition fails")
    l1, l2, r2 = model.line1, model.line2, model.r2

    def h(x):
        # 1 / psi_Z(x) with psi_Z(x) = psi1(x) + psi2(r2 x)
        return 1.0 / (psi1d(l1, x) + psi1d(l2, r2 * x))

    def dh(x):
        z = psi1d(l1, x) + psi1d(l2, r2 * x)
        return -(dpsi1d(l1, x) + r2 * dpsi1d(l2, r2 * x)) / z ** 2

    # s2 - s1 r2 = r2 (r1 s2 - s1)
    q, _ = _diff_quotient(h, dh, s1, model.r1 * s2)
    return -(model.mu1 + r2 * model.mu2) * q / r2


def oracle_1d_survival(proc: RiskProcess, s) -> complex:
    """``int e^{-su} phi(u) du = mu / psi(s)`` for one line."""
    mu = drift(proc)
    if mu <= 0:
        return 0.0
    return mu / psi1d(proc, s)


def oracle_1d_pointwise(proc: RiskProcess, u: float) -> float:
    """Survival from ``u`` with exponential claims of rate ``theta``."""
    if proc.claim_rate == 0:
        return 1.0
    if not isinstance(proc.claims, Exponential):
        raise PreconditionError("pointwise survival needs exponential claims")
    if drift(proc) <= 0:
        return 0.0
    lam, c, th = proc.claim_rate, proc.premium, proc.claims.rate
    return 1.0 - lam / (c * th) * math.exp(-(th - lam / c) * u)


# --- sweeps ---------------------------------------------------------------------------

SWEEP_COLUMNS = ("s1", "s2", "F_hat", "se", "term1", "term2")


def sweep(model: CoverageModel, factors, points: Iterable[Tuple[float, float]]) -> List[TransformValue]:
    fn = restricted_F if math.isinf(model.r2) else theorem_main
    return [fn(model, factors, s1, s2) for s1, s2 in points]


def sweep_rows(values: Sequence[TransformValue]) -> List[tuple]:
    rows = []
    for tv in values:
        s12 = tv.s1 * tv.s2
        rows.append((tv.s1, tv.s2, float(np.real(tv.F_hat)), tv.F_hat_se,
                     float(np.real(s12 * tv.components[0])), float(np.real(s12 * tv.components[1]))))
    return rows


def write_sweep_csv(values: Sequence[TransformValue], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        w.writerows(sweep_rows(values))


def closed_form_factors(model: CoverageModel):
    """Exact factors when available (line 2 without claims), else ``None``."""
    if model.independent and model.line2.pure_drift:
        return SurplusNoteFactors(model)
    return None
