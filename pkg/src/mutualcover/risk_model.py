"""Cramér–Lundberg lines, the coupled two-line model, and their exponents.

Conventions: ``psi(s) = log E exp(s X(1)) = s c - lam (1 - E exp(-s C))`` on
``Re(s) >= 0``; ``phi_inv`` is its right inverse with ``Re(Phi) > 0``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional, Tuple, Union

from scipy.optimize import brentq

from .distributions import ClaimDistribution, JointClaimDistribution, Number
from .errors import ConvergenceError, DomainError

INF = math.inf

# Ruin probability tolerated when a path is declared safe (Lundberg bound).
SAFE_RUIN_EPS = 1e-16


@dataclass(frozen=True)
class RiskProcess:
    """One line: premium rate ``c``, Poisson claim rate ``lam``, claim law."""

    premium: float
    claim_rate: float = 0.0
    claims: Optional[ClaimDistribution] = None

    def __post_init__(self):
        if not (self.premium > 0 and math.isfinite(self.premium)):
            raise ValueError(f"premium rate must be positive, got {self.premium}")
        if self.claim_rate < 0 or not math.isfinite(self.claim_rate):
            raise ValueError(f"claim rate must be finite and >= 0, got {self.claim_rate}")
        if (self.claim_rate > 0) != (self.claims is not None):
            raise ValueError("claim law must be given exactly when the claim rate is positive")

    @property
    def drift(self) -> float:
        return drift(self)

    @property
    def pure_drift(self) -> bool:
        return self.claim_rate == 0

    @cached_property
    def phi0(self) -> float:
        return _phi0(self)

    @cached_property
    def lundberg(self) -> float:
        return lundberg_exponent(self)


@dataclass(frozen=True)
class CoverageModel:
    """Two lines with mutual deficit coverage.

    ``r1`` is the capital line 2 pays per unit received by line 1 (and vice
    versa for ``r2``); ``math.inf`` disables that transfer direction. With a
    ``joint`` law the lines carry premiums only and claims arrive as a single
    stream of rate ``joint_rate`` with bivariate sizes.
    """

    line1: RiskProcess
    line2: RiskProcess
    r1: float = 1.0
    r2: float = 1.0
    joint: Optional[JointClaimDistribution] = None
    joint_rate: float = 0.0
    allow_low_costs: bool = False

    def __post_init__(self):
        for name in ("r1", "r2"):
            r = getattr(self, name)
            if not (r >= 0):
                raise ValueError(f"{name} must be >= 0, got {r}")
        if not self.allow_low_costs and self.r1 * self.r2 < 1:
            raise ValueError("r1 * r2 < 1 requires allow_low_costs=True")
        if self.joint is not None:
            if not self.line1.pure_drift or not self.line2.pure_drift:
                raise ValueError("with a joint claim law the lines must carry premiums only")
            if not self.joint_rate > 0:
                raise ValueError("joint claim law needs a positive joint_rate")

    @property
    def independent(self) -> bool:
        return self.joint is None

    @property
    def c1(self) -> float:
        return self.line1.premium

    @property
    def c2(self) -> float:
        return self.line2.premium

    @cached_property
    def marginals(self) -> Tuple[RiskProcess, RiskProcess]:
        if self.joint is None:
            return self.line1, self.line2
        out = []
        for coord, line in ((1, self.line1), (2, self.line2)):
            p, law = self.joint.marginal(coord)
            rate = self.joint_rate * p
            out.append(RiskProcess(line.premium, rate, law if rate > 0 else None))
        return out[0], out[1]

    @property
    def mu1(self) -> float:
        return drift(self.marginals[0])

    @property
    def mu2(self) -> float:
        return drift(self.marginals[1])

    def total_rate_and_law(self) -> Tuple[float, Optional[JointClaimDistribution]]:
        """Claim stream as one Poisson process with bivariate jumps."""
        if self.joint is not None:
            return self.joint_rate, self.joint
        lam = self.line1.claim_rate + self.line2.claim_rate
        if lam == 0:
            return 0.0, None
        return lam, JointClaimDistribution.independent(
            self.line1.claim_rate, self.line1.claims, self.line2.claim_rate, self.line2.claims)

    def swapped(self) -> "CoverageModel":
        joint = None
        if self.joint is not None:
            joint = JointClaimDistribution(tuple((w, b, a) for w, a, b in self.joint.atoms))
        return CoverageModel(self.line2, self.line1, self.r2, self.r1, joint, self.joint_rate,
                             self.allow_low_costs)


# --- exponents -------------------------------------------------------------------

def drift(proc: RiskProcess) -> float:
    """Mean increment per unit time, ``c - lam E[C]``."""
    if proc.claim_rate == 0:
        return float(proc.premium)
    return proc.premium - proc.claim_rate * proc.claims.mean()


def _psi_raw(proc: RiskProcess, s: Number) -> Number:
    if proc.claim_rate == 0:
        return s * proc.premium
    return s * proc.premium - proc.claim_rate * proc.claims._tail(s)


def _dpsi_raw(proc: RiskProcess, s: Number) -> Number:
    if proc.claim_rate == 0:
        return proc.premium
    return proc.premium + proc.claim_rate * proc.claims._dlt(s)


def psi1d(proc: RiskProcess, s: Number) -> Number:
    """Laplace exponent of one line at ``Re(s) >= 0``."""
    if complex(s).real < 0:
        raise DomainError(f"psi defined for Re(s) >= 0, got {s!r}")
    return _psi_raw(proc, s)


def dpsi1d(proc: RiskProcess, s: Number) -> Number:
    if complex(s).real < 0:
        raise DomainError(f"psi' defined for Re(s) >= 0, got {s!r}")
    return _dpsi_raw(proc, s)


def psi_biv(model: CoverageModel, s1: Number, s2: Number) -> Number:
    """Bivariate exponent ``log E exp(s1 X1(1) + s2 X2(1))``."""
    if complex(s1).real < 0 or complex(s2).real < 0:
        raise DomainError("psi defined for Re(s1), Re(s2) >= 0")
    if model.joint is None:
        return _psi_raw(model.line1, s1) + _psi_raw(model.line2, s2)
    return (s1 * model.c1 + s2 * model.c2
            - model.joint_rate * model.joint.tail(s1, s2))


def dpsi_biv(model: CoverageModel, s1: Number, s2: Number, coord: int) -> Number:
    """Partial derivative of :func:`psi_biv` in coordinate ``coord``."""
    if model.joint is None:
        return _dpsi_raw(model.line1, s1) if coord == 1 else _dpsi_raw(model.line2, s2)
    c = model.c1 if coord == 1 else model.c2
    return c + model.joint_rate * model.joint.dlt(s1, s2, coord)


class NetProfit(NamedTuple):
    holds: bool
    values: Tuple[float, float]
    violated: Tuple[str, ...]

    def __bool__(self):
        return self.holds


def net_profit(model: CoverageModel) -> NetProfit:
    """Check ``mu1 + r2 mu2 > 0`` and ``mu2 + r1 mu1 > 0``.

    A disabled direction (``r = inf``) turns the matching inequality into a
    sign condition on the drift of the line that can no longer be helped.
    """
    mu1, mu2 = model.mu1, model.mu2

    def side(mu_self, mu_other, r):
        if math.isinf(r):
            # only the helped line's drift matters once its rescue is infinitely costly
            return INF if mu_other > 0 else (-INF if mu_other < 0 else 0.0)
        return mu_self + r * mu_other

    a = side(mu1, mu2, model.r2)
    b = side(mu2, mu1, model.r1)
    violated = []
    if not a > 0:
        violated.append("mu1 + r2*mu2 > 0")
    if not b > 0:
        violated.append("mu2 + r1*mu1 > 0")
    return NetProfit(not violated, (a, b), tuple(violated))


# --- inverse exponent ----------------------------------------------------------

def _phi0(proc: RiskProcess) -> float:
    mu = drift(proc)
    if mu >= 0:
        return 0.0
    # convex psi with psi(0) = 0 and psi'(0) = mu < 0: one positive root
    lo = 1e-6
    while _psi_raw(proc, lo) >= 0:
        lo *= 0.5
        if lo < 1e-300:
            raise ConvergenceError("could not bracket Phi(0)")
    return _solve_increasing(proc, 0.0, lo)


def _solve_increasing(proc: RiskProcess, q: float, lo: float, tol: float = 1e-13,
                      max_iter: int = 500) -> float:
    """Root of psi(s) = q on the increasing branch right of ``lo`` (psi(lo) < q)."""
    hi = max(2.0 * lo, 1.0)
    while _psi_raw(proc, hi) <= q:
        lo = hi
        hi *= 2.0
        if hi > 1e300:
            raise ConvergenceError(f"could not bracket Phi({q})")
    s = hi
    scale = max(abs(q), 1e-300)
    for _ in range(max_iter):
        val = _psi_raw(proc, s)
        f = val - q
        if abs(f) <= tol * scale or hi - lo <= 4e-16 * hi:
            return s
        if f > 0:
            hi = s
        else:
            lo = s
        d = _dpsi_raw(proc, s)
        # s - f/d regrouped so that tiny q is not lost to cancellation
        nxt = (q + (d * s - val)) / d if d > 0 else 0.5 * (lo + hi)
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if abs(nxt - s) <= 2e-16 * abs(s):
            return nxt
        s = nxt
    raise ConvergenceError(f"Phi({q}) did not converge")


def _phi_complex(proc: RiskProcess, q: complex, tol: float) -> complex:
    a0 = q.real + max(1.0, abs(q.imag))
    s = complex(_solve_increasing(proc, a0, proc.phi0))
    dq = q - a0
    t, h = 0.0, min(1.0, 1.0 / max(1.0, abs(dq)))
    while t < 1.0:
        t_new = min(1.0, t + h)
        qt = a0 + t_new * dq
        z = s
        ok = False
        for _ in range(50):
            f = _psi_raw(proc, z) - qt
            if abs(f) <= tol * max(1.0, abs(qt)):
                ok = True
                break
            d = _dpsi_raw(proc, z)
            if d == 0:
                break
            z = z - f / d
            if not cmath.isfinite(z):
                break
        if ok and z.real >= -1e-12 and abs(z - s) <= 0.5 * (abs(s) + 1.0):
            s, t = z, t_new
            h = min(1.0, 1.5 * h)
        else:
            h *= 0.5
            if h < 1e-10:
                raise ConvergenceError(f"Phi continuation failed at q={q}")
    # polish to relative accuracy; matters when |q| is tiny
    for _ in range(20):
        d = _dpsi_raw(proc, s)
        if d == 0:
            break
        step = (_psi_raw(proc, s) - q) / d
        s -= step
        if abs(step) <= 4e-16 * abs(s):
            break
    if s.real < 0:
        # roundoff on the boundary of the half-plane
        s = complex(0.0, s.imag)
    return s


def phi_inv(proc: RiskProcess, q: Number, tol: float = 1e-13) -> Number:
    """Right inverse of the exponent: ``psi(Phi(q)) = q`` with ``Re(Phi(q)) >= 0``.

    Real ``q >= 0`` returns a float; complex input returns a complex value
    obtained by Newton continuation from the real axis.
    """
    qc = complex(q)
    if qc.real < 0:
        raise DomainError(f"Phi defined for Re(q) >= 0, got {q!r}")
    is_complex = isinstance(q, complex)
    if proc.claim_rate == 0:
        return q / proc.premium
    if qc.imag == 0:
        x = qc.real
        val = proc.phi0 if x == 0 else _solve_increasing(proc, x, proc.phi0, tol)
        return complex(val) if is_complex else val
    return _phi_complex(proc, qc, max(tol, 1e-13))


def lundberg_exponent(proc: RiskProcess) -> float:
    """Positive root ``g`` of ``lam (E exp(g C) - 1) = c g``; ``inf`` without claims.

    Ruin probability from level ``x`` is at most ``exp(-g x)``. Returns
    ``nan`` when the drift is not positive.
    """
    if proc.claim_rate == 0:
        return INF
    if drift(proc) <= 0:
        return math.nan
    lam, c, law = proc.claim_rate, proc.premium, proc.claims

    def g(t):
        m = law.mgf(t)
        val = lam * (m - 1.0) - c * t if math.isfinite(m) else 1e300
        return min(val, 1e300)

    hi = 1.0 / law.mean()
    while g(hi) <= 0:
        hi *= 2.0
    lo = hi
    while g(lo) >= 0:
        lo *= 0.5
    return brentq(g, lo, hi, xtol=1e-15, rtol=1e-14, maxiter=500)


def safe_level(proc: RiskProcess, eps: float = SAFE_RUIN_EPS) -> float:
    """Surplus above which own-line ruin has probability below ``eps``."""
    g = proc.lundberg
    if math.isnan(g):
        return INF
    if math.isinf(g):
        return 0.0
    return -math.log(eps) / g
