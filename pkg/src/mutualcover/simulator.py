"""Event-driven simulation of the coupled surplus process and MC estimators.

Between claims both surpluses grow linearly; at a claim the deficit of one
line is covered by the other at cost ``r`` per unit, and ruin is the first
instant external capital is needed. Bulk estimation runs in the kernels
(compiled when available); :func:`simulate_path` is the instrumented
single-path version with event logging and runtime invariant checks.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from math import inf, log1p
from typing import List, Optional, Tuple

import numpy as np

from . import _backend
from ._backend import (TAG_FHAT, TAG_FHAT1, TAG_FHAT2, TAG_SURVIVAL, compile_model,
                       get_kernels, run_paths)
from ._pykernels import path_stream
from .risk_model import CoverageModel, safe_level

DEFAULT_T_MAX = 2000.0


@dataclass(frozen=True)
class SurplusState:
    t: float = 0.0
    s1: float = 0.0
    s2: float = 0.0
    l1: float = 0.0
    l2: float = 0.0
    e1: float = 0.0
    e2: float = 0.0

    @property
    def ruined(self) -> bool:
        return self.e1 + self.e2 > 0


@dataclass(frozen=True)
class SimConfig:
    t_max: float = DEFAULT_T_MAX
    n_paths: int = 10_000
    seed: int = 42
    workers: Optional[int] = None
    record_transfers: bool = False
    safe_stop: bool = True
    backend: Optional[str] = None

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if not 0 <= self.seed <= _backend.SEED_MASK:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class MCEstimate:
    value: float
    std_error: float
    n: int

    @classmethod
    def from_count(cls, k: int, n: int) -> "MCEstimate":
        p = k / n
        return cls(p, math.sqrt(p * (1.0 - p) / n), n)

    def __float__(self):
        return self.value


# --- single claim ------------------------------------------------------------------

def apply_claim(state: SurplusState, jump1: float, jump2: float, r1: float, r2: float
                ) -> Tuple[SurplusState, str]:
    """Resolve a claim at the current epoch; returns the new state and the event label.

    ``r = inf`` disables that rescue direction: the line that would have paid
    keeps its capital and external capital covers the whole deficit.
    """
    x1 = state.s1 - jump1
    x2 = state.s2 - jump2
    if x1 >= 0.0 and x2 >= 0.0:
        return replace(state, s1=x1, s2=x2), "claim"
    if x1 < 0.0 and x2 < 0.0:
        return replace(state, s1=0.0, s2=0.0, e1=state.e1 - x1, e2=state.e2 - x2), "E1+E2"
    if x1 < 0.0:
        if math.isinf(r1):
            return replace(state, s1=0.0, s2=x2, e1=state.e1 - x1), "E1"
        if x2 + r1 * x1 >= 0.0:
            return replace(state, s1=0.0, s2=x2 + r1 * x1, l1=state.l1 - x1), "L1"
        return replace(state, s1=0.0, s2=0.0, l1=state.l1 + x2 / r1,
                       e1=state.e1 - x1 - x2 / r1), "L1+E1"
    if math.isinf(r2):
        return replace(state, s2=0.0, s1=x1, e2=state.e2 - x2), "E2"
    if x1 + r2 * x2 >= 0.0:
        return replace(state, s2=0.0, s1=x1 + r2 * x2, l2=state.l2 - x2), "L2"
    return replace(state, s1=0.0, s2=0.0, l2=state.l2 + x1 / r2,
                   e2=state.e2 - x2 - x1 / r2), "L2+E2"


def check_event(prev: SurplusState, new: SurplusState, r1_inf: bool = False,
                r2_inf: bool = False) -> None:
    """Raise ``AssertionError`` unless the transition obeys the reflection rules."""
    if new.s1 < 0 or new.s2 < 0:
        raise AssertionError(f"negative surplus {new}")
    jumps = {}
    for name in ("l1", "l2", "e1", "e2"):
        d = getattr(new, name) - getattr(prev, name)
        if d < 0:
            raise AssertionError(f"{name} decreased at t={new.t}")
        if d > 0:
            jumps[name] = d
    if "l1" in jumps and new.s1 != 0.0:
        raise AssertionError("L1 jumped while S1 > 0")
    if "l2" in jumps and new.s2 != 0.0:
        raise AssertionError("L2 jumped while S2 > 0")
    for i, name in ((1, "e1"), (2, "e2")):
        if name in jumps:
            helper_disabled = r1_inf if i == 1 else r2_inf
            if getattr(new, f"s{i}") != 0.0:
                raise AssertionError(f"E{i} jumped while S{i} > 0")
            if not helper_disabled and (new.s1 != 0.0 or new.s2 != 0.0):
                raise AssertionError(f"E{i} jumped while a surplus is positive")
    allowed = [set(), {"l1"}, {"l2"}, {"e1"}, {"e2"}, {"l1", "e1"}, {"l2", "e2"}, {"e1", "e2"}]
    if set(jumps) not in allowed:
        raise AssertionError(f"forbidden simultaneous jumps {sorted(jumps)}")


# --- one path with logging -----------------------------------------------------------

@dataclass
class PathResult:
    ruin_time: float
    final: SurplusState
    events: List[tuple] = field(default_factory=list)

    @property
    def survived(self) -> bool:
        return math.isinf(self.ruin_time)


LOG_COLUMNS = ("t", "event", "s1", "s2", "l1", "l2", "e1", "e2", "jump1", "jump2")


def simulate_path(model: CoverageModel, u: float, v: float, t_max: float = DEFAULT_T_MAX,
                  seed: int = 42, index: int = 0, tag: int = TAG_SURVIVAL,
                  record: bool = False, safe_stop: bool = False) -> PathResult:
    """Simulate one path on the stream ``(seed, tag, index)`` used by the kernels.

    Each event is checked against the reflection rules; with ``record`` the
    event log (see ``LOG_COLUMNS``) is kept on the result.
    """
    if u < 0 or v < 0:
        raise ValueError("initial capitals must be nonnegative")
    km = compile_model(model)
    laws = _backend._pykernels._Unpacked(km.laws)
    draw = _backend._pykernels._draw_law
    safe1, safe2 = _safe_levels(model, safe_stop)
    rand = path_stream(seed, tag, index)
    r1 = math.inf if km.r1_inf else km.r1
    r2 = math.inf if km.r2_inf else km.r2
    state = SurplusState(0.0, float(u), float(v))
    events = [(0.0, "start", state.s1, state.s2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)] if record else []
    n_atoms = len(km.atom_cumw)
    t = 0.0
    if km.lam > 0:
        while True:
            if state.s1 >= safe1 and state.s2 >= safe2:
                break
            dt = -log1p(-rand()) / km.lam
            t += dt
            if t > t_max:
                break
            state = replace(state, t=t, s1=state.s1 + km.c1 * dt, s2=state.s2 + km.c2 * dt)
            a = 0
            if n_atoms > 1:
                x = rand()
                while a < n_atoms - 1 and x >= km.atom_cumw[a]:
                    a += 1
            j1 = draw(laws, int(km.atom_law1[a]), rand) if km.atom_law1[a] >= 0 else 0.0
            j2 = draw(laws, int(km.atom_law2[a]), rand) if km.atom_law2[a] >= 0 else 0.0
            new, label = apply_claim(state, j1, j2, r1, r2)
            check_event(state, new, km.r1_inf, km.r2_inf)
            state = new
            if record:
                events.append((t, label, state.s1, state.s2, state.l1, state.l2,
                               state.e1, state.e2, j1, j2))
            if state.ruined:
                return PathResult(t, state, events)
    return PathResult(inf, state, events)


def write_path_log(events: List[tuple], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LOG_COLUMNS)
        for row in events:
            w.writerow([row[0], row[1], *(repr(float(x)) for x in row[2:])])


# --- Monte-Carlo estimators ----------------------------------------------------------

def _safe_levels(model: CoverageModel, enabled: bool) -> Tuple[float, float]:
    m1, m2 = model.marginals
    if not enabled or model.mu1 <= 0 or model.mu2 <= 0:
        return inf, inf
    return safe_level(m1), safe_level(m2)


def ruin_times(model: CoverageModel, cfg: SimConfig, u: float = 0.0, v: float = 0.0,
               u_rate: float = 0.0, v_rate: float = 0.0, tag: int = TAG_SURVIVAL) -> np.ndarray:
    """Per-path ruin times (``inf`` when the path survives the horizon).

    A positive ``u_rate``/``v_rate`` draws that initial capital from an
    exponential law with the given rate instead of using ``u``/``v``.
    """
    kern = get_kernels(cfg.backend)
    km = compile_model(model)
    safe1, safe2 = _safe_levels(model, cfg.safe_stop)
    parts = run_paths(kern.survival_times,
                      (km, float(u), float(v), float(u_rate), float(v_rate), float(cfg.t_max),
                       safe1, safe2, cfg.seed, tag),
                      cfg.n_paths, cfg.workers)
    return np.concatenate(parts)


def estimate_survival(model: CoverageModel, u: float, v: float, cfg: SimConfig = SimConfig()
                      ) -> MCEstimate:
    """Fraction of paths started at ``(u, v)`` that survive up to ``cfg.t_max``."""
    if u < 0 or v < 0:
        raise ValueError("initial capitals must be nonnegative")
    times = ruin_times(model, cfg, u, v)
    return MCEstimate.from_count(int(np.isinf(times).sum()), cfg.n_paths)


def estimate_transforms(model: CoverageModel, s1: float, s2: float, cfg: SimConfig = SimConfig()
                        ) -> Tuple[MCEstimate, MCEstimate, MCEstimate]:
    """Estimate ``E phi(e_s1, e_s2)``, ``E phi(e_s1, 0)`` and ``E phi(0, e_s2)``.

    The three estimates use independent streams; every path draws its own
    exponential initial capital(s).
    """
    if not (s1 > 0 and s2 > 0):
        raise ValueError("transform arguments must be positive")
    out = []
    for tag, ur, vr in ((TAG_FHAT, s1, s2), (TAG_FHAT1, s1, 0.0), (TAG_FHAT2, 0.0, s2)):
        times = ruin_times(model, cfg, 0.0, 0.0, ur, vr, tag)
        out.append(MCEstimate.from_count(int(np.isinf(times).sum()), cfg.n_paths))
    return tuple(out)


@dataclass(frozen=True)
class HorizonCheck:
    short: MCEstimate
    long: MCEstimate

    @property
    def difference(self) -> float:
        return self.short.value - self.long.value

    def acceptable(self, z: float = 3.0) -> bool:
        """Survivors lost by doubling the horizon are within ``z`` binomial SEs."""
        d = self.difference
        se = math.sqrt(max(d, 1.0 / self.short.n) * (1 - d) / self.short.n)
        return d <= z * se


def horizon_check(model: CoverageModel, u: float, v: float, cfg: SimConfig = SimConfig()
                  ) -> HorizonCheck:
    """Compare the horizon ``t_max`` with ``2 t_max`` on coupled paths."""
    short = estimate_survival(model, u, v, cfg)
    long = estimate_survival(model, u, v, replace(cfg, t_max=2 * cfg.t_max))
    return HorizonCheck(short, long)
