"""Kernel backend selection, model compilation and deterministic path fan-out.

The compiled extension is used when importable; set ``MUTUALCOVER_PURE_PYTHON=1``
to force the pure-Python kernels.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from types import ModuleType
from typing import Callable, List, Optional

import numpy as np

from . import _pykernels
from .distributions import LawTable, build_law_table
from .risk_model import CoverageModel, RiskProcess, drift, safe_level

log = logging.getLogger(__name__)

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None

# stream tags keep unrelated experiments on disjoint Philox keys
TAG_SURVIVAL = 1
TAG_FHAT = 2
TAG_FHAT1 = 3
TAG_FHAT2 = 4
TAG_WH_L = 5
TAG_WH_R = 6
TAG_LADDER = 7
TAG_CLAIMS = 8

SEED_MASK = (1 << 64) - 1


def available_backends() -> List[str]:
    return ["python"] + (["cython"] if _ckernels is not None else [])


def get_kernels(name: Optional[str] = None) -> ModuleType:
    if name is None:
        if os.environ.get("MUTUALCOVER_PURE_PYTHON") or _ckernels is None:
            return _pykernels
        return _ckernels
    if name == "python":
        return _pykernels
    if name == "cython":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built")
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


BACKEND = get_kernels().NAME


@dataclass(frozen=True)
class KernelModel:
    laws: LawTable
    atom_cumw: np.ndarray
    atom_law1: np.ndarray
    atom_law2: np.ndarray
    lam: float
    c1: float
    c2: float
    r1: float
    r2: float
    r1_inf: bool
    r2_inf: bool


@dataclass(frozen=True)
class KernelLine:
    laws: LawTable
    lam: float
    c: float
    ladder_rate: float
    t_rej: float
    safe: float


def compile_model(model: CoverageModel) -> KernelModel:
    lam, joint = model.total_rate_and_law()
    laws, law1, law2, cumw = [], [], [], []
    acc = 0.0
    if joint is not None:
        atoms = [a for a in joint.atoms if a[0] > 0]
        for k, (w, a, b) in enumerate(atoms):
            acc += w
            cumw.append(1.0 if k == len(atoms) - 1 else acc)
            for law, ids in ((a, law1), (b, law2)):
                if law is None:
                    ids.append(-1)
                else:
                    ids.append(len(laws))
                    laws.append(law)
    r1_inf, r2_inf = math.isinf(model.r1), math.isinf(model.r2)
    return KernelModel(
        laws=build_law_table(laws),
        atom_cumw=np.asarray(cumw, dtype=np.float64),
        atom_law1=np.asarray(law1, dtype=np.intc),
        atom_law2=np.asarray(law2, dtype=np.intc),
        lam=float(lam),
        c1=float(model.c1),
        c2=float(model.c2),
        r1=0.0 if r1_inf else float(model.r1),
        r2=0.0 if r2_inf else float(model.r2),
        r1_inf=r1_inf,
        r2_inf=r2_inf,
    )


def compile_line(proc: RiskProcess, cutoff_claims: float = 1e4) -> KernelLine:
    """Kernel view of one line for ladder sampling.

    ``cutoff_claims`` mean inter-claim times is the hard cap on a parent path;
    paths also stop once the Lundberg bound makes later ruin negligible.
    """
    if proc.claim_rate == 0:
        empty = build_law_table([])
        return KernelLine(empty, 0.0, float(proc.premium), 0.0, 0.0, 0.0)
    mu = drift(proc)
    return KernelLine(
        laws=build_law_table([proc.claims]),
        lam=float(proc.claim_rate),
        c=float(proc.premium),
        ladder_rate=float(proc.premium - mu),
        t_rej=float(cutoff_claims / proc.claim_rate),
        safe=float(safe_level(proc)),
    )


def chunks(n: int, workers: int):
    """Contiguous path ranges; results do not depend on how they are split."""
    workers = max(1, min(workers, n)) if n else 1
    bounds = np.linspace(0, n, workers + 1).round().astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def default_workers() -> int:
    return os.cpu_count() or 1


def run_paths(fn: Callable, args: tuple, n: int, workers: Optional[int] = None) -> list:
    """Apply ``fn(*args, start, stop)`` over ``[0, n)`` and return results in order."""
    workers = default_workers() if workers is None else workers
    parts = chunks(n, workers)
    if len(parts) <= 1:
        return [fn(*args, a, b) for a, b in parts]
    with ProcessPoolExecutor(max_workers=len(parts)) as pool:
        futures = [pool.submit(fn, *args, a, b) for a, b in parts]
        return [f.result() for f in futures]
