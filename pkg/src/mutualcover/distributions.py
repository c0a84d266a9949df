"""Claim-size laws with closed-form Laplace transforms.

Every law here is nonnegative, has a finite mean and an analytic transform
``E exp(-s C)`` valid on ``Re(s) >= 0``. Bivariate claims are finite mixtures
of product atoms, each atom drawing its two coordinates independently (a
missing coordinate is a point mass at zero).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DomainError

Number = Union[float, complex]

# kind codes shared with the simulation kernels
KIND_DET = 0
KIND_EXP = 1
KIND_ERLANG = 2

_WEIGHT_TOL = 1e-12


def _check_halfplane(s: Number) -> None:
    if complex(s).real < 0:
        raise DomainError(f"transform argument must have Re(s) >= 0, got {s!r}")


def _exp(z: Number) -> Number:
    return cmath.exp(z) if isinstance(z, complex) else math.exp(z)


def _expm1(z: Number) -> Number:
    if not isinstance(z, complex):
        return math.expm1(z)
    if abs(z) < 1e-4:
        return z * (1 + z / 2 * (1 + z / 3 * (1 + z / 4)))
    return cmath.exp(z) - 1.0


class ClaimDistribution:
    """Base class for univariate claim laws."""

    def mean(self) -> float:
        raise NotImplementedError

    def second_moment(self) -> float:
        raise NotImplementedError

    def variance(self) -> float:
        return self.second_moment() - self.mean() ** 2

    def lt(self, s: Number) -> Number:
        """Laplace transform ``E exp(-s C)`` for ``Re(s) >= 0``."""
        _check_halfplane(s)
        return self._lt(s)

    def dlt(self, s: Number) -> Number:
        """Derivative of the transform, ``-E[C exp(-s C)]``."""
        _check_halfplane(s)
        return self._dlt(s)

    def mgf(self, t: float) -> float:
        """``E exp(t C)`` for real ``t``; ``inf`` where it diverges."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def components(self) -> Iterator[Tuple[float, "ClaimDistribution"]]:
        """Flattened (weight, atomic law) pairs."""
        yield 1.0, self

    def _lt(self, s):
        raise NotImplementedError

    def _dlt(self, s):
        raise NotImplementedError

    def _tail(self, s):
        """``1 - E exp(-s C)`` without cancellation near ``s = 0``."""
        return 1.0 - self._lt(s)


@dataclass(frozen=True)
class Deterministic(ClaimDistribution):
    value: float

    def __post_init__(self):
        if not (self.value > 0 and math.isfinite(self.value)):
            raise ValueError(f"deterministic claim size must be positive, got {self.value}")

    def mean(self):
        return float(self.value)

    def second_moment(self):
        return float(self.value) ** 2

    def _lt(self, s):
        return _exp(-s * self.value)

    def _dlt(self, s):
        return -self.value * _exp(-s * self.value)

    def _tail(self, s):
        return -_expm1(-s * self.value)

    def mgf(self, t):
        return math.exp(t * self.value)

    def sample(self, rng, size=None):
        if size is None:
            return float(self.value)
        return np.full(size, float(self.value))


@dataclass(frozen=True)
class Exponential(ClaimDistribution):
    rate: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError(f"exponential rate must be positive, got {self.rate}")

    def mean(self):
        return 1.0 / self.rate

    def second_moment(self):
        return 2.0 / self.rate**2

    def _lt(self, s):
        return self.rate / (self.rate + s)

    def _dlt(self, s):
        return -self.rate / (self.rate + s) ** 2

    def _tail(self, s):
        return s / (self.rate + s)

    def mgf(self, t):
        return self.rate / (self.rate - t) if t < self.rate else math.inf

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size)


@dataclass(frozen=True)
class Erlang(ClaimDistribution):
    shape: int
    rate: float

    def __post_init__(self):
        if int(self.shape) != self.shape or self.shape < 1:
            raise ValueError(f"Erlang shape must be a positive integer, got {self.shape}")
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError(f"Erlang rate must be positive, got {self.rate}")

    def mean(self):
        return self.shape / self.rate

    def second_moment(self):
        return self.shape * (self.shape + 1) / self.rate**2

    def _lt(self, s):
        return (self.rate / (self.rate + s)) ** self.shape

    def _dlt(self, s):
        k, th = self.shape, self.rate
        return -k * th**k / (th + s) ** (k + 1)

    def _tail(self, s):
        # 1 - y^k = (1 - y)(1 + y + ... + y^(k-1)) with y = rate / (rate + s)
        y = self.rate / (self.rate + s)
        x = s / (self.rate + s)
        acc, term = 0.0, 1.0
        for _ in range(self.shape):
            acc += term
            term *= y
        return x * acc

    def mgf(self, t):
        return (self.rate / (self.rate - t)) ** self.shape if t < self.rate else math.inf

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, 1.0 / self.rate, size)


@dataclass(frozen=True)
class FiniteMixture(ClaimDistribution):
    parts: Tuple[Tuple[float, ClaimDistribution], ...]

    def __post_init__(self):
        parts = tuple((float(w), d) for w, d in self.parts)
        object.__setattr__(self, "parts", parts)
        if not parts:
            raise ValueError("mixture needs at least one component")
        if any(w < 0 for w, _ in parts):
            raise ValueError("mixture weights must be nonnegative")
        total = sum(w for w, _ in parts)
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"mixture weights sum to {total}, expected 1")
        if all(w == 0 for w, _ in parts):
            raise ValueError("mixture has no positive weight")

    def mean(self):
        return sum(w * d.mean() for w, d in self.parts)

    def second_moment(self):
        return sum(w * d.second_moment() for w, d in self.parts)

    def _lt(self, s):
        return sum(w * d._lt(s) for w, d in self.parts)

    def _dlt(self, s):
        return sum(w * d._dlt(s) for w, d in self.parts)

    def _tail(self, s):
        return sum(w * d._tail(s) for w, d in self.parts)

    def mgf(self, t):
        return sum(w * d.mgf(t) for w, d in self.parts if w > 0)

    def components(self):
        for w, d in self.parts:
            for w2, atom in d.components():
                yield w * w2, atom

    def sample(self, rng, size=None):
        weights = np.array([w for w, _ in self.parts])
        if size is None:
            k = rng.choice(len(self.parts), p=weights)
            return float(self.parts[k][1].sample(rng))
        idx = rng.choice(len(self.parts), size=size, p=weights)
        out = np.empty(size)
        for k, (_, d) in enumerate(self.parts):
            mask = idx == k
            n = int(mask.sum())
            if n:
                out[mask] = d.sample(rng, n)
        return out


@dataclass(frozen=True)
class JointClaimDistribution:
    """Bivariate claim law as a mixture of independent product atoms.

    ``atoms`` holds ``(weight, law1, law2)``; ``None`` stands for the point
    mass at zero in that coordinate.
    """

    atoms: Tuple[Tuple[float, Optional[ClaimDistribution], Optional[ClaimDistribution]], ...]

    def __post_init__(self):
        atoms = tuple((float(w), a, b) for w, a, b in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if not atoms:
            raise ValueError("joint law needs at least one atom")
        if any(w < 0 for w, _, _ in atoms):
            raise ValueError("atom weights must be nonnegative")
        total = sum(w for w, _, _ in atoms)
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"atom weights sum to {total}, expected 1")
        for w, a, b in atoms:
            if a is None and b is None and w > 0:
                raise ValueError("joint claim law must not put mass at (0, 0)")

    @classmethod
    def independent(cls, rate1: float, law1: Optional[ClaimDistribution],
                    rate2: float, law2: Optional[ClaimDistribution]) -> "JointClaimDistribution":
        """Two independent claim streams merged into one (total rate ``rate1 + rate2``)."""
        total = rate1 + rate2
        if total <= 0:
            raise ValueError("at least one stream must have a positive rate")
        atoms = []
        if rate1 > 0:
            atoms.append((rate1 / total, law1, None))
        if rate2 > 0:
            atoms.append((rate2 / total, None, law2))
        return cls(tuple(atoms))

    def lt(self, s1: Number, s2: Number) -> Number:
        _check_halfplane(s1)
        _check_halfplane(s2)
        return sum(w * (1.0 if a is None else a._lt(s1)) * (1.0 if b is None else b._lt(s2))
                   for w, a, b in self.atoms)

    def tail(self, s1: Number, s2: Number) -> Number:
        """``1 - lt(s1, s2)``, accurate near the origin."""
        _check_halfplane(s1)
        _check_halfplane(s2)
        total = 0.0
        for w, a, b in self.atoms:
            ta = 0.0 if a is None else a._tail(s1)
            tb = 0.0 if b is None else b._tail(s2)
            total += w * (ta + tb - ta * tb)
        return total

    def dlt(self, s1: Number, s2: Number, coord: int) -> Number:
        """Partial derivative of :meth:`lt` in coordinate ``coord`` (1 or 2)."""
        _check_halfplane(s1)
        _check_halfplane(s2)
        total = 0.0
        for w, a, b in self.atoms:
            if coord == 1:
                if a is None:
                    continue
                total += w * a._dlt(s1) * (1.0 if b is None else b._lt(s2))
            else:
                if b is None:
                    continue
                total += w * (1.0 if a is None else a._lt(s1)) * b._dlt(s2)
        return total

    def marginal(self, coord: int) -> Tuple[float, Optional[ClaimDistribution]]:
        """Probability that coordinate ``coord`` is nonzero, and its conditional law."""
        parts = [(w, a if coord == 1 else b) for w, a, b in self.atoms]
        parts = [(w, d) for w, d in parts if d is not None and w > 0]
        p = sum(w for w, _ in parts)
        if p == 0:
            return 0.0, None
        if len(parts) == 1:
            return p, parts[0][1]
        return p, FiniteMixture(tuple((w / p, d) for w, d in parts))

    def mean(self, coord: int) -> float:
        p, law = self.marginal(coord)
        return 0.0 if law is None else p * law.mean()

    def sample(self, rng: np.random.Generator, size: int):
        weights = np.array([w for w, _, _ in self.atoms])
        idx = rng.choice(len(self.atoms), size=size, p=weights)
        x = np.zeros(size)
        y = np.zeros(size)
        for k, (_, a, b) in enumerate(self.atoms):
            mask = idx == k
            n = int(mask.sum())
            if not n:
                continue
            if a is not None:
                x[mask] = a.sample(rng, n)
            if b is not None:
                y[mask] = b.sample(rng, n)
        return x, y


# --- config round trip -------------------------------------------------------

def from_dict(d: dict) -> ClaimDistribution:
    """Build a law from a tagged record such as ``{"type": "exponential", "rate": 2}``."""
    kind = d.get("type")
    extra = set(d) - {"type", "value", "rate", "shape", "parts"}
    if extra:
        raise ValueError(f"unknown keys in claim law: {sorted(extra)}")
    if kind == "deterministic":
        return Deterministic(float(d["value"]))
    if kind == "exponential":
        return Exponential(float(d["rate"]))
    if kind == "erlang":
        return Erlang(int(d["shape"]), float(d["rate"]))
    if kind == "mixture":
        return FiniteMixture(tuple((float(p["weight"]), from_dict(p["law"])) for p in d["parts"]))
    raise ValueError(f"unknown claim law type {kind!r}")


def to_dict(dist: ClaimDistribution) -> dict:
    if isinstance(dist, Deterministic):
        return {"type": "deterministic", "value": dist.value}
    if isinstance(dist, Exponential):
        return {"type": "exponential", "rate": dist.rate}
    if isinstance(dist, Erlang):
        return {"type": "erlang", "shape": dist.shape, "rate": dist.rate}
    if isinstance(dist, FiniteMixture):
        return {"type": "mixture", "parts": [{"weight": w, "law": to_dict(d)} for w, d in dist.parts]}
    raise TypeError(type(dist))


# --- flat tables for the simulation kernels ----------------------------------

@dataclass(frozen=True)
class LawTable:
    """Flattened mixture components of several laws, indexable by law id."""

    kind: np.ndarray
    shape: np.ndarray
    param: np.ndarray
    cumw: np.ndarray
    start: np.ndarray
    end: np.ndarray


def build_law_table(laws: Sequence[ClaimDistribution]) -> LawTable:
    kind, shape, param, cumw, start, end = [], [], [], [], [], []
    for law in laws:
        start.append(len(kind))
        comps = [(w, a) for w, a in law.components() if w > 0]
        acc = 0.0
        for i, (w, atom) in enumerate(comps):
            acc += w
            cumw.append(1.0 if i == len(comps) - 1 else acc)
            if isinstance(atom, Deterministic):
                kind.append(KIND_DET); shape.append(1); param.append(atom.value)
            elif isinstance(atom, Exponential):
                kind.append(KIND_EXP); shape.append(1); param.append(atom.rate)
            elif isinstance(atom, Erlang):
                kind.append(KIND_ERLANG); shape.append(atom.shape); param.append(atom.rate)
            else:
                raise TypeError(f"cannot tabulate {type(atom).__name__}")
        end.append(len(kind))
    return LawTable(
        kind=np.asarray(kind, dtype=np.intc),
        shape=np.asarray(shape, dtype=np.intc),
        param=np.asarray(param, dtype=np.float64),
        cumw=np.asarray(cumw, dtype=np.float64),
        start=np.asarray(start, dtype=np.intc),
        end=np.asarray(end, dtype=np.intc),
    )
