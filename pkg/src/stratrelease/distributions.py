"""Mixed data measures: point masses plus non-overlapping uniform pieces.

Interval probabilities are exact and boundary-aware; atoms sitting on an
endpoint are counted only when that endpoint is inclusive, while uniform
pieces contribute overlap length times density regardless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from stratrelease.errors import StratReleaseError

MASS_TOL = 1e-9
RNG_ALGORITHM = "numpy.random.Generator(PCG64)"


@dataclass(frozen=True)
class DataDistribution:
    atoms: tuple = ()
    uniform_pieces: tuple = ()

    def __post_init__(self):
        atoms = tuple((_loc(a), float(p)) for a, p in self.atoms)
        pieces = tuple((float(lo), float(hi), float(p)) for lo, hi, p in self.uniform_pieces)
        masses = [p for _, p in atoms] + [p for *_, p in pieces]
        if not masses:
            raise StratReleaseError("distribution has no atoms and no pieces")
        if any(p < 0 or not math.isfinite(p) for p in masses):
            raise StratReleaseError("distribution masses must be finite and non-negative")
        if abs(math.fsum(masses) - 1.0) > MASS_TOL:
            raise StratReleaseError(f"distribution masses sum to {math.fsum(masses)}, not 1")
        locs = [a for a, _ in atoms]
        if len(set(locs)) != len(locs):
            raise StratReleaseError("atom locations must be distinct")
        ordered = sorted(pieces)
        for lo, hi, _ in ordered:
            if not lo < hi:
                raise StratReleaseError(f"uniform piece [{lo}, {hi}] is empty")
        for (_, hi1, _), (lo2, _, _) in zip(ordered, ordered[1:]):
            if lo2 < hi1:
                raise StratReleaseError("uniform pieces overlap")
        if pieces and any(isinstance(a, tuple) for a in locs):
            raise StratReleaseError("multi-dimensional atoms cannot be mixed with uniform pieces")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "uniform_pieces", tuple(ordered))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> DataDistribution:
        return cls(uniform_pieces=((lo, hi, 1.0),))

    @classmethod
    def point_masses(cls, locations, masses) -> DataDistribution:
        return cls(atoms=tuple(zip(locations, masses)))

    @property
    def atom_only(self) -> bool:
        return not self.uniform_pieces

    @property
    def support_bounds(self) -> tuple:
        los = [a for a, p in self.atoms if p > 0] + [lo for lo, _, p in self.uniform_pieces if p > 0]
        his = [a for a, p in self.atoms if p > 0] + [hi for _, hi, p in self.uniform_pieces if p > 0]
        return min(los), max(his)

    def atom_mass(self, x) -> float:
        return math.fsum(p for a, p in self.atoms if a == x)


def _loc(a):
    if isinstance(a, (list, tuple)):
        return tuple(float(v) for v in a)
    return float(a)


def interval_prob(
    dist: DataDistribution,
    lo: float,
    hi: float,
    lo_inclusive: bool = True,
    hi_inclusive: bool = True,
) -> float:
    """Exact mass of the interval between ``lo`` and ``hi``; 0 when ``lo > hi``."""
    if lo > hi:
        return 0.0
    terms = []
    for a, p in dist.atoms:
        if isinstance(a, tuple):
            raise TypeError("interval_prob is defined for one-dimensional distributions only")
        if lo < a < hi or (a == lo and lo_inclusive and (a < hi or hi_inclusive)) or (
            a == hi and hi_inclusive and (a > lo or lo_inclusive)
        ):
            terms.append(p)
    for plo, phi, p in dist.uniform_pieces:
        overlap = min(hi, phi) - max(lo, plo)
        if overlap > 0:
            terms.append(p * overlap / (phi - plo))
    return min(1.0, math.fsum(terms))


def sample(dist: DataDistribution, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` i.i.d. points; deterministic given ``seed``.

    Returns shape ``(count,)`` for one-dimensional distributions and
    ``(count, d)`` when atoms are d-dimensional points.
    """
    if count < 0:
        raise StratReleaseError("count must be non-negative")
    rng = np.random.default_rng(seed)
    comps = [("atom", a, None, p) for a, p in dist.atoms] + [
        ("piece", lo, hi, p) for lo, hi, p in dist.uniform_pieces
    ]
    probs = np.array([c[3] for c in comps], dtype=float)
    probs = probs / probs.sum()
    which = rng.choice(len(comps), size=count, p=probs)
    u = rng.random(count)
    multi = any(isinstance(a, tuple) for a, _ in dist.atoms)
    if multi:
        locs = np.array([c[1] for c in comps], dtype=float)
        return locs[which]
    out = np.empty(count, dtype=float)
    for ci, (tag, a, b, _) in enumerate(comps):
        mask = which == ci
        out[mask] = a if tag == "atom" else a + (b - a) * u[mask]
    return out
