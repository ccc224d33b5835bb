"""Projection oracle: cheapest point inside an intersection of classifier regions.

A region is described by two index sets into a classifier list: every
classifier in ``positive`` must accept the point, every classifier in
``negative`` must reject it.  Negative regions are open (acceptance is
inclusive at the boundary), so when the closest point of the closure sits
on a negative boundary it is pulled a tiny distance into the open side and
the projection is flagged as retracted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from stratrelease import geometry
from stratrelease.core import (
    AbsoluteCost,
    Box,
    CostTable,
    FiniteDomain,
    Interval,
    LinearClassifier,
    PNormCost,
    TableClassifier,
    ThresholdClassifier,
    classifier_kind,
)
from stratrelease.errors import StratReleaseError

RETRACT_REL = 1e-9
# rejected by LinearClassifier iff normalized margin < -EQ_TOL; aim well past that
STRICT_MARGIN = 1e-10


@dataclass(frozen=True)
class Region:
    positive: frozenset = frozenset()
    negative: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "positive", frozenset(self.positive))
        object.__setattr__(self, "negative", frozenset(self.negative))
        if self.positive & self.negative:
            raise StratReleaseError(f"indices both required and forbidden: {sorted(self.positive & self.negative)}")


@dataclass(frozen=True)
class Projection:
    point: object
    cost: float
    feasible: bool
    retracted: bool = False
    unbounded: bool = False

    @classmethod
    def infeasible(cls) -> Projection:
        return cls(None, math.inf, False)


@dataclass
class OracleCounter:
    """Explicit accumulator for oracle calls; callers own it."""

    calls: int = 0

    def tick(self, n: int = 1):
        self.calls += n


def _tick(counter):
    if counter is not None:
        counter.tick()


def _threshold(c) -> float:
    return c.threshold if isinstance(c, ThresholdClassifier) else float(c)


def project_1d(
    x: float,
    classifiers: Sequence,
    region: Region,
    cost: AbsoluteCost,
    eps: float = RETRACT_REL,
    counter: OracleCounter | None = None,
) -> Projection:
    """Closest point of ``[max positive threshold, min negative threshold)`` to ``x``."""
    if not isinstance(cost, AbsoluteCost):
        raise StratReleaseError("project_1d needs the abs1d cost")
    _tick(counter)
    ts = [_threshold(c) for c in classifiers]
    lo = max((ts[i] for i in region.positive), default=-math.inf)
    hi = min((ts[i] for i in region.negative), default=math.inf)
    if not lo < hi:
        return Projection.infeasible()
    x = float(x)
    retracted = False
    if x < lo:
        z = lo
    elif x >= hi:
        z = hi - eps
        if z < lo:
            z = (lo + hi) / 2
        retracted = True
    else:
        z = x
    return Projection(z, cost(x, z), True, retracted)


def project_2d(
    x,
    classifiers: Sequence[LinearClassifier],
    region: Region,
    bbox: Box,
    cost: PNormCost,
    counter: OracleCounter | None = None,
) -> Projection:
    """Projection onto a polygonal region clipped to the inflated domain box."""
    if not isinstance(cost, PNormCost):
        raise StratReleaseError("project_2d needs a p-norm cost")
    _tick(counter)
    big = bbox.inflated()
    poly = big.polygon()
    for i in sorted(region.positive):
        c = classifiers[i]
        poly = geometry.clip(poly, c.weights, c.bias, True)
    for i in sorted(region.negative):
        c = classifiers[i]
        poly = geometry.clip(poly, c.weights, c.bias, False)
    if not poly:
        return Projection.infeasible()
    negs = [classifiers[i] for i in sorted(region.negative)]
    centre = geometry.vertex_mean(poly)

    def worst_neg(z):
        return max((geometry.normalized_margin(c.weights, c.bias, z) for c in negs), default=-math.inf)

    if negs and worst_neg(centre) > -STRICT_MARGIN:
        return Projection.infeasible()
    x = (float(x[0]), float(x[1]))
    z, _ = geometry.nearest_point(poly, x, cost.p)
    retracted = False
    if negs and worst_neg(z) > -STRICT_MARGIN:
        z = _retract(z, centre, negs, RETRACT_REL * bbox.diameter)
        retracted = True
    unbounded = _on_box_edge(z, big) and not any(
        abs(geometry.normalized_margin(classifiers[i].weights, classifiers[i].bias, z)) <= 1e-9
        for i in region.positive | region.negative
    )
    return Projection(z, cost(x, z), True, retracted, unbounded)


def _retract(z, centre, negs, eps):
    gap = math.hypot(centre[0] - z[0], centre[1] - z[1])
    t = min(1.0, eps / gap) if gap > 0 else 1.0
    for c in negs:
        mz = geometry.normalized_margin(c.weights, c.bias, z)
        mc = geometry.normalized_margin(c.weights, c.bias, centre)
        if mz > -STRICT_MARGIN:
            t = max(t, min(1.0, 2 * (mz + STRICT_MARGIN) / (mz - mc)))
    return (z[0] + t * (centre[0] - z[0]), z[1] + t * (centre[1] - z[1]))


def _on_box_edge(z, box: Box, tol: float = 1e-9) -> bool:
    return (
        abs(z[0] - box.lo[0]) <= tol
        or abs(z[0] - box.hi[0]) <= tol
        or abs(z[1] - box.lo[1]) <= tol
        or abs(z[1] - box.hi[1]) <= tol
    )


def project_table(
    x,
    classifiers: Sequence[TableClassifier],
    region: Region,
    domain: FiniteDomain,
    cost: CostTable,
    counter: OracleCounter | None = None,
) -> Projection:
    """Cheapest reachable domain point with the required acceptance pattern."""
    _tick(counter)
    best = None
    for z in domain.points:
        if all(classifiers[i](z) for i in region.positive) and not any(classifiers[i](z) for i in region.negative):
            c = cost(x, z)
            if math.isfinite(c) and (best is None or (c, z) < best):
                best = (c, z)
    if best is None:
        return Projection.infeasible()
    return Projection(best[1], best[0], True)


def make_oracle(classifiers: Sequence, cost, domain=None, counter: OracleCounter | None = None):
    """Bind a classifier list, cost and domain into ``oracle(x, region) -> Projection``."""
    kind = classifier_kind(classifiers[0]) if classifiers else "threshold"
    if kind == "threshold":
        eps = RETRACT_REL * (domain.diameter if isinstance(domain, Interval) else 1.0)
        return lambda x, region: project_1d(x, classifiers, region, cost, eps, counter)
    if kind == "linear":
        if not isinstance(domain, Box):
            raise StratReleaseError("planar projections need a bounding box")
        return lambda x, region: project_2d(x, classifiers, region, domain, cost, counter)
    if not isinstance(domain, FiniteDomain):
        raise StratReleaseError("table projections need a finite domain")
    return lambda x, region: project_table(x, classifiers, region, domain, cost, counter)
