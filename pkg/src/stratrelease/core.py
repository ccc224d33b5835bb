"""Domain types: classifiers, priors, posteriors, costs, instances."""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import cached_property
from itertools import accumulate
from typing import Iterable, Sequence, Union

from stratrelease.distributions import DataDistribution
from stratrelease.errors import DeployedExcludedError, EmptyReleaseError, StratReleaseError

PROB_TOL = 1e-9
EQ_TOL = 1e-12


@dataclass(frozen=True)
class ThresholdClassifier:
    """``h(x) = 1[x >= threshold]``; the boundary point is accepted."""

    threshold: float

    def __post_init__(self):
        object.__setattr__(self, "threshold", float(self.threshold))
        if not math.isfinite(self.threshold):
            raise StratReleaseError(f"threshold must be finite, got {self.threshold}")

    def __call__(self, x) -> bool:
        return x >= self.threshold


@dataclass(frozen=True)
class LinearClassifier:
    """``h(x) = 1[weights . x + bias >= 0]``.

    Acceptance allows a margin of ``-EQ_TOL * |weights|`` so that points
    produced by projecting onto the boundary line are accepted despite
    rounding.
    """

    weights: tuple
    bias: float

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))
        if not any(w):
            raise StratReleaseError("linear classifier with zero weight vector")
        if not all(math.isfinite(v) for v in w + (self.bias,)):
            raise StratReleaseError("linear classifier parameters must be finite")

    @property
    def norm(self) -> float:
        return math.hypot(*self.weights)

    def margin(self, x) -> float:
        return sum(wi * xi for wi, xi in zip(self.weights, x)) + self.bias

    def __call__(self, x) -> bool:
        return self.margin(x) >= -EQ_TOL * self.norm


@dataclass(frozen=True)
class TableClassifier:
    """Classifier over a finite domain, given by the set of points it accepts."""

    accepts: frozenset

    def __post_init__(self):
        object.__setattr__(self, "accepts", frozenset(self.accepts))

    def __call__(self, x) -> bool:
        return x in self.accepts


Classifier = Union[ThresholdClassifier, LinearClassifier, TableClassifier]


def classifier_kind(clf) -> str:
    if isinstance(clf, ThresholdClassifier):
        return "threshold"
    if isinstance(clf, LinearClassifier):
        return "linear"
    if isinstance(clf, TableClassifier):
        return "table"
    raise TypeError(f"not a classifier: {clf!r}")


# -- costs -------------------------------------------------------------------


@dataclass(frozen=True)
class AbsoluteCost:
    """``c(x, z) = k |z - x|`` on the real line."""

    k: float = 1.0
    kind = "abs1d"

    def __post_init__(self):
        object.__setattr__(self, "k", float(self.k))
        if not (self.k > 0 and math.isfinite(self.k)):
            raise StratReleaseError(f"cost scale must be positive, got {self.k}")

    def __call__(self, x, z) -> float:
        return self.k * abs(z - x)


@dataclass(frozen=True)
class PNormCost:
    """``c(x, z) = ||x - z||_p`` in the plane, for p in {1, 2, inf}."""

    p: float = 2.0
    kind = "pnorm2d"

    def __post_init__(self):
        p = float(self.p)
        if p not in (1.0, 2.0, math.inf):
            raise StratReleaseError(f"p must be 1, 2 or inf, got {self.p}")
        object.__setattr__(self, "p", p)

    def __call__(self, x, z) -> float:
        dx, dy = z[0] - x[0], z[1] - x[1]
        if self.p == 2.0:
            return math.hypot(dx, dy)
        if self.p == 1.0:
            return abs(dx) + abs(dy)
        return max(abs(dx), abs(dy))


@dataclass(frozen=True)
class CostTable:
    """Explicit cost between points of a finite domain.

    ``c(x, x) = 0``; pairs not listed cost ``+inf``.  Entries need not be
    symmetric or satisfy the triangle inequality.
    """

    entries: tuple
    kind = "table"
    _lookup: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if isinstance(self.entries, dict):
            triples = tuple((a, b, float(c)) for (a, b), c in self.entries.items())
        else:
            triples = tuple((a, b, float(c)) for a, b, c in self.entries)
        for a, b, c in triples:
            if c < 0 or math.isnan(c):
                raise StratReleaseError(f"negative cost for ({a}, {b})")
            if a == b and c != 0:
                raise StratReleaseError(f"c(x, x) must be 0, got {c} at {a}")
        object.__setattr__(self, "entries", triples)
        object.__setattr__(self, "_lookup", {(a, b): c for a, b, c in triples})

    def __call__(self, x, z) -> float:
        if x == z:
            return 0.0
        return self._lookup.get((x, z), math.inf)


CostSpec = Union[AbsoluteCost, PNormCost, CostTable]


# -- domains -----------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if not self.lo < self.hi:
            raise StratReleaseError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def diameter(self) -> float:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 2 or len(hi) != 2:
            raise StratReleaseError("only two-dimensional boxes are supported")
        if not (lo[0] < hi[0] and lo[1] < hi[1]):
            raise StratReleaseError(f"degenerate box {lo} .. {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def diameter(self) -> float:
        return math.hypot(self.hi[0] - self.lo[0], self.hi[1] - self.lo[1])

    def contains(self, x) -> bool:
        return all(l <= v <= h for l, v, h in zip(self.lo, x, self.hi))

    def inflated(self, factor: float = 2.0, margin: float = 1.0) -> Box:
        """Box with the same centre, ``factor`` times the size plus ``margin`` on every side."""
        cx = [(l + h) / 2 for l, h in zip(self.lo, self.hi)]
        half = [factor * (h - l) / 2 + margin for l, h in zip(self.lo, self.hi)]
        return Box(tuple(c - r for c, r in zip(cx, half)), tuple(c + r for c, r in zip(cx, half)))

    def polygon(self) -> list:
        (x0, y0), (x1, y1) = self.lo, self.hi
        return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]


@dataclass(frozen=True)
class FiniteDomain:
    points: tuple

    def __post_init__(self):
        pts = tuple(self.points)
        if not pts:
            raise StratReleaseError("finite domain needs at least one point")
        if len(set(pts)) != len(pts):
            raise StratReleaseError("finite domain points must be distinct")
        object.__setattr__(self, "points", pts)

    def contains(self, x) -> bool:
        return x in self.points


Domain = Union[Interval, Box, FiniteDomain]


# -- beliefs -----------------------------------------------------------------


@dataclass(frozen=True)
class Prior:
    """Finite prior over classifiers.  Threshold supports are kept ascending."""

    support: tuple
    weights: tuple

    def __post_init__(self):
        support = tuple(self.support)
        weights = tuple(float(w) for w in self.weights)
        if not support:
            raise StratReleaseError("prior support is empty")
        if len(support) != len(weights):
            raise StratReleaseError("support and weights differ in length")
        if any(not (w > 0) for w in weights):
            raise StratReleaseError("prior weights must be positive")
        if abs(math.fsum(weights) - 1.0) > PROB_TOL:
            raise StratReleaseError(f"prior weights sum to {math.fsum(weights)}, not 1")
        if len(set(support)) != len(support):
            raise StratReleaseError("prior support entries must be distinct")
        kinds = {classifier_kind(c) for c in support}
        if len(kinds) != 1:
            raise StratReleaseError(f"mixed classifier kinds in support: {sorted(kinds)}")
        if kinds == {"threshold"}:
            ts = [c.threshold for c in support]
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise StratReleaseError("threshold support must be strictly ascending; use Prior.from_thresholds")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, support: Sequence) -> Prior:
        n = len(support)
        return cls(tuple(support), (1.0 / n,) * n)

    @classmethod
    def from_thresholds(cls, thresholds: Sequence[float], weights: Sequence[float] | None = None) -> Prior:
        """Build a threshold prior, sorting the support ascending (weights follow)."""
        ts = [float(t) for t in thresholds]
        ws = [1.0 / len(ts)] * len(ts) if weights is None else [float(w) for w in weights]
        order = sorted(range(len(ts)), key=ts.__getitem__)
        return cls(tuple(ThresholdClassifier(ts[i]) for i in order), tuple(ws[i] for i in order))

    @property
    def n(self) -> int:
        return len(self.support)

    @property
    def kind(self) -> str:
        return classifier_kind(self.support[0])

    @property
    def thresholds(self) -> tuple:
        return tuple(c.threshold for c in self.support)

    @property
    def is_uniform(self) -> bool:
        w0 = self.weights[0]
        return all(abs(w - w0) <= PROB_TOL for w in self.weights)

    def index(self, clf) -> int:
        try:
            return self.support.index(clf)
        except ValueError:
            raise DeployedExcludedError(f"{clf!r} is not in the prior support") from None


@dataclass(frozen=True)
class UniformIntervalPrior:
    """Continuous uniform prior over thresholds in ``[a, b]``."""

    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if not self.a <= self.b:
            raise StratReleaseError(f"prior interval [{self.a}, {self.b}] is empty")

    kind = "threshold"


@dataclass(frozen=True)
class Posterior:
    """Normalised belief over a released subset of the prior support.

    ``released[i]`` is the prior-support index of ``classifiers[i]``.
    """

    classifiers: tuple
    weights: tuple
    released: tuple

    def __post_init__(self):
        object.__setattr__(self, "classifiers", tuple(self.classifiers))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "released", tuple(int(i) for i in self.released))
        if not (len(self.classifiers) == len(self.weights) == len(self.released)) or not self.classifiers:
            raise StratReleaseError("posterior fields must be non-empty and of equal length")
        if abs(math.fsum(self.weights) - 1.0) > PROB_TOL:
            raise StratReleaseError("posterior weights must sum to 1")

    @classmethod
    def over(cls, classifiers: Sequence, weights: Sequence[float] | None = None) -> Posterior:
        """Posterior given directly (released indices are positions in ``classifiers``)."""
        if classifiers and isinstance(classifiers[0], (int, float)):
            classifiers = [ThresholdClassifier(t) for t in classifiers]
        n = len(classifiers)
        ws = [1.0 / n] * n if weights is None else list(weights)
        if classifiers and classifier_kind(classifiers[0]) == "threshold":
            order = sorted(range(n), key=lambda i: classifiers[i].threshold)
            return cls(tuple(classifiers[i] for i in order), tuple(ws[i] for i in order), tuple(order))
        return cls(tuple(classifiers), tuple(ws), tuple(range(n)))

    @property
    def n(self) -> int:
        return len(self.classifiers)

    @property
    def kind(self) -> str:
        return classifier_kind(self.classifiers[0])

    @cached_property
    def thresholds(self) -> tuple:
        return tuple(c.threshold for c in self.classifiers)

    @cached_property
    def cumulative(self) -> tuple:
        """Prefix sums of weights; ``cumulative[m]`` is the mass of the first m classifiers."""
        return (0.0,) + tuple(accumulate(self.weights))

    def accepted(self, z) -> tuple:
        """Local indices of classifiers accepting ``z``."""
        if self.kind == "threshold":
            return tuple(range(bisect_right(self.thresholds, z)))
        return tuple(i for i, c in enumerate(self.classifiers) if c(z))

    def acceptance_mass(self, z) -> float:
        """``Pr_{h' ~ posterior}[h'(z) = 1]``."""
        if self.kind == "threshold":
            return self.cumulative[bisect_right(self.thresholds, z)]
        return math.fsum(w for w, c in zip(self.weights, self.classifiers) if c(z))

    def mass_of(self, local_indices: Iterable[int]) -> float:
        return math.fsum(self.weights[i] for i in local_indices)


def restrict_posterior(prior: Prior, released: Iterable[int], deployed: int | None = None) -> Posterior:
    """Condition ``prior`` on the released subset (indices into the prior support).

    ``deployed`` is the index of the learner's classifier; when given it
    must be among the released indices.
    """
    idx = sorted(set(int(i) for i in released))
    if any(i < 0 or i >= prior.n for i in idx):
        raise StratReleaseError(f"released index out of range: {idx}")
    if deployed is not None and deployed not in idx:
        raise DeployedExcludedError(f"deployed classifier {deployed} not in released set {idx}")
    mass = math.fsum(prior.weights[i] for i in idx)
    if not idx or mass <= 0:
        raise EmptyReleaseError("released set has zero prior mass")
    return Posterior(
        tuple(prior.support[i] for i in idx),
        tuple(prior.weights[i] / mass for i in idx),
        tuple(idx),
    )


def agent_utility(x, x_new, posterior: Posterior, cost: CostSpec) -> float:
    """Acceptance probability at ``x_new`` under the posterior, minus the cost of moving there."""
    return posterior.acceptance_mass(x_new) - cost(x, x_new)


# -- instance ----------------------------------------------------------------


@dataclass(frozen=True)
class Instance:
    domain: Domain
    ground_truth: Classifier
    deployed: Classifier
    prior: Union[Prior, UniformIntervalPrior]
    data: DataDistribution
    cost: CostSpec

    def __post_init__(self):
        if isinstance(self.prior, UniformIntervalPrior):
            if not isinstance(self.deployed, ThresholdClassifier):
                raise StratReleaseError("interval priors need a threshold classifier")
            if not self.prior.a <= self.deployed.threshold <= self.prior.b:
                raise DeployedExcludedError("deployed threshold lies outside the prior interval")
        else:
            self.prior.index(self.deployed)
            if classifier_kind(self.ground_truth) != self.prior.kind:
                raise StratReleaseError("ground truth and support are of different kinds")
        if isinstance(self.deployed, ThresholdClassifier):
            if not isinstance(self.domain, Interval):
                raise StratReleaseError("threshold instances need an interval domain")
            if not isinstance(self.cost, AbsoluteCost):
                raise StratReleaseError("threshold instances need the abs1d cost")
            if self.deployed.threshold < self.ground_truth.threshold:
                raise StratReleaseError("deployed threshold must not be below the ground truth")
        elif isinstance(self.deployed, LinearClassifier):
            if not isinstance(self.domain, Box) or not isinstance(self.cost, PNormCost):
                raise StratReleaseError("linear instances need a box domain and a p-norm cost")
        elif isinstance(self.deployed, TableClassifier):
            if not isinstance(self.domain, FiniteDomain) or not isinstance(self.cost, CostTable):
                raise StratReleaseError("table instances need a finite domain and a cost table")

    @property
    def kind(self) -> str:
        return classifier_kind(self.deployed)

    @property
    def is_interval_prior(self) -> bool:
        return isinstance(self.prior, UniformIntervalPrior)

    @property
    def deployed_index(self) -> int:
        return self.prior.index(self.deployed)

    @property
    def f(self) -> float:
        return self.ground_truth.threshold

    @property
    def h(self) -> float:
        return self.deployed.threshold

    def posterior(self, released: Iterable[int]) -> Posterior:
        return restrict_posterior(self.prior, released, self.deployed_index)
