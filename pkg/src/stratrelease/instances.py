"""Worked-example fixtures and seeded random instance generators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from stratrelease.core import (
    AbsoluteCost,
    Box,
    CostTable,
    FiniteDomain,
    Instance,
    Interval,
    LinearClassifier,
    PNormCost,
    Posterior,
    Prior,
    TableClassifier,
    ThresholdClassifier,
    UniformIntervalPrior,
)
from stratrelease.distributions import DataDistribution
from stratrelease.errors import ConfigError

X1, X2 = 0.0, 1.0


def example_table1() -> Instance:
    """Two-point world with three table classifiers and an asymmetric cost table.

    Point ``X1`` (mass 2/3) is positive, ``X2`` (mass 1/3) is negative.
    Classifier 0 is the ground truth and is deployed; classifier 1
    accepts only ``X2``; classifier 2 accepts nothing.
    """
    h1 = TableClassifier({X1})
    h2 = TableClassifier({X2})
    h3 = TableClassifier(())
    return Instance(
        domain=FiniteDomain((X1, X2)),
        ground_truth=h1,
        deployed=h1,
        prior=Prior.uniform((h1, h2, h3)),
        data=DataDistribution.point_masses((X1, X2), (2.0 / 3.0, 1.0 / 3.0)),
        cost=CostTable({(X1, X2): 2.0, (X2, X1): 0.75}),
    )


def example_thresholds() -> Instance:
    """Uniform data on [0, 2], truth at 1.9, deployed at 2, prior 0.9/0.1 on {1.8, 2}."""
    return Instance(
        domain=Interval(0.0, 2.0),
        ground_truth=ThresholdClassifier(1.9),
        deployed=ThresholdClassifier(2.0),
        prior=Prior.from_thresholds((1.8, 2.0), (0.9, 0.1)),
        data=DataDistribution.uniform(0.0, 2.0),
        cost=AbsoluteCost(1.0),
    )


def example_claim_fpr() -> Instance:
    """Two equal atoms at 0 and 0.4, truth at 0.3, prior (0.2, 0.1, 0.7) on (0.1, 0.5, 0.7), deployed 0.5."""
    return Instance(
        domain=Interval(0.0, 1.0),
        ground_truth=ThresholdClassifier(0.3),
        deployed=ThresholdClassifier(0.5),
        prior=Prior.from_thresholds((0.1, 0.5, 0.7), (0.2, 0.1, 0.7)),
        data=DataDistribution.point_masses((0.0, 0.4), (0.5, 0.5)),
        cost=AbsoluteCost(1.0),
    )


@dataclass(frozen=True)
class ThresholdInstanceConfig:
    """Ranges for :func:`random_threshold_instance`.

    ``grid`` > 0 snaps every threshold, f and h to multiples of ``grid``
    (useful for provoking ties); ``spread`` bounds how far support
    thresholds lie from ``h``.
    """

    domain: tuple = (0.0, 2.0)
    f_range: tuple = (0.2, 1.0)
    h_range: tuple = (0.2, 1.4)
    spread: float = 1.0
    prior: str = "uniform"
    data: str = "uniform"
    n_atoms: int = 5
    grid: float = 0.0
    k: float = 1.0

    def __post_init__(self):
        if self.h_range[1] < self.f_range[0]:
            raise ConfigError("h range lies entirely below the f range")
        if self.prior not in ("uniform", "dirichlet"):
            raise ConfigError(f"unknown prior kind {self.prior!r}")
        if self.data not in ("uniform", "atoms", "mixed"):
            raise ConfigError(f"unknown data kind {self.data!r}")


def _snap(v: float, grid: float) -> float:
    return round(v / grid) * grid if grid > 0 else v


def random_threshold_instance(n: int, seed: int, config: ThresholdInstanceConfig | None = None) -> Instance:
    """Random threshold instance with ``n`` distinct support thresholds including ``h >= f``."""
    if n < 1:
        raise ConfigError("n must be at least 1")
    cfg = ThresholdInstanceConfig() if config is None else config
    rng = np.random.default_rng(seed)
    lo, hi = cfg.domain
    f = _snap(float(rng.uniform(*cfg.f_range)), cfg.grid)
    h = _snap(float(rng.uniform(max(f, cfg.h_range[0]), max(f, cfg.h_range[1]))), cfg.grid)
    h = max(h, f)
    ts = {h}
    tries = 0
    while len(ts) < n:
        t = _snap(float(rng.uniform(max(lo, h - cfg.spread), min(hi, h + cfg.spread))), cfg.grid)
        ts.add(t)
        tries += 1
        if tries > 1000 * n:
            raise ConfigError("could not draw enough distinct thresholds; widen spread or refine grid")
    ts = sorted(ts)
    if cfg.prior == "uniform":
        weights = [1.0 / n] * n
    else:
        weights = list(rng.dirichlet(np.ones(n)))
        weights = [w / sum(weights) for w in weights]
    data = _random_data(rng, cfg, lo, hi)
    return Instance(
        domain=Interval(lo, hi),
        ground_truth=ThresholdClassifier(f),
        deployed=ThresholdClassifier(h),
        prior=Prior.from_thresholds(ts, weights),
        data=data,
        cost=AbsoluteCost(cfg.k),
    )


def _random_data(rng, cfg: ThresholdInstanceConfig, lo: float, hi: float) -> DataDistribution:
    if cfg.data == "uniform":
        return DataDistribution.uniform(lo, hi)
    locs = sorted({_snap(float(v), cfg.grid) for v in rng.uniform(lo, hi, cfg.n_atoms)})
    masses = rng.dirichlet(np.ones(len(locs)))
    if cfg.data == "atoms":
        masses = masses / masses.sum()
        return DataDistribution.point_masses(locs, [float(m) for m in masses])
    share = float(rng.uniform(0.2, 0.8))
    atoms = [(x, float(m) * share) for x, m in zip(locs, masses / masses.sum())]
    return DataDistribution(atoms=atoms, uniform_pieces=((lo, hi, 1.0 - share),))


def random_linear2d(n: int, seed: int, bbox: Box | None = None, n_agents: int = 5) -> tuple:
    """Random unit-normal lines through ``bbox`` and agent points inside it.

    Returns ``(agents, posterior)`` with a random Dirichlet posterior.
    """
    if n < 1:
        raise ConfigError("n must be at least 1")
    bbox = Box((-1.0, -1.0), (1.0, 1.0)) if bbox is None else bbox
    rng = np.random.default_rng(seed)
    clfs = []
    for _ in range(n):
        theta = float(rng.uniform(0, 2 * np.pi))
        w = (float(np.cos(theta)), float(np.sin(theta)))
        p = (float(rng.uniform(bbox.lo[0], bbox.hi[0])), float(rng.uniform(bbox.lo[1], bbox.hi[1])))
        clfs.append(LinearClassifier(w, -(w[0] * p[0] + w[1] * p[1])))
    weights = rng.dirichlet(np.ones(n))
    weights = [float(w) for w in weights / weights.sum()]
    agents = [
        (float(rng.uniform(bbox.lo[0], bbox.hi[0])), float(rng.uniform(bbox.lo[1], bbox.hi[1])))
        for _ in range(n_agents)
    ]
    return agents, Posterior.over(clfs, weights)


def random_linear_instance(n: int, seed: int, bbox: Box | None = None, n_agents: int = 5) -> Instance:
    """Planar instance built from :func:`random_linear2d`: agents become equal atoms."""
    bbox = Box((-1.0, -1.0), (1.0, 1.0)) if bbox is None else bbox
    agents, post = random_linear2d(n, seed, bbox, n_agents)
    prior = Prior(post.classifiers, post.weights)
    return Instance(
        domain=bbox,
        ground_truth=post.classifiers[0],
        deployed=post.classifiers[0],
        prior=prior,
        data=DataDistribution.point_masses(agents, [1.0 / len(agents)] * len(agents)),
        cost=PNormCost(2),
    )


def random_interval_instance(seed: int) -> Instance:
    """Continuous uniform prior on a random ``[a, b]`` inside [0, 2], uniform data."""
    rng = np.random.default_rng(seed)
    a = float(rng.uniform(0.0, 0.6))
    b = float(rng.uniform(a + 0.2, 2.0))
    h = float(rng.uniform(a, b))
    f = float(rng.uniform(0.0, h))
    return Instance(
        domain=Interval(0.0, 2.0),
        ground_truth=ThresholdClassifier(f),
        deployed=ThresholdClassifier(h),
        prior=UniformIntervalPrior(a, b),
        data=DataDistribution.uniform(0.0, 2.0),
        cost=AbsoluteCost(1.0),
    )
