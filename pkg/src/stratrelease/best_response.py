"""Agent best-response solvers.

All solvers share one selection rule: maximise utility, break ties (within
``TIE_TOL``) by lowest manipulation cost, then by the lexicographically
smallest target.  Utilities are always re-evaluated at the returned
point's actual acceptance pattern, never taken from the subset that
produced it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from stratrelease import geometry
from stratrelease.core import (
    AbsoluteCost,
    Box,
    LinearClassifier,
    PNormCost,
    Posterior,
    agent_utility,
)
from stratrelease.errors import StratReleaseError, SupportTooLargeError
from stratrelease.oracle import OracleCounter, Region, make_oracle

TIE_TOL = 1e-12
BRUTE_MAX_N = 20
ARRANGEMENT_MAX_N = 64
SPLIT_TOL = 1e-10


@dataclass(frozen=True)
class BestResponse:
    target: object
    utility: float
    cost: float
    passed: frozenset
    oracle_calls: int = 0
    selected: frozenset | None = None

    def to_dict(self) -> dict:
        target = list(self.target) if isinstance(self.target, tuple) else self.target
        out = {
            "target": target,
            "utility": self.utility,
            "cost": self.cost,
            "passed": sorted(self.passed),
            "oracle_calls": self.oracle_calls,
        }
        if self.selected is not None:
            out["selected"] = sorted(self.selected)
        return out


@dataclass(frozen=True)
class Cell:
    sign_vector: tuple
    polygon: tuple
    representative: tuple


def _evaluate(x, z, posterior: Posterior, cost) -> tuple:
    c = cost(x, z)
    return agent_utility(x, z, posterior, cost), c


def select_best(x, points: Sequence, posterior: Posterior, cost):
    """Apply the shared tie-break rule to candidate targets.

    Returns ``(target, utility, cost)``.
    """
    scored = []
    seen = set()
    for z in points:
        if z in seen:
            continue
        seen.add(z)
        u, c = _evaluate(x, z, posterior, cost)
        scored.append((u, c, z))
    top = max(u for u, _, _ in scored)
    near = [s for s in scored if s[0] >= top - TIE_TOL]
    low = min(c for _, c, _ in near)
    near = [s for s in near if s[1] <= low + TIE_TOL]
    u, c, z = min(near, key=lambda s: s[2])
    return z, u, c


def _result(x, z, u, c, posterior: Posterior, calls: int, selected=None) -> BestResponse:
    passed = frozenset(posterior.released[i] for i in posterior.accepted(z))
    sel = None if selected is None else frozenset(posterior.released[i] for i in selected)
    return BestResponse(z, u, c, passed, calls, sel)


def _subsets(n: int):
    for mask in range(1 << n):
        yield frozenset(i for i in range(n) if mask >> i & 1)


def br_bruteforce(x, posterior: Posterior, cost, domain=None, counter: OracleCounter | None = None) -> BestResponse:
    """Exhaustive search over every subset of the posterior support (one oracle call each)."""
    n = posterior.n
    if n > BRUTE_MAX_N:
        raise SupportTooLargeError(f"brute force limited to {BRUTE_MAX_N} classifiers, got {n}")
    counter = OracleCounter() if counter is None else counter
    start = counter.calls
    oracle = make_oracle(posterior.classifiers, cost, domain, counter)
    points = []
    for subset in _subsets(n):
        proj = oracle(x, Region(subset))
        if proj.feasible:
            points.append(proj.point)
    z, u, c = select_best(x, points, posterior, cost)
    return _result(x, z, u, c, posterior, counter.calls - start)


def induced_cost(x, subset: Sequence, cost, domain=None, counter: OracleCounter | None = None) -> float:
    """Cheapest cost of a point accepted by every classifier in ``subset``; inf if none exists."""
    if not subset:
        if counter is not None:
            counter.tick()
        return 0.0
    oracle = make_oracle(list(subset), cost, domain, counter)
    return oracle(x, Region(range(len(subset)))).cost


def br_threshold_scan(x: float, posterior: Posterior, k: float = 1.0) -> BestResponse:
    """Best response against threshold classifiers: stay, or jump to a threshold above ``x``."""
    if posterior.kind != "threshold":
        raise StratReleaseError("threshold scan needs a threshold posterior")
    cost = AbsoluteCost(k)
    x = float(x)
    points = [x] + [t for t in posterior.thresholds if t > x]
    z, u, c = select_best(x, points, posterior, cost)
    return _result(x, z, u, c, posterior, 0)


def br_threshold_targets(xs, posterior: Posterior, k: float = 1.0) -> np.ndarray:
    """Vectorised :func:`br_threshold_scan` returning only the targets."""
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(posterior.thresholds)
    cum = np.asarray(posterior.cumulative)
    stay = cum[np.searchsorted(ts, xs, side="right")]
    jump = cum[1:][None, :] - k * (ts[None, :] - xs[:, None])
    jump = np.where(ts[None, :] > xs[:, None], jump, -np.inf)
    top = np.maximum(stay, jump.max(axis=1, initial=-np.inf))
    ok = jump >= (top - TIE_TOL)[:, None]
    first = np.where(ok.any(axis=1), ok.argmax(axis=1), 0)
    return np.where(stay >= top - TIE_TOL, xs, ts[first] if len(ts) else xs)


def br_interval_uniform(x: float, c: float, d: float, k: float = 1.0) -> BestResponse:
    """Best response to a posterior uniform over thresholds in ``[c, d]``."""
    if c > d:
        raise StratReleaseError(f"empty posterior interval [{c}, {d}]")
    z = float(interval_targets(np.array([x], dtype=float), c, d, k)[0])

    def accept(t):
        if d == c:
            return 1.0 if t >= d else 0.0
        return min(1.0, max(0.0, (t - c) / (d - c)))

    cost = k * (z - x)
    return BestResponse(z, accept(z) - cost, cost, frozenset(), 0)


def interval_targets(xs, c: float, d: float, k: float = 1.0) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if d - c >= 1.0 / k:
        return xs.copy()
    return np.where((xs > d - 1.0 / k) & (xs < d), d, xs)


# -- planar arrangement -------------------------------------------------------


def build_arrangement(classifiers: Sequence[LinearClassifier], bbox: Box) -> list:
    """Cells of the line arrangement inside the inflated box, built one line at a time.

    A cell is split only when both open sides of the new line meet its
    interior; otherwise it inherits the sign of the side it lies on.
    """
    if len(classifiers) > ARRANGEMENT_MAX_N:
        raise SupportTooLargeError(f"arrangement limited to {ARRANGEMENT_MAX_N} lines")
    cells = [((), bbox.inflated().polygon())]
    for clf in classifiers:
        w, b = clf.weights, clf.bias
        nxt = []
        for signs, poly in cells:
            ms = [geometry.normalized_margin(w, b, v) for v in poly]
            hi, lo = max(ms), min(ms)
            if hi > SPLIT_TOL and lo < -SPLIT_TOL:
                nxt.append((signs + (1,), geometry.clip(poly, w, b, True)))
                nxt.append((signs + (0,), geometry.clip(poly, w, b, False)))
            else:
                nxt.append((signs + (0 if hi <= SPLIT_TOL and lo < -SPLIT_TOL else 1,), poly))
        cells = nxt
    return [Cell(s, tuple(p), geometry.vertex_mean(p)) for s, p in cells]


def br_linear_2d(
    x,
    posterior: Posterior,
    bbox: Box,
    cost: PNormCost | None = None,
    counter: OracleCounter | None = None,
) -> BestResponse:
    """Best response against linear classifiers: one projection per arrangement cell."""
    if posterior.kind != "linear":
        raise StratReleaseError("arrangement solver needs linear classifiers")
    cost = PNormCost(2) if cost is None else cost
    counter = OracleCounter() if counter is None else counter
    start = counter.calls
    oracle = make_oracle(posterior.classifiers, cost, bbox, counter)
    points = []
    for cell in build_arrangement(posterior.classifiers, bbox):
        pos = frozenset(i for i, s in enumerate(cell.sign_vector) if s)
        neg = frozenset(i for i, s in enumerate(cell.sign_vector) if not s)
        proj = oracle(x, Region(pos, neg))
        if proj.feasible:
            points.append(proj.point)
    x = (float(x[0]), float(x[1]))
    z, u, c = select_best(x, points, posterior, cost)
    return _result(x, z, u, c, posterior, counter.calls - start)


# -- submodularity ------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    x: object
    smaller: frozenset
    larger: frozenset
    added: int
    marginal_small: float
    marginal_large: float


@dataclass(frozen=True)
class SubmodularityVerdict:
    submodular: bool
    checks: int
    counterexample: Violation | None = None


def _marginal(after: float, before: float) -> float:
    if math.isinf(after) and math.isinf(before):
        return 0.0
    return after - before


def check_v_submodular(
    cost,
    classifiers: Sequence,
    x_samples: Sequence,
    domain=None,
    mode: str = "auto",
    trials: int = 2000,
    seed: int = 0,
) -> SubmodularityVerdict:
    """Test diminishing marginal induced cost over ``classifiers`` at each sample point.

    ``mode="exhaustive"`` enumerates every ``S <= S'`` and ``h' not in S'``
    (allowed up to 12 classifiers); ``"random"`` draws ``trials`` triples
    per point.  ``"auto"`` picks exhaustive when allowed.
    """
    n = len(classifiers)
    if n == 0:
        return SubmodularityVerdict(True, 0)
    if mode == "auto":
        mode = "exhaustive" if n <= 12 else "random"
    if mode == "exhaustive" and n > 12:
        raise SupportTooLargeError("exhaustive submodularity check limited to 12 classifiers")
    rng = np.random.default_rng(seed)
    checks = 0
    full = (1 << n) - 1
    for x in x_samples:
        oracle = make_oracle(list(classifiers), cost, domain)
        memo = {}

        def c(mask):
            if mask not in memo:
                memo[mask] = oracle(x, Region(i for i in range(n) if mask >> i & 1)).cost
            return memo[mask]

        if mode == "exhaustive":
            triples = _exhaustive_triples(n, full)
        else:
            triples = _random_triples(n, trials, rng)
        for small, large, h in triples:
            checks += 1
            bit = 1 << h
            ms = _marginal(c(small | bit), c(small))
            ml = _marginal(c(large | bit), c(large))
            if ms < ml - TIE_TOL:
                v = Violation(x, _members(small, n), _members(large, n), h, ms, ml)
                return SubmodularityVerdict(False, checks, v)
    return SubmodularityVerdict(True, checks)


def _members(mask: int, n: int) -> frozenset:
    return frozenset(i for i in range(n) if mask >> i & 1)


def _exhaustive_triples(n: int, full: int):
    for large in range(full + 1):
        outside = [h for h in range(n) if not large >> h & 1]
        if not outside:
            continue
        small = large
        while True:
            for h in outside:
                yield small, large, h
            if small == 0:
                break
            small = (small - 1) & large


def _random_triples(n: int, trials: int, rng):
    for _ in range(trials):
        large = int(rng.integers(0, 1 << n))
        outside = [h for h in range(n) if not large >> h & 1]
        if not outside:
            continue
        small = large & int(rng.integers(0, 1 << n))
        yield small, large, int(rng.choice(outside))


def br_submodular_approx(
    x,
    posterior: Posterior,
    cost,
    epsilon: float,
    seed: int = 0,
    domain=None,
    counter: OracleCounter | None = None,
) -> BestResponse:
    """Approximate best response for costs that are submodular over the posterior support.

    Minimises ``F(S) = c(x, S) - P(S)`` by projected subgradient descent on
    its Lovasz extension over the unit cube, keeping the best level set
    seen along the way (including those of the averaged iterate).  Every
    subgradient is a greedy vertex of the base polytope, so their running
    average certifies a lower bound on ``min F``; the loop stops early once
    the incumbent is within ``epsilon`` of it.  Without submodularity the
    output is a heuristic.
    """
    if epsilon <= 0:
        raise StratReleaseError("epsilon must be positive")
    n = posterior.n
    counter = OracleCounter() if counter is None else counter
    start = counter.calls
    oracle = make_oracle(posterior.classifiers, cost, domain, counter)
    weights = np.asarray(posterior.weights)
    bound = _cost_bound(cost, domain)
    penalty = 2.0 + bound

    cache = np.full(1 << n, np.nan) if n <= 22 else None
    memo = {}

    def F(mask: int) -> float:
        if cache is not None:
            v = cache[mask]
            if not np.isnan(v):
                return v
        elif mask in memo:
            return memo[mask]
        members = [i for i in range(n) if mask >> i & 1]
        c = oracle(x, Region(members)).cost
        v = (c if math.isfinite(c) else penalty) - float(weights[members].sum())
        if cache is not None:
            cache[mask] = v
        else:
            memo[mask] = v
        return v

    full = (1 << n) - 1
    lip = 1.0 + min(max(F(full) + 1.0, 0.0), bound)
    iters = math.ceil(max(4.0, lip * lip) * n / epsilon**2)
    step = math.sqrt(n) / (lip * math.sqrt(iters))

    rng = np.random.default_rng(seed)
    w = rng.uniform(0.0, 1.0, n)
    w_sum = np.zeros(n)
    g_sum = np.zeros(n)
    best_val, best_mask = F(0), 0
    bits = np.left_shift(1, np.arange(n, dtype=np.int64))

    def chain(point):
        order = np.argsort(-point, kind="stable")
        masks = np.cumsum(bits[order])
        vals = np.array([F(int(m)) for m in masks])
        g = np.empty(n)
        g[order] = np.diff(np.concatenate(([0.0], vals)))
        j = int(np.argmin(vals))
        return g, vals[j], int(masks[j])

    for t in range(1, iters + 1):
        g, v, m = chain(w)
        if v < best_val - TIE_TOL:
            best_val, best_mask = v, m
        g_sum += g
        w_sum += w
        w = np.clip(w - step * g, 0.0, 1.0)
        if t % n == 0:
            lower = float(np.minimum(g_sum / t, 0.0).sum())
            if best_val - lower <= epsilon:
                break
    _, v, m = chain(w_sum / t)
    if v < best_val - TIE_TOL:
        best_val, best_mask = v, m

    chosen = [i for i in range(n) if best_mask >> i & 1]
    proj = oracle(x, Region(chosen))
    z = proj.point
    if isinstance(z, tuple) or not np.isscalar(z):
        z = tuple(float(v) for v in z)
    u, c = _evaluate(x, z, posterior, cost)
    return _result(x, z, u, c, posterior, counter.calls - start, selected=chosen)


def _cost_bound(cost, domain) -> float:
    diam = getattr(domain, "diameter", None)
    if diam is None:
        return 1.0
    k = cost.k if isinstance(cost, AbsoluteCost) else 1.0
    return k * diam
