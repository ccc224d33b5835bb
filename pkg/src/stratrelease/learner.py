"""Learner-side evaluation and release optimisation for threshold screening.

Acceptance by the deployed threshold ``h`` after manipulation is decided
by a single cutoff: an agent ends up accepted iff it starts strictly
above the cutoff (or at/above ``h``).  Utility, FPR and FNR all follow
from that cutoff with exact, boundary-aware interval masses.  Instances
whose data distribution is purely atomic, and finite-table worlds, are
evaluated instead by a direct best response per atom.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from stratrelease.best_response import (
    TIE_TOL,
    br_bruteforce,
    br_linear_2d,
    br_threshold_targets,
)
from stratrelease.core import (
    AbsoluteCost,
    Instance,
    Interval,
    Posterior,
    Prior,
    ThresholdClassifier,
    UniformIntervalPrior,
)
from stratrelease.distributions import DataDistribution, interval_prob
from stratrelease.errors import (
    ConfigError,
    DegenerateClassError,
    NonUniformPriorError,
    StratReleaseError,
    SupportTooLargeError,
)

OBJECTIVES = ("accuracy", "fpr", "fnr")
BRUTE_MAX_N = 20
SNAP_TOL = 1e-12


@dataclass(frozen=True)
class Candidate:
    """One row of an optimiser's audit table.

    ``utility`` holds the objective value (accuracy, FPR or FNR);
    ``rejected_reason`` is empty for admissible candidates.
    """

    candidate_id: int
    released: tuple | None
    cutoff: float | None
    utility: float | None
    i: int | None = None
    l: int | None = None
    j: int | None = None
    rejected_reason: str = ""


@dataclass(frozen=True)
class ReleaseReport:
    released: tuple
    cutoff: float | None
    utility: float
    fpr: float | None
    fnr: float | None
    candidates: tuple = field(default=(), repr=False)
    objective: str = "accuracy"

    def to_dict(self) -> dict:
        return {
            "released": list(self.released),
            "cutoff": self.cutoff,
            "utility": self.utility,
            "fpr": self.fpr,
            "fnr": self.fnr,
            "objective": self.objective,
            "candidates": len(self.candidates),
        }


# -- cutoff --------------------------------------------------------------------


def _phi(posterior: Posterior, k: float) -> list:
    cum = posterior.cumulative
    return [cum[m + 1] - k * t for m, t in enumerate(posterior.thresholds)]


def arrival_infimum(posterior: Posterior, target: int, k: float = 1.0) -> float:
    """``inf {x : BR(x) = thresholds[target]}`` for a threshold posterior (local index).

    Returns ``+inf`` when a larger threshold strictly beats the target, in
    which case no agent at or below it lands there.  The value is not
    clamped to any domain.
    """
    phi = _phi(posterior, k)
    m = phi[target]
    if any(p > m + TIE_TOL for p in phi[target + 1 :]):
        return math.inf
    block = None
    for t in range(target - 1, -1, -1):
        if phi[t] >= m - TIE_TOL:
            block = t
            break
    mass = posterior.cumulative[block + 1] if block is not None else 0.0
    return (mass - m) / k


def _landing_target(posterior: Posterior, h: float, k: float) -> int:
    phi = _phi(posterior, k)
    lo = bisect_left(posterior.thresholds, h)
    best = lo
    for t in range(lo + 1, len(phi)):
        if phi[t] > phi[best] + TIE_TOL:
            best = t
    return best


def raw_cutoff(posterior: Posterior, h: float, k: float = 1.0) -> float:
    """Unclamped cutoff: agents strictly above it end up accepted by ``h``."""
    return arrival_infimum(posterior, _landing_target(posterior, h, k), k)


def _require_threshold(instance: Instance):
    if instance.kind != "threshold" or instance.is_interval_prior:
        raise StratReleaseError("operation needs a threshold instance with a finite prior")


def compute_cutoff(instance: Instance, released: Iterable[int]) -> float:
    """Manipulation cutoff of a release, clamped to the domain's lower bound."""
    _require_threshold(instance)
    post = instance.posterior(released)
    r = raw_cutoff(post, instance.h, instance.cost.k)
    return max(r, instance.domain.lo)


def interval_cutoff(c: float, d: float, h: float, k: float = 1.0) -> float:
    """Cutoff under a posterior uniform on ``[c, d]``; ``h`` itself when nobody reaches ``h`` by moving."""
    if d - c >= 1.0 / k or d - 1.0 / k >= h:
        return h
    return d - 1.0 / k


# -- utility, FPR, FNR -----------------------------------------------------------


def _error_masses(data: DataDistribution, r: float, f: float, h: float, strict_at_h: bool = False) -> tuple:
    """``(false positive mass, false negative mass)`` for acceptance ``x > r``.

    ``strict_at_h`` marks the no-movement case where acceptance is ``x >= h``.
    """
    if strict_at_h:
        return 0.0, interval_prob(data, f, h, True, False)
    r = _snap_cutoff(r, [f] + [a for a, _ in data.atoms])
    if r < f:
        return interval_prob(data, r, f, False, False), 0.0
    return 0.0, interval_prob(data, f, r, True, True)


def _snap_cutoff(r: float, marks) -> float:
    # a cutoff within rounding of f or an atom is taken to sit exactly on it
    for m in marks:
        if abs(r - m) <= SNAP_TOL * max(1.0, abs(m)):
            return m
    return r


def _outcomes(instance: Instance, released) -> list:
    """Per-atom ``(mass, label, accepted)`` via direct best response."""
    data = instance.data
    locs = [a for a, _ in data.atoms]
    masses = [p for _, p in data.atoms]
    kind = instance.kind
    if kind == "threshold":
        post = instance.posterior(released)
        targets = br_threshold_targets(np.array(locs, dtype=float), post, instance.cost.k)
        acc = [bool(t >= instance.h) for t in targets]
    else:
        post = instance.posterior(released)
        acc = []
        for x in locs:
            if kind == "linear":
                br = br_linear_2d(x, post, instance.domain, instance.cost)
            else:
                br = br_bruteforce(x, post, instance.cost, instance.domain)
            acc.append(bool(instance.deployed(br.target)))
    labels = [bool(instance.ground_truth(x)) for x in locs]
    return list(zip(masses, labels, acc))


def _per_atom(instance: Instance) -> bool:
    return instance.kind != "threshold" or instance.data.atom_only


def _masses(instance: Instance, released) -> tuple:
    """``(fp mass, fn mass, negative mass, positive mass)``."""
    if instance.is_interval_prior:
        c, d = released
        _check_interval(instance.prior, c, d, instance.h)
        k = instance.cost.k
        r = interval_cutoff(c, d, instance.h, k)
        fp, fn = _error_masses(instance.data, r, instance.f, instance.h, strict_at_h=r == instance.h)
    elif _per_atom(instance):
        rows = _outcomes(instance, released)
        fp = math.fsum(p for p, y, a in rows if a and not y)
        fn = math.fsum(p for p, y, a in rows if y and not a)
        neg = math.fsum(p for p, y, _ in rows if not y)
        return fp, fn, neg, 1.0 - neg
    else:
        post = instance.posterior(released)
        r = raw_cutoff(post, instance.h, instance.cost.k)
        fp, fn = _error_masses(instance.data, r, instance.f, instance.h)
    neg = _negative_mass(instance)
    return fp, fn, neg, 1.0 - neg


def _negative_mass(instance: Instance) -> float:
    return interval_prob(instance.data, -math.inf, instance.f, True, False)


def release_utility(instance: Instance, released) -> float:
    """Expected post-manipulation accuracy of the deployed classifier under a release.

    ``released`` is a collection of prior-support indices, or ``(c, d)``
    for an interval prior.
    """
    fp, fn, _, _ = _masses(instance, released)
    return 1.0 - fp - fn


def release_fpr(instance: Instance, released) -> float:
    fp, _, neg, _ = _masses(instance, released)
    if neg <= 0:
        raise DegenerateClassError("no negatives under the data distribution")
    return fp / neg


def release_fnr(instance: Instance, released) -> float:
    _, fn, _, pos = _masses(instance, released)
    if pos <= 0:
        raise DegenerateClassError("no positives under the data distribution")
    return fn / pos


def _safe(fn, *args):
    try:
        return fn(*args)
    except DegenerateClassError:
        return None


def _score(instance: Instance, released, objective: str) -> float:
    if objective == "accuracy":
        return release_utility(instance, released)
    if objective == "fpr":
        return release_fpr(instance, released)
    if objective == "fnr":
        return release_fnr(instance, released)
    raise ConfigError(f"unknown objective {objective!r}; expected one of {OBJECTIVES}")


def _better(objective: str, new: float, old: float | None) -> bool:
    if old is None:
        return True
    if objective == "accuracy":
        return new > old + TIE_TOL
    return new < old - TIE_TOL


def _cutoff_or_none(instance: Instance, released):
    if instance.kind != "threshold":
        return None
    return compute_cutoff(instance, released)


def _report(instance: Instance, released: tuple, candidates, objective: str) -> ReleaseReport:
    return ReleaseReport(
        released=tuple(released),
        cutoff=_cutoff_or_none(instance, released),
        utility=release_utility(instance, released),
        fpr=_safe(release_fpr, instance, released),
        fnr=_safe(release_fnr, instance, released),
        candidates=tuple(candidates),
        objective=objective,
    )


# -- optimisers ------------------------------------------------------------------


def admissible_releases(n: int, deployed: int):
    """Every subset containing ``deployed``, smallest first, then in index order."""
    others = [i for i in range(n) if i != deployed]
    for size in range(len(others) + 1):
        for extra in combinations(others, size):
            yield tuple(sorted((deployed,) + extra))


def optimize_release_bruteforce(instance: Instance, objective: str = "accuracy") -> ReleaseReport:
    """Best release by exhaustive enumeration of every admissible subset."""
    if objective not in OBJECTIVES:
        raise ConfigError(f"unknown objective {objective!r}; expected one of {OBJECTIVES}")
    if instance.is_interval_prior:
        raise ConfigError("interval priors are optimised with the interval method")
    if instance.kind == "linear":
        raise ConfigError("release optimisation is only supported for threshold and table instances")
    n = instance.prior.n
    if n > BRUTE_MAX_N:
        raise SupportTooLargeError(f"brute-force release search limited to {BRUTE_MAX_N}, got {n}")
    best, best_val = None, None
    rows = []
    for cid, released in enumerate(admissible_releases(n, instance.deployed_index)):
        val = _score(instance, released, objective)
        rows.append(Candidate(cid, released, _cutoff_or_none(instance, released), val))
        if _better(objective, val, best_val):
            best, best_val = released, val
    return _report(instance, best, rows, objective)


def optimize_release_uniform(instance: Instance) -> ReleaseReport:
    """Accuracy-optimal release for a uniform prior over thresholds in O(n^3) candidates.

    For each landing threshold ``i``, release size ``l`` and count ``j``
    of released thresholds in ``(R, h_i]``, the candidate cutoff is
    ``R = h_i - j / (k l)``.  The set is built from the ``j`` largest
    thresholds in ``(R, h_i]`` (always keeping ``h`` and ``h_i``), then
    the smallest thresholds at or below ``R``, then the largest above
    ``h_i``.  Admissible candidates are scored at their exact cutoff.
    """
    _require_threshold(instance)
    prior = instance.prior
    if not prior.is_uniform:
        raise NonUniformPriorError("the O(n^3) optimiser needs a uniform prior")
    ts = prior.thresholds
    n = prior.n
    kd = instance.deployed_index
    h = instance.h
    k = instance.cost.k
    rows = []
    best, best_val = None, None
    cid = 0
    for i in range(kd, n):
        for l in range(1, n + 1):
            for j in range(1, l + 1):
                r = ts[i] - j / (k * l)
                released, reason = _uniform_candidate(ts, kd, i, l, j, r, h, k, prior)
                if reason:
                    rows.append(Candidate(cid, released, None, None, i, l, j, reason))
                else:
                    val = release_utility(instance, released)
                    rows.append(Candidate(cid, released, compute_cutoff(instance, released), val, i, l, j))
                    if _better("accuracy", val, best_val):
                        best, best_val = released, val
                cid += 1
    if best is None:
        best = (kd,)
    return _report(instance, best, rows, "accuracy")


def _uniform_candidate(ts, kd, i, l, j, r, h, k, prior: Prior):
    tol = SNAP_TOL * max(1.0, abs(r))
    if r >= h - tol:
        return None, "cutoff-not-below-h"
    s2 = [m for m, t in enumerate(ts) if t <= r + tol]
    s1 = [m for m, t in enumerate(ts) if r + tol < t <= ts[i]]
    s3 = [m for m, t in enumerate(ts) if t > ts[i]]
    if len(s1) < j:
        return None, "too-few-between"
    chosen = {kd, i}
    if len(chosen) > j:
        return None, "seed-exceeds-j"
    for m in reversed(s1):
        if len(chosen) >= j:
            break
        chosen.add(m)
    need = l - j
    fill = s2[:need]
    if len(fill) < need:
        fill = s2 + s3[::-1][: need - len(s2)]
    chosen.update(fill)
    released = tuple(sorted(chosen))
    if len(released) != l:
        return released, "size-mismatch"
    post = Posterior(
        tuple(prior.support[m] for m in released),
        (1.0 / l,) * l,
        released,
    )
    arrive = arrival_infimum(post, released.index(i), k)
    if math.isinf(arrive):
        return released, "overtaken"
    if arrive > r + tol:
        return released, "cutoff-above-candidate"
    return released, ""


# -- continuous uniform prior ------------------------------------------------------


def _check_interval(prior: UniformIntervalPrior, c: float, d: float, h: float):
    if not (prior.a <= c <= h <= d <= prior.b):
        raise StratReleaseError(f"release [{c}, {d}] must contain h = {h} and lie inside [{prior.a}, {prior.b}]")


def interval_release_utility(c: float, d: float, f: float, h: float, data: DataDistribution, k: float = 1.0) -> float:
    """Accuracy when the posterior is uniform on ``[c, d]`` (with ``c <= h <= d``)."""
    r = interval_cutoff(c, d, h, k)
    fp, fn = _error_masses(data, r, f, h, strict_at_h=r == h)
    return 1.0 - fp - fn


def optimal_interval_release(
    a: float, b: float, f: float, h: float, data: DataDistribution, k: float = 1.0
) -> ReleaseReport:
    """Optimal interval release for a continuous uniform prior on ``[a, b]``.

    Uses ``[h, d]`` with ``d = min(b, max(h, f + 1/k))``; when the prior is
    at least ``1/k`` wide the full interval is also a candidate and wins
    ties.
    """
    if not a <= h <= b:
        raise StratReleaseError(f"h = {h} lies outside [{a}, {b}]")
    if h < f:
        raise StratReleaseError("deployed threshold must not be below the ground truth")
    d = min(b, max(h, f + 1.0 / k))
    rows = []
    u_short = interval_release_utility(h, d, f, h, data, k)
    rows.append(Candidate(0, (h, d), interval_cutoff(h, d, h, k), u_short))
    best, val = (h, d), u_short
    if b - a >= 1.0 / k:
        u_full = interval_release_utility(a, b, f, h, data, k)
        rows.append(Candidate(1, (a, b), interval_cutoff(a, b, h, k), u_full))
        if u_full >= u_short:
            best, val = (a, b), u_full
    c0, d0 = best
    neg = interval_prob(data, -math.inf, f, True, False)
    r = interval_cutoff(c0, d0, h, k)
    fp, fn = _error_masses(data, r, f, h, strict_at_h=r == h)
    return ReleaseReport(
        released=best,
        cutoff=r,
        utility=val,
        fpr=fp / neg if neg > 0 else None,
        fnr=fn / (1.0 - neg) if neg < 1 else None,
        candidates=tuple(rows),
    )


def interval_case_formula(a: float, b: float, f: float, h: float, data: DataDistribution, k: float = 1.0) -> float:
    """Closed-form optimal utility written directly as the two-case expression."""
    d = min(b, max(h, f + 1.0 / k))
    r = _snap_cutoff(d - 1.0 / k, [f] + [x for x, _ in data.atoms])
    if r < f:
        u = 1.0 - interval_prob(data, r, f, False, False)
    else:
        u = 1.0 - interval_prob(data, f, r, True, True)
    if b - a >= 1.0 / k:
        u = max(u, 1.0 - interval_prob(data, f, h, True, False))
    return u


# -- hardness instances --------------------------------------------------------------


def generate_subset_sum_instance(a: Sequence[int]) -> Instance:
    """Threshold instance whose optimal release is perfect iff ``a`` splits into equal halves."""
    a = [int(v) for v in a]
    if not a:
        raise StratReleaseError("subset-sum input is empty")
    if any(v <= 0 for v in a):
        raise StratReleaseError("subset-sum entries must be positive")
    total = sum(a)
    thresholds = [2.0 / 3.0] + [100.0 + i for i in range(1, len(a) + 1)]
    weights = [0.5] + [v / (2.0 * total) for v in a]
    prior = Prior.from_thresholds(thresholds, weights)
    return Instance(
        domain=Interval(-1000.0, 1000.0),
        ground_truth=ThresholdClassifier(0.0),
        deployed=ThresholdClassifier(2.0 / 3.0),
        prior=prior,
        data=DataDistribution.uniform(-1000.0, 1000.0),
        cost=AbsoluteCost(1.0),
    )


def has_equal_split(a: Sequence[int]) -> bool:
    """Whether some sub-multiset of ``a`` sums to half the total."""
    total = sum(a)
    if total % 2:
        return False
    reach = 1
    for v in a:
        reach |= reach << v
    return bool(reach >> (total // 2) & 1)
