"""Acceptance gate: one test per criterion, each at its stated tolerance.

The conftest hook prints a PASS/FAIL line per criterion at the end of the run.
"""

import math

import numpy as np
import pytest

from stratrelease.best_response import (
    br_bruteforce,
    br_interval_uniform,
    br_linear_2d,
    br_submodular_approx,
    br_threshold_scan,
    br_threshold_targets,
    build_arrangement,
    check_v_submodular,
    induced_cost,
)
from stratrelease.core import Box, PNormCost
from stratrelease.distributions import DataDistribution, interval_prob, sample
from stratrelease.instances import (
    ThresholdInstanceConfig,
    example_claim_fpr,
    example_table1,
    example_thresholds,
    random_linear2d,
    random_threshold_instance,
)
from stratrelease.learner import (
    compute_cutoff,
    generate_subset_sum_instance,
    interval_case_formula,
    optimal_interval_release,
    optimize_release_bruteforce,
    optimize_release_uniform,
    release_fnr,
    release_fpr,
    release_utility,
)

from oracles import has_subset_sum, interval_br, piecewise_accuracy

DATA_KINDS = ("uniform", "atoms", "mixed")


def _config(seed, **kw):
    base = dict(
        data=DATA_KINDS[seed % 3],
        grid=(0.0, 0.05, 0.1)[(seed // 3) % 3],
        spread=(0.8, 1.2, 2.0)[(seed // 9) % 3],
    )
    base.update(kw)
    return ThresholdInstanceConfig(**base)


def _random_release(rng, n, deployed):
    others = [i for i in range(n) if i != deployed and rng.random() < 0.5]
    return tuple(sorted([deployed] + others))


@pytest.mark.criterion(1, "two-point table world: U({h1}) = 2/3, U({h1,h2}) = 1, optimum {h1,h2}")
def test_table_world_reproduction():
    inst = example_table1()
    assert abs(release_utility(inst, (0,)) - 2 / 3) <= 1e-9
    assert abs(release_utility(inst, (0, 1)) - 1.0) <= 1e-9
    assert optimize_release_bruteforce(inst).released == (0, 1)


@pytest.mark.criterion(2, "threshold example: U({h2}) = 0.55, U(support) = 1, cutoff of {h2} = 1")
def test_threshold_example_reproduction():
    inst = example_thresholds()
    assert abs(release_utility(inst, (1,)) - 0.55) <= 1e-9
    assert abs(release_utility(inst, (0, 1)) - 1.0) <= 1e-9
    assert abs(compute_cutoff(inst, (1,)) - 1.0) <= 1e-9


@pytest.mark.criterion(3, "two-atom FPR world: BR targets (0.5, 0.7, 0.1, 0.5) and FPRs (1, 1, 0)")
def test_fpr_world_reproduction():
    inst = example_claim_fpr()
    targets = [
        br_threshold_scan(0.0, inst.posterior((1,))).target,
        br_threshold_scan(0.0, inst.posterior((0, 1, 2))).target,
        br_threshold_scan(0.0, inst.posterior((0, 1))).target,
        br_threshold_scan(0.4, inst.posterior((0, 1))).target,
    ]
    assert targets == [0.5, 0.7, 0.1, 0.5]
    assert release_fpr(inst, (1,)) == 1.0
    assert release_fpr(inst, (0, 1, 2)) == 1.0
    assert release_fpr(inst, (0, 1)) == 0.0
    best = optimize_release_bruteforce(inst, "fpr").released
    assert best not in ((1,), (0, 1, 2))


@pytest.mark.criterion(4, "uniform-prior optimiser equals brute force (200 instances, n <= 10, k in {1, 0.5, 2})")
@pytest.mark.parametrize("k", [1.0, 0.5, 2.0])
def test_uniform_optimiser_matches_bruteforce(k):
    for seed in range(200):
        n = 1 + seed % 10
        inst = random_threshold_instance(n, seed, _config(seed, k=k))
        fast = optimize_release_uniform(inst).utility
        slow = optimize_release_bruteforce(inst).utility
        assert abs(fast - slow) <= 1e-9, (seed, fast, slow)


@pytest.mark.criterion(5, "scan == brute force on 500 1-D instances; arrangement == brute force on 100 planar instances")
def test_best_response_solver_equivalence():
    rng = np.random.default_rng(5)
    for seed in range(500):
        n = 1 + seed % 10
        inst = random_threshold_instance(n, 10_000 + seed, _config(seed, k=float(rng.choice([0.5, 1.0, 2.0]))))
        post = inst.posterior(_random_release(rng, n, inst.deployed_index))
        x = float(rng.choice(post.thresholds)) if rng.random() < 0.2 else float(rng.uniform(0, 2))
        a = br_threshold_scan(x, post, inst.cost.k)
        b = br_bruteforce(x, post, inst.cost, inst.domain)
        assert a.target == b.target, (seed, a, b)
        assert abs(a.utility - b.utility) <= 1e-9
    box = Box((-1.0, -1.0), (1.0, 1.0))
    for seed in range(100):
        agents, post = random_linear2d(1 + seed % 10, seed, box, n_agents=1)
        a = br_linear_2d(agents[0], post, box)
        b = br_bruteforce(agents[0], post, PNormCost(2), box)
        assert abs(a.utility - b.utility) <= 1e-9, (seed, a, b)


@pytest.mark.criterion(6, "arrangement cells <= 1 + n(n+1)/2 and oracle calls == cell count")
def test_arrangement_complexity():
    box = Box((-1.0, -1.0), (1.0, 1.0))
    for seed in range(150):
        n = 1 + seed % 16
        agents, post = random_linear2d(n, 500 + seed, box, n_agents=1)
        cells = build_arrangement(post.classifiers, box)
        assert len(cells) <= 1 + n * (n + 1) // 2
        res = br_linear_2d(agents[0], post, box)
        assert res.oracle_calls == len(cells)


@pytest.mark.criterion(7, "submodular approximation within epsilon of optimum (100 instances); 1-D distance cost is submodular")
def test_submodular_guarantee():
    eps = 0.05
    rng = np.random.default_rng(7)
    for seed in range(100):
        n = 1 + seed % 12
        inst = random_threshold_instance(n, 20_000 + seed, _config(seed, prior="dirichlet"))
        post = inst.posterior(range(n))
        x = float(rng.uniform(0, 2))
        res = br_submodular_approx(x, post, inst.cost, eps, seed, inst.domain)
        local = [post.released.index(i) for i in res.selected]
        g = post.mass_of(local) - induced_cost(x, [post.classifiers[i] for i in local], inst.cost, inst.domain)
        opt = br_bruteforce(x, post, inst.cost, inst.domain).utility
        assert g >= opt - eps - 1e-12, (seed, g, opt)
    for seed in range(20):
        n = 1 + seed % 8
        inst = random_threshold_instance(n, 30_000 + seed, _config(seed))
        xs = [float(v) for v in rng.uniform(0, 2, 3)]
        verdict = check_v_submodular(inst.cost, list(inst.prior.support), xs, inst.domain)
        assert verdict.submodular, verdict.counterexample


@pytest.mark.criterion(8, "10^4 probes: BR(x) >= x, monotone in x, overtaking property")
def test_monotone_best_response():
    rng = np.random.default_rng(8)
    probes = 0
    for seed in range(100):
        n = 1 + seed % 10
        inst = random_threshold_instance(n, 40_000 + seed, _config(seed, prior="dirichlet" if seed % 2 else "uniform"))
        post = inst.posterior(_random_release(rng, n, inst.deployed_index))
        k = inst.cost.k
        for _ in range(100):
            x1, x2 = sorted(float(v) for v in rng.uniform(0, 2, 2))
            if rng.random() < 0.2:
                x2 = float(rng.choice(post.thresholds))
                x1 = min(x1, x2)
            b1 = br_threshold_scan(x1, post, k).target
            b2 = br_threshold_scan(x2, post, k).target
            assert b1 >= x1 and b2 >= x2
            assert b2 >= b1
            if b1 >= x2 >= x1:
                assert b1 == b2
            if probes % 10 == 0:
                assert br_bruteforce(x1, post, inst.cost, inst.domain).target == b1
            probes += 1
    assert probes == 10_000


@pytest.mark.criterion(9, "uniform-prior cutoffs lie on {h_i - j/l} or the domain floor")
def test_cutoff_grid():
    rng = np.random.default_rng(9)
    for seed in range(200):
        n = 1 + seed % 10
        inst = random_threshold_instance(n, 50_000 + seed, _config(seed))
        ts = inst.prior.thresholds
        for _ in range(5):
            rel = _random_release(rng, n, inst.deployed_index)
            r = compute_cutoff(inst, rel)
            l = len(rel)
            grid = [ts[i] - j / l for i in rel for j in range(1, l + 1)]
            assert r == inst.domain.lo or min(abs(r - g) for g in grid) <= 1e-9, (seed, rel, r)


@pytest.mark.criterion(10, "FPR(support) <= FPR({h}) and FNR({h}) <= FNR(H), 500 instances x 50 releases")
def test_fpr_fnr_dominance():
    rng = np.random.default_rng(10)
    checked = 0
    for seed in range(500):
        n = 1 + seed % 10
        cfg = _config(seed, prior="dirichlet" if seed % 2 else "uniform", f_range=(0.3, 1.0))
        inst = random_threshold_instance(n, 60_000 + seed, cfg)
        neg = interval_prob(inst.data, -math.inf, inst.f, True, False)
        if neg <= 0 or neg >= 1:
            continue
        h = (inst.deployed_index,)
        assert release_fpr(inst, tuple(range(n))) <= release_fpr(inst, h) + 1e-12
        fnr_h = release_fnr(inst, h)
        for _ in range(50):
            rel = _random_release(rng, n, inst.deployed_index)
            assert fnr_h <= release_fnr(inst, rel) + 1e-12, (seed, rel)
        checked += 1
    assert checked >= 450


@pytest.mark.criterion(11, "subset-sum instances: optimal utility is 1 iff an equal split exists (50 vectors)")
def test_subset_sum_reduction():
    rng = np.random.default_rng(11)
    seen = set()
    for _ in range(50):
        a = [int(v) for v in rng.integers(1, 8, size=int(rng.integers(1, 11)))]
        total = sum(a)
        feasible = total % 2 == 0 and has_subset_sum(a, total // 2)
        u = optimize_release_bruteforce(generate_subset_sum_instance(a)).utility
        assert (u >= 1 - 1e-9) == feasible, (a, u)
        seen.add(feasible)
    assert seen == {True, False}


def _random_interval_config(rng):
    a = float(rng.uniform(0.0, 1.5))
    b = float(rng.uniform(a, 2.0)) if rng.random() < 0.9 else a + float(rng.uniform(1.0, 1.5))
    h = float(rng.uniform(a, b))
    f = float(rng.uniform(0.0, h))
    locs = sorted(set(float(v) for v in rng.uniform(-0.5, 2.5, int(rng.integers(0, 4)))))
    share = float(rng.uniform(0.0, 0.6)) if locs else 0.0
    masses = rng.dirichlet(np.ones(len(locs))) * share if locs else []
    lo = float(rng.uniform(-0.5, 0.5))
    hi = float(rng.uniform(1.5, 2.5))
    data = DataDistribution(
        atoms=tuple(zip(locs, (float(m) for m in masses))),
        uniform_pieces=((lo, hi, 1.0 - share),),
    )
    return a, b, f, h, data


@pytest.mark.criterion(12, "interval release: closed form matches a grid evaluation (1e-6) and the case formula")
def test_interval_closed_form():
    rng = np.random.default_rng(12)
    for trial in range(200):
        a, b, f, h, data = _random_interval_config(rng)
        rep = optimal_interval_release(a, b, f, h, data)
        c, d = rep.released

        def correct(xs, c=c, d=d):
            accepted = interval_br(xs, c, d) >= h
            return accepted == (xs >= f)

        grid_u = piecewise_accuracy(correct, data.uniform_pieces, data.atoms, -1.0, 3.0)
        assert abs(rep.utility - grid_u) <= 1e-6, (trial, rep.utility, grid_u)

        def correct_lib(xs, c=c, d=d):
            reach = np.array([br_interval_uniform(float(x), c, d).target >= h for x in xs])
            return reach == (xs >= f)

        lib_u = piecewise_accuracy(correct_lib, data.uniform_pieces, data.atoms, -1.0, 3.0, step=2e-3)
        assert abs(rep.utility - lib_u) <= 1e-6, (trial, rep.utility, lib_u)
        assert rep.utility == interval_case_formula(a, b, f, h, data), trial


@pytest.mark.criterion(13, "release utility matches a 10^5-sample Monte-Carlo estimate within 3 standard errors")
def test_monte_carlo_consistency():
    rng = np.random.default_rng(13)
    count = 100_000
    for seed in range(20):
        n = 1 + seed % 10
        cfg = _config(seed, prior="dirichlet" if seed % 2 else "uniform", data=("uniform", "mixed")[seed % 2])
        inst = random_threshold_instance(n, 70_000 + seed, cfg)
        rel = _random_release(rng, n, inst.deployed_index)
        exact = release_utility(inst, rel)
        xs = sample(inst.data, count, seed)
        targets = br_threshold_targets(xs, inst.posterior(rel), inst.cost.k)
        hits = np.mean((targets >= inst.h) == (xs >= inst.f))
        se = max(math.sqrt(exact * (1 - exact) / count), 1.0 / count)
        assert abs(hits - exact) <= 3 * se, (seed, hits, exact, se)
