"""JSON instance format.

Layout::

    {"domain": {"lo": 0.0, "hi": 2.0},
     "f": 1.9, "h": 2.0,
     "support": [1.8, 2.0], "prior_weights": [0.9, 0.1],
     "distribution": {"atoms": [[x, p], ...], "uniform_pieces": [[lo, hi, p], ...]},
     "cost": {"kind": "abs1d", "k": 1.0}}

Linear classifiers are ``{"w": [..], "b": ..}`` with a ``{"lo": [x, y],
"hi": [x, y]}`` box; table classifiers are ``{"accepts": [...]}`` over a
``{"points": [...]}`` domain with a ``{"kind": "table", "entries":
[[from, to, cost], ...]}`` cost.  A continuous uniform prior is written
``"support": {"uniform_interval": [a, b]}`` without ``prior_weights``.
Unknown keys are rejected everywhere.
"""

from __future__ import annotations

import json
import math

from stratrelease.core import (
    AbsoluteCost,
    Box,
    CostTable,
    FiniteDomain,
    Instance,
    Interval,
    LinearClassifier,
    PNormCost,
    Prior,
    TableClassifier,
    ThresholdClassifier,
    UniformIntervalPrior,
)
from stratrelease.distributions import DataDistribution
from stratrelease.errors import SchemaError

TOP_KEYS = ("domain", "f", "h", "support", "prior_weights", "distribution", "cost")


def _check_keys(obj, allowed, where: str, required=None):
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object")
    extra = set(obj) - set(allowed)
    if extra:
        raise SchemaError(f"{where}: unknown field(s) {sorted(extra)}")
    missing = set(allowed if required is None else required) - set(obj)
    if missing:
        raise SchemaError(f"{where}: missing field(s) {sorted(missing)}")


def _num(v) -> float | str:
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _point(v):
    return list(v) if isinstance(v, tuple) else v


# -- encoding ------------------------------------------------------------------


def classifier_to_json(c):
    if isinstance(c, ThresholdClassifier):
        return c.threshold
    if isinstance(c, LinearClassifier):
        return {"w": list(c.weights), "b": c.bias}
    return {"accepts": sorted(c.accepts)}


def instance_to_dict(inst: Instance) -> dict:
    d = inst.domain
    if isinstance(d, Interval):
        domain = {"lo": d.lo, "hi": d.hi}
    elif isinstance(d, Box):
        domain = {"lo": list(d.lo), "hi": list(d.hi)}
    else:
        domain = {"points": list(d.points)}
    out = {
        "domain": domain,
        "f": classifier_to_json(inst.ground_truth),
        "h": classifier_to_json(inst.deployed),
    }
    if isinstance(inst.prior, UniformIntervalPrior):
        out["support"] = {"uniform_interval": [inst.prior.a, inst.prior.b]}
    else:
        out["support"] = [classifier_to_json(c) for c in inst.prior.support]
        out["prior_weights"] = list(inst.prior.weights)
    out["distribution"] = {
        "atoms": [[_point(a), p] for a, p in inst.data.atoms],
        "uniform_pieces": [list(p) for p in inst.data.uniform_pieces],
    }
    c = inst.cost
    if isinstance(c, AbsoluteCost):
        out["cost"] = {"kind": "abs1d", "k": c.k}
    elif isinstance(c, PNormCost):
        out["cost"] = {"kind": "pnorm2d", "p": _num(c.p)}
    else:
        out["cost"] = {"kind": "table", "entries": [[a, b, v] for a, b, v in c.entries]}
    return out


def dumps(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"


# -- decoding ------------------------------------------------------------------


def _classifier(obj, where: str):
    if isinstance(obj, bool):
        raise SchemaError(f"{where}: booleans are not classifiers")
    if isinstance(obj, (int, float)):
        return ThresholdClassifier(obj)
    if isinstance(obj, dict) and "accepts" in obj:
        _check_keys(obj, ("accepts",), where)
        return TableClassifier(_hashable(v) for v in obj["accepts"])
    _check_keys(obj, ("w", "b"), where)
    return LinearClassifier(tuple(obj["w"]), obj["b"])


def _hashable(v):
    return tuple(v) if isinstance(v, list) else v


def _domain(obj):
    if isinstance(obj, dict) and "points" in obj:
        _check_keys(obj, ("points",), "domain")
        return FiniteDomain(tuple(_hashable(p) for p in obj["points"]))
    _check_keys(obj, ("lo", "hi"), "domain")
    if isinstance(obj["lo"], list):
        return Box(tuple(obj["lo"]), tuple(obj["hi"]))
    return Interval(obj["lo"], obj["hi"])


def _cost(obj):
    if not isinstance(obj, dict) or "kind" not in obj:
        raise SchemaError("cost: expected an object with a 'kind'")
    kind = obj["kind"]
    if kind == "abs1d":
        _check_keys(obj, ("kind", "k"), "cost")
        return AbsoluteCost(obj["k"])
    if kind == "pnorm2d":
        _check_keys(obj, ("kind", "p"), "cost")
        return PNormCost(float(obj["p"]))
    if kind == "table":
        _check_keys(obj, ("kind", "entries"), "cost")
        return CostTable(tuple((_hashable(a), _hashable(b), c) for a, b, c in obj["entries"]))
    raise SchemaError(f"cost: unknown kind {kind!r}")


def _distribution(obj):
    _check_keys(obj, ("atoms", "uniform_pieces"), "distribution", required=())
    atoms = tuple((_hashable(a), p) for a, p in obj.get("atoms", []))
    pieces = tuple(tuple(p) for p in obj.get("uniform_pieces", []))
    return DataDistribution(atoms=atoms, uniform_pieces=pieces)


def instance_from_dict(obj: dict) -> Instance:
    interval = isinstance(obj, dict) and isinstance(obj.get("support"), dict)
    required = [k for k in TOP_KEYS if not (interval and k == "prior_weights")]
    _check_keys(obj, TOP_KEYS, "instance", required=required)
    f = _classifier(obj["f"], "f")
    h = _classifier(obj["h"], "h")
    if interval:
        if "prior_weights" in obj:
            raise SchemaError("prior_weights must be omitted for an interval prior")
        _check_keys(obj["support"], ("uniform_interval",), "support")
        a, b = obj["support"]["uniform_interval"]
        prior = UniformIntervalPrior(a, b)
    else:
        support = [_classifier(c, f"support[{i}]") for i, c in enumerate(obj["support"])]
        weights = obj["prior_weights"]
        if isinstance(h, ThresholdClassifier):
            prior = Prior.from_thresholds([c.threshold for c in support], weights)
        else:
            prior = Prior(tuple(support), tuple(weights))
    return Instance(
        domain=_domain(obj["domain"]),
        ground_truth=f,
        deployed=h,
        prior=prior,
        data=_distribution(obj["distribution"]),
        cost=_cost(obj["cost"]),
    )


def loads(text: str) -> Instance:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    return instance_from_dict(obj)


def load(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
