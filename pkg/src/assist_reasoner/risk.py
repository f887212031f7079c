"""Node sentiment, propagation, pooling and the safe/unsafe decision."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Mapping, NamedTuple, Optional, Tuple

from .graph import SceneGraph, clamp
from .knowledge import ConnotationLexicon, polarity

CHILD_LABELS = frozenset({"child", "baby", "kid", "infant", "toddler"})


@dataclass(frozen=True)
class RiskParams:
    alpha: float = 0.3
    tol: float = 1e-6
    max_iters: int = 50
    beta: float = 1.0
    threshold: float = 0.5
    child_adjustment: float = 0.15
    threshold_floor: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError("alpha must lie in [0, 1)")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError("threshold must lie in (0, 1]")
        if self.child_adjustment < 0:
            raise ValueError("child_adjustment must be >= 0")
        if not 0.0 < self.threshold_floor <= self.threshold:
            raise ValueError("threshold_floor must lie in (0, threshold]")


class NodeFactor(NamedTuple):
    base: float
    proximity: float
    factor: float


@dataclass(frozen=True)
class Contribution:
    id: str
    label: str
    base_polarity: float
    proximity: float
    spatial_factor: float
    sentiment: float
    pooling_weight: float


@dataclass(frozen=True)
class RiskAssessment:
    risk: float
    effective_threshold: float
    verdict: str
    contributions: Tuple[Contribution, ...] = ()
    iterations_used: int = 0
    child_context: bool = False

    @property
    def unsafe(self) -> bool:
        return self.verdict == "unsafe"


class PropagationResult(NamedTuple):
    graph: SceneGraph
    iterations_used: int


def _direct_proximity(entity, persons, diag) -> Optional[float]:
    if entity.bbox is None or not persons or not diag:
        return None
    cx, cy = entity.center
    d = min(math.hypot(cx - px, cy - py) for px, py in persons)
    return clamp(1.0 - d / diag, 0.0, 1.0)


def proximities(graph: SceneGraph) -> Dict[str, float]:
    """Closeness of every entity to the nearest person, in [0, 1].

    Entities without a bbox inherit the best value among bbox-carrying
    neighbours; anything else (no person, no image size) gets 0.
    """
    dims = graph.dims
    diag = math.hypot(*dims) if dims else None
    persons = [e.center for e in graph if e.category == "person" and e.bbox is not None]
    direct = {e.id: _direct_proximity(e, persons, diag) for e in graph}
    out = {}
    for e in graph:
        if e.bbox is not None:
            out[e.id] = direct[e.id] or 0.0
        else:
            inherited = [direct[n] for n, _ in graph.neighbors(e.id) if direct[n] is not None]
            out[e.id] = max(inherited, default=0.0)
    return out


def spatial_factors(graph: SceneGraph, lexicon: ConnotationLexicon, params: RiskParams) -> Dict[str, NodeFactor]:
    prox = proximities(graph)
    out = {}
    for e in graph:
        base = polarity(lexicon, e.label)
        f = 1.0 + params.beta * prox[e.id] if base < 0 else 1.0
        out[e.id] = NodeFactor(base, prox[e.id], f)
    return out


def assign_sentiment(
    graph: SceneGraph,
    lexicon: ConnotationLexicon,
    params: Optional[RiskParams] = None,
    factors: Optional[Mapping[str, NodeFactor]] = None,
) -> SceneGraph:
    """Lexicon polarity per node, amplified for negative nodes near a person."""
    params = params or RiskParams()
    if factors is None:
        factors = spatial_factors(graph, lexicon, params)
    return graph.with_sentiments({k: clamp(f.base * f.factor) for k, f in factors.items()})


def propagate(graph: SceneGraph, params: Optional[RiskParams] = None) -> PropagationResult:
    """Damped neighbourhood averaging anchored on the current sentiments.

    Jacobi sweeps of ``S <- (1-a) base + a * weighted_mean(neighbours)`` over the
    undirected graph until the largest change drops below ``tol``.
    """
    params = params or RiskParams()
    a = params.alpha
    base = {e.id: e.sentiment for e in graph}
    nbrs = {nid: graph.neighbors(nid) for nid in base}
    s = dict(base)
    iterations = 0
    for iterations in range(1, params.max_iters + 1):
        new = {}
        for nid, b in base.items():
            nb = nbrs[nid]
            if not nb:
                new[nid] = b
                continue
            total = math.fsum(c for _, c in nb)
            mean = math.fsum(c * s[m] for m, c in nb) / total
            new[nid] = clamp((1.0 - a) * b + a * mean)
        delta = max((abs(new[k] - s[k]) for k in s), default=0.0)
        s = new
        if delta < params.tol:
            break
    return PropagationResult(graph.with_sentiments(s), iterations)


def pooling_weight(degree: int) -> float:
    return 1.0 + math.log1p(degree)


def pool_risk(graph: SceneGraph) -> float:
    """Degree-weighted share of negative sentiment mass, in [0, 1]."""
    if len(graph) == 0:
        return 0.0
    degree = dict.fromkeys(graph.entities, 0)
    for r in graph.relations:
        degree[r.head] += 1
        degree[r.tail] += 1
    w = {k: pooling_weight(d) for k, d in degree.items()}
    neg = math.fsum(-e.sentiment * w[e.id] for e in graph if e.sentiment < 0)
    return clamp(neg / math.fsum(w.values()), 0.0, 1.0)


def child_context(graph: SceneGraph, flag: bool = False) -> bool:
    return bool(flag) or any(e.label in CHILD_LABELS for e in graph.perceived())


def effective_threshold(params: RiskParams, child: bool) -> float:
    adj = params.child_adjustment if child else 0.0
    return max(params.threshold_floor, params.threshold - adj)


def decide(
    graph: SceneGraph,
    risk: float,
    params: Optional[RiskParams] = None,
    child_present: bool = False,
    factors: Optional[Mapping[str, NodeFactor]] = None,
    iterations_used: int = 0,
) -> RiskAssessment:
    params = params or RiskParams()
    if not 0.0 <= risk <= 1.0:
        raise ValueError(f"risk {risk} outside [0, 1]")
    child = child_context(graph, child_present)
    tau = effective_threshold(params, child)

    contributions = []
    for eid in sorted(graph.entities):
        e = graph.entities[eid]
        f = factors.get(eid) if factors else None
        contributions.append(Contribution(
            id=eid,
            label=e.label,
            base_polarity=f.base if f else 0.0,
            proximity=f.proximity if f else 0.0,
            spatial_factor=f.factor if f else 1.0,
            sentiment=e.sentiment,
            pooling_weight=pooling_weight(graph.degree(eid)),
        ))
    return RiskAssessment(
        risk=risk,
        effective_threshold=tau,
        verdict="unsafe" if risk > tau else "safe",
        contributions=tuple(contributions),
        iterations_used=iterations_used,
        child_context=child,
    )


def assess(
    graph: SceneGraph,
    lexicon: ConnotationLexicon,
    params: Optional[RiskParams] = None,
    child_present: bool = False,
) -> Tuple[SceneGraph, RiskAssessment]:
    """assign_sentiment -> propagate -> pool_risk -> decide."""
    params = params or RiskParams()
    factors = spatial_factors(graph, lexicon, params)
    g = assign_sentiment(graph, lexicon, params, factors)
    g, iters = propagate(g, params)
    risk = pool_risk(g)
    return g, decide(g, risk, params, child_present, factors, iters)
