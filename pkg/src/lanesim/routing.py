"""Fastest-route search over edge travel times."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable

from .errors import Unreachable
from .metrics import EdgeMeasure
from .network import RoadNetwork

SPEED_FLOOR = 0.1  # m/s
WINDOW = 300.0     # s
REFRESH = 60.0     # s


@dataclass(frozen=True)
class EdgeWeights:
    weights: dict[str, float]
    timestamp: float = 0.0

    def __getitem__(self, edge_id):
        return self.weights[edge_id]


def free_flow_weights(net: RoadNetwork, timestamp: float = 0.0) -> EdgeWeights:
    return EdgeWeights({e: net.edges[e].free_flow_time for e in net.edge_ids}, timestamp)


def weights_from_measures(net: RoadNetwork, recent: Iterable[EdgeMeasure],
                          now: float | None = None, window: float = WINDOW) -> EdgeWeights:
    """Travel time = length / recent mean speed, floored at 0.1 m/s.

    Speeds are count-weighted over the measures whose interval starts within
    ``window`` seconds before ``now`` (all of them when ``now`` is None).
    Edges without observations keep their free-flow time.
    """
    num: dict[str, float] = {}
    den: dict[str, float] = {}
    for m in recent:
        if now is not None and not (now - window <= m.interval_start < now):
            continue
        if m.mean_count > 0:
            num[m.edge] = num.get(m.edge, 0.0) + m.mean_speed * m.mean_count
            den[m.edge] = den.get(m.edge, 0.0) + m.mean_count
    out = {}
    for eid in net.edge_ids:
        edge = net.edges[eid]
        ff = edge.free_flow_time
        if den.get(eid, 0.0) > 0:
            v = max(num[eid] / den[eid], SPEED_FLOOR)
            out[eid] = max(edge.length / v, ff)
        else:
            out[eid] = ff
    return EdgeWeights(out, 0.0 if now is None else now)


class _Heuristic:
    """Straight-line distance over the top speed, scaled to stay admissible."""

    def __init__(self, net: RoadNetwork):
        self.net = net
        ratio = 1.0
        for e in net.edges.values():
            d = self._dist(e.from_node, e.to_node)
            if d > 0:
                ratio = min(ratio, e.length / d)
        self.scale = ratio / net.max_speed

    def _dist(self, a, b):
        na, nb = self.net.nodes[a], self.net.nodes[b]
        return math.hypot(na.x - nb.x, na.y - nb.y)

    def __call__(self, edge_id, dest_id):
        if edge_id == dest_id:
            return 0.0
        return self._dist(self.net.edges[edge_id].to_node, self.net.edges[dest_id].to_node) * self.scale


_heuristics: dict[int, _Heuristic] = {}


def path_cost(weights: EdgeWeights, path) -> float:
    return float(sum(weights[e] for e in path))


def astar_fastest(net: RoadNetwork, weights: EdgeWeights, origin: str, destination: str) -> list[str]:
    """Minimum-weight edge sequence from ``origin`` to ``destination``, both included.

    Transitions follow the lane turn permissions.  Among equal-cost
    candidates the expansion order falls back to edge id.
    """
    if origin not in net.edges:
        raise Unreachable(origin, destination)
    if destination not in net.edges:
        raise Unreachable(origin, destination)
    if origin == destination:
        return [origin]
    h = _heuristics.get(id(net))
    if h is None or h.net is not net:
        h = _heuristics[id(net)] = _Heuristic(net)
    g = {origin: weights[origin]}
    parent = {origin: None}
    heap = [(g[origin] + h(origin, destination), origin)]
    closed = set()
    while heap:
        _, e = heapq.heappop(heap)
        if e in closed:
            continue
        if e == destination:
            path = [e]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            return path[::-1]
        closed.add(e)
        ge = g[e]
        for o in net.successors(e):
            if o in closed:
                continue
            cand = ge + weights[o]
            if cand < g.get(o, math.inf) - 1e-12:
                g[o] = cand
                parent[o] = e
                heapq.heappush(heap, (cand + h(o, destination), o))
    raise Unreachable(origin, destination)
