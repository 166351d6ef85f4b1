"""Road graph with lanes, turn permissions and fixed-time signals.

Networks are stored as JSON::

    {
      "nodes": [{"id", "x", "y", "control", "signal"?}],
      "edges": [{"id", "from", "to", "length_m", "lanes",
                 "speed_limit_mps", "turns": {"<lane>": [edge ids]}}]
    }

``control`` is ``"uncontrolled-priority"`` or ``"signalized"``.  A signalized
node may carry ``"signal": {"cycle": s, "phases": [{"edges": [...],
"green": s, "yellow": s}]}``; when omitted a default two-phase plan is built.
Lane 0 is the rightmost lane.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict, deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import InvalidParam, ParseError, ValidationError

PRIORITY = "uncontrolled-priority"
SIGNALIZED = "signalized"
CONTROLS = (PRIORITY, SIGNALIZED)

#: speed limits used by :func:`generate_grid` (50 km/h and 30 km/h)
ARTERIAL_SPEED = 13.89
LOCAL_SPEED = 8.33

DEFAULT_CYCLE = 60.0
DEFAULT_YELLOW = 3.0

STRAIGHT, LEFT, RIGHT, UTURN = "straight", "left", "right", "uturn"


@dataclass(frozen=True)
class Phase:
    edges: tuple[str, ...]
    green: float
    yellow: float

    @property
    def duration(self) -> float:
        return self.green + self.yellow


@dataclass(frozen=True)
class SignalPlan:
    cycle: float
    phases: tuple[Phase, ...]

    def windows(self, edge_id: str) -> list[tuple[float, float, float]]:
        """(start, end of green, end of yellow) offsets serving ``edge_id``."""
        out = []
        t = 0.0
        for ph in self.phases:
            if edge_id in ph.edges:
                out.append((t, t + ph.green, t + ph.duration))
            t += ph.duration
        return out

    def state(self, edge_id: str, time: float) -> str:
        """'green', 'yellow' or 'red' for an incoming edge at ``time``."""
        tc = math.fmod(time, self.cycle)
        for start, g_end, y_end in self.windows(edge_id):
            if start <= tc < g_end:
                return "green"
            if g_end <= tc < y_end:
                return "yellow"
        return "red"


@dataclass(frozen=True)
class Node:
    id: str
    x: float
    y: float
    control: str = PRIORITY
    signal: SignalPlan | None = None


@dataclass(frozen=True)
class Edge:
    id: str
    from_node: str
    to_node: str
    length: float
    lane_count: int
    speed_limit: float
    turns: tuple[tuple[str, ...], ...] = ()

    def permits(self, lane: int, out_edge: str) -> bool:
        return out_edge in self.turns[lane]

    @property
    def free_flow_time(self) -> float:
        return self.length / self.speed_limit


@dataclass(frozen=True)
class RoadNetwork:
    nodes: dict[str, Node]
    edges: dict[str, Edge]

    @property
    def total_length(self) -> float:
        """Sum of edge lengths in meters."""
        return float(sum(e.length for e in self.edges.values()))

    @property
    def total_length_km(self) -> float:
        return self.total_length / 1000.0

    @property
    def total_lane_km(self) -> float:
        return float(sum(e.length * e.lane_count for e in self.edges.values())) / 1000.0

    @property
    def max_speed(self) -> float:
        return max(e.speed_limit for e in self.edges.values())

    @cached_property
    def edge_ids(self) -> list[str]:
        return sorted(self.edges)

    @cached_property
    def edge_index(self) -> dict[str, int]:
        return {eid: i for i, eid in enumerate(self.edge_ids)}

    @cached_property
    def outgoing(self) -> dict[str, list[str]]:
        out = defaultdict(list)
        for e in self.edge_ids:
            out[self.edges[e].from_node].append(e)
        return {n: out.get(n, []) for n in self.nodes}

    @cached_property
    def incoming(self) -> dict[str, list[str]]:
        inc = defaultdict(list)
        for e in self.edge_ids:
            inc[self.edges[e].to_node].append(e)
        return {n: inc.get(n, []) for n in self.nodes}

    def successors(self, edge_id: str) -> list[str]:
        """Edges reachable from ``edge_id`` through at least one lane."""
        e = self.edges[edge_id]
        allowed = set().union(*e.turns) if e.turns else set()
        return [o for o in self.outgoing[e.to_node] if o in allowed]

    def turn_direction(self, edge_id: str, out_id: str) -> str:
        return turn_direction(self, self.edges[edge_id], self.edges[out_id])

    def entry_lane(self, edge_id: str, lane: int, out_id: str) -> int:
        """Lane of ``out_id`` a vehicle leaving ``edge_id`` on ``lane`` lands in."""
        n_out = self.edges[out_id].lane_count
        d = self.turn_direction(edge_id, out_id)
        if d == RIGHT:
            return 0
        if d in (LEFT, UTURN):
            return n_out - 1
        return min(lane, n_out - 1)

    def to_dict(self) -> dict:
        nodes = []
        for nid in sorted(self.nodes):
            n = self.nodes[nid]
            d = {"id": n.id, "x": n.x, "y": n.y, "control": n.control}
            if n.signal is not None:
                d["signal"] = {
                    "cycle": n.signal.cycle,
                    "phases": [
                        {"edges": sorted(p.edges), "green": p.green, "yellow": p.yellow}
                        for p in n.signal.phases
                    ],
                }
            nodes.append(d)
        edges = []
        for eid in self.edge_ids:
            e = self.edges[eid]
            edges.append({
                "id": e.id,
                "from": e.from_node,
                "to": e.to_node,
                "length_m": e.length,
                "lanes": e.lane_count,
                "speed_limit_mps": e.speed_limit,
                "turns": {str(i): sorted(t) for i, t in enumerate(e.turns)},
            })
        return {"nodes": nodes, "edges": edges}

    def dumps(self) -> str:
        """Canonical JSON text (sorted keys and ids)."""
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def turn_direction(net: RoadNetwork, edge: Edge, out: Edge) -> str:
    a0, a1 = net.nodes[edge.from_node], net.nodes[edge.to_node]
    b0, b1 = net.nodes[out.from_node], net.nodes[out.to_node]
    if out.to_node == edge.from_node:
        return UTURN
    ax, ay = a1.x - a0.x, a1.y - a0.y
    bx, by = b1.x - b0.x, b1.y - b0.y
    ang = math.degrees(math.atan2(ax * by - ay * bx, ax * bx + ay * by))
    if ang > 150 or ang < -150:
        return UTURN
    if ang > 30:
        return LEFT
    if ang < -30:
        return RIGHT
    return STRAIGHT


def default_signal_plan(net_nodes: dict[str, Node], node_id: str, incoming: list[Edge],
                        cycle: float = DEFAULT_CYCLE, yellow: float = DEFAULT_YELLOW) -> SignalPlan:
    """Two-phase plan: north-south approaches, then east-west, even green split."""
    node = net_nodes[node_id]
    ns, ew = [], []
    for e in incoming:
        src = net_nodes[e.from_node]
        dx, dy = node.x - src.x, node.y - src.y
        (ew if abs(dx) >= abs(dy) else ns).append(e.id)
    groups = [g for g in (ns, ew) if g]
    green = (cycle - yellow * len(groups)) / len(groups)
    return SignalPlan(cycle, tuple(Phase(tuple(sorted(g)), green, yellow) for g in groups))


def _num(raw, key, where):
    try:
        v = raw[key]
    except KeyError:
        raise ParseError(f"{where}: missing field {key!r}") from None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"{where}: field {key!r} must be a number")
    return v


def from_dict(data: dict) -> RoadNetwork:
    """Build and validate a network from its JSON document."""
    if not isinstance(data, dict) or "nodes" not in data or "edges" not in data:
        raise ParseError("network document needs 'nodes' and 'edges' arrays")
    nodes: dict[str, Node] = {}
    raw_signals = {}
    for raw in data["nodes"]:
        try:
            nid = str(raw["id"])
        except (KeyError, TypeError):
            raise ParseError("node without id") from None
        if nid in nodes:
            raise ValidationError(nid, f"duplicate node id {nid!r}")
        control = raw.get("control", PRIORITY)
        if control not in CONTROLS:
            raise ValidationError(nid, f"node {nid!r}: unknown control {control!r}")
        nodes[nid] = Node(nid, float(_num(raw, "x", nid)), float(_num(raw, "y", nid)), control)
        if "signal" in raw:
            raw_signals[nid] = raw["signal"]

    edges: dict[str, Edge] = {}
    for raw in data["edges"]:
        try:
            eid = str(raw["id"])
            src, dst = str(raw["from"]), str(raw["to"])
        except (KeyError, TypeError):
            raise ParseError("edge without id/from/to") from None
        if eid in edges:
            raise ValidationError(eid, f"duplicate edge id {eid!r}")
        for n in (src, dst):
            if n not in nodes:
                raise ValidationError(n, f"edge {eid!r} references missing node {n!r}")
        length = float(_num(raw, "length_m", eid))
        lanes = _num(raw, "lanes", eid)
        speed = float(_num(raw, "speed_limit_mps", eid))
        if not length > 0:
            raise ValidationError(eid, f"edge {eid!r} has non-positive length")
        if int(lanes) != lanes or lanes < 1:
            raise ValidationError(eid, f"edge {eid!r} needs an integer lane count >= 1")
        if not speed > 0:
            raise ValidationError(eid, f"edge {eid!r} has non-positive speed limit")
        lanes = int(lanes)
        raw_turns = raw.get("turns", {})
        if not isinstance(raw_turns, dict):
            raise ParseError(f"{eid}: 'turns' must map lane index to edge ids")
        turns = [[] for _ in range(lanes)]
        for k, v in raw_turns.items():
            try:
                li = int(k)
            except ValueError:
                raise ParseError(f"{eid}: bad lane index {k!r}") from None
            if not 0 <= li < lanes:
                raise ValidationError(eid, f"edge {eid!r}: turn lane {li} out of range")
            turns[li] = sorted(str(x) for x in v)
        edges[eid] = Edge(eid, src, dst, length, lanes, speed, tuple(tuple(t) for t in turns))

    # signals need the incoming edge sets
    incoming = defaultdict(list)
    for e in edges.values():
        incoming[e.to_node].append(e)
    for nid, n in list(nodes.items()):
        inc = sorted(incoming[nid], key=lambda e: e.id)
        if n.control == SIGNALIZED:
            if nid in raw_signals:
                plan = _parse_signal(nid, raw_signals[nid])
            elif inc:
                plan = default_signal_plan(nodes, nid, inc)
            else:
                raise ValidationError(nid, f"signalized node {nid!r} has no incoming edges")
            nodes[nid] = Node(n.id, n.x, n.y, n.control, plan)
        elif nid in raw_signals:
            raise ValidationError(nid, f"node {nid!r} carries a signal but is not signalized")

    net = RoadNetwork(nodes, dict(sorted(edges.items())))
    validate(net)
    return net


def _parse_signal(nid, raw) -> SignalPlan:
    try:
        phases = tuple(
            Phase(tuple(sorted(str(x) for x in p["edges"])), float(p["green"]), float(p["yellow"]))
            for p in raw["phases"]
        )
        return SignalPlan(float(raw["cycle"]), phases)
    except (KeyError, TypeError, ValueError):
        raise ParseError(f"node {nid!r}: malformed signal plan") from None


def validate(net: RoadNetwork) -> None:
    """Check every structural invariant; raise ValidationError naming the culprit."""
    if not net.nodes:
        raise ValidationError("nodes", "network has no nodes")
    for e in net.edges.values():
        outs = net.outgoing[e.to_node]
        allowed = set()
        for lane_turns in e.turns:
            for o in lane_turns:
                if o not in net.edges:
                    raise ValidationError(o, f"edge {e.id!r} turns onto missing edge {o!r}")
                if o not in outs:
                    raise ValidationError(o, f"edge {o!r} does not leave the end node of {e.id!r}")
                allowed.add(o)
        for o in outs:
            if net.edges[o].to_node != e.from_node and o not in allowed:
                raise ValidationError(e.id, f"outgoing edge {o!r} unreachable from any lane of {e.id!r}")
    for n in net.nodes.values():
        if n.control != SIGNALIZED:
            continue
        plan = n.signal
        if plan is None:
            raise ValidationError(n.id, f"signalized node {n.id!r} lacks a signal plan")
        if not plan.phases or abs(sum(p.duration for p in plan.phases) - plan.cycle) > 1e-9:
            raise ValidationError(n.id, f"node {n.id!r}: phase durations do not sum to the cycle")
        if any(p.green < 0 or p.yellow < 0 for p in plan.phases):
            raise ValidationError(n.id, f"node {n.id!r}: negative phase duration")
        inc = set(net.incoming[n.id])
        served = set().union(*(p.edges for p in plan.phases))
        for x in served - inc:
            raise ValidationError(x, f"node {n.id!r} serves {x!r}, which is not an incoming edge")
        for x in sorted(inc - served):
            raise ValidationError(x, f"incoming edge {x!r} never served at node {n.id!r}")

    # weak connectivity
    adj = defaultdict(set)
    for e in net.edges.values():
        adj[e.from_node].add(e.to_node)
        adj[e.to_node].add(e.from_node)
    start = min(net.nodes)
    seen = {start}
    queue = deque([start])
    while queue:
        for m in adj[queue.popleft()]:
            if m not in seen:
                seen.add(m)
                queue.append(m)
    for nid in sorted(net.nodes):
        if nid not in seen:
            raise ValidationError(nid, f"node {nid!r} is disconnected from the network")


def load_network(path) -> RoadNetwork:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ParseError(f"network file not found: {path}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return from_dict(data)


def save_network(net: RoadNetwork, path) -> None:
    Path(path).write_text(net.dumps())


def _grid_turns(nodes, e: Edge, outs: list[Edge]) -> tuple[tuple[str, ...], ...]:
    tmp = RoadNetwork(nodes, {})
    by_dir = defaultdict(list)
    for o in outs:
        by_dir[turn_direction(tmp, e, o)].append(o.id)
    non_u = by_dir[STRAIGHT] + by_dir[LEFT] + by_dir[RIGHT]
    # U-turns only where nothing else leaves the node (grid corners)
    uturn = by_dir[UTURN] if len(non_u) <= 1 else []
    if e.lane_count == 1:
        return (tuple(sorted(non_u + uturn)),)
    right_lane = by_dir[RIGHT] + by_dir[STRAIGHT]
    left_lane = by_dir[STRAIGHT] + by_dir[LEFT] + uturn
    if not right_lane:
        right_lane = list(non_u)
    if not left_lane:
        left_lane = list(non_u)
    lanes = [right_lane] + [by_dir[STRAIGHT] or list(non_u)] * (e.lane_count - 2) + [left_lane]
    return tuple(tuple(sorted(set(l))) for l in lanes)


def generate_grid(rows: int, cols: int, block_len: float = 200.0, two_lane_share: float = 0.5,
                  signalized_share: float = 0.5, seed: int = 0) -> RoadNetwork:
    """Bidirectional rows x cols grid surrogate of an urban network.

    Two-lane roads (both directions) and signalized nodes are drawn from
    ``seed`` so that their shares match the requested ones up to rounding.
    Two-lane edges get the arterial speed limit, one-lane edges the local one.
    On two-lane edges the right lane serves right turns and straight on, the
    left lane straight on and left turns.
    """
    if int(rows) != rows or int(cols) != cols or rows < 2 or cols < 2:
        raise InvalidParam("rows and cols must be integers >= 2")
    if not block_len > 0:
        raise InvalidParam("block_len must be positive")
    for name, share in (("two_lane_share", two_lane_share), ("signalized_share", signalized_share)):
        if not 0.0 <= share <= 1.0:
            raise InvalidParam(f"{name} must lie in [0, 1]")
    rows, cols = int(rows), int(cols)
    rng = np.random.default_rng(seed)

    def nid(r, c):
        return f"n{r}_{c}"

    node_ids = [nid(r, c) for r in range(rows) for c in range(cols)]
    roads = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                roads.append((nid(r, c), nid(r, c + 1)))
            if r + 1 < rows:
                roads.append((nid(r, c), nid(r + 1, c)))
    roads.sort()
    n_two = int(round(two_lane_share * len(roads)))
    two_lane = {roads[i] for i in rng.permutation(len(roads))[:n_two]}
    ordered_nodes = sorted(node_ids)
    n_sig = int(round(signalized_share * len(ordered_nodes)))
    signalized = {ordered_nodes[i] for i in rng.permutation(len(ordered_nodes))[:n_sig]}

    nodes = {}
    for r in range(rows):
        for c in range(cols):
            i = nid(r, c)
            nodes[i] = Node(i, float(c * block_len), float(r * block_len),
                            SIGNALIZED if i in signalized else PRIORITY)
    bare = []
    for a, b in roads:
        lanes = 2 if (a, b) in two_lane else 1
        speed = ARTERIAL_SPEED if lanes == 2 else LOCAL_SPEED
        for s, t in ((a, b), (b, a)):
            bare.append(Edge(f"{s}-{t}", s, t, float(block_len), lanes, speed))
    outs = defaultdict(list)
    inc = defaultdict(list)
    for e in bare:
        outs[e.from_node].append(e)
        inc[e.to_node].append(e)
    edges = {}
    for e in sorted(bare, key=lambda x: x.id):
        turns = _grid_turns(nodes, e, outs[e.to_node])
        edges[e.id] = Edge(e.id, e.from_node, e.to_node, e.length, e.lane_count, e.speed_limit, turns)
    for i in signalized:
        n = nodes[i]
        plan = default_signal_plan(nodes, i, sorted(inc[i], key=lambda x: x.id))
        nodes[i] = Node(n.id, n.x, n.y, n.control, plan)
    net = RoadNetwork(dict(sorted(nodes.items())), edges)
    validate(net)
    return net


def boundary_nodes(net: RoadNetwork) -> list[str]:
    """Nodes on the convex hull bounding box of the network."""
    xs = [n.x for n in net.nodes.values()]
    ys = [n.y for n in net.nodes.values()]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    return sorted(n.id for n in net.nodes.values() if n.x in (x0, x1) or n.y in (y0, y1))
