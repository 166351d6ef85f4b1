import networkx as nx
import numpy as np
import pytest

from conftest import corridor_doc
from lanesim.errors import Unreachable
from lanesim.metrics import EdgeMeasure
from lanesim.network import from_dict, generate_grid
from lanesim.routing import (SPEED_FLOOR, EdgeWeights, astar_fastest, free_flow_weights, path_cost,
                             weights_from_measures)


def _line_graph(net, weights):
    g = nx.DiGraph()
    g.add_nodes_from(net.edge_ids)
    for e in net.edge_ids:
        for o in net.successors(e):
            g.add_edge(e, o, weight=weights[o])
    return g


def test_astar_matches_dijkstra_on_200_random_instances():
    rng = np.random.default_rng(2024)
    checked = 0
    for k in range(200):
        rows, cols = rng.integers(2, 6, size=2)
        net = generate_grid(int(rows), int(cols), block_len=float(rng.uniform(80, 300)),
                            two_lane_share=float(rng.uniform()), signalized_share=0.0, seed=k)
        ff = free_flow_weights(net)
        w = EdgeWeights({e: ff[e] * float(rng.uniform(1.0, 6.0)) for e in net.edge_ids})
        o, d = rng.choice(net.edge_ids, size=2, replace=False)
        g = _line_graph(net, w)
        try:
            expected = nx.dijkstra_path_length(g, o, d) + w[o]
        except nx.NetworkXNoPath:
            with pytest.raises(Unreachable):
                astar_fastest(net, w, o, d)
            continue
        path = astar_fastest(net, w, o, d)
        assert path[0] == o and path[-1] == d
        for a, b in zip(path, path[1:]):
            assert b in net.successors(a)
        assert path_cost(w, path) == pytest.approx(expected, rel=1e-9)
        checked += 1
    assert checked >= 150


def test_trivial_and_unknown_routes():
    net = generate_grid(3, 3)
    w = free_flow_weights(net)
    assert astar_fastest(net, w, "n0_0-n0_1", "n0_0-n0_1") == ["n0_0-n0_1"]
    with pytest.raises(Unreachable):
        astar_fastest(net, w, "n0_0-n0_1", "nowhere")


def test_unreachable_against_turn_permissions():
    # a1-a0 exists but no lane of a0-a1 turns back onto it
    doc = corridor_doc(lanes=(1, 1))
    doc["edges"].append({"id": "a1-a0", "from": "a1", "to": "a0", "length_m": 200.0, "lanes": 1,
                         "speed_limit_mps": 13.89, "turns": {}})
    net = from_dict(doc)
    with pytest.raises(Unreachable) as exc:
        astar_fastest(net, free_flow_weights(net), "a1-a2", "a1-a0")
    assert exc.value.origin == "a1-a2"


def test_congestion_diverts_route():
    net = generate_grid(3, 3, two_lane_share=0.0, signalized_share=0.0)
    w = free_flow_weights(net)
    base = astar_fastest(net, w, "n0_0-n0_1", "n2_1-n2_2")
    slow = dict(w.weights)
    for e in base[1:-1]:
        slow[e] *= 50
    alt = astar_fastest(net, EdgeWeights(slow), "n0_0-n0_1", "n2_1-n2_2")
    assert alt != base
    assert path_cost(EdgeWeights(slow), alt) < path_cost(EdgeWeights(slow), base)


def test_weights_from_measures():
    net = generate_grid(2, 2, block_len=100, two_lane_share=0.0)
    e1, e2, e3 = net.edge_ids[:3]
    ms = [
        EdgeMeasure.from_counts(0.0, e1, 2.0, 1.0, 100),
        EdgeMeasure.from_counts(60.0, e1, 4.0, 3.0, 100),
        EdgeMeasure.from_counts(60.0, e2, 0.0, 2.0, 100),     # standing queue
        EdgeMeasure.from_counts(-400.0, e3, 1.0, 5.0, 100),   # outside the window
    ]
    w = weights_from_measures(net, ms, now=120.0, window=300.0)
    assert w[e1] == pytest.approx(100 / ((2 * 1 + 4 * 3) / 4))
    assert w[e2] == pytest.approx(100 / SPEED_FLOOR)
    assert w[e3] == pytest.approx(net.edges[e3].free_flow_time)
    # never faster than free flow
    fast = weights_from_measures(net, [EdgeMeasure.from_counts(0.0, e1, 99.0, 1.0, 100)])
    assert fast[e1] == pytest.approx(net.edges[e1].free_flow_time)
