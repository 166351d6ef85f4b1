import pytest

from lanesim.network import from_dict


def corridor_doc(lanes=(1, 1), length=200.0, speed=13.89, signal=None, turns=None):
    """A straight chain of edges a0-a1, a1-a2, ... along the x axis."""
    n = len(lanes) + 1
    nodes = [{"id": f"a{i}", "x": i * length, "y": 0.0, "control": "uncontrolled-priority"}
             for i in range(n)]
    edges = []
    for i, nl in enumerate(lanes):
        eid = f"a{i}-a{i + 1}"
        nxt = [f"a{i + 1}-a{i + 2}"] if i + 1 < len(lanes) else []
        t = (turns or {}).get(eid, {str(l): nxt for l in range(nl)})
        edges.append({"id": eid, "from": f"a{i}", "to": f"a{i + 1}", "length_m": length,
                      "lanes": nl, "speed_limit_mps": speed, "turns": t})
    if signal is not None:
        node_id, plan = signal
        for nd in nodes:
            if nd["id"] == node_id:
                nd["control"] = "signalized"
                nd["signal"] = plan
    return {"nodes": nodes, "edges": edges}


@pytest.fixture
def corridor():
    def make(**kw):
        return from_dict(corridor_doc(**kw))
    return make
