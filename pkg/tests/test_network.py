import numpy as np
import pytest

from uavloc.network import (
    Intersection,
    Link,
    Movement,
    Network,
    Path,
    build_connectivity,
    validate_network,
)
from uavloc.presets import GridSpec, build_grid, shinan18

from conftest import chain_network


def two_node_net():
    a = Intersection("A", "crossroad", (0.0, 0.0))
    b = Intersection("B", "crossroad", (300.0, 0.0))
    link = Link("A-B", "A", "B", 300.0)
    return Network([a, b], [link], [], [])


def test_connectivity_one_way():
    net = two_node_net()
    c = build_connectivity(net)
    ia, ib = net.node_index["A"], net.node_index["B"]
    assert c[ia, ib] == 1
    assert c[ib, ia] == 0
    assert c[ia, ia] == 0


def test_connectivity_isolated_node():
    a = Intersection("A", "crossroad", (0.0, 0.0))
    b = Intersection("B", "crossroad", (300.0, 0.0))
    c = Intersection("C", "crossroad", (600.0, 0.0))
    net = Network([a, b, c], [Link("A-B", "A", "B", 300.0)], [], [])
    mat = build_connectivity(net)
    k = net.node_index["C"]
    assert mat[k, :].sum() == 0
    assert mat[:, k].sum() == 0


def test_connectivity_row_sums_match_out_degree():
    net, _, _, _ = shinan18()
    c = build_connectivity(net)
    out_deg = {nid: 0 for nid in net.node_ids}
    in_deg = {nid: 0 for nid in net.node_ids}
    for l in net.links.values():
        out_deg[l.from_intersection] += 1
        in_deg[l.to_intersection] += 1
    for nid in net.node_ids:
        k = net.node_index[nid]
        assert c[k, :].sum() == out_deg[nid]
        assert c[:, k].sum() == in_deg[nid]


def test_adjacency_chain():
    net, nodes = chain_network(3)
    up = net.adjacency(nodes[1])
    assert nodes[0] in up and nodes[2] in up  # two-way corridor
    with pytest.raises(KeyError):
        net.adjacency("nope")


def test_adjacency_grid_inbound_count():
    net = build_grid(GridSpec(rows=3, cols=3))
    center = "i05"
    assert len(net.adjacency(center)) == 4


def test_adjacency_boundary_node_has_no_upstream_movements():
    net, nodes = chain_network(2)
    entry = f"bw_{nodes[0]}"
    # entry node's only upstream is the intersection (two-way exit link)
    assert net.adjacency(entry) == {nodes[0]}
    assert net.movements_of_intersection(entry) == []


def test_movements_of_link():
    net = build_grid(GridSpec(rows=3, cols=3))
    # link into the center of a 3x3 grid: left/through/right all exist
    assert len(net.movements_of_link("i04-i05")) == 3
    with pytest.raises(KeyError):
        net.movements_of_link("nope")


def test_movements_of_t_junction_inbound():
    net, _, _, _ = shinan18()
    # corner T-junctions have an approach with only two turn options
    counts = set()
    for lid in net.links:
        to = net.links[lid].to_intersection
        if net.intersections[to].kind == "t_junction":
            counts.add(len(net.movements_of_link(lid)))
    assert counts <= {1, 2}
    assert 2 in counts


def test_exit_link_has_no_movements():
    net, nodes = chain_network(2)
    exit_link = f"{nodes[1]}-be_{nodes[1]}"
    assert net.movements_of_link(exit_link) == set()


def test_paths_through_movement():
    net, nodes = chain_network(3)
    m_we = f"{nodes[0]}:{nodes[1]}:{nodes[2]}"
    assert net.paths_through_movement(m_we) == {"we"}
    # movement on no path
    m_turn = f"{nodes[0]}:{nodes[1]}:bn_{nodes[1]}"
    assert net.paths_through_movement(m_turn) == set()
    with pytest.raises(KeyError):
        net.paths_through_movement("nope")


def test_paths_movement_double_count_identity(shinan_scenario):
    net = shinan_scenario.network
    per_movement = sum(len(net.paths_through_movement(m)) for m in net.movements)
    per_path = sum(len(p.movement_sequence) for p in net.paths.values())
    assert per_movement == per_path


def test_path_movement_round_trip(shinan_scenario):
    net = shinan_scenario.network
    for pid, p in net.paths.items():
        for mid in p.movement_sequence:
            assert pid in net.paths_through_movement(mid)
    for mid in net.movements:
        for pid in net.paths_through_movement(mid):
            assert mid in net.paths[pid].movement_sequence


def test_validate_clean_presets():
    for preset in (build_grid(GridSpec(2, 2)), shinan18()[0]):
        assert validate_network(preset).ok


def test_validate_flags_unchained_path():
    net, nodes = chain_network(3)
    bad = Path(
        id="bad",
        origin_link=f"bw_{nodes[0]}-{nodes[0]}",
        destination_link=f"{nodes[2]}-be_{nodes[2]}",
        movement_sequence=(
            f"bw_{nodes[0]}:{nodes[0]}:{nodes[1]}",
            f"{nodes[1]}:{nodes[2]}:be_{nodes[2]}",  # skips the middle movement
        ),
    )
    net2 = Network(
        list(net.intersections.values()),
        list(net.links.values()),
        list(net.movements.values()),
        list(net.paths.values()) + [bad],
    )
    report = validate_network(net2)
    assert any("bad" in v and "link-chained" in v for v in report.violations)


def test_validate_flags_misattached_movement():
    a = Intersection("A", "crossroad", (0.0, 0.0))
    b = Intersection("B", "crossroad", (300.0, 0.0))
    c = Intersection("C", "crossroad", (600.0, 0.0))
    links = [Link("A-B", "A", "B", 300.0), Link("B-C", "B", "C", 300.0)]
    bad = Movement("m", "C", "A-B", "through", "B-C")  # inbound ends at B, not C
    report = validate_network(Network([a, b, c], links, [bad], []))
    assert any("ends at" in v for v in report.violations)
