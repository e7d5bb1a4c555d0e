import numpy as np
import pytest

from uavloc.observability import (
    DeploymentVector,
    movement_observability,
    observed_subpath,
    partition_paths,
)
from uavloc.presets import GridSpec, build_grid, with_paths

from conftest import chain_network


def deploy(net, ids):
    return DeploymentVector.from_ids(net, ids, fleet_limit=len(net.signalized_ids))


def test_deployment_vector_invariants():
    with pytest.raises(ValueError):
        DeploymentVector((0, 2, 0), fleet_limit=3)
    with pytest.raises(ValueError):
        DeploymentVector((1, 1, 1), fleet_limit=2)
    d = DeploymentVector((1, 0, 1), fleet_limit=2)
    assert d.count == 2


def test_y_all_zero_and_own_intersection():
    net, nodes = chain_network(3)
    obs0 = movement_observability(net, deploy(net, []))
    assert not any(obs0.y.values())
    obs1 = movement_observability(net, deploy(net, [nodes[0]]))
    for mid in net.movements_of_intersection(nodes[0]):
        assert obs1.y[mid] == 1


def test_y_upstream_only_two_node():
    net, nodes = chain_network(2)
    obs = movement_observability(net, deploy(net, [nodes[0]]))
    # movements at node 1 riding the link from node 0 become observable
    for mid in net.movements_of_link(f"{nodes[0]}-{nodes[1]}"):
        assert obs.y[mid] == 1
        assert obs.case[mid] == 3
    # the far approach of node 1 is not
    for mid in net.movements_of_link(f"be_{nodes[1]}-{nodes[1]}"):
        assert obs.y[mid] == 0
        assert obs.case[mid] == 4


def test_observed_subpath_cases():
    net, nodes = chain_network(3)
    none = movement_observability(net, deploy(net, []))
    full = movement_observability(net, deploy(net, nodes))
    mid_i = movement_observability(net, deploy(net, [nodes[1]]))
    assert observed_subpath(net, "we", none) == ()
    assert observed_subpath(net, "we", full) == net.paths["we"].movement_sequence
    seq = observed_subpath(net, "we", mid_i)
    # middle node's own movement plus the downstream movement fed by it
    expected = tuple(
        mid for mid in net.paths["we"].movement_sequence
        if net.movements[mid].intersection == nodes[1]
        or net.links[net.movements[mid].inbound_link].from_intersection == nodes[1]
    )
    assert seq == expected
    assert len(seq) == 2


def test_partition_no_sensors():
    net, _ = chain_network(3)
    obs = movement_observability(net, deploy(net, []))
    part = partition_paths(net, obs, {})
    assert part.unobserved == {"we", "ew"}
    assert part.n_non == 2
    assert not part.observed_and_cv and not part.observed_only and not part.cv_only


def grouped_net():
    """Three paths; a UAV at the shared first hop groups k1 and k2."""
    net = build_grid(GridSpec(rows=2, cols=2))
    routes = {
        # k1, k2 share the western approach into i01 then split
        "k1": ["bw_i01", "i01", "i02", "be_i02"],
        "k2": ["bw_i01", "i01", "i03", "bs_i03"],
        # k3 rides elsewhere
        "k3": ["bn_i02", "i02", "i04", "bs_i04"],
    }
    return with_paths(net, routes)


def test_partition_group_by_signature():
    net = grouped_net()
    obs = movement_observability(net, deploy(net, ["i01"]))
    part = partition_paths(net, obs, {})
    # k1 and k2 both show only their i01 movement; the signatures differ
    # because the turns differ, so each is its own group
    assert part.observed_only == {"k1", "k2"}
    sigs = {part.group_of_path["k1"], part.group_of_path["k2"]}
    assert len(sigs) == 2
    assert part.unobserved == {"k3"}
    assert part.n_non == 1


def test_partition_shared_signature_groups_paths():
    # paths diverging beyond the observed range share a signature and group
    net = build_grid(GridSpec(rows=1, cols=3))
    routes = {
        "k1": ["bw_i01", "i01", "i02", "i03", "be_i03"],
        "k2": ["bw_i01", "i01", "i02", "i03", "bn_i03"],
        "k3": ["bn_i03", "i03", "bs_i03"],
    }
    net = with_paths(net, routes)
    obs = movement_observability(net, deploy(net, ["i01"]))
    part = partition_paths(net, obs, {})
    assert part.group_of_path["k1"] == part.group_of_path["k2"]
    grp = part.groups[part.group_of_path["k1"]]
    assert grp.n_o == 2
    assert part.unobserved == {"k3"}
    # full coverage separates them again: the i03 turns differ
    obs_full = movement_observability(net, deploy(net, ["i01", "i02", "i03"]))
    part_full = partition_paths(net, obs_full, {})
    assert part_full.group_of_path["k1"] != part_full.group_of_path["k2"]


def test_partition_cv_counts():
    net = grouped_net()
    obs = movement_observability(net, deploy(net, []))
    part = partition_paths(net, obs, {"k1": 2, "k2": 3})
    assert part.cv_only == {"k1", "k2"}
    assert part.unobserved == {"k3"}
    assert part.f_cv == 5
    # CVs on observed paths leave f_cv
    obs1 = movement_observability(net, deploy(net, ["i01"]))
    part1 = partition_paths(net, obs1, {"k1": 2, "k2": 3})
    assert part1.observed_and_cv == {"k1", "k2"}
    assert part1.f_cv == 0
    assert part1.q_o == 5


def test_partition_disjoint_exhaustive_random():
    net = grouped_net()
    rng = np.random.default_rng(0)
    n = len(net.signalized_ids)
    for _ in range(50):
        u = tuple(int(b) for b in rng.integers(0, 2, n))
        dep = DeploymentVector(u, fleet_limit=n)
        cv = {pid: int(rng.integers(0, 3)) for pid in net.paths}
        part = partition_paths(net, movement_observability(net, dep), cv)
        sets = [part.observed_and_cv, part.observed_only, part.cv_only, part.unobserved]
        assert set().union(*sets) == set(net.paths)
        for a in range(4):
            for b in range(a + 1, 4):
                assert not (sets[a] & sets[b])
        observed = part.observed_and_cv | part.observed_only
        assert len(observed) == sum(
            1 for pid in net.paths if observed_subpath(net, pid, movement_observability(net, dep))
        )


def test_monotone_in_deployment():
    net = grouped_net()
    rng = np.random.default_rng(1)
    n = len(net.signalized_ids)
    for _ in range(40):
        u = [int(b) for b in rng.integers(0, 2, n)]
        if all(u):
            u[int(rng.integers(0, n))] = 0
        v = list(u)
        off = [k for k in range(n) if not u[k]]
        v[off[int(rng.integers(0, len(off)))]] = 1
        obs_u = movement_observability(net, DeploymentVector(tuple(u), n))
        obs_v = movement_observability(net, DeploymentVector(tuple(v), n))
        for mid in net.movements:
            assert obs_v.y[mid] >= obs_u.y[mid]
        for pid in net.paths:
            sub_u = observed_subpath(net, pid, obs_u)
            sub_v = observed_subpath(net, pid, obs_v)
            assert set(sub_u) <= set(sub_v)
        part_u = partition_paths(net, obs_u, {})
        part_v = partition_paths(net, obs_v, {})
        assert part_v.unobserved <= part_u.unobserved
