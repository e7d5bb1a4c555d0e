"""Built-in study networks and their demand/signal configurations.

``build_grid`` produces a rows x cols signalized lattice with boundary
feeder nodes on the perimeter; every non-U-turn movement exists.  The
``shinan18`` preset mirrors the published study layout in shape only: 18
intersections (14 crossroads, 4 T-junctions at the corners), a two-way
east-west arterial through the middle row with lane-based loop detectors,
and synthetic demands concentrated on the arterial.
"""

import math
from dataclasses import dataclass

from .network import (
    BOUNDARY,
    CROSSROAD,
    T_JUNCTION,
    Intersection,
    Link,
    Movement,
    Network,
    Path,
)
from .scenario import FlowModel, MovementSignal, SignalPlan

INTERNAL_LINK_LENGTH = 300.0
ENTRY_LINK_LENGTH = 150.0
LOOP_POSITION = 25.0  # m upstream of the stopline, within the 20-30 m guidance


def _turn_of(v_in, v_out) -> str | None:
    cross = v_in[0] * v_out[1] - v_in[1] * v_out[0]
    dot = v_in[0] * v_out[0] + v_in[1] * v_out[1]
    if dot > 0.7:
        return "through"
    if dot < -0.7:
        return None  # U-turn, not modeled
    return "left" if cross > 0 else "right"


def _unit(a, b):
    dx, dy = b[0] - a[0], b[1] - a[1]
    n = math.hypot(dx, dy)
    return (dx / n, dy / n)


@dataclass
class GridSpec:
    rows: int
    cols: int
    spacing: float = INTERNAL_LINK_LENGTH
    entry_length: float = ENTRY_LINK_LENGTH
    t_junction_corners: bool = False


def build_grid(spec: GridSpec) -> Network:
    rows, cols = spec.rows, spec.cols
    positions = {}
    intersections = []

    def node_id(r, c):
        return f"i{r * cols + c + 1:02d}"

    corner = lambda r, c: (r in (0, rows - 1)) and (c in (0, cols - 1))
    for r in range(rows):
        for c in range(cols):
            pos = (c * spec.spacing, -r * spec.spacing)
            positions[node_id(r, c)] = pos
            kind = CROSSROAD
            if spec.t_junction_corners and corner(r, c) and rows > 1 and cols > 1:
                kind = T_JUNCTION
            intersections.append(Intersection(node_id(r, c), kind, pos))

    links = []

    def add_link(a, b, length):
        links.append(Link(f"{a}-{b}", a, b, length))

    # internal two-way links
    for r in range(rows):
        for c in range(cols):
            nid = node_id(r, c)
            if c + 1 < cols:
                add_link(nid, node_id(r, c + 1), spec.spacing)
                add_link(node_id(r, c + 1), nid, spec.spacing)
            if r + 1 < rows:
                add_link(nid, node_id(r + 1, c), spec.spacing)
                add_link(node_id(r + 1, c), nid, spec.spacing)

    # boundary feeders on every perimeter approach; T-junction corners skip
    # their north/south feeder so they keep exactly three legs
    boundary_nodes = []
    for r in range(rows):
        for c in range(cols):
            nid = node_id(r, c)
            x, y = positions[nid]
            feeders = []
            if c == 0:
                feeders.append(("w", (x - spec.entry_length, y)))
            if c == cols - 1:
                feeders.append(("e", (x + spec.entry_length, y)))
            if r == 0:
                feeders.append(("n", (x, y + spec.entry_length)))
            if r == rows - 1:
                feeders.append(("s", (x, y - spec.entry_length)))
            if spec.t_junction_corners and corner(r, c) and rows > 1 and cols > 1:
                feeders = [f for f in feeders if f[0] in ("w", "e")]
            for tag, pos in feeders:
                bid = f"b{tag}_{nid}"
                boundary_nodes.append(Intersection(bid, BOUNDARY, pos))
                positions[bid] = pos
                add_link(bid, nid, spec.entry_length)
                add_link(nid, bid, spec.entry_length)

    intersections.extend(boundary_nodes)

    by_node_in: dict[str, list[Link]] = {}
    by_node_out: dict[str, list[Link]] = {}
    for l in links:
        by_node_in.setdefault(l.to_intersection, []).append(l)
        by_node_out.setdefault(l.from_intersection, []).append(l)

    movements = []
    signalized = {i.id for i in intersections if i.kind != BOUNDARY}
    for nid in sorted(signalized):
        for lin in sorted(by_node_in.get(nid, []), key=lambda l: l.id):
            v_in = _unit(positions[lin.from_intersection], positions[nid])
            for lout in sorted(by_node_out.get(nid, []), key=lambda l: l.id):
                v_out = _unit(positions[nid], positions[lout.to_intersection])
                turn = _turn_of(v_in, v_out)
                if turn is None:
                    continue
                movements.append(
                    Movement(
                        id=f"{lin.from_intersection}:{nid}:{lout.to_intersection}",
                        intersection=nid,
                        inbound_link=lin.id,
                        turn=turn,
                        outbound_link=lout.id,
                    )
                )

    return Network(intersections, links, movements, [])


def path_from_nodes(network: Network, path_id: str, nodes: list[str]) -> Path:
    """Build a path from a boundary-to-boundary node route."""
    if len(nodes) < 3:
        raise ValueError("route needs entry node, one intersection, exit node")
    seq = []
    for a, b, c in zip(nodes, nodes[1:], nodes[2:]):
        mid = f"{a}:{b}:{c}"
        if mid not in network.movements:
            raise ValueError(f"route {path_id}: missing movement {mid}")
        seq.append(mid)
    return Path(
        id=path_id,
        origin_link=f"{nodes[0]}-{nodes[1]}",
        destination_link=f"{nodes[-2]}-{nodes[-1]}",
        movement_sequence=tuple(seq),
    )


def with_paths(network: Network, routes: dict[str, list[str]]) -> Network:
    paths = [path_from_nodes(network, pid, nodes) for pid, nodes in sorted(routes.items())]
    return Network(
        list(network.intersections.values()),
        list(network.links.values()),
        list(network.movements.values()),
        paths,
    )


def _node_grid_ids(rows, cols):
    return [[f"i{r * cols + c + 1:02d}" for c in range(cols)] for r in range(rows)]


def grid3x3(horizon: float = 3600.0):
    """Nine crossroads, through routes on every row/column plus four turns."""
    net = build_grid(GridSpec(rows=3, cols=3))
    g = _node_grid_ids(3, 3)
    routes = {}
    demands = {}
    for r in range(3):
        row = g[r]
        routes[f"we_{r + 1}"] = [f"bw_{row[0]}"] + row + [f"be_{row[-1]}"]
        routes[f"ew_{r + 1}"] = [f"be_{row[-1]}"] + row[::-1] + [f"bw_{row[0]}"]
        demands[f"we_{r + 1}"] = 90.0
        demands[f"ew_{r + 1}"] = 80.0
    for c in range(3):
        col = [g[r][c] for r in range(3)]
        routes[f"ns_{c + 1}"] = [f"bn_{col[0]}"] + col + [f"bs_{col[-1]}"]
        routes[f"sn_{c + 1}"] = [f"bs_{col[-1]}"] + col[::-1] + [f"bn_{col[0]}"]
        demands[f"ns_{c + 1}"] = 70.0
        demands[f"sn_{c + 1}"] = 60.0
    routes["turn_wn"] = [f"bw_{g[1][0]}", g[1][0], g[1][1], g[0][1], f"bn_{g[0][1]}"]
    routes["turn_ws"] = [f"bw_{g[1][0]}", g[1][0], g[1][1], g[2][1], f"bs_{g[2][1]}"]
    routes["turn_ne"] = [f"bn_{g[0][1]}", g[0][1], g[1][1], g[1][2], f"be_{g[1][2]}"]
    routes["turn_se"] = [f"bs_{g[2][1]}", g[2][1], g[1][1], g[1][2], f"be_{g[1][2]}"]
    for pid in ("turn_wn", "turn_ws", "turn_ne", "turn_se"):
        demands[pid] = 50.0
    net = with_paths(net, routes)
    signal = SignalPlan(horizon=horizon, default=MovementSignal(cycle=90.0, red=55.0))
    flow = FlowModel(demand_veh_h=demands)
    return net, signal, flow, {}


def shinan18(horizon: float = 3600.0):
    """Eighteen intersections in a 3 x 6 lattice with an instrumented arterial.

    The middle row (i07..i12) is the east-west mainline: heaviest demand and
    lane-based loop detectors on its two-way internal links.  The four
    corners are T-junctions.
    """
    net = build_grid(GridSpec(rows=3, cols=6, t_junction_corners=True))
    g = _node_grid_ids(3, 6)
    arterial = g[1]
    routes = {}
    demands = {}

    # arterial through traffic, both directions
    routes["art_we"] = [f"bw_{arterial[0]}"] + arterial + [f"be_{arterial[-1]}"]
    routes["art_ew"] = [f"be_{arterial[-1]}"] + arterial[::-1] + [f"bw_{arterial[0]}"]
    demands["art_we"] = 130.0
    demands["art_ew"] = 120.0

    # top and bottom row through traffic
    for r, tag in ((0, "top"), (2, "bot")):
        row = g[r]
        routes[f"{tag}_we"] = [f"bw_{row[0]}"] + row + [f"be_{row[-1]}"]
        routes[f"{tag}_ew"] = [f"be_{row[-1]}"] + row[::-1] + [f"bw_{row[0]}"]
        demands[f"{tag}_we"] = 70.0
        demands[f"{tag}_ew"] = 65.0

    # north-south crossings on the four interior columns
    for c in range(1, 5):
        col = [g[r][c] for r in range(3)]
        routes[f"ns_{c + 1}"] = [f"bn_{col[0]}"] + col + [f"bs_{col[-1]}"]
        routes[f"sn_{c + 1}"] = [f"bs_{col[-1]}"] + col[::-1] + [f"bn_{col[0]}"]
        demands[f"ns_{c + 1}"] = 55.0
        demands[f"sn_{c + 1}"] = 50.0

    # arterial-to-side-street turning routes
    turn_specs = {
        "t_w_n3": ([f"bw_{arterial[0]}"] + arterial[:3] + [g[0][2], f"bn_{g[0][2]}"], 45.0),
        "t_w_s4": ([f"bw_{arterial[0]}"] + arterial[:4] + [g[2][3], f"bs_{g[2][3]}"], 40.0),
        "t_e_n4": ([f"be_{arterial[-1]}"] + arterial[:2:-1] + [g[0][3], f"bn_{g[0][3]}"], 45.0),
        "t_e_s2": ([f"be_{arterial[-1]}"] + arterial[:0:-1] + [g[2][1], f"bs_{g[2][1]}"], 40.0),
        "t_n2_e": ([f"bn_{g[0][1]}", g[0][1], g[1][1]] + arterial[2:] + [f"be_{arterial[-1]}"], 35.0),
        "t_s5_w": ([f"bs_{g[2][4]}", g[2][4], g[1][4]] + arterial[3::-1] + [f"bw_{arterial[0]}"], 35.0),
        "t_n5_s5": ([f"bn_{g[0][4]}", g[0][4], g[1][4], g[1][3], g[2][3], f"bs_{g[2][3]}"], 30.0),
        "t_s2_n3": ([f"bs_{g[2][1]}", g[2][1], g[1][1], g[1][2], g[0][2], f"bn_{g[0][2]}"], 30.0),
    }
    for pid, (nodes, dem) in turn_specs.items():
        routes[pid] = nodes
        demands[pid] = dem

    net = with_paths(net, routes)
    signal = SignalPlan(horizon=horizon, default=MovementSignal(cycle=90.0, red=55.0))
    flow = FlowModel(demand_veh_h=demands)

    loops = {}
    for a, b in zip(arterial, arterial[1:]):
        loops[f"{a}-{b}"] = LOOP_POSITION
        loops[f"{b}-{a}"] = LOOP_POSITION
    return net, signal, flow, loops


PRESETS = {
    "grid3x3": grid3x3,
    "shinan18": shinan18,
}
