"""Signalized road network model: intersections, links, turning movements, paths.

The network is immutable after construction and safe to share between any
number of evaluation workers.  All topological queries used by the
observability and uncertainty layers are answered from indexes built once
in ``Network.__init__``.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

CROSSROAD = "crossroad"
T_JUNCTION = "t_junction"
BOUNDARY = "boundary"

SIGNALIZED_KINDS = (CROSSROAD, T_JUNCTION)

TURNS = ("left", "through", "right")


@dataclass(frozen=True)
class Intersection:
    id: str
    kind: str  # crossroad | t_junction | boundary
    position: tuple[float, float]

    @property
    def is_signalized(self) -> bool:
        return self.kind in SIGNALIZED_KINDS


@dataclass(frozen=True)
class Link:
    id: str
    from_intersection: str
    to_intersection: str
    length: float  # meters
    lane_count: int = 1


@dataclass(frozen=True)
class Movement:
    """A turn relation executed at ``intersection`` from ``inbound_link``.

    ``outbound_link`` is None for network-exit movements (the vehicle leaves
    through a boundary link and no further turn exists).
    """

    id: str
    intersection: str
    inbound_link: str
    turn: str  # left | through | right
    outbound_link: Optional[str] = None


@dataclass(frozen=True)
class Path:
    id: str
    origin_link: str
    destination_link: str
    movement_sequence: tuple[str, ...]


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    def add(self, message: str) -> None:
        self.violations.append(message)

    @property
    def ok(self) -> bool:
        return not self.violations


class Network:
    """Validated network with derived topological indexes.

    Boundary nodes are real vertices of the graph (links need endpoints) but
    they carry no movements and can never host a UAV; the deployment vector
    is indexed over ``signalized_ids`` only.
    """

    def __init__(self, intersections, links, movements, paths):
        self.intersections: dict[str, Intersection] = {i.id: i for i in intersections}
        self.links: dict[str, Link] = {l.id: l for l in links}
        self.movements: dict[str, Movement] = {m.id: m for m in movements}
        self.paths: dict[str, Path] = {p.id: p for p in paths}

        if len(self.intersections) != len(list(intersections)):
            raise ValueError("duplicate intersection ids")
        if len(self.links) != len(list(links)):
            raise ValueError("duplicate link ids")
        if len(self.movements) != len(list(movements)):
            raise ValueError("duplicate movement ids")
        if len(self.paths) != len(list(paths)):
            raise ValueError("duplicate path ids")

        self.signalized_ids: list[str] = sorted(
            i.id for i in self.intersections.values() if i.is_signalized
        )
        self.signalized_index: dict[str, int] = {
            iid: k for k, iid in enumerate(self.signalized_ids)
        }
        self.node_ids: list[str] = sorted(self.intersections)
        self.node_index: dict[str, int] = {iid: k for k, iid in enumerate(self.node_ids)}

        # inverse indexes, built once and reused
        self._movements_by_link: dict[str, list[str]] = {lid: [] for lid in self.links}
        for m in self.movements.values():
            self._movements_by_link[m.inbound_link].append(m.id)
        for lst in self._movements_by_link.values():
            lst.sort()

        self._paths_by_movement: dict[str, list[str]] = {mid: [] for mid in self.movements}
        for p in self.paths.values():
            for mid in p.movement_sequence:
                self._paths_by_movement[mid].append(p.id)
        for lst in self._paths_by_movement.values():
            lst.sort()

        self._links_out: dict[str, list[str]] = {iid: [] for iid in self.intersections}
        self._links_in: dict[str, list[str]] = {iid: [] for iid in self.intersections}
        for l in self.links.values():
            self._links_out[l.from_intersection].append(l.id)
            self._links_in[l.to_intersection].append(l.id)

    # -- ops ---------------------------------------------------------------

    def upstream_of_movement(self, movement_id: str) -> str:
        """Intersection feeding the movement's inbound link."""
        m = self.movements[movement_id]
        return self.links[m.inbound_link].from_intersection

    def movements_of_intersection(self, intersection_id: str) -> list[str]:
        if intersection_id not in self.intersections:
            raise KeyError(f"unknown intersection {intersection_id!r}")
        return sorted(
            m.id for m in self.movements.values() if m.intersection == intersection_id
        )

    def movements_of_link(self, link_id: str) -> set[str]:
        """All movements whose inbound link is ``link_id``."""
        if link_id not in self.links:
            raise KeyError(f"unknown link {link_id!r}")
        return set(self._movements_by_link[link_id])

    def paths_through_movement(self, movement_id: str) -> set[str]:
        if movement_id not in self.movements:
            raise KeyError(f"unknown movement {movement_id!r}")
        return set(self._paths_by_movement[movement_id])

    def adjacency(self, intersection_id: str) -> set[str]:
        """Upstream neighbours of an intersection (nodes with a link into it)."""
        if intersection_id not in self.intersections:
            raise KeyError(f"unknown intersection {intersection_id!r}")
        return {self.links[lid].from_intersection for lid in self._links_in[intersection_id]}

    def neighbors_undirected(self, intersection_id: str) -> set[str]:
        """Neighbours by either link direction; used by local-move heuristics."""
        if intersection_id not in self.intersections:
            raise KeyError(f"unknown intersection {intersection_id!r}")
        up = {self.links[lid].from_intersection for lid in self._links_in[intersection_id]}
        down = {self.links[lid].to_intersection for lid in self._links_out[intersection_id]}
        return up | down

    def entry_links(self) -> list[str]:
        """Links whose origin is a boundary node (traffic enters there)."""
        return sorted(
            l.id
            for l in self.links.values()
            if not self.intersections[l.from_intersection].is_signalized
        )

    def link_vector(self, link_id: str) -> tuple[float, float]:
        l = self.links[link_id]
        ax, ay = self.intersections[l.from_intersection].position
        bx, by = self.intersections[l.to_intersection].position
        dx, dy = bx - ax, by - ay
        norm = float(np.hypot(dx, dy))
        if norm == 0.0:
            return (1.0, 0.0)
        return (dx / norm, dy / norm)


def build_connectivity(network: Network) -> np.ndarray:
    """0/1 matrix over all nodes; entry (i, i') = 1 iff a link runs i -> i'."""
    n = len(network.node_ids)
    c = np.zeros((n, n), dtype=np.int8)
    for l in network.links.values():
        a = network.node_index[l.from_intersection]
        b = network.node_index[l.to_intersection]
        if a != b:
            c[a, b] = 1
    return c


def adjacency(network: Network, intersection_id: str) -> set[str]:
    return network.adjacency(intersection_id)


def movements_of_link(network: Network, link_id: str) -> set[str]:
    return network.movements_of_link(link_id)


def paths_through_movement(network: Network, movement_id: str) -> set[str]:
    return network.paths_through_movement(movement_id)


def validate_network(network: Network) -> ValidationReport:
    """Check every structural invariant; collects violations, never raises."""
    rep = ValidationReport()

    for l in network.links.values():
        if l.from_intersection == l.to_intersection:
            rep.add(f"link {l.id}: from == to ({l.from_intersection})")
        for end in (l.from_intersection, l.to_intersection):
            if end not in network.intersections:
                rep.add(f"link {l.id}: unknown endpoint {end}")
        if not l.length > 0:
            rep.add(f"link {l.id}: nonpositive length {l.length}")
        if l.lane_count < 1:
            rep.add(f"link {l.id}: lane_count {l.lane_count} < 1")

    for m in network.movements.values():
        if m.intersection not in network.intersections:
            rep.add(f"movement {m.id}: unknown intersection {m.intersection}")
            continue
        if m.turn not in TURNS:
            rep.add(f"movement {m.id}: unknown turn {m.turn!r}")
        inbound = network.links.get(m.inbound_link)
        if inbound is None:
            rep.add(f"movement {m.id}: unknown inbound link {m.inbound_link}")
        elif inbound.to_intersection != m.intersection:
            rep.add(
                f"movement {m.id}: inbound link {m.inbound_link} ends at "
                f"{inbound.to_intersection}, not {m.intersection}"
            )
        if m.outbound_link is not None:
            outbound = network.links.get(m.outbound_link)
            if outbound is None:
                rep.add(f"movement {m.id}: unknown outbound link {m.outbound_link}")
            elif outbound.from_intersection != m.intersection:
                rep.add(
                    f"movement {m.id}: outbound link {m.outbound_link} starts at "
                    f"{outbound.from_intersection}, not {m.intersection}"
                )
        if not network.intersections[m.intersection].is_signalized:
            rep.add(f"movement {m.id}: hosted at non-signalized node {m.intersection}")

    seen_sequences: dict[tuple, str] = {}
    for p in network.paths.values():
        movs = [network.movements.get(mid) for mid in p.movement_sequence]
        if any(m is None for m in movs):
            missing = [mid for mid in p.movement_sequence if mid not in network.movements]
            rep.add(f"path {p.id}: unknown movements {missing}")
            continue
        if not movs:
            rep.add(f"path {p.id}: empty movement sequence")
            continue
        if movs[0].inbound_link != p.origin_link:
            rep.add(
                f"path {p.id}: origin link {p.origin_link} does not feed first "
                f"movement {movs[0].id}"
            )
        last_out = movs[-1].outbound_link
        if last_out is not None and last_out != p.destination_link:
            rep.add(
                f"path {p.id}: destination link {p.destination_link} differs from "
                f"last movement outbound {last_out}"
            )
        for k in range(len(movs) - 1):
            if movs[k].outbound_link != movs[k + 1].inbound_link:
                rep.add(
                    f"path {p.id}: movements not link-chained at index {k} "
                    f"({movs[k].id} -> {movs[k + 1].id})"
                )
        key = tuple(p.movement_sequence)
        if key in seen_sequences:
            rep.add(
                f"path {p.id}: duplicate movement sequence with path {seen_sequences[key]}"
            )
        else:
            seen_sequences[key] = p.id

    return rep
