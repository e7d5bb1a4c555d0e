"""Synthetic signalized traffic and the three observation channels.

The generator releases vehicles per path as a Poisson process and serves
each movement as a FIFO point queue at saturation headway during green.
Queue geometry is the triangular shockwave model: the join polyline grows
from the red start with speed capped at ``w_a`` (consecutive joins are
serialized at ``jam_spacing / w_a``) and positions are released by a
dissipation wave of speed ``w_d`` from the green start.  Times inside a
cycle are measured from the red start; distances are meters upstream of
the stopline.

Residual (oversaturated) queues re-anchor at the next red start: the k-th
vehicle still standing occupies ``k * jam_spacing``.  A vehicle with queue
stints in two consecutive cycles is what the observation layer reports as
twice-queued.
"""

import heapq
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .network import Network

_TOL = 1e-9


@dataclass(frozen=True)
class MovementSignal:
    cycle: float  # C, seconds
    red: float  # R, seconds
    offset: float = 0.0  # absolute time of the first red start

    def __post_init__(self):
        if not 0.0 < self.red < self.cycle:
            raise ValueError(f"need 0 < R < C, got R={self.red}, C={self.cycle}")


@dataclass
class SignalPlan:
    horizon: float
    default: MovementSignal
    per_movement: dict[str, MovementSignal] = field(default_factory=dict)

    def for_movement(self, movement_id: str) -> MovementSignal:
        return self.per_movement.get(movement_id, self.default)

    def cycle_count(self, movement_id: str) -> int:
        # trailing partial cycles are dropped; all uncertainty is cycle-based
        sig = self.for_movement(movement_id)
        return int(math.floor((self.horizon - sig.offset) / sig.cycle))


@dataclass
class FlowModel:
    """Per-path demand plus the shared flow parameters.

    ``max_arrival_rate`` defaults to ``w_a / jam_spacing`` (the highest rate
    at which a queue back can physically grow) and must dominate every
    observed per-cycle average arrival rate.
    """

    demand_veh_h: dict[str, float]
    saturation_headway: float = 2.0  # h_s, s/veh
    accumulation_speed: float = 2.0  # w_a, m/s (magnitude)
    dissipation_speed: float = 5.0  # w_d, m/s (magnitude)
    free_flow_speed: float = 14.0  # m/s
    jam_spacing: float = 7.0  # m/veh
    max_arrival_rate: Optional[float] = None  # veh/s

    def __post_init__(self):
        if not 0.0 < self.accumulation_speed < self.dissipation_speed:
            raise ValueError("need 0 < w_a < w_d")
        if self.saturation_headway <= 0:
            raise ValueError("saturation headway must be positive")
        if self.saturation_headway * self.free_flow_speed <= self.jam_spacing:
            raise ValueError("free-flow speed too low for the saturation headway")
        # The dissipation wave plus free-flow travel must not lag the
        # saturation service law, or real queue corners could outrun the
        # wave-based feasible regions.
        w_d_min = (
            self.jam_spacing
            * self.free_flow_speed
            / (self.saturation_headway * self.free_flow_speed - self.jam_spacing)
        )
        if self.dissipation_speed < w_d_min - 1e-9:
            raise ValueError(
                f"w_d={self.dissipation_speed} inconsistent with h_s/jam spacing: "
                f"need w_d >= {w_d_min:.4f}"
            )
        if self.max_arrival_rate is None:
            self.max_arrival_rate = self.accumulation_speed / self.jam_spacing

    @property
    def min_join_gap(self) -> float:
        return self.jam_spacing / self.accumulation_speed


@dataclass
class MovementVisit:
    """One vehicle's passage through one movement.

    ``impeded`` marks vehicles delayed by the service queue whose would-be
    stop lies outside the shockwave triangle (mid-green moving-queue
    conditions): their arrivals are real, but they anchor no queue geometry
    and travel at no clean free-flow trajectory.
    """

    movement: str
    arrival_abs: float  # unimpeded stopline arrival
    cross_abs: float
    queued: bool
    impeded: bool = False
    join_abs: Optional[float] = None
    join_distance: Optional[float] = None  # m upstream at the first stop
    join_cycle: Optional[int] = None
    cross_cycle: int = 0


@dataclass
class VehicleRecord:
    id: str
    path: str
    is_cv: bool
    entry_abs: float
    visits: list[MovementVisit] = field(default_factory=list)


@dataclass
class QueueStint:
    """A standing spell of one vehicle within one cycle of one movement."""

    vehicle: str
    is_cv: bool
    t: float  # join time, seconds since this cycle's red start
    d: float  # m upstream of stopline
    first_time: bool  # False for residual re-anchors at the red start
    cross_cycle: int = 0
    cross_abs: float = 0.0


@dataclass
class NonQueuedPass:
    vehicle: str
    is_cv: bool
    t: float  # arrival (= crossing) time, cycle-relative
    cross_abs: float = 0.0


@dataclass
class MovementCycleTruth:
    """Everything that happened at one movement during one cycle."""

    movement: str
    cycle: int
    red_start_abs: float
    cycle_length: float
    red: float
    joins: list[QueueStint] = field(default_factory=list)  # first-time + re-anchors
    nonqueued: list[NonQueuedPass] = field(default_factory=list)
    impeded: list[NonQueuedPass] = field(default_factory=list)  # arrivals, no anchors
    crossings: list[tuple[float, str]] = field(default_factory=list)  # (t_rel, vehicle)
    residual_base: int = 0  # standing vehicles at the red start
    persists: list[str] = field(default_factory=list)  # standing at cycle end
    boq: float = 0.0  # max standing extent, m
    arrivals: int = 0  # profile events attributed to this cycle

    @property
    def green_start(self) -> float:
        return self.red

    def first_time_joins(self) -> list[QueueStint]:
        return [s for s in self.joins if s.first_time]

    def boq_corner(self, w_d: float) -> tuple[float, float]:
        """Ground-truth back-of-queue point on the dissipation wave."""
        return (self.red + self.boq / w_d, self.boq)

    def join_polyline(self) -> list[tuple[float, float]]:
        """Piecewise-linear back-of-queue growth curve for this cycle.

        Starts at the residual extent (re-anchors sit at t=0), then follows
        the first-time joins.
        """
        base = 0.0
        for s in self.joins:
            if not s.first_time:
                base = max(base, s.d)
        pts = [(0.0, base)]
        for s in self.joins:
            if s.first_time:
                pts.append((s.t, s.d))
        return pts

    def arrival_profile(self, delta: float) -> np.ndarray:
        nbins = int(round(self.cycle_length / delta))
        prof = np.zeros(nbins, dtype=np.int64)
        for s in self.joins:
            if s.first_time:
                b = min(nbins - 1, int(s.t / delta))
                prof[b] += 1
        for nq in list(self.nonqueued) + list(self.impeded):
            b = min(nbins - 1, int(nq.t / delta))
            prof[b] += 1
        return prof


@dataclass
class GroundTruth:
    path_flow: dict[str, int]
    path_cv_flow: dict[str, int]
    link_flow: dict[str, int]
    movement_flow: dict[str, int]


@dataclass
class LoopCycleWindow:
    """Per-cycle loop view used by the uncertainty layer.

    Counts are arrival events in the unoccupied portions of the cycle
    (pass timestamps matched back to arrivals; discharging vehicles that
    stood on the detector are filtered by presence duration).
    """

    cycle: int
    occupied: bool
    t_cover: float  # queue reaches the detector (cycle-relative); 0 if never
    t_release: float  # dissipation wave passes the detector; 0 if never
    n_before: int
    n_after: int


@dataclass
class LoopChannel:
    link: str
    movement: str
    position: float  # d_loop, m upstream of stopline
    timestamps: list[float] = field(default_factory=list)
    windows: list[LoopCycleWindow] = field(default_factory=list)


@dataclass
class LoopEventLog:
    channels: dict[str, LoopChannel] = field(default_factory=dict)  # by movement id

    def for_movement(self, movement_id: str) -> Optional[LoopChannel]:
        return self.channels.get(movement_id)


@dataclass
class Scenario:
    network: Network
    signal: SignalPlan
    flow: FlowModel
    penetration: float
    seed: int
    delta: float
    fov_box: float  # UAV detection box edge, m
    loop_links: dict[str, float]  # instrumented link id -> detector position
    vehicles: list[VehicleRecord]
    movement_cycles: dict[str, list[MovementCycleTruth]]
    ground_truth: GroundTruth

    def fov_extent(self, movement_id: str) -> float:
        """Visible distance along a movement's approach from a UAV at its node."""
        m = self.network.movements[movement_id]
        link = self.network.links[m.inbound_link]
        dx, dy = self.network.link_vector(m.inbound_link)
        half = self.fov_box / 2.0
        reach = half / max(abs(dx), abs(dy), 1e-12)
        return float(min(reach, link.length))


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------


class _MovementState:
    __slots__ = (
        "last_cross", "last_join", "queued_open", "cycle", "queue_base",
        "joins_in_cycle",
    )

    def __init__(self):
        self.last_cross = -math.inf
        self.last_join = -math.inf
        self.queued_open = []  # crossing times of queued visits, for the residual
        self.cycle = -1
        self.queue_base = 0  # residual standing at the current cycle's red start
        self.joins_in_cycle = 0


def _next_green_time(t: float, sig: MovementSignal) -> float:
    """Earliest time >= t inside a green window of this movement."""
    rel = (t - sig.offset) % sig.cycle
    if rel >= sig.red:
        return t
    return t + (sig.red - rel)


def _cycle_of(t: float, sig: MovementSignal) -> int:
    return int(math.floor((t - sig.offset) / sig.cycle))


def generate_scenario(
    network: Network,
    signal: SignalPlan,
    flow: FlowModel,
    penetration: float,
    seed: int,
    loop_links: Optional[dict[str, float]] = None,
    delta: float = 1.0,
    fov_box: float = 200.0,
) -> Scenario:
    """Simulate ground truth; pure function of its arguments.

    Raises ValueError when a movement's demand exceeds its capacity for the
    whole horizon, when a queue outgrows its link, or when an entry-approach
    queue outgrows the hovering field of view (full coverage must determine
    the network state exactly, so entry queues have to stay visible).
    """
    if not 0.0 <= penetration <= 1.0:
        raise ValueError("penetration must be in [0, 1]")
    loop_links = dict(loop_links or {})
    for lid, pos in loop_links.items():
        if lid not in network.links:
            raise ValueError(f"loop on unknown link {lid!r}")
        if not 0.0 < pos < network.links[lid].length:
            raise ValueError(
                f"loop position {pos} outside link {lid} "
                f"(length {network.links[lid].length})"
            )

    rng = np.random.default_rng(seed)
    horizon = signal.horizon

    # path travel structure: movement sequence and the approach link lengths
    path_links: dict[str, list[float]] = {}
    for pid in sorted(network.paths):
        p = network.paths[pid]
        lens = [network.links[network.movements[mid].inbound_link].length
                for mid in p.movement_sequence]
        path_links[pid] = lens

    # Poisson releases per path, in sorted path order for determinism
    vehicles: list[VehicleRecord] = []
    events: list[tuple[float, int, int, int]] = []  # (arrival, seq, veh_idx, leg)
    seq = 0
    for pid in sorted(network.paths):
        rate = flow.demand_veh_h.get(pid, 0.0) / 3600.0
        if rate <= 0.0:
            continue
        t = 0.0
        while True:
            t += rng.exponential(1.0 / rate)
            if t >= horizon:
                break
            is_cv = bool(rng.random() < penetration)
            veh = VehicleRecord(
                id=f"v{len(vehicles):05d}", path=pid, is_cv=is_cv, entry_abs=t
            )
            vehicles.append(veh)
            first_arrival = t + path_links[pid][0] / flow.free_flow_speed
            heapq.heappush(events, (first_arrival, seq, len(vehicles) - 1, 0))
            seq += 1

    states: dict[str, _MovementState] = {mid: _MovementState() for mid in network.movements}
    h_s = flow.saturation_headway
    gap = flow.min_join_gap
    jam = flow.jam_spacing

    while events:
        arrival, _, vidx, leg = heapq.heappop(events)
        veh = vehicles[vidx]
        path = network.paths[veh.path]
        mid = path.movement_sequence[leg]
        sig = signal.for_movement(mid)
        st = states[mid]

        earliest = max(arrival, st.last_cross + h_s)
        cross = _next_green_time(earliest, sig)
        queued = cross > arrival + _TOL

        visit = MovementVisit(
            movement=mid,
            arrival_abs=arrival,
            cross_abs=cross,
            queued=False,
            cross_cycle=_cycle_of(cross, sig),
        )

        if queued:
            j = _cycle_of(arrival, sig)
            if j != st.cycle:
                red_start = sig.offset + j * sig.cycle
                st.queued_open = [c for c in st.queued_open if c >= red_start]
                st.queue_base = len(st.queued_open)
                st.cycle = j
                st.joins_in_cycle = 0
            standing = st.queue_base + st.joins_in_cycle
            d = jam * (standing + 1)
            join = max(arrival - d / flow.free_flow_speed, st.last_join + gap, 0.0)
            join_cycle = _cycle_of(join, sig)
            red_start_j = sig.offset + join_cycle * sig.cycle
            # the back of queue cannot outrun the steepest accumulation wave
            join = max(join, red_start_j + d / flow.accumulation_speed)
            join_rel = join - red_start_j
            # the single-peak shockwave queue only accepts joins while its
            # back is still standing: once the dissipation wave catches the
            # back, delayed arrivals are a moving queue, not a standing one
            back_release = sig.red + jam * standing / flow.dissipation_speed
            if join + _TOL >= cross or join_rel > back_release + _TOL:
                queued = False
                visit.impeded = True
            else:
                st.joins_in_cycle += 1
                st.last_join = join
                st.queued_open.append(cross)
                visit.queued = True
                visit.join_abs = join
                visit.join_distance = d
                visit.join_cycle = join_cycle

        st.last_cross = cross
        veh.visits.append(visit)

        if leg + 1 < len(path.movement_sequence):
            nxt_len = path_links[veh.path][leg + 1]
            nxt_arrival = cross + nxt_len / flow.free_flow_speed
            heapq.heappush(events, (nxt_arrival, seq, vidx, leg + 1))
            seq += 1

    scenario = Scenario(
        network=network,
        signal=signal,
        flow=flow,
        penetration=penetration,
        seed=seed,
        delta=delta,
        fov_box=fov_box,
        loop_links=loop_links,
        vehicles=vehicles,
        movement_cycles={},
        ground_truth=GroundTruth({}, {}, {}, {}),
    )
    scenario.movement_cycles = _build_cycle_truth(scenario)
    scenario.ground_truth = _build_ground_truth(scenario)
    _check_feasibility(scenario)
    return scenario


def _build_cycle_truth(scenario: Scenario) -> dict[str, list[MovementCycleTruth]]:
    net = scenario.network
    plan = scenario.signal
    jam = scenario.flow.jam_spacing
    visits_by_movement: dict[str, list[tuple[MovementVisit, VehicleRecord]]] = {
        mid: [] for mid in net.movements
    }
    for veh in scenario.vehicles:
        for v in veh.visits:
            visits_by_movement[v.movement].append((v, veh))

    tables: dict[str, list[MovementCycleTruth]] = {}
    for mid in sorted(net.movements):
        sig = plan.for_movement(mid)
        ncycles = plan.cycle_count(mid)
        cycles = [
            MovementCycleTruth(
                movement=mid,
                cycle=j,
                red_start_abs=sig.offset + j * sig.cycle,
                cycle_length=sig.cycle,
                red=sig.red,
            )
            for j in range(ncycles)
        ]
        visits = sorted(
            visits_by_movement[mid], key=lambda pair: (pair[0].cross_abs, pair[1].id)
        )

        for v, veh in visits:
            if v.queued:
                j0 = v.join_cycle
                if 0 <= j0 < ncycles:
                    t_rel = v.join_abs - cycles[j0].red_start_abs
                    cycles[j0].joins.append(
                        QueueStint(
                            vehicle=veh.id,
                            is_cv=veh.is_cv,
                            t=t_rel,
                            d=v.join_distance,
                            first_time=True,
                            cross_cycle=v.cross_cycle,
                            cross_abs=v.cross_abs,
                        )
                    )
            else:
                j = _cycle_of(v.arrival_abs, sig)
                if 0 <= j < ncycles:
                    bucket = cycles[j].impeded if v.impeded else cycles[j].nonqueued
                    bucket.append(
                        NonQueuedPass(
                            vehicle=veh.id,
                            is_cv=veh.is_cv,
                            t=v.arrival_abs - cycles[j].red_start_abs,
                            cross_abs=v.cross_abs,
                        )
                    )
            jc = v.cross_cycle
            if 0 <= jc < ncycles:
                cycles[jc].crossings.append(
                    (v.cross_abs - cycles[jc].red_start_abs, veh.id)
                )

        # residual re-anchors: vehicles standing across a red start re-queue
        # at jam-spacing ranks in FIFO (= crossing) order
        queued_visits = sorted(
            ((v, veh) for v, veh in visits if v.queued),
            key=lambda pair: pair[0].cross_abs,
        )
        for j in range(ncycles):
            red_start = j * sig.cycle + sig.offset
            residual = [
                (v, veh)
                for v, veh in queued_visits
                if v.join_abs < red_start and v.cross_abs >= red_start
            ]
            cycles[j].residual_base = len(residual)
            for k, (v, veh) in enumerate(residual, start=1):
                cycles[j].joins.append(
                    QueueStint(
                        vehicle=veh.id,
                        is_cv=veh.is_cv,
                        t=0.0,
                        d=jam * k,
                        first_time=False,
                        cross_cycle=v.cross_cycle,
                        cross_abs=v.cross_abs,
                    )
                )

        # vehicles in the system across a cycle boundary (standing or rolling)
        persists: dict[int, set[str]] = {j: set() for j in range(ncycles)}
        for v, veh in visits:
            if v.queued:
                event_cycle = v.join_cycle
            else:
                event_cycle = _cycle_of(v.arrival_abs, sig)
            for j in range(max(0, event_cycle), min(v.cross_cycle, ncycles)):
                if j >= 0:
                    persists[j].add(veh.id)

        for j, cyc in enumerate(cycles):
            cyc.joins.sort(key=lambda s: (s.t, s.d))
            cyc.nonqueued.sort(key=lambda n: n.t)
            cyc.impeded.sort(key=lambda n: n.t)
            cyc.crossings.sort()
            cyc.boq = jam * (cyc.residual_base + len(cyc.first_time_joins()))
            cyc.arrivals = (
                len(cyc.first_time_joins()) + len(cyc.nonqueued) + len(cyc.impeded)
            )
            cyc.persists = sorted(persists[j])
        tables[mid] = cycles
    return tables


def _build_ground_truth(scenario: Scenario) -> GroundTruth:
    net = scenario.network
    path_flow = {pid: 0 for pid in net.paths}
    path_cv = {pid: 0 for pid in net.paths}
    for veh in scenario.vehicles:
        path_flow[veh.path] += 1
        if veh.is_cv:
            path_cv[veh.path] += 1
    movement_flow = {mid: 0 for mid in net.movements}
    for veh in scenario.vehicles:
        for v in veh.visits:
            movement_flow[v.movement] += 1
    link_flow = {lid: 0 for lid in net.links}
    for pid, n in path_flow.items():
        p = net.paths[pid]
        for mid in p.movement_sequence:
            link_flow[net.movements[mid].inbound_link] += n
        if p.destination_link in link_flow:
            link_flow[p.destination_link] += n
    return GroundTruth(path_flow, path_cv, link_flow, movement_flow)


def _check_feasibility(scenario: Scenario) -> None:
    net = scenario.network
    flow = scenario.flow
    lam_u = flow.max_arrival_rate
    for mid, cycles in scenario.movement_cycles.items():
        if not cycles:
            continue
        sig = scenario.signal.for_movement(mid)
        capacity = math.floor((sig.cycle - sig.red) / flow.saturation_headway)
        link = net.links[net.movements[mid].inbound_link]
        entry = not net.intersections[link.from_intersection].is_signalized
        fov = scenario.fov_extent(mid)
        always_oversat = all(c.residual_base > 0 for c in cycles[1:]) and len(cycles) > 2
        mean_arrivals = sum(c.arrivals for c in cycles) / len(cycles)
        if always_oversat and mean_arrivals > capacity:
            raise ValueError(
                f"movement {mid}: demand exceeds capacity for the whole horizon "
                f"({mean_arrivals:.1f} arrivals/cycle vs capacity {capacity})"
            )
        for c in cycles:
            if c.boq > link.length + _TOL:
                raise ValueError(
                    f"movement {mid} cycle {c.cycle}: queue {c.boq:.1f} m exceeds "
                    f"link {link.id} length {link.length:.1f} m"
                )
            if entry and c.boq > fov + _TOL:
                raise ValueError(
                    f"movement {mid} cycle {c.cycle}: entry-approach queue "
                    f"{c.boq:.1f} m exceeds the field of view {fov:.1f} m"
                )
            if c.arrivals > lam_u * sig.cycle + _TOL:
                raise ValueError(
                    f"movement {mid} cycle {c.cycle}: {c.arrivals} arrivals exceed "
                    f"max_arrival_rate * C = {lam_u * sig.cycle:.1f}"
                )


# ---------------------------------------------------------------------------
# observation channels
# ---------------------------------------------------------------------------


@dataclass
class CvCycleRecord:
    """CV sightings of one movement-cycle, ordered by join/crossing time."""

    cycle: int
    queued_first_time: list[QueueStint]
    twice_queued: list[QueueStint]  # residual re-anchors observed this cycle
    non_queued: list[NonQueuedPass]

    @property
    def empty(self) -> bool:
        return not (self.queued_first_time or self.twice_queued or self.non_queued)


def extract_cv_observations(scenario: Scenario) -> dict[str, list[CvCycleRecord]]:
    """Classify CVs per movement-cycle: first-time queued, twice-queued, non-queued."""
    out: dict[str, list[CvCycleRecord]] = {}
    for mid in sorted(scenario.movement_cycles):
        recs = []
        for cyc in scenario.movement_cycles[mid]:
            recs.append(
                CvCycleRecord(
                    cycle=cyc.cycle,
                    queued_first_time=[s for s in cyc.joins if s.is_cv and s.first_time],
                    twice_queued=[s for s in cyc.joins if s.is_cv and not s.first_time],
                    non_queued=[n for n in cyc.nonqueued if n.is_cv],
                )
            )
        out[mid] = recs
    return out


def extract_loop_events(
    scenario: Scenario, instrumented_links: Optional[dict[str, float]] = None
) -> LoopEventLog:
    """Loop logs for instrumented links (one lane-channel per movement).

    Timestamps are the physical detector passings; the per-cycle window
    counts are arrival events inside the unoccupied windows, which is what
    the matched (assumption-corrected) loop data pins down.
    """
    links = instrumented_links if instrumented_links is not None else scenario.loop_links
    net = scenario.network
    flow = scenario.flow
    log = LoopEventLog()
    for lid in sorted(links):
        pos = links[lid]
        if lid not in net.links:
            raise ValueError(f"loop on unknown link {lid!r}")
        if not 0.0 < pos < net.links[lid].length:
            raise ValueError(f"loop position {pos} outside link {lid}")
        for mid in sorted(net.movements_of_link(lid)):
            ch = LoopChannel(link=lid, movement=mid, position=pos)
            cycles = scenario.movement_cycles[mid]
            for cyc in cycles:
                # physical pass timestamps
                for s in cyc.joins:
                    if not s.first_time:
                        continue
                    t_abs = cyc.red_start_abs + s.t
                    if s.d < pos:
                        ch.timestamps.append(t_abs - (pos - s.d) / flow.free_flow_speed)
                    else:
                        ch.timestamps.append(s.cross_abs - pos / flow.free_flow_speed)
                for n in list(cyc.nonqueued) + list(cyc.impeded):
                    ch.timestamps.append(
                        cyc.red_start_abs + n.t - pos / flow.free_flow_speed
                    )

                covered = bool(
                    cyc.boq >= pos - _TOL
                    and (cyc.residual_base > 0 or cyc.first_time_joins())
                )
                if covered:
                    t_cover = _polyline_crossing(cyc, pos, flow)
                    t_release = cyc.red + pos / flow.dissipation_speed
                else:
                    t_cover = t_release = 0.0
                n_before = 0
                n_after = 0
                events = [s.t for s in cyc.first_time_joins()]
                events += [n.t for n in cyc.nonqueued]
                events += [n.t for n in cyc.impeded]
                for t_ev in events:
                    if covered and t_ev < t_cover - _TOL:
                        n_before += 1
                    elif covered and t_ev > t_release + _TOL:
                        n_after += 1
                    elif not covered:
                        n_after += 1
                ch.windows.append(
                    LoopCycleWindow(
                        cycle=cyc.cycle,
                        occupied=covered,
                        t_cover=t_cover,
                        t_release=t_release,
                        n_before=n_before,
                        n_after=n_after,
                    )
                )
            ch.timestamps.sort()
            log.channels[mid] = ch
    return log


def _polyline_crossing(cyc: MovementCycleTruth, d_target: float, flow: FlowModel) -> float:
    """Time the back of queue first reaches ``d_target`` (linear interpolation).

    Discrete joins can lead the maximum accumulation wave right at the red
    start, so the crossing is floored at ``d_target / w_a``, keeping every
    derived anchor inside the global shockwave triangle.
    """
    pts = cyc.join_polyline()
    prev_t, prev_d = pts[0]
    if prev_d >= d_target:
        return max(0.0, d_target / flow.accumulation_speed)
    for t, d in pts[1:]:
        if d >= d_target - _TOL:
            if d - prev_d < _TOL:
                cross = t
            else:
                cross = prev_t + (t - prev_t) * (d_target - prev_d) / (d - prev_d)
            return max(cross, d_target / flow.accumulation_speed)
        prev_t, prev_d = t, d
    return max(prev_t, d_target / flow.accumulation_speed)


CASE_BOTH = 1  # own and upstream intersection both under UAV
CASE_OWN = 2  # own only
CASE_UPSTREAM = 3  # upstream only
CASE_NONE = 4


@dataclass
class FovCycleView:
    cycle: int
    beyond: bool  # queue grew past the visible distance
    t_exceed: float  # back of queue crosses D_fov (cycle-relative)
    t_return: float  # dissipation wave passes D_fov
    n_hidden: int  # joins inside [t_exceed, t_return]


@dataclass
class MovementVisibility:
    movement: str
    case: int
    fov: float
    cycles: list[FovCycleView]


def movement_case(network: Network, deployment, movement_id: str) -> int:
    """Observability case from the UAV status of own/upstream intersections."""
    m = network.movements[movement_id]
    own = deployment[network.signalized_index[m.intersection]]
    up_node = network.links[m.inbound_link].from_intersection
    up_idx = network.signalized_index.get(up_node)
    up = deployment[up_idx] if up_idx is not None else 0
    if own and up:
        return CASE_BOTH
    if own:
        return CASE_OWN
    if up:
        return CASE_UPSTREAM
    return CASE_NONE


def clip_uav_view(scenario: Scenario, deployment) -> dict[str, MovementVisibility]:
    """Per-movement visibility under a deployment; trajectories clip at D_fov."""
    net = scenario.network
    if len(deployment) != len(net.signalized_ids):
        raise ValueError(
            f"deployment length {len(deployment)} != {len(net.signalized_ids)} intersections"
        )
    out: dict[str, MovementVisibility] = {}
    for mid in sorted(net.movements):
        case = movement_case(net, deployment, mid)
        fov = scenario.fov_extent(mid)
        views = []
        for cyc in scenario.movement_cycles[mid]:
            views.append(fov_cycle_view(cyc, fov, scenario.flow))
        out[mid] = MovementVisibility(movement=mid, case=case, fov=fov, cycles=views)
    return out


def fov_cycle_view(cyc: MovementCycleTruth, fov: float, flow: FlowModel) -> FovCycleView:
    beyond = cyc.boq > fov + _TOL
    if not beyond:
        return FovCycleView(cycle=cyc.cycle, beyond=False, t_exceed=0.0, t_return=0.0,
                            n_hidden=0)
    t_exceed = _polyline_crossing(cyc, fov, flow)
    t_return = cyc.red + fov / flow.dissipation_speed
    n_hidden = sum(
        1 for s in cyc.first_time_joins() if t_exceed - _TOL <= s.t <= t_return + _TOL
    )
    return FovCycleView(
        cycle=cyc.cycle, beyond=True, t_exceed=t_exceed, t_return=t_return,
        n_hidden=n_hidden,
    )
