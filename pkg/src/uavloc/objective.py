"""The placement objective Z = w1*F_path + w2*F_arrival + w3*F_queue.

Per-movement, per-cycle uncertainties are precomputed once per scenario for
all four observability cases; evaluating a deployment then reduces to a
case lookup plus the path partition.  Results are memoized by the
deployment bit vector, and -Z is exposed as the solver fitness.

When ground-sensor data outperforms the case-2/3 UAV reading for a cycle
(e.g. a fully CV-determined cycle at an intersection that only gained an
upstream UAV), the pipeline keeps the smaller uncertainty: extra sensors
never make a movement less known than it already was.
"""

from dataclasses import dataclass

import numpy as np

from .aggregation import MovementCaseSums, aggregate_F_arrival, aggregate_F_queue
from .arrival_uncertainty import (
    RESIDUAL_TAIL_CYCLE_REMAINDER,
    arrival_uncertainty_case12,
    arrival_uncertainty_case3,
    arrival_uncertainty_case4_cv,
    arrival_uncertainty_case4_fused,
    build_cv_arrival_observation,
)
from .network import Network
from .observability import (
    DeploymentVector,
    movement_observability,
    partition_paths,
)
from .path_uncertainty import PathUncertaintyReport, path_uncertainty
from .queue_uncertainty import (
    build_queue_observation,
    queue_uncertainty_case12,
    queue_uncertainty_case3,
    queue_uncertainty_case4,
)
from .scenario import Scenario, extract_cv_observations, extract_loop_events, fov_cycle_view


@dataclass(frozen=True)
class ObjectiveWeights:
    w1: float = 26.0
    w2: float = 1.0
    w3: float = 1.0

    def __post_init__(self):
        if self.w1 < 0 or self.w2 < 0 or self.w3 < 0:
            raise ValueError("weights must be nonnegative")
        if self.w1 == self.w2 == self.w3 == 0:
            raise ValueError("at least one weight must be positive")

    @classmethod
    def parse(cls, spec: str) -> "ObjectiveWeights":
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected w1:w2:w3, got {spec!r}")
        return cls(*(float(p) for p in parts))


@dataclass(frozen=True)
class ObjectiveValue:
    f_path: float
    f_arrival: float
    f_queue: float
    z: float

    @property
    def fitness(self) -> float:
        return -self.z


@dataclass
class MovementTable:
    """Per-cycle uncertainties of one movement under each observability case."""

    movement: str
    own_index: int
    up_index: int  # -1 when the upstream node cannot host a UAV
    u2_arrival: np.ndarray
    u3_arrival: np.ndarray
    u4_arrival: np.ndarray
    u2_queue: np.ndarray
    u3_queue: np.ndarray
    u4_queue: np.ndarray


class ObjectiveEvaluator:
    """Pipelines observability -> uncertainty modules -> weighted sum.

    Pure given the immutable scenario; safe for concurrent reads.  The memo
    only ever gains entries for distinct deployment keys.
    """

    def __init__(
        self,
        scenario: Scenario,
        weights: ObjectiveWeights | None = None,
        residual_tail: str = RESIDUAL_TAIL_CYCLE_REMAINDER,
    ):
        self.scenario = scenario
        self.weights = weights or ObjectiveWeights()
        self.residual_tail = residual_tail
        self.network: Network = scenario.network
        self.evaluations = 0  # objective calls, including memo hits
        self.fresh_evaluations = 0
        self._memo: dict[bytes, ObjectiveValue] = {}
        self._build_tables()

    # -- precomputation ----------------------------------------------------

    def _build_tables(self) -> None:
        net = self.network
        sc = self.scenario
        flow = sc.flow
        cv = extract_cv_observations(sc)
        loops = extract_loop_events(sc)

        # absolute CV arrival times per movement, for per-cycle link shares
        cv_times: dict[str, list[float]] = {}
        for mid, recs in cv.items():
            times = []
            for rec, cyc in zip(recs, sc.movement_cycles[mid]):
                for s in rec.queued_first_time:
                    times.append(cyc.red_start_abs + s.t)
                for n in rec.non_queued:
                    times.append(cyc.red_start_abs + n.t)
            cv_times[mid] = sorted(times)

        self.tables: list[MovementTable] = []
        self.movement_order: list[str] = sorted(net.movements)
        for mid in self.movement_order:
            m = net.movements[mid]
            sig = sc.signal.for_movement(mid)
            cycles = sc.movement_cycles[mid]
            recs = cv[mid]
            channel = loops.for_movement(mid)
            fov = sc.fov_extent(mid)
            siblings = sorted(net.movements_of_link(m.inbound_link))
            lam_u = flow.max_arrival_rate

            n = len(cycles)
            u2a = np.zeros(n)
            u3a = np.zeros(n)
            u4a = np.zeros(n)
            u2q = np.zeros(n)
            u3q = np.zeros(n)
            u4q = np.zeros(n)

            for j, cyc in enumerate(cycles):
                rec = recs[j]
                nxt = recs[j + 1] if j + 1 < n else None
                obs = build_cv_arrival_observation(
                    rec,
                    nxt,
                    sig.cycle,
                    sig.red,
                    lam_u,
                    flow.saturation_headway,
                    cyc.red_start_abs,
                    flow.jam_spacing,
                    residual_tail=self.residual_tail,
                )
                window = channel.windows[j] if channel else None
                if window is not None:
                    u4a[j] = arrival_uncertainty_case4_fused(obs, window).u
                else:
                    u4a[j] = arrival_uncertainty_case4_cv(obs).u

                qobs = build_queue_observation(
                    rec,
                    window,
                    channel.position if channel else None,
                    sig.red,
                    flow.accumulation_speed,
                    flow.dissipation_speed,
                    flow.free_flow_speed,
                )
                u4q[j] = queue_uncertainty_case4(
                    qobs, flow.accumulation_speed, flow.dissipation_speed, sig.red
                ).u

                view = fov_cycle_view(cyc, fov, flow)
                raw2a = arrival_uncertainty_case12(2, view, lam_u, sig.cycle).u
                raw2q = queue_uncertainty_case12(
                    2, view, flow.accumulation_speed, flow.dissipation_speed, sig.red, fov
                ).u
                u2a[j] = min(raw2a, u4a[j])
                u2q[j] = min(raw2q, u4q[j])

                t0 = cyc.red_start_abs
                t1 = t0 + sig.cycle
                own_cv = _count_in(cv_times[mid], t0, t1)
                link_cv = sum(_count_in(cv_times[s], t0, t1) for s in siblings)
                raw3a = arrival_uncertainty_case3(
                    len(siblings), own_cv, link_cv, lam_u, sig.cycle
                ).u
                raw3q = queue_uncertainty_case3(
                    len(siblings), own_cv, link_cv,
                    flow.accumulation_speed, flow.dissipation_speed, sig.red,
                ).u
                u3a[j] = min(raw3a, u4a[j])
                u3q[j] = min(raw3q, u4q[j])

            up_node = net.links[m.inbound_link].from_intersection
            self.tables.append(
                MovementTable(
                    movement=mid,
                    own_index=net.signalized_index[m.intersection],
                    up_index=net.signalized_index.get(up_node, -1),
                    u2_arrival=u2a,
                    u3_arrival=u3a,
                    u4_arrival=u4a,
                    u2_queue=u2q,
                    u3_queue=u3q,
                    u4_queue=u4q,
                )
            )

        self._own = np.array([t.own_index for t in self.tables], dtype=np.int64)
        self._up = np.array([t.up_index for t in self.tables], dtype=np.int64)
        self._s2a = np.array([t.u2_arrival.sum() for t in self.tables])
        self._s3a = np.array([t.u3_arrival.sum() for t in self.tables])
        self._s4a = np.array([t.u4_arrival.sum() for t in self.tables])
        self._s2q = np.array([t.u2_queue.sum() for t in self.tables])
        self._s3q = np.array([t.u3_queue.sum() for t in self.tables])
        self._s4q = np.array([t.u4_queue.sum() for t in self.tables])
        self._movement_intersection = [
            net.movements[t.movement].intersection for t in self.tables
        ]
        self.cv_path_flow = dict(self.scenario.ground_truth.path_cv_flow)

    # -- evaluation ---------------------------------------------------------

    def _case_bits(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        own = u[self._own]
        up = np.where(self._up >= 0, u[np.maximum(self._up, 0)], 0)
        return own, up

    def evaluate(self, deployment) -> ObjectiveValue:
        dep = self._as_deployment(deployment)
        key = bytes(dep.u)
        self.evaluations += 1
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        self.fresh_evaluations += 1

        u = dep.as_array().astype(np.int64)
        own, up = self._case_bits(u)
        both = own * up
        f_arrival = float(
            np.sum(
                np.maximum(own, up)
                * (own * (1 - both) * self._s2a + up * (1 - both) * self._s3a)
                + (1 - np.maximum(own, up)) * self._s4a
            )
        )
        f_queue = float(
            np.sum(
                np.maximum(own, up)
                * (own * (1 - both) * self._s2q + up * (1 - both) * self._s3q)
                + (1 - np.maximum(own, up)) * self._s4q
            )
        )
        obs = movement_observability(self.network, dep)
        part = partition_paths(self.network, obs, self.cv_path_flow)
        f_path = path_uncertainty(part).total

        w = self.weights
        z = w.w1 * f_path + w.w2 * f_arrival + w.w3 * f_queue
        value = ObjectiveValue(f_path=f_path, f_arrival=f_arrival, f_queue=f_queue, z=z)
        self._memo[key] = value
        return value

    def fitness(self, deployment) -> float:
        return self.evaluate(deployment).fitness

    def _as_deployment(self, deployment) -> DeploymentVector:
        if isinstance(deployment, DeploymentVector):
            return deployment
        u = tuple(int(b) for b in deployment)
        return DeploymentVector(u=u, fleet_limit=len(u))

    def case_sums(self, deployment) -> list[MovementCaseSums]:
        dep = self._as_deployment(deployment)
        u = dep.as_array().astype(np.int64)
        own, up = self._case_bits(u)
        out = []
        for k, t in enumerate(self.tables):
            out.append(
                MovementCaseSums(
                    movement=t.movement,
                    own=int(own[k]),
                    up=int(up[k]),
                    sum_case1=0.0,
                    sum_case2=float(self._s2a[k] + self._s2q[k]),
                    sum_case3=float(self._s3a[k] + self._s3q[k]),
                    sum_case4=float(self._s4a[k] + self._s4q[k]),
                )
            )
        return out

    def intersection_uncertainty(self, deployment) -> dict[str, float]:
        """Movement-demand plus queue uncertainty summed per intersection."""
        dep = self._as_deployment(deployment)
        u = dep.as_array().astype(np.int64)
        own, up = self._case_bits(u)
        sums: dict[str, float] = {iid: 0.0 for iid in self.network.signalized_ids}
        for k in range(len(self.tables)):
            if own[k] and up[k]:
                val = 0.0
            elif own[k]:
                val = self._s2a[k] + self._s2q[k]
            elif up[k]:
                val = self._s3a[k] + self._s3q[k]
            else:
                val = self._s4a[k] + self._s4q[k]
            sums[self._movement_intersection[k]] += float(val)
        return sums

    def aggregate_check(self, deployment) -> tuple[float, float]:
        """F values recomputed through the literal indicator sums."""
        dep = self._as_deployment(deployment)
        u = dep.as_array().astype(np.int64)
        own, up = self._case_bits(u)
        arr_entries = []
        q_entries = []
        for k, t in enumerate(self.tables):
            arr_entries.append(
                MovementCaseSums(
                    t.movement, int(own[k]), int(up[k]),
                    0.0, float(self._s2a[k]), float(self._s3a[k]), float(self._s4a[k]),
                )
            )
            q_entries.append(
                MovementCaseSums(
                    t.movement, int(own[k]), int(up[k]),
                    0.0, float(self._s2q[k]), float(self._s3q[k]), float(self._s4q[k]),
                )
            )
        return aggregate_F_arrival(arr_entries), aggregate_F_queue(q_entries)

    def detailed_report(self, deployment) -> dict:
        """Per-path and per-movement-per-cycle uncertainties for a deployment."""
        dep = self._as_deployment(deployment)
        obs = movement_observability(self.network, dep)
        part = partition_paths(self.network, obs, self.cv_path_flow)
        path_rep: PathUncertaintyReport = path_uncertainty(part)
        value = self.evaluate(dep)
        movements = {}
        for t in self.tables:
            case = obs.case[t.movement]
            if case == 1:
                ua = np.zeros_like(t.u4_arrival)
                uq = np.zeros_like(t.u4_queue)
            elif case == 2:
                ua, uq = t.u2_arrival, t.u2_queue
            elif case == 3:
                ua, uq = t.u3_arrival, t.u3_queue
            else:
                ua, uq = t.u4_arrival, t.u4_queue
            movements[t.movement] = {
                "case": case,
                "u_arrival": [float(x) for x in ua],
                "u_queue": [float(x) for x in uq],
            }
        return {
            "deployment": list(dep.u),
            "deployed_intersections": dep.deployed_ids(self.network),
            "paths": {
                pid: {"case": path_rep.case_of_path[pid], "u_path": path_rep.per_path[pid]}
                for pid in sorted(path_rep.per_path)
            },
            "movements": movements,
            "f_path": value.f_path,
            "f_arrival": value.f_arrival,
            "f_queue": value.f_queue,
            "z": value.z,
        }


def _count_in(sorted_times: list[float], t0: float, t1: float) -> int:
    lo = np.searchsorted(sorted_times, t0, side="left")
    hi = np.searchsorted(sorted_times, t1, side="left")
    return int(hi - lo)


def evaluate(deployment, scenario: Scenario, weights: ObjectiveWeights | None = None) -> ObjectiveValue:
    """One-shot objective evaluation.

    Builds the per-scenario tables on every call; hold an
    ObjectiveEvaluator instead when evaluating many deployments.
    """
    return ObjectiveEvaluator(scenario, weights).evaluate(deployment)


@dataclass
class MarginalCurve:
    fleet_sizes: list[int]
    z_values: list[float]
    decreases: list[float]  # decrease attributed to fleet size n: Z(n) - Z(n+1)
    knee: int
    monotone: bool


def marginal_uncertainty(curve: list[tuple[int, float]], knee_fraction: float = 0.25) -> MarginalCurve:
    """First differences of a Z-vs-fleet-size sweep and the knee point.

    The decrease at fleet size n is Z(n) - Z(n+1); the knee is the smallest
    n whose decrease falls to ``knee_fraction`` of the largest step or less.
    A non-monotone curve flags solver suboptimality instead of failing.
    """
    pts = sorted(curve)
    ns = [n for n, _ in pts]
    zs = [z for _, z in pts]
    if len(pts) < 2:
        return MarginalCurve(ns, zs, [], 0, True)
    dec = [zs[k] - zs[k + 1] for k in range(len(zs) - 1)]
    monotone = all(d >= -1e-9 for d in dec)
    max_dec = max(dec)
    if max_dec <= 0:
        return MarginalCurve(ns, zs, dec, ns[0], monotone)
    knee = ns[-1]
    for k, d in enumerate(dec):
        if d <= knee_fraction * max_dec:
            knee = ns[k]
            break
    return MarginalCurve(ns, zs, dec, knee, monotone)
