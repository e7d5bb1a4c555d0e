"""Deployment -> movement observability -> path-set partition.

A movement is UAV-observable when a UAV hovers at its own intersection or
at the upstream intersection of its inbound link.  Paths group by the exact
subsequence of their observed movements; two paths are indistinguishable to
the UAV network exactly when those subsequences coincide.
"""

from dataclasses import dataclass, field

import numpy as np

from .network import Network
from .scenario import CASE_BOTH, CASE_NONE, CASE_OWN, CASE_UPSTREAM


@dataclass(frozen=True)
class DeploymentVector:
    """Binary UAV placement over the signalized intersections."""

    u: tuple[int, ...]
    fleet_limit: int

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.u):
            raise ValueError("deployment bits must be 0/1")
        if self.fleet_limit < 0:
            raise ValueError("fleet limit must be nonnegative")
        if sum(self.u) > self.fleet_limit:
            raise ValueError(
                f"deployment places {sum(self.u)} UAVs, fleet limit {self.fleet_limit}"
            )

    @property
    def count(self) -> int:
        return sum(self.u)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.u, dtype=np.int8)

    def deployed_ids(self, network: Network) -> list[str]:
        return [network.signalized_ids[k] for k, b in enumerate(self.u) if b]

    @classmethod
    def from_ids(cls, network: Network, ids, fleet_limit: int | None = None):
        idset = set(ids)
        unknown = idset - set(network.signalized_ids)
        if unknown:
            raise ValueError(f"unknown or non-signalized intersections: {sorted(unknown)}")
        u = tuple(1 if iid in idset else 0 for iid in network.signalized_ids)
        return cls(u=u, fleet_limit=len(idset) if fleet_limit is None else fleet_limit)


@dataclass
class MovementObservability:
    y: dict[str, int]  # movement id -> 0/1
    case: dict[str, int]  # movement id -> 1..4

    def observed_movements(self) -> set[str]:
        return {mid for mid, flag in self.y.items() if flag}


def movement_observability(network: Network, deployment: DeploymentVector) -> MovementObservability:
    """y_{i,m} = max(u_i, u_{i'}); boundary upstreams never host a UAV."""
    u = deployment.u
    y: dict[str, int] = {}
    case: dict[str, int] = {}
    for mid in sorted(network.movements):
        m = network.movements[mid]
        own = u[network.signalized_index[m.intersection]]
        up_node = network.links[m.inbound_link].from_intersection
        up_idx = network.signalized_index.get(up_node)
        up = u[up_idx] if up_idx is not None else 0
        y[mid] = max(own, up)
        if own and up:
            case[mid] = CASE_BOTH
        elif own:
            case[mid] = CASE_OWN
        elif up:
            case[mid] = CASE_UPSTREAM
        else:
            case[mid] = CASE_NONE
    return MovementObservability(y=y, case=case)


def observed_subpath(network: Network, path_id: str, obs: MovementObservability) -> tuple[str, ...]:
    """Ordered subsequence of the path's movements with y = 1."""
    if path_id not in network.paths:
        raise KeyError(f"unknown path {path_id!r}")
    p = network.paths[path_id]
    return tuple(mid for mid in p.movement_sequence if obs.y.get(mid, 0))


@dataclass
class SubpathGroup:
    signature: tuple[str, ...]
    members: list[str]  # path ids sharing this observed subsequence
    cv_flow: int = 0  # f_o

    @property
    def n_o(self) -> int:
        return len(self.members)


@dataclass
class PathPartition:
    """Four-way split of the path set plus the per-subpath groups."""

    observed_and_cv: set[str] = field(default_factory=set)  # K_o ∩ K_cv
    observed_only: set[str] = field(default_factory=set)  # K_o - K_cv
    cv_only: set[str] = field(default_factory=set)  # K_cv - K_o
    unobserved: set[str] = field(default_factory=set)
    groups: dict[tuple[str, ...], SubpathGroup] = field(default_factory=dict)
    group_of_path: dict[str, tuple[str, ...]] = field(default_factory=dict)
    cv_path_flow: dict[str, int] = field(default_factory=dict)  # f_k per path
    f_cv: int = 0  # CVs on paths outside every observed group
    q_o: int = 0  # total CV flow over all observed sub-paths

    @property
    def n_non(self) -> int:
        return len(self.unobserved)

    def all_paths(self) -> set[str]:
        return self.observed_and_cv | self.observed_only | self.cv_only | self.unobserved


def partition_paths(
    network: Network,
    obs: MovementObservability,
    cv_path_flow: dict[str, int],
) -> PathPartition:
    """Group paths by observed-subpath signature and split by CV coverage.

    ``cv_path_flow`` counts CVs per path over the whole analysis horizon.
    """
    part = PathPartition()
    part.cv_path_flow = {pid: int(cv_path_flow.get(pid, 0)) for pid in network.paths}

    for pid in sorted(network.paths):
        sig = observed_subpath(network, pid, obs)
        if sig:
            part.group_of_path[pid] = sig
            grp = part.groups.get(sig)
            if grp is None:
                grp = SubpathGroup(signature=sig, members=[])
                part.groups[sig] = grp
            grp.members.append(pid)
            grp.cv_flow += part.cv_path_flow[pid]

    for pid in sorted(network.paths):
        f_k = part.cv_path_flow[pid]
        observed = pid in part.group_of_path
        if observed and f_k > 0:
            part.observed_and_cv.add(pid)
        elif observed:
            part.observed_only.add(pid)
        elif f_k > 0:
            part.cv_only.add(pid)
        else:
            part.unobserved.add(pid)

    part.q_o = sum(g.cv_flow for g in part.groups.values())
    part.f_cv = sum(
        part.cv_path_flow[pid] for pid in part.cv_only
    )
    return part
