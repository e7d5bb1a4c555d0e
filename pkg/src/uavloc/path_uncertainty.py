"""Path-choice uncertainty: probability mass of wrong path reconstruction.

Four cases per path k:
  observed by UAVs and carrying CVs   (f_o/Q_o) * (1 - f_k/f_o)
  observed by UAVs only               1 - 1/n_o
  carrying CVs only                   1 - f_k/f_cv
  unobserved                          1 - 1/n_non
The normalization f_o/Q_o applies only to the first case, weighting each
observed sub-path by its share of the observed CV flow.
"""

from dataclasses import dataclass, field

from .observability import PathPartition

CASE_OBSERVED_CV = "o_cv"
CASE_OBSERVED_ONLY = "o_only"
CASE_CV_ONLY = "cv_only"
CASE_UNOBSERVED = "unobserved"


class DegenerateInputError(ValueError):
    """A case formula would divide by zero on this partition."""


@dataclass
class PathUncertaintyReport:
    per_path: dict[str, float] = field(default_factory=dict)
    case_of_path: dict[str, str] = field(default_factory=dict)
    total: float = 0.0  # F_path

    @property
    def f_path(self) -> float:
        return self.total


def path_uncertainty(partition: PathPartition) -> PathUncertaintyReport:
    rep = PathUncertaintyReport()

    for pid in sorted(partition.observed_and_cv):
        sig = partition.group_of_path[pid]
        grp = partition.groups[sig]
        f_k = partition.cv_path_flow[pid]
        if grp.cv_flow <= 0:
            raise DegenerateInputError(
                f"path {pid}: observed+CV case with zero group CV flow"
            )
        if partition.q_o <= 0:
            raise DegenerateInputError("observed+CV case with zero total observed CV flow")
        u = (grp.cv_flow / partition.q_o) * (1.0 - f_k / grp.cv_flow)
        rep.per_path[pid] = u
        rep.case_of_path[pid] = CASE_OBSERVED_CV

    for pid in sorted(partition.observed_only):
        sig = partition.group_of_path[pid]
        grp = partition.groups[sig]
        rep.per_path[pid] = 1.0 - 1.0 / grp.n_o
        rep.case_of_path[pid] = CASE_OBSERVED_ONLY

    for pid in sorted(partition.cv_only):
        if partition.f_cv <= 0:
            raise DegenerateInputError(f"path {pid}: CV-only case with f_cv = 0")
        f_k = partition.cv_path_flow[pid]
        rep.per_path[pid] = 1.0 - f_k / partition.f_cv
        rep.case_of_path[pid] = CASE_CV_ONLY

    n_non = partition.n_non
    for pid in sorted(partition.unobserved):
        # n_non >= 1 whenever the set is nonempty, so no division hazard
        rep.per_path[pid] = 1.0 - 1.0 / n_non
        rep.case_of_path[pid] = CASE_UNOBSERVED

    rep.total = float(sum(rep.per_path.values()))
    return rep
