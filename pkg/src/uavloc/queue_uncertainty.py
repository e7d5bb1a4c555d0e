"""Feasible-domain size of the back of queue via shockwave geometry.

Coordinates: t seconds since the red start, d meters upstream of the
stopline.  The global feasible region is the triangle spanned by the red
interval on the stopline, the steepest accumulation wave (slope w_a) and
the dissipation wave (slope w_d from the green start).  Observations cut
the triangle down: a queued anchor M floors the region and bounds its left
edge by the w_a-parallel through M; a non-queued trajectory caps it at the
height where that trajectory crosses the dissipation wave.
"""

from dataclasses import dataclass, field
from typing import Optional

from .aggregation import aggregate_F_queue  # noqa: F401  (module surface)
from .scenario import CvCycleRecord, FovCycleView, LoopCycleWindow

_TOL = 1e-9

SHAPE_ZERO = "zero"
SHAPE_TRIANGLE = "triangle"
SHAPE_TRAPEZOID = "trapezoid"
SHAPE_FULL = "full"


class InconsistentQueueObservationError(ValueError):
    """A non-queued trajectory caps the region below a queued anchor."""


@dataclass(frozen=True)
class PointTD:
    t: float
    d: float


def global_queue_area(w_a: float, w_d: float, red: float) -> float:
    """Area of the unconstrained shockwave triangle, 0.5*w_a*w_d*R^2/(w_d-w_a)."""
    if not 0.0 < w_a < w_d:
        raise ValueError(f"need 0 < w_a < w_d, got w_a={w_a}, w_d={w_d}")
    if red < 0:
        raise ValueError(f"red time must be nonnegative, got {red}")
    return 0.5 * w_a * w_d * red * red / (w_d - w_a)


def apex(w_a: float, w_d: float, red: float) -> PointTD:
    t_c = w_d * red / (w_d - w_a)
    return PointTD(t_c, w_a * t_c)


def point_in_triangle(p: PointTD, w_a: float, w_d: float, red: float, tol: float = 1e-7) -> bool:
    if p.d < -tol or p.t < -tol:
        return False
    if p.d > w_a * p.t + tol:  # above the steepest accumulation wave
        return False
    if p.t > red + p.d / w_d + tol:  # right of the dissipation wave
        return False
    return True


def parallel_cut_point(m: PointTD, w_a: float, w_d: float, red: float) -> PointTD:
    """Intersection of the w_a-parallel through M with the dissipation wave.

    t_X = (w_d*R - w_a*t_M + d_M) / (w_d - w_a); the height follows from the
    dissipation-wave equation d_X = w_d*(t_X - R).
    """
    if not point_in_triangle(m, w_a, w_d, red):
        raise ValueError(
            f"anchor ({m.t:.3f}, {m.d:.3f}) lies outside the global triangle "
            f"(w_a={w_a}, w_d={w_d}, R={red})"
        )
    t_x = (w_d * red - w_a * m.t + m.d) / (w_d - w_a)
    return PointTD(t_x, w_d * (t_x - red))


@dataclass
class QueueUncertainty:
    s_u: float
    s_global: float
    shape: str
    vertices: list[PointTD] = field(default_factory=list)

    @property
    def u(self) -> float:
        return min(max(self.s_u / self.s_global, 0.0), 1.0)


def project_anchor(t: float, d: float, w_a: float) -> PointTD:
    """Place a queue anchor on or right of the steepest accumulation wave.

    Discrete joins (and residual re-anchors at the red start) can lead the
    w_a wave; projecting them keeps every anchor inside the triangle without
    ever cutting the true back of queue out of the region.
    """
    return PointTD(max(t, d / w_a), d)


def _bounded_region(
    m: PointTD, q: PointTD, cap: float, w_a: float, w_d: float, red: float
) -> QueueUncertainty:
    s_global = global_queue_area(w_a, w_d, red)
    x = parallel_cut_point(m, w_a, w_d, red)
    if cap < q.d - 1e-7:
        raise InconsistentQueueObservationError(
            f"non-queued cap {cap:.3f} m below the queued anchor {q.d:.3f} m"
        )
    if x.d <= cap + _TOL:
        s = 0.5 * (q.t - m.t) * (x.d - q.d)
        return QueueUncertainty(max(0.0, s), s_global, SHAPE_TRIANGLE, [m, q, x])
    n = PointTD(red + cap / w_d, cap)
    p = PointTD(m.t + (cap - m.d) / w_a, cap)
    s = 0.5 * ((q.t - m.t) + (n.t - p.t)) * (cap - q.d)
    return QueueUncertainty(max(0.0, s), s_global, SHAPE_TRAPEZOID, [m, q, n, p])


def queue_uncertainty_case12(
    case: int, view: FovCycleView, w_a: float, w_d: float, red: float, fov: float
) -> QueueUncertainty:
    """Own-UAV cases: zero inside the view; a triangle above it otherwise.

    Beyond the view the anchors sit on the FoV boundary: M where the back
    of queue was last seen crossing it, Q where the dissipation wave
    returns it to view.
    """
    if case not in (1, 2):
        raise ValueError(f"case12 called with case {case}")
    s_global = global_queue_area(w_a, w_d, red)
    if case == 1 or not view.beyond:
        return QueueUncertainty(0.0, s_global, SHAPE_ZERO)
    m = project_anchor(view.t_exceed, fov, w_a)
    q = PointTD(red + fov / w_d, fov)
    c = apex(w_a, w_d, red)
    return _bounded_region(m, q, c.d, w_a, w_d, red)


def queue_uncertainty_case3(
    n_movements: int,
    cv_count_movement: int,
    cv_count_link: int,
    w_a: float,
    w_d: float,
    red: float,
) -> QueueUncertainty:
    """Upstream-UAV case: link inflow known, per-movement split estimated."""
    from .arrival_uncertainty import movement_share

    share = movement_share(n_movements, cv_count_movement, cv_count_link)
    s_global = global_queue_area(w_a, w_d, red)
    s = s_global * (1.0 - min(max(share, 0.0), 1.0))
    return QueueUncertainty(s, s_global, SHAPE_FULL if s > 0 else SHAPE_ZERO)


@dataclass
class QueueCycleObservation:
    """Ground-sensor anchors for one movement-cycle (case 4)."""

    cycle: int
    last_join: Optional[PointTD]  # last queued CV of this cycle's queue, projected
    cap_height: Optional[float]  # lowest non-queued BC crossing, None without one
    has_queued_cv: bool = False
    has_nonqueued_cv: bool = False
    loop_position: Optional[float] = None  # d_loop when the queue covered the loop
    loop_cover_time: Optional[float] = None


def nonqueued_cap_height(
    cross_t: float, red: float, w_d: float, free_flow_speed: float
) -> float:
    """Height where a non-queued trajectory crosses the dissipation wave.

    The trajectory approaches the stopline at free-flow speed and crosses at
    ``cross_t``; any standing queue above this height would have blocked it.
    """
    return max(0.0, (cross_t - red) * w_d * free_flow_speed / (w_d + free_flow_speed))


def build_queue_observation(
    record: CvCycleRecord,
    loop_window: Optional[LoopCycleWindow],
    loop_position: Optional[float],
    red: float,
    w_a: float,
    w_d: float,
    free_flow_speed: float,
) -> QueueCycleObservation:
    stints = sorted(
        list(record.queued_first_time) + list(record.twice_queued),
        key=lambda s: (s.t, s.d),
    )
    last = stints[-1] if stints else None
    anchor = project_anchor(last.t, last.d, w_a) if last else None
    cap = None
    for n in record.non_queued:
        h = nonqueued_cap_height(n.t, red, w_d, free_flow_speed)
        cap = h if cap is None else min(cap, h)
    obs = QueueCycleObservation(
        cycle=record.cycle,
        last_join=anchor,
        cap_height=cap,
        has_queued_cv=bool(stints),
        has_nonqueued_cv=bool(record.non_queued),
    )
    if loop_window is not None and loop_window.occupied and loop_position is not None:
        obs.loop_position = loop_position
        obs.loop_cover_time = loop_window.t_cover
    return obs


def queue_uncertainty_case4(
    obs: QueueCycleObservation, w_a: float, w_d: float, red: float
) -> QueueUncertainty:
    """No-UAV case: region from the last queued CV, capped by non-queued CVs.

    The loop detector replaces the anchors when the standing queue was seen
    to cover it farther upstream than any queued CV; that requires both
    queued and non-queued CVs in the cycle so the occupancy is attributable
    to a queue rather than to absence of traffic.
    """
    s_global = global_queue_area(w_a, w_d, red)
    m = obs.last_join
    use_loop = (
        obs.loop_position is not None
        and obs.has_queued_cv
        and obs.has_nonqueued_cv
        and (m is None or obs.loop_position > m.d)
    )
    if use_loop:
        m = project_anchor(obs.loop_cover_time, obs.loop_position, w_a)
    if m is None:
        return QueueUncertainty(s_global, s_global, SHAPE_FULL)
    q = PointTD(red + m.d / w_d, m.d)
    cap = obs.cap_height if obs.cap_height is not None else apex(w_a, w_d, red).d
    return _bounded_region(m, q, cap, w_a, w_d, red)
