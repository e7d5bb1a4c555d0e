"""Feasible-domain size of the per-cycle arrival profile.

The per-cycle feasible set is a band of admissible arrival rates over the
cycle: on each sub-interval the rate is pinned (known), bounded below (a
count was observed), or bounded above (hidden vehicles are limited by the
saturated service that would have to discharge them).  The uncertainty
area is the integral of the band height; fusing data channels intersects
their bands, so added observations can never enlarge the area.

Bounds are window averages, not pointwise rates.  Intersecting two
channels can therefore leave a sub-interval where one channel's average
floor exceeds the other's average ceiling without any contradiction (the
mass simply sits elsewhere in the wider window); such bins clamp to zero
height.  A genuine inconsistency is detected on cycle totals: each
channel's admissible vehicle-count interval for the cycle must overlap.

All rate bounds are clamped into [0, max_arrival_rate] before any area is
computed; transient counting spikes in small windows would otherwise push
U past 1.
"""

from dataclasses import dataclass, field
from typing import Optional

from .aggregation import aggregate_F_arrival  # noqa: F401  (module surface)
from .scenario import CvCycleRecord, LoopCycleWindow, FovCycleView

_TOL = 1e-9

TYPE_EMPTY = "1"  # no CVs seen: fully indeterminate
TYPE_CLOSED = "2"  # spanning queued CVs: fully determined
TYPE_RESIDUAL = "3i"  # twice-queued CV, next cycle brings no new queued CV
TYPE_PARTIAL = "3ii"  # queued and/or non-queued CVs inside the cycle

# Paper-literal width for the residual-bounded tail is the cycle remainder;
# "window" restricts it to the undetermined window itself.
RESIDUAL_TAIL_CYCLE_REMAINDER = "cycle_remainder"
RESIDUAL_TAIL_WINDOW = "window"


class ObservationInconsistencyError(ValueError):
    """Two data channels admit no common vehicle count for the cycle."""


def _clamp(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


@dataclass(frozen=True)
class BandSegment:
    t0: float
    t1: float
    lower: float
    upper: float
    known: bool = False  # pinned rate: zero feasible width
    value: Optional[float] = None  # mean rate of a pinned segment, when derivable

    @property
    def width(self) -> float:
        return self.t1 - self.t0

    @property
    def height(self) -> float:
        return 0.0 if self.known else self.upper - self.lower


def band_area(segments: list[BandSegment]) -> float:
    return float(sum(max(0.0, s.height) * s.width for s in segments if s.width > _TOL))


def band_count_interval(segments: list[BandSegment], max_rate: float) -> tuple[float, float]:
    """Admissible cycle vehicle-count range implied by a band."""
    lo = 0.0
    hi = 0.0
    for s in segments:
        if s.width <= _TOL:
            continue
        if s.known:
            c = (s.value if s.value is not None else 0.0) * s.width
            lo += c
            hi += c if s.value is not None else max_rate * s.width
        else:
            lo += max(0.0, s.lower) * s.width
            hi += min(s.upper, max_rate) * s.width
    return lo, hi


def intersect_bands(a: list[BandSegment], b: list[BandSegment]) -> list[BandSegment]:
    """Bin-wise intersection; floors exceeding ceilings clamp to zero height."""
    cuts = sorted({s.t0 for s in a} | {s.t1 for s in a} | {s.t0 for s in b} | {s.t1 for s in b})
    out: list[BandSegment] = []
    for t0, t1 in zip(cuts, cuts[1:]):
        if t1 - t0 <= _TOL:
            continue
        mid = 0.5 * (t0 + t1)
        sa = _segment_at(a, mid)
        sb = _segment_at(b, mid)
        if sa is None or sb is None:
            continue
        if sa.known or sb.known:
            va = sa.value if sa.known else None
            vb = sb.value if sb.known else None
            if va is not None and vb is not None and abs(va - vb) > 1e-6:
                raise ObservationInconsistencyError(
                    f"pinned rates disagree on [{t0:.3f}, {t1:.3f}]: {va:.6f} vs {vb:.6f}"
                )
            out.append(BandSegment(t0, t1, 0.0, 0.0, known=True,
                                   value=va if va is not None else vb))
            continue
        hi = min(sa.upper, sb.upper)
        lo = min(max(sa.lower, sb.lower), hi)
        out.append(BandSegment(t0, t1, lo, hi))
    return out


def _segment_at(segments: list[BandSegment], t: float) -> Optional[BandSegment]:
    for s in segments:
        if s.t0 - _TOL <= t <= s.t1 + _TOL:
            return s
    return None


@dataclass
class ArrivalUncertainty:
    s_u: float
    s_global: float

    @property
    def u(self) -> float:
        return _clamp(self.s_u / self.s_global, 0.0, 1.0)


def global_arrival_area(max_rate: float, cycle: float) -> float:
    """Area of the unconstrained rate-time rectangle, max_rate * C."""
    if max_rate <= 0 or cycle <= 0:
        raise ValueError(f"need positive max rate and cycle, got {max_rate}, {cycle}")
    return max_rate * cycle


# ---------------------------------------------------------------------------
# cases 1/2 (own UAV) and 3 (upstream UAV)
# ---------------------------------------------------------------------------


def arrival_uncertainty_case12(
    case: int, view: FovCycleView, max_rate: float, cycle: float
) -> ArrivalUncertainty:
    """Own-UAV cases: zero unless the queue outgrew the field of view.

    Beyond the FoV, joins inside the exceedance window are invisible; the
    vehicles are still counted once the queue discharges through the view,
    so their number lower-bounds the window's rate.
    """
    if case not in (1, 2):
        raise ValueError(f"case12 called with case {case}")
    s_global = global_arrival_area(max_rate, cycle)
    if case == 1 or not view.beyond:
        return ArrivalUncertainty(0.0, s_global)
    width = view.t_return - view.t_exceed
    if width <= _TOL:
        return ArrivalUncertainty(0.0, s_global)
    lb = _clamp(view.n_hidden / width, 0.0, max_rate)
    return ArrivalUncertainty((max_rate - lb) * width, s_global)


def case2_band(view: FovCycleView, max_rate: float, cycle: float) -> list[BandSegment]:
    if not view.beyond or view.t_return - view.t_exceed <= _TOL:
        return [BandSegment(0.0, cycle, 0.0, 0.0, known=True)]
    lb = _clamp(view.n_hidden / (view.t_return - view.t_exceed), 0.0, max_rate)
    return [
        BandSegment(0.0, view.t_exceed, 0.0, 0.0, known=True),
        BandSegment(view.t_exceed, view.t_return, lb, max_rate),
        BandSegment(view.t_return, cycle, 0.0, 0.0, known=True),
    ]


def movement_share(n_movements: int, cv_count_movement: int, cv_count_link: int) -> float:
    """Estimated flow share of one movement on its link for a cycle."""
    if n_movements < 1:
        raise ValueError("link without movements")
    if cv_count_link > 0:
        return cv_count_movement / cv_count_link
    return 1.0 / n_movements


def arrival_uncertainty_case3(
    n_movements: int,
    cv_count_movement: int,
    cv_count_link: int,
    max_rate: float,
    cycle: float,
) -> ArrivalUncertainty:
    """Upstream-UAV case: the link inflow is known, the turn split is not."""
    share = movement_share(n_movements, cv_count_movement, cv_count_link)
    s_global = global_arrival_area(max_rate, cycle)
    return ArrivalUncertainty(s_global * (1.0 - _clamp(share, 0.0, 1.0)), s_global)


# ---------------------------------------------------------------------------
# case 4: connected vehicles
# ---------------------------------------------------------------------------


@dataclass
class CvArrivalObservation:
    """Feasible-band view of one movement-cycle from CV data alone."""

    cycle: int
    cycle_type: str
    cycle_length: float
    max_rate: float
    segments: list[BandSegment] = field(default_factory=list)
    # canonical anchors (valid when at most one bounded tail window exists)
    known_until: float = 0.0
    bound_until: float = 0.0
    rate_upper: float = 0.0

    @classmethod
    def from_canonical(
        cls,
        cycle_type: str,
        cycle_length: float,
        max_rate: float,
        known_until: float = 0.0,
        bound_until: float = 0.0,
        rate_upper: float = 0.0,
        cycle: int = 0,
        residual_tail: str = RESIDUAL_TAIL_CYCLE_REMAINDER,
        known_value: Optional[float] = None,
    ) -> "CvArrivalObservation":
        C = cycle_length
        rate_upper = _clamp(rate_upper, 0.0, max_rate)
        segs: list[BandSegment]
        if cycle_type == TYPE_EMPTY:
            segs = [BandSegment(0.0, C, 0.0, max_rate)]
        elif cycle_type == TYPE_CLOSED:
            segs = [BandSegment(0.0, C, 0.0, 0.0, known=True)]
        elif cycle_type == TYPE_RESIDUAL:
            segs = [BandSegment(0.0, known_until, 0.0, 0.0, known=True, value=known_value)]
            if residual_tail == RESIDUAL_TAIL_CYCLE_REMAINDER:
                segs.append(BandSegment(known_until, C, 0.0, rate_upper))
            else:
                segs.append(BandSegment(known_until, bound_until, 0.0, rate_upper))
                segs.append(BandSegment(bound_until, C, 0.0, 0.0, known=True))
        elif cycle_type == TYPE_PARTIAL:
            segs = [
                BandSegment(0.0, known_until, 0.0, 0.0, known=True, value=known_value),
                BandSegment(known_until, bound_until, 0.0, rate_upper),
                BandSegment(bound_until, C, 0.0, max_rate),
            ]
        else:
            raise ValueError(f"unknown cycle type {cycle_type!r}")
        segs = [s for s in segs if s.width > _TOL]
        return cls(
            cycle=cycle,
            cycle_type=cycle_type,
            cycle_length=C,
            max_rate=max_rate,
            segments=segs,
            known_until=known_until,
            bound_until=bound_until,
            rate_upper=rate_upper,
        )


def build_cv_arrival_observation(
    record: CvCycleRecord,
    next_record: Optional[CvCycleRecord],
    cycle_length: float,
    red: float,
    max_rate: float,
    saturation_headway: float,
    red_start_abs: float,
    jam_spacing: float,
    residual_tail: str = RESIDUAL_TAIL_CYCLE_REMAINDER,
) -> CvArrivalObservation:
    """Classify a cycle's CV pattern and build its feasible band.

    Crossing anchors and queue positions come from the CV trajectories
    themselves, so every bound here is computable from the probe data
    alone.  The pinned prefix carries the position-derived mean rate.
    """
    C = cycle_length
    qjoins = sorted(record.queued_first_time, key=lambda s: s.t)
    nqs = sorted(record.non_queued, key=lambda n: n.t)
    has_presence = bool(qjoins or nqs or record.twice_queued)
    persisting = [s for s in qjoins if s.cross_abs >= red_start_abs + C - _TOL]
    next_has_queued = bool(next_record and next_record.queued_first_time)

    if not has_presence:
        return CvArrivalObservation.from_canonical(
            TYPE_EMPTY, C, max_rate, cycle=record.cycle
        )

    if persisting and next_has_queued:
        return CvArrivalObservation.from_canonical(
            TYPE_CLOSED, C, max_rate, cycle=record.cycle
        )

    residual_extent = max((s.d for s in record.twice_queued), default=0.0)

    def prefix_value(t_known: float, d_last: float) -> Optional[float]:
        if t_known <= _TOL:
            return None
        count = max(0.0, (d_last - residual_extent) / jam_spacing)
        # unmarked residuals inflate the position-derived count; the rate
        # ceiling keeps the pinned value inside the admissible band
        return _clamp(count / t_known, 0.0, max_rate)

    if persisting:
        # residual queue with no new queued CV next cycle
        t_known = max(s.t for s in qjoins)
        d_last = max(s.d for s in qjoins)
        rear_cross = max(s.cross_abs for s in qjoins)
        limit = None
        if next_record and next_record.non_queued:
            limit = min(n.cross_abs for n in next_record.non_queued)
        if limit is None:
            rate_upper = max_rate
        else:
            slack = max(0.0, limit - rear_cross)
            window = max(C - t_known, _TOL)
            rate_upper = _clamp(slack / (window * saturation_headway), 0.0, max_rate)
        return CvArrivalObservation.from_canonical(
            TYPE_RESIDUAL,
            C,
            max_rate,
            known_until=t_known,
            bound_until=C,
            rate_upper=rate_upper,
            cycle=record.cycle,
            residual_tail=residual_tail,
            known_value=prefix_value(t_known, d_last),
        )

    # partially determined: known prefix up to the last queued CV join, then
    # service-bounded windows delimited by non-queued CV passes
    t_known = max((s.t for s in qjoins), default=0.0)
    if qjoins:
        prev_cross = max(s.cross_abs for s in qjoins) - red_start_abs
        d_last = max(s.d for s in qjoins)
    else:
        prev_cross = red  # hidden head arrivals discharge from the green start
        d_last = residual_extent
    segs: list[BandSegment] = []
    if t_known > _TOL:
        segs.append(
            BandSegment(0.0, t_known, 0.0, 0.0, known=True,
                        value=prefix_value(t_known, d_last))
        )
    prev_t = t_known
    tail_nqs = [n for n in nqs if n.t > t_known + _TOL]
    first_bound_until = t_known
    first_rate_upper = 0.0
    for k, n in enumerate(tail_nqs):
        width = n.t - prev_t
        if width > _TOL:
            slack = max(0.0, (n.cross_abs - red_start_abs) - prev_cross)
            ub = _clamp(slack / (width * saturation_headway), 0.0, max_rate)
            segs.append(BandSegment(prev_t, n.t, 0.0, ub))
            if k == 0:
                first_bound_until = n.t
                first_rate_upper = ub
        prev_t = n.t
        prev_cross = n.cross_abs - red_start_abs
    if C - prev_t > _TOL:
        segs.append(BandSegment(prev_t, C, 0.0, max_rate))
    if not segs:
        segs = [BandSegment(0.0, C, 0.0, 0.0, known=True)]
    return CvArrivalObservation(
        cycle=record.cycle,
        cycle_type=TYPE_PARTIAL,
        cycle_length=C,
        max_rate=max_rate,
        segments=segs,
        known_until=t_known,
        bound_until=first_bound_until,
        rate_upper=first_rate_upper,
    )


def arrival_uncertainty_case4_cv(obs: CvArrivalObservation) -> ArrivalUncertainty:
    """No-UAV case from CV data: area of the feasible band.

    For the canonical patterns this equals the closed forms: the full
    rectangle (no CVs), zero (spanning queued CVs), rate_upper * tail for a
    residual queue, and max_rate*(C - t_G) + rate_upper*(t_G - t_F) for the
    partially determined cycle.
    """
    if obs.cycle_type not in (TYPE_EMPTY, TYPE_CLOSED, TYPE_RESIDUAL, TYPE_PARTIAL):
        raise ValueError(f"unclassified cycle observation: {obs.cycle_type!r}")
    s_global = global_arrival_area(obs.max_rate, obs.cycle_length)
    return ArrivalUncertainty(band_area(obs.segments), s_global)


# ---------------------------------------------------------------------------
# case 4: loop detector
# ---------------------------------------------------------------------------


def loop_band(window: LoopCycleWindow, cycle_length: float, max_rate: float) -> list[BandSegment]:
    C = cycle_length
    t_f, t_g = (window.t_cover, window.t_release) if window.occupied else (0.0, 0.0)
    segs: list[BandSegment] = []
    if t_f > _TOL:
        lb = _clamp(window.n_before / t_f, 0.0, max_rate)
        segs.append(BandSegment(0.0, t_f, lb, max_rate))
    if t_g - t_f > _TOL:
        segs.append(BandSegment(t_f, t_g, 0.0, max_rate))
    if C - t_g > _TOL:
        lb = _clamp(window.n_after / (C - t_g), 0.0, max_rate)
        segs.append(BandSegment(t_g, C, lb, max_rate))
    return segs


def arrival_uncertainty_case4_loop(
    window: LoopCycleWindow, cycle_length: float, max_rate: float
) -> ArrivalUncertainty:
    """Loop-only bound: counts outside the occupancy window floor the rate."""
    s_global = global_arrival_area(max_rate, cycle_length)
    return ArrivalUncertainty(band_area(loop_band(window, cycle_length, max_rate)), s_global)


def arrival_uncertainty_case4_fused(
    cv_obs: CvArrivalObservation, window: LoopCycleWindow
) -> ArrivalUncertainty:
    """Both channels: per-interval intersection of the two feasible bands.

    Raises ObservationInconsistencyError when the channels admit no common
    cycle vehicle count (the loop's floor exceeds what the CV service
    ceilings could ever discharge, or vice versa).
    """
    lband = loop_band(window, cv_obs.cycle_length, cv_obs.max_rate)
    cv_lo, cv_hi = band_count_interval(cv_obs.segments, cv_obs.max_rate)
    lp_lo, lp_hi = band_count_interval(lband, cv_obs.max_rate)
    if cv_hi + 1e-6 < lp_lo or lp_hi + 1e-6 < cv_lo:
        raise ObservationInconsistencyError(
            f"cycle {cv_obs.cycle}: CV channel admits [{cv_lo:.2f}, {cv_hi:.2f}] vehicles, "
            f"loop channel admits [{lp_lo:.2f}, {lp_hi:.2f}]"
        )
    fused = intersect_bands(cv_obs.segments, lband)
    s_global = global_arrival_area(cv_obs.max_rate, cv_obs.cycle_length)
    return ArrivalUncertainty(band_area(fused), s_global)
