import numpy as np
import pytest

from uavloc.arrival_uncertainty import (
    RESIDUAL_TAIL_CYCLE_REMAINDER,
    RESIDUAL_TAIL_WINDOW,
    TYPE_CLOSED,
    TYPE_EMPTY,
    TYPE_PARTIAL,
    TYPE_RESIDUAL,
    BandSegment,
    CvArrivalObservation,
    ObservationInconsistencyError,
    arrival_uncertainty_case12,
    arrival_uncertainty_case3,
    arrival_uncertainty_case4_cv,
    arrival_uncertainty_case4_fused,
    arrival_uncertainty_case4_loop,
    band_area,
    build_cv_arrival_observation,
    global_arrival_area,
    intersect_bands,
    loop_band,
)
from uavloc.scenario import (
    CvCycleRecord,
    FovCycleView,
    LoopCycleWindow,
    NonQueuedPass,
    QueueStint,
    extract_cv_observations,
    extract_loop_events,
)

from conftest import integrate_band, small_scenario


def test_global_area():
    assert global_arrival_area(0.5, 90.0) == pytest.approx(45.0)
    assert global_arrival_area(1.0, 1.0) == pytest.approx(1.0)
    assert global_arrival_area(0.5, 180.0) == pytest.approx(2 * global_arrival_area(0.5, 90.0))
    with pytest.raises(ValueError):
        global_arrival_area(0.0, 90.0)
    with pytest.raises(ValueError):
        global_arrival_area(0.5, -1.0)


def view(beyond=False, t_exceed=0.0, t_return=0.0, n_hidden=0):
    return FovCycleView(cycle=0, beyond=beyond, t_exceed=t_exceed, t_return=t_return,
                        n_hidden=n_hidden)


def test_case12():
    assert arrival_uncertainty_case12(1, view(), 0.5, 90.0).u == 0.0
    assert arrival_uncertainty_case12(2, view(beyond=False), 0.5, 90.0).u == 0.0
    # window of 20 s with a lower bound of 0.2 veh/s
    got = arrival_uncertainty_case12(2, view(True, 40.0, 60.0, n_hidden=4), 0.5, 90.0)
    assert got.s_u == pytest.approx((0.5 - 0.2) * 20.0)
    assert got.u == pytest.approx(6.0 / 45.0)
    with pytest.raises(ValueError):
        arrival_uncertainty_case12(3, view(), 0.5, 90.0)


def test_case3_share_rules():
    assert arrival_uncertainty_case3(1, 0, 0, 0.5, 90.0).u == 0.0
    assert arrival_uncertainty_case3(3, 0, 0, 0.5, 90.0).u == pytest.approx(2 / 3)
    assert arrival_uncertainty_case3(3, 8, 10, 0.5, 90.0).u == pytest.approx(0.2)
    assert arrival_uncertainty_case3(3, 0, 10, 0.5, 90.0).u == pytest.approx(1.0)


def test_case4_cv_type1_and_2():
    empty = CvArrivalObservation.from_canonical(TYPE_EMPTY, 90.0, 0.5)
    assert arrival_uncertainty_case4_cv(empty).u == 1.0
    closed = CvArrivalObservation.from_canonical(TYPE_CLOSED, 90.0, 0.5)
    assert arrival_uncertainty_case4_cv(closed).u == 0.0


def test_case4_cv_residual_paper_width():
    obs = CvArrivalObservation.from_canonical(
        TYPE_RESIDUAL, 90.0, 0.5, known_until=70.0, bound_until=90.0, rate_upper=0.25
    )
    got = arrival_uncertainty_case4_cv(obs)
    assert got.s_u == pytest.approx(0.25 * (90.0 - 70.0))
    assert got.u == pytest.approx(5.0 / 45.0)


def test_case4_cv_residual_window_toggle():
    obs = CvArrivalObservation.from_canonical(
        TYPE_RESIDUAL, 90.0, 0.5, known_until=70.0, bound_until=80.0, rate_upper=0.25,
        residual_tail=RESIDUAL_TAIL_WINDOW,
    )
    assert arrival_uncertainty_case4_cv(obs).s_u == pytest.approx(0.25 * 10.0)
    paper = CvArrivalObservation.from_canonical(
        TYPE_RESIDUAL, 90.0, 0.5, known_until=70.0, bound_until=80.0, rate_upper=0.25,
        residual_tail=RESIDUAL_TAIL_CYCLE_REMAINDER,
    )
    assert arrival_uncertainty_case4_cv(paper).s_u == pytest.approx(0.25 * 20.0)


def test_case4_cv_partial():
    obs = CvArrivalObservation.from_canonical(
        TYPE_PARTIAL, 90.0, 0.5, known_until=50.0, bound_until=70.0, rate_upper=0.3
    )
    got = arrival_uncertainty_case4_cv(obs)
    assert got.s_u == pytest.approx(0.5 * 20.0 + 0.3 * 20.0)
    assert got.u == pytest.approx(16.0 / 45.0)


def test_case4_cv_band_matches_numeric_oracle():
    rng = np.random.default_rng(5)
    for _ in range(50):
        t_f = float(rng.uniform(0, 60))
        t_g = float(rng.uniform(t_f, 90))
        ub = float(rng.uniform(0, 0.6))
        obs = CvArrivalObservation.from_canonical(
            TYPE_PARTIAL, 90.0, 0.5, known_until=t_f, bound_until=t_g, rate_upper=ub
        )
        got = arrival_uncertainty_case4_cv(obs).s_u
        oracle = integrate_band(obs.segments, 0.0, 90.0, bins=3000)
        assert got == pytest.approx(oracle, rel=2e-3, abs=2e-2)


def test_case4_loop_formula():
    win = LoopCycleWindow(cycle=0, occupied=True, t_cover=30.0, t_release=60.0,
                          n_before=6, n_after=3)
    got = arrival_uncertainty_case4_loop(win, 90.0, 0.5)
    expected = 0.5 * 30.0 + (0.5 - 0.2) * 30.0 + (0.5 - 0.1) * 30.0
    assert got.s_u == pytest.approx(expected)
    assert got.u == pytest.approx(0.8)


def test_case4_loop_degenerate_and_saturating():
    never = LoopCycleWindow(cycle=0, occupied=False, t_cover=0.0, t_release=0.0,
                            n_before=0, n_after=0)
    assert arrival_uncertainty_case4_loop(never, 90.0, 0.5).u == pytest.approx(1.0)
    # counts saturating the bound close the domain
    full = LoopCycleWindow(cycle=0, occupied=False, t_cover=0.0, t_release=0.0,
                           n_before=0, n_after=45)
    assert arrival_uncertainty_case4_loop(full, 90.0, 0.5).u == pytest.approx(0.0)


def test_case4_fused_examples():
    cv = CvArrivalObservation.from_canonical(
        TYPE_PARTIAL, 90.0, 0.5, known_until=50.0, bound_until=70.0, rate_upper=0.3
    )
    loop_win = LoopCycleWindow(cycle=0, occupied=True, t_cover=30.0, t_release=60.0,
                               n_before=6, n_after=3)
    fused = arrival_uncertainty_case4_fused(cv, loop_win)
    assert fused.s_u <= min(16.0, 36.0) + 1e-9
    # numeric bin-wise oracle on the explicit intersection
    inter = intersect_bands(cv.segments, loop_band(loop_win, 90.0, 0.5))
    assert fused.s_u == pytest.approx(integrate_band(inter, 0.0, 90.0, bins=4000),
                                      rel=2e-3, abs=2e-2)

    # a fully determined loop channel wipes any CV type (consistent inputs)
    sat = LoopCycleWindow(cycle=0, occupied=False, t_cover=0.0, t_release=0.0,
                          n_before=0, n_after=45)
    for ctype in (TYPE_EMPTY, TYPE_PARTIAL):
        cv2 = CvArrivalObservation.from_canonical(
            ctype, 90.0, 0.5, known_until=10.0, bound_until=20.0, rate_upper=0.5
        )
        assert arrival_uncertainty_case4_fused(cv2, sat).u == pytest.approx(0.0)

    # CV type 1 contributes nothing: fused equals loop-only
    cv1 = CvArrivalObservation.from_canonical(TYPE_EMPTY, 90.0, 0.5)
    only = arrival_uncertainty_case4_loop(loop_win, 90.0, 0.5)
    assert arrival_uncertainty_case4_fused(cv1, loop_win).s_u == pytest.approx(only.s_u)


def test_fused_inconsistency_error():
    # loop counted 40 vehicles; the CV channel's ceilings admit at most ~6
    cv = CvArrivalObservation.from_canonical(
        TYPE_PARTIAL, 90.0, 0.5, known_until=0.0, bound_until=88.0, rate_upper=0.02
    )
    win = LoopCycleWindow(cycle=0, occupied=False, t_cover=0.0, t_release=0.0,
                          n_before=0, n_after=40)
    with pytest.raises(ObservationInconsistencyError):
        arrival_uncertainty_case4_fused(cv, win)


def test_pinned_value_disagreement_raises():
    a = [BandSegment(0.0, 30.0, 0.0, 0.0, known=True, value=0.2),
         BandSegment(30.0, 90.0, 0.0, 0.5)]
    b = [BandSegment(0.0, 30.0, 0.0, 0.0, known=True, value=0.4),
         BandSegment(30.0, 90.0, 0.0, 0.5)]
    with pytest.raises(ObservationInconsistencyError):
        intersect_bands(a, b)


def stint(t, d, cross_abs, cv=True, first=True):
    return QueueStint(vehicle=f"v{t}", is_cv=cv, t=t, d=d, first_time=first,
                      cross_cycle=0, cross_abs=cross_abs)


def nq(t, cross_abs, cv=True):
    return NonQueuedPass(vehicle=f"n{t}", is_cv=cv, t=t, cross_abs=cross_abs)


def record(cycle=0, queued=(), twice=(), non=()):
    return CvCycleRecord(cycle=cycle, queued_first_time=list(queued),
                         twice_queued=list(twice), non_queued=list(non))


BUILD_ARGS = dict(cycle_length=90.0, red=55.0, max_rate=0.5,
                  saturation_headway=2.0, red_start_abs=0.0, jam_spacing=7.0)


def test_builder_classification_total():
    # empty
    obs = build_cv_arrival_observation(record(), None, **BUILD_ARGS)
    assert obs.cycle_type == TYPE_EMPTY
    # queued CV persisting + next queued -> closed
    tq = stint(20.0, 14.0, cross_abs=95.0)
    nxt = record(cycle=1, queued=[stint(10.0, 7.0, cross_abs=150.0)])
    obs = build_cv_arrival_observation(record(queued=[tq]), nxt, **BUILD_ARGS)
    assert obs.cycle_type == TYPE_CLOSED
    # persisting + only non-queued next -> residual type
    nxt_nq = record(cycle=1, non=[nq(60.0, 155.0)])
    obs = build_cv_arrival_observation(record(queued=[tq]), nxt_nq, **BUILD_ARGS)
    assert obs.cycle_type == TYPE_RESIDUAL
    assert obs.known_until == pytest.approx(20.0)
    # expected bound: slack = 155 - 95 = 60 s over window 70 s
    assert obs.rate_upper == pytest.approx(60.0 / (70.0 * 2.0))
    # queued within cycle + non-queued -> partial
    qd = stint(30.0, 21.0, cross_abs=61.0)
    obs = build_cv_arrival_observation(record(queued=[qd], non=[nq(70.0, 70.0)]),
                                       record(cycle=1), **BUILD_ARGS)
    assert obs.cycle_type == TYPE_PARTIAL
    assert obs.known_until == pytest.approx(30.0)
    assert obs.bound_until == pytest.approx(70.0)
    # slack = 70 - 61 = 9 s over 40 s window
    assert obs.rate_upper == pytest.approx(9.0 / (40.0 * 2.0))


def test_builder_residual_without_next_info_is_unbounded():
    tq = stint(20.0, 14.0, cross_abs=95.0)
    obs = build_cv_arrival_observation(record(queued=[tq]), record(cycle=1), **BUILD_ARGS)
    assert obs.cycle_type == TYPE_RESIDUAL
    assert obs.rate_upper == pytest.approx(0.5)  # clamped to the global maximum


def test_builder_multiple_nonqueued_splits_band():
    qd = stint(30.0, 21.0, cross_abs=61.0)
    obs = build_cv_arrival_observation(
        record(queued=[qd], non=[nq(70.0, 70.0), nq(80.0, 80.0)]),
        record(cycle=1), **BUILD_ARGS,
    )
    # three tail segments: bounded, bounded, unknown
    assert len(obs.segments) == 4
    single = build_cv_arrival_observation(
        record(queued=[qd], non=[nq(70.0, 70.0)]), record(cycle=1), **BUILD_ARGS
    )
    assert arrival_uncertainty_case4_cv(obs).s_u <= arrival_uncertainty_case4_cv(single).s_u + 1e-9


def test_u_in_unit_interval_on_generated_data():
    sc, _ = small_scenario(demand=260.0, horizon=2400.0, penetration=0.4, seed=17)
    cv = extract_cv_observations(sc)
    flow = sc.flow
    count = 0
    for mid, recs in cv.items():
        sig = sc.signal.for_movement(mid)
        cycles = sc.movement_cycles[mid]
        for j, rec in enumerate(recs):
            nxt = recs[j + 1] if j + 1 < len(recs) else None
            obs = build_cv_arrival_observation(
                rec, nxt, sig.cycle, sig.red, flow.max_arrival_rate,
                flow.saturation_headway, cycles[j].red_start_abs, flow.jam_spacing,
            )
            u = arrival_uncertainty_case4_cv(obs).u
            assert 0.0 <= u <= 1.0
            count += 1
    assert count > 50


def test_fused_never_errors_on_generated_data():
    link = "i01-i02"
    sc, _ = small_scenario(demand=300.0, horizon=2400.0, penetration=0.35, seed=19,
                           loops={link: 25.0})
    cv = extract_cv_observations(sc)
    log = extract_loop_events(sc)
    flow = sc.flow
    for mid in sc.network.movements_of_link(link):
        ch = log.for_movement(mid)
        recs = cv[mid]
        sig = sc.signal.for_movement(mid)
        cycles = sc.movement_cycles[mid]
        for j, rec in enumerate(recs):
            nxt = recs[j + 1] if j + 1 < len(recs) else None
            obs = build_cv_arrival_observation(
                rec, nxt, sig.cycle, sig.red, flow.max_arrival_rate,
                flow.saturation_headway, cycles[j].red_start_abs, flow.jam_spacing,
            )
            fused = arrival_uncertainty_case4_fused(obs, ch.windows[j])
            cv_only = arrival_uncertainty_case4_cv(obs)
            loop_only = arrival_uncertainty_case4_loop(ch.windows[j], sig.cycle,
                                                       flow.max_arrival_rate)
            assert fused.s_u <= cv_only.s_u + 1e-9
            assert fused.s_u <= loop_only.s_u + 1e-9
