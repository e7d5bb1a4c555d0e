"""Four-case indicator aggregation shared by the arrival and queue metrics.

F = sum over movements of
    y * [ own*up * S1 + own*(1-own*up) * S2 + up*(1-own*up) * S3 ]
    + (1-y) * S4
with y = max(own, up) and S_c the movement's per-cycle uncertainty summed
under case c.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class MovementCaseSums:
    movement: str
    own: int  # UAV at the movement's own intersection
    up: int  # UAV at the upstream intersection of its inbound link
    sum_case1: float
    sum_case2: float
    sum_case3: float
    sum_case4: float


def indicator_aggregate(entries) -> float:
    total = 0.0
    for e in entries:
        if e.own not in (0, 1) or e.up not in (0, 1):
            raise ValueError(f"movement {e.movement}: non-binary UAV flags")
        y = max(e.own, e.up)
        both = e.own * e.up
        total += y * (
            both * e.sum_case1
            + e.own * (1 - both) * e.sum_case2
            + e.up * (1 - both) * e.sum_case3
        ) + (1 - y) * e.sum_case4
    return total


def aggregate_F_arrival(entries) -> float:
    """Network traffic-movement-demand uncertainty under the case indicators."""
    return indicator_aggregate(entries)


def aggregate_F_queue(entries) -> float:
    """Network queue-length uncertainty under the case indicators."""
    return indicator_aggregate(entries)
