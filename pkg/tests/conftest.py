import numpy as np
import pytest

from uavloc.network import Network, Intersection, Link, Movement, Path
from uavloc.presets import GridSpec, build_grid, grid3x3, shinan18, with_paths
from uavloc.scenario import FlowModel, MovementSignal, SignalPlan, generate_scenario


def chain_network(n_nodes: int = 3):
    """West-east corridor of n crossroads with boundary feeders."""
    net = build_grid(GridSpec(rows=1, cols=n_nodes))
    nodes = [f"i{k + 1:02d}" for k in range(n_nodes)]
    routes = {
        "we": [f"bw_{nodes[0]}"] + nodes + [f"be_{nodes[-1]}"],
        "ew": [f"be_{nodes[-1]}"] + nodes[::-1] + [f"bw_{nodes[0]}"],
    }
    return with_paths(net, routes), nodes


def small_scenario(demand=200.0, horizon=900.0, penetration=0.3, seed=11, n_nodes=3,
                   cycle=60.0, red=40.0, loops=None):
    net, nodes = chain_network(n_nodes)
    signal = SignalPlan(horizon=horizon, default=MovementSignal(cycle=cycle, red=red))
    flow = FlowModel(demand_veh_h={"we": demand, "ew": demand * 0.8})
    sc = generate_scenario(net, signal, flow, penetration=penetration, seed=seed,
                           loop_links=loops or {})
    return sc, nodes


@pytest.fixture(scope="session")
def grid3x3_scenario():
    net, sig, flow, loops = grid3x3(horizon=1800.0)
    return generate_scenario(net, sig, flow, penetration=0.15, seed=4, loop_links=loops)


@pytest.fixture(scope="session")
def shinan_scenario():
    net, sig, flow, loops = shinan18(horizon=3600.0)
    return generate_scenario(net, sig, flow, penetration=0.1, seed=21, loop_links=loops)


GRID_SHAPES = {4: (2, 2), 5: (1, 5), 6: (2, 3), 7: (1, 7), 8: (2, 4)}


def random_small_instance(n_nodes: int, seed: int):
    """Randomized scenario on a small grid, for oracle-equivalence checks."""
    rng = np.random.default_rng(seed)
    rows, cols = GRID_SHAPES[n_nodes]
    net = build_grid(GridSpec(rows=rows, cols=cols))
    grid = [[f"i{r * cols + c + 1:02d}" for c in range(cols)] for r in range(rows)]
    routes = {}
    for r in range(rows):
        row = grid[r]
        routes[f"we{r}"] = [f"bw_{row[0]}"] + row + [f"be_{row[-1]}"]
        if rng.random() < 0.7:
            routes[f"ew{r}"] = [f"be_{row[-1]}"] + row[::-1] + [f"bw_{row[0]}"]
    if rows > 1:
        for c in range(cols):
            col = [grid[r][c] for r in range(rows)]
            if rng.random() < 0.8:
                routes[f"ns{c}"] = [f"bn_{col[0]}"] + col + [f"bs_{col[-1]}"]
    else:
        for c in range(cols):
            if rng.random() < 0.5:
                routes[f"ns{c}"] = [f"bn_{grid[0][c]}", grid[0][c], f"bs_{grid[0][c]}"]
    demands = {pid: float(rng.uniform(40, 160)) for pid in routes}
    net = with_paths(net, routes)
    signal = SignalPlan(horizon=1200.0, default=MovementSignal(cycle=60.0, red=40.0))
    flow = FlowModel(demand_veh_h=demands)
    pen = float(rng.uniform(0.05, 0.3))
    return generate_scenario(net, signal, flow, penetration=pen,
                             seed=int(rng.integers(1_000_000)))


def shoelace(points) -> float:
    """Independent polygon-area oracle."""
    area = 0.0
    n = len(points)
    for k in range(n):
        x1, y1 = points[k]
        x2, y2 = points[(k + 1) % n]
        area += x1 * y2 - x2 * y1
    return abs(area) / 2.0


def integrate_band(segments, t0: float, t1: float, bins: int = 20000) -> float:
    """Numeric band-area oracle: fine-grid integration of the band height."""
    ts = np.linspace(t0, t1, bins, endpoint=False) + (t1 - t0) / bins / 2.0
    total = 0.0
    width = (t1 - t0) / bins
    for t in ts:
        for s in segments:
            if s.t0 <= t <= s.t1:
                total += max(0.0, s.height) * width
                break
    return total
