"""Placement solvers: IQGA, classic QGA, binary GA, greedy FCM, brute force.

All solvers optimize the same fitness (-Z) through a shared evaluator and
report a SolveResult with a per-generation trace and the statistics used
for cross-solver comparison.  Randomness is drawn from per-(seed,
generation, chromosome) streams, so results do not depend on evaluation
order.
"""

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .objective import ObjectiveEvaluator
from .observability import DeploymentVector, movement_observability
from .quantum import QuantumChromosome, measure, not_gate, rotate, rotation_angle

_EPS = 1e-12


@dataclass
class SolverConfig:
    population: int = 20
    generations: int = 200
    theta_min: float = 0.01 * math.pi
    theta_max: float = 0.05 * math.pi
    mutation_width: int = 2  # qubits flipped by the dedup NOT gate
    seed: int = 0
    n_uav: int = 1
    fine_tune: bool = True
    dedup: bool = True
    # GA-specific knobs
    crossover_rate: float = 0.8
    mutation_rate: Optional[float] = None  # default 1/|I|
    elitism: int = 1
    # brute-force candidate cap
    budget: int = 1_000_000

    def __post_init__(self):
        if not 0 < self.theta_min <= self.theta_max:
            raise ValueError("need 0 < theta_min <= theta_max")
        if self.population < 2:
            raise ValueError("population must be at least 2")
        if self.mutation_width < 1:
            raise ValueError("mutation width must be >= 1")


@dataclass
class GenerationStats:
    generation: int
    best_so_far: float
    gen_best: float
    mean: float
    std: float


@dataclass
class SolveResult:
    solver: str
    best: DeploymentVector
    best_z: float
    trace: list[GenerationStats] = field(default_factory=list)
    convergence_generation: int = 0
    first_optimum_generation: int = 0
    wall_time: float = 0.0
    evaluations: int = 0
    exact: bool = False
    extras: dict = field(default_factory=dict)

    @property
    def mean_population_std(self) -> float:
        if not self.trace:
            return 0.0
        return float(np.mean([g.std for g in self.trace]))


def _rng(seed: int, *stream) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *stream]))


def repair(bits: np.ndarray, n_uav: int, rng: np.random.Generator) -> np.ndarray:
    """Drop uniformly random excess ones until the fleet limit holds."""
    bits = np.asarray(bits, dtype=np.int8).copy()
    ones = np.flatnonzero(bits)
    excess = len(ones) - n_uav
    if excess > 0:
        drop = rng.choice(ones, size=excess, replace=False)
        bits[drop] = 0
    return bits


def _finish_stats(trace: list[GenerationStats]) -> tuple[int, int]:
    """(convergence generation, first-optimum generation) from a trace.

    Convergence is where the running-best staircase flattens for good (the
    best fitness never changes afterwards).  First-optimum is the first
    generation whose own population measured the final best value; the
    fine-tune operator can lift the running best without the population
    ever sampling it, in which case the last generation is reported.
    """
    if not trace:
        return 0, 0
    final_best = trace[-1].best_so_far
    convergence = next(
        g.generation for g in trace if g.best_so_far >= final_best - _EPS
    )
    first_opt = next(
        (g.generation for g in trace if g.gen_best >= final_best - _EPS),
        trace[-1].generation,
    )
    return convergence, first_opt


class _RunCounter:
    def __init__(self, evaluator: ObjectiveEvaluator):
        self.evaluator = evaluator
        self.count = 0

    def z(self, bits) -> float:
        self.count += 1
        dep = DeploymentVector(tuple(int(b) for b in bits), fleet_limit=len(bits))
        return self.evaluator.evaluate(dep).z

    def fitness(self, bits) -> float:
        return -self.z(bits)


# ---------------------------------------------------------------------------
# quantum engine (IQGA and classic QGA)
# ---------------------------------------------------------------------------


def fine_tune(
    evaluator: ObjectiveEvaluator,
    best_bits: np.ndarray,
    counter: Optional[_RunCounter] = None,
) -> Optional[np.ndarray]:
    """Move one UAV from the calmest deployed intersection next to the busiest.

    Donor: deployed intersection with the least movement-demand + queue
    uncertainty; target: an undeployed neighbour (either link direction) of
    the deployed intersection carrying the most.  The move is kept only if
    it strictly lowers Z; candidate ties break on the lowest intersection id.
    """
    if counter is None:
        counter = _RunCounter(evaluator)
    net = evaluator.network
    deployed = [k for k, b in enumerate(best_bits) if b]
    if not deployed or len(deployed) == len(best_bits):
        return None
    sums = evaluator.intersection_uncertainty(best_bits)
    ids = net.signalized_ids
    donor = min(deployed, key=lambda k: (sums[ids[k]], ids[k]))
    busiest = max(deployed, key=lambda k: (sums[ids[k]], ids[k]))
    neighbors = sorted(net.neighbors_undirected(ids[busiest]))
    candidates = [
        net.signalized_index[nid]
        for nid in neighbors
        if nid in net.signalized_index and not best_bits[net.signalized_index[nid]]
    ]
    if not candidates:
        return None
    base_z = counter.z(best_bits)
    best_candidate = None
    best_z = base_z
    for idx in sorted(candidates, key=lambda k: ids[k]):
        cand = best_bits.copy()
        cand[donor] = 0
        cand[idx] = 1
        z = counter.z(cand)
        if z < best_z - _EPS:
            best_z = z
            best_candidate = cand
    return best_candidate


def _solve_quantum(
    evaluator: ObjectiveEvaluator,
    config: SolverConfig,
    dedup: bool,
    use_fine_tune: bool,
    name: str,
) -> SolveResult:
    start = time.perf_counter()
    counter = _RunCounter(evaluator)
    n_bits = len(evaluator.network.signalized_ids)
    pop = config.population
    chroms = [QuantumChromosome.uniform(n_bits) for _ in range(pop)]

    def measure_repair(generation: int, p: int, chrom: QuantumChromosome, stream: int = 0):
        bits = measure(chrom, _rng(config.seed, generation, p, 0, stream))
        return repair(bits, config.n_uav, _rng(config.seed, generation, p, 1, stream))

    bits = [measure_repair(0, p, chroms[p]) for p in range(pop)]
    fits = np.array([counter.fitness(b) for b in bits])
    best_idx = int(np.argmax(fits))
    best_bits = bits[best_idx].copy()
    best_fit = float(fits[best_idx])

    trace = [
        GenerationStats(0, best_fit, float(fits.max()), float(fits.mean()), float(fits.std()))
    ]

    for t in range(1, config.generations):
        for p in range(pop):
            angle = rotation_angle(
                float(fits[p]), best_fit, config.theta_min, config.theta_max
            )
            chroms[p] = rotate(chroms[p], best_bits, angle, measured_bits=bits[p])

        bits = [measure_repair(t, p, chroms[p]) for p in range(pop)]

        if dedup:
            seen = {bytes(bits[0])}
            for p in range(1, pop):
                key = bytes(bits[p])
                if key in seen:
                    rng = _rng(config.seed, t, p, 2)
                    width = min(config.mutation_width, n_bits)
                    positions = rng.choice(n_bits, size=width, replace=False)
                    chroms[p] = not_gate(chroms[p], positions)
                    bits[p] = measure_repair(t, p, chroms[p], stream=1)
                    key = bytes(bits[p])
                seen.add(key)

        fits = np.array([counter.fitness(b) for b in bits])
        gen_best_idx = int(np.argmax(fits))
        improved = float(fits[gen_best_idx]) > best_fit + _EPS
        if improved:
            best_fit = float(fits[gen_best_idx])
            best_bits = bits[gen_best_idx].copy()
            if use_fine_tune:
                tuned = fine_tune(evaluator, best_bits, counter)
                if tuned is not None:
                    best_bits = tuned
                    best_fit = counter.fitness(tuned)

        trace.append(
            GenerationStats(
                t, best_fit, float(fits.max()), float(fits.mean()), float(fits.std())
            )
        )

    convergence, first_opt = _finish_stats(trace)
    dep = DeploymentVector(tuple(int(b) for b in best_bits), fleet_limit=config.n_uav)
    return SolveResult(
        solver=name,
        best=dep,
        best_z=evaluator.evaluate(dep).z,
        trace=trace,
        convergence_generation=convergence,
        first_optimum_generation=first_opt,
        wall_time=time.perf_counter() - start,
        evaluations=counter.count,
    )


def solve_iqga(evaluator: ObjectiveEvaluator, config: SolverConfig) -> SolveResult:
    """Quantum GA with duplicate NOT-gate mutation and neighbourhood fine-tuning."""
    return _solve_quantum(
        evaluator, config, dedup=config.dedup, use_fine_tune=config.fine_tune,
        name="iqga",
    )


def solve_qga(evaluator: ObjectiveEvaluator, config: SolverConfig) -> SolveResult:
    """Classic quantum GA: both added operators disabled, parameters identical."""
    return _solve_quantum(evaluator, config, dedup=False, use_fine_tune=False, name="qga")


# ---------------------------------------------------------------------------
# binary GA
# ---------------------------------------------------------------------------


def solve_ga(evaluator: ObjectiveEvaluator, config: SolverConfig) -> SolveResult:
    """Tournament(2) GA with one-point crossover, bit-flip mutation, elitism 1."""
    start = time.perf_counter()
    counter = _RunCounter(evaluator)
    n_bits = len(evaluator.network.signalized_ids)
    pop = config.population
    p_mut = config.mutation_rate if config.mutation_rate is not None else 1.0 / n_bits

    init_rng = _rng(config.seed, 0, 0, 10)
    population = [
        repair((init_rng.random(n_bits) < 0.5).astype(np.int8), config.n_uav, init_rng)
        for _ in range(pop)
    ]
    fits = np.array([counter.fitness(b) for b in population])
    best_idx = int(np.argmax(fits))
    best_bits = population[best_idx].copy()
    best_fit = float(fits[best_idx])
    trace = [
        GenerationStats(0, best_fit, float(fits.max()), float(fits.mean()), float(fits.std()))
    ]

    for t in range(1, config.generations):
        rng = _rng(config.seed, t, 0, 11)
        new_pop = [best_bits.copy() for _ in range(min(config.elitism, pop))]
        while len(new_pop) < pop:
            parents = []
            for _ in range(2):
                a, b = rng.integers(0, pop, size=2)
                parents.append(population[a] if fits[a] >= fits[b] else population[b])
            c1, c2 = parents[0].copy(), parents[1].copy()
            if rng.random() < config.crossover_rate and n_bits > 1:
                cut = int(rng.integers(1, n_bits))
                c1 = np.concatenate([parents[0][:cut], parents[1][cut:]])
                c2 = np.concatenate([parents[1][:cut], parents[0][cut:]])
            for child in (c1, c2):
                flips = rng.random(n_bits) < p_mut
                child ^= flips.astype(np.int8)
                child = repair(child, config.n_uav, rng)
                if len(new_pop) < pop:
                    new_pop.append(child)
        population = new_pop
        fits = np.array([counter.fitness(b) for b in population])
        gen_best_idx = int(np.argmax(fits))
        if float(fits[gen_best_idx]) > best_fit + _EPS:
            best_fit = float(fits[gen_best_idx])
            best_bits = population[gen_best_idx].copy()
        trace.append(
            GenerationStats(
                t, best_fit, float(fits.max()), float(fits.mean()), float(fits.std())
            )
        )

    convergence, first_opt = _finish_stats(trace)
    dep = DeploymentVector(tuple(int(b) for b in best_bits), fleet_limit=config.n_uav)
    return SolveResult(
        solver="ga",
        best=dep,
        best_z=evaluator.evaluate(dep).z,
        trace=trace,
        convergence_generation=convergence,
        first_optimum_generation=first_opt,
        wall_time=time.perf_counter() - start,
        evaluations=counter.count,
    )


# ---------------------------------------------------------------------------
# greedy flow-coverage maximum and the coverage metrics
# ---------------------------------------------------------------------------


def coverage_metrics(evaluator: ObjectiveEvaluator, deployment) -> dict:
    """Flow and path coverage of the multi-source detector configuration."""
    sc = evaluator.scenario
    net = evaluator.network
    dep = deployment if isinstance(deployment, DeploymentVector) else DeploymentVector(
        tuple(int(b) for b in deployment), fleet_limit=len(tuple(deployment))
    )
    obs = movement_observability(net, dep)
    loop_movements = set()
    for lid in sc.loop_links:
        loop_movements.update(net.movements_of_link(lid))
    covered_flow = 0
    total_flow = 0
    for mid, flow_m in sc.ground_truth.movement_flow.items():
        total_flow += flow_m
        has_cv = any(
            sc.ground_truth.path_cv_flow.get(pid, 0) > 0
            for pid in net.paths_through_movement(mid)
        )
        if obs.y[mid] or mid in loop_movements or has_cv:
            covered_flow += flow_m
    covered_paths = 0
    for pid in net.paths:
        p = net.paths[pid]
        seen = any(obs.y[mid] for mid in p.movement_sequence)
        if seen or sc.ground_truth.path_cv_flow.get(pid, 0) > 0:
            covered_paths += 1
    return {
        "flow_coverage": covered_flow,
        "flow_coverage_fraction": covered_flow / total_flow if total_flow else 0.0,
        "path_coverage": covered_paths,
        "path_coverage_fraction": covered_paths / len(net.paths) if net.paths else 0.0,
    }


def link_coverage_value(network, link_flow: dict[str, int], u_bits: np.ndarray) -> float:
    """FCM objective: flow on links with a UAV at either endpoint."""
    total = 0.0
    for lid, flow in link_flow.items():
        link = network.links[lid]
        a = network.signalized_index.get(link.from_intersection)
        b = network.signalized_index.get(link.to_intersection)
        covered = (a is not None and u_bits[a]) or (b is not None and u_bits[b])
        if covered:
            total += flow
    return total


def solve_greedy_fcm(evaluator: ObjectiveEvaluator, n_uav: int) -> SolveResult:
    """Greedily add the intersection with the largest covered-flow gain."""
    start = time.perf_counter()
    counter = _RunCounter(evaluator)
    net = evaluator.network
    link_flow = evaluator.scenario.ground_truth.link_flow
    n_bits = len(net.signalized_ids)
    bits = np.zeros(n_bits, dtype=np.int8)
    trace = []
    current = link_coverage_value(net, link_flow, bits)
    for step in range(min(n_uav, n_bits)):
        best_gain = -1.0
        best_idx = None
        # index order is sorted id order, so ties resolve to the lowest id
        for k in range(n_bits):
            if bits[k]:
                continue
            trial = bits.copy()
            trial[k] = 1
            gain = link_coverage_value(net, link_flow, trial) - current
            if gain > best_gain + _EPS:
                best_gain = gain
                best_idx = k
        if best_idx is None:
            break
        bits[best_idx] = 1
        current += best_gain
        fit = counter.fitness(bits)
        trace.append(GenerationStats(step, fit, fit, fit, 0.0))

    convergence, first_opt = _finish_stats(trace)
    dep = DeploymentVector(tuple(int(b) for b in bits), fleet_limit=n_uav)
    value = evaluator.evaluate(dep)
    return SolveResult(
        solver="greedy-fcm",
        best=dep,
        best_z=value.z,
        trace=trace,
        convergence_generation=convergence,
        first_optimum_generation=first_opt,
        wall_time=time.perf_counter() - start,
        evaluations=counter.count,
        extras={
            "covered_link_flow": current,
            **coverage_metrics(evaluator, dep),
        },
    )


# ---------------------------------------------------------------------------
# exhaustive oracle
# ---------------------------------------------------------------------------


def bruteforce_candidate_count(n_bits: int, n_uav: int) -> int:
    return sum(math.comb(n_bits, k) for k in range(min(n_uav, n_bits) + 1))


def solve_bruteforce(
    evaluator: ObjectiveEvaluator, n_uav: int, budget: int = 1_000_000
) -> SolveResult:
    """Exact minimum over all deployments with at most n_uav UAVs."""
    start = time.perf_counter()
    n_bits = len(evaluator.network.signalized_ids)
    total = bruteforce_candidate_count(n_bits, n_uav)
    if total > budget:
        raise ValueError(
            f"{total} candidate deployments exceed the budget {budget}; "
            "use a heuristic solver"
        )
    counter = _RunCounter(evaluator)
    best_u: Optional[tuple[int, ...]] = None
    best_z = math.inf
    for k in range(min(n_uav, n_bits) + 1):
        for combo in itertools.combinations(range(n_bits), k):
            u = [0] * n_bits
            for idx in combo:
                u[idx] = 1
            u = tuple(u)
            z = counter.z(u)
            if z < best_z - _EPS or (abs(z - best_z) <= _EPS and (best_u is None or u < best_u)):
                best_z = z
                best_u = u
    dep = DeploymentVector(best_u, fleet_limit=n_uav)
    return SolveResult(
        solver="brute",
        best=dep,
        best_z=best_z,
        trace=[GenerationStats(0, -best_z, -best_z, -best_z, 0.0)],
        convergence_generation=0,
        first_optimum_generation=0,
        wall_time=time.perf_counter() - start,
        evaluations=counter.count,
        exact=True,
    )


# ---------------------------------------------------------------------------
# cross-solver comparison
# ---------------------------------------------------------------------------


@dataclass
class SolverSummary:
    solver: str
    runs: int
    mean_z: float
    std_z: float
    mean_convergence: float
    mean_first_optimum: float
    mean_population_std: float
    mean_wall_time: float
    mean_evaluations: float
    time_difference_pct: float  # |T_b - T'| / T_b against the baseline solver


def compare_runs(results: dict[str, list[SolveResult]]) -> list[SolverSummary]:
    if not results:
        raise ValueError("no solver results to compare")
    names = list(results)
    base_time = float(np.mean([r.wall_time for r in results[names[0]]]))
    out = []
    for name in names:
        runs = results[name]
        if not runs:
            raise ValueError(f"solver {name}: no runs")
        zs = [r.best_z for r in runs]
        t = float(np.mean([r.wall_time for r in runs]))
        out.append(
            SolverSummary(
                solver=name,
                runs=len(runs),
                mean_z=float(np.mean(zs)),
                std_z=float(np.std(zs)),
                mean_convergence=float(np.mean([r.convergence_generation for r in runs])),
                mean_first_optimum=float(
                    np.mean([r.first_optimum_generation for r in runs])
                ),
                mean_population_std=float(np.mean([r.mean_population_std for r in runs])),
                mean_wall_time=t,
                mean_evaluations=float(np.mean([r.evaluations for r in runs])),
                time_difference_pct=abs(base_time - t) / base_time if base_time > 0 else 0.0,
            )
        )
    return out


SOLVERS = {
    "iqga": lambda ev, cfg: solve_iqga(ev, cfg),
    "qga": lambda ev, cfg: solve_qga(ev, cfg),
    "ga": lambda ev, cfg: solve_ga(ev, cfg),
}


def run_solver(name: str, evaluator: ObjectiveEvaluator, config: SolverConfig) -> SolveResult:
    if name in SOLVERS:
        return SOLVERS[name](evaluator, config)
    if name == "greedy-fcm":
        return solve_greedy_fcm(evaluator, config.n_uav)
    if name == "brute":
        return solve_bruteforce(evaluator, config.n_uav, budget=config.budget)
    raise ValueError(f"unknown solver {name!r}")
