"""Scenario/report file formats and the run manifest.

One JSON document per scenario with sections network/signals/flows/
vehicles/loops; traces and comparison tables are headered CSV.  Floats are
written as plain decimal repr, keys are sorted, and files land via a
temp-file rename, so equal inputs produce byte-identical outputs.
"""

import csv
import io
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field
from typing import Optional

from .network import Intersection, Link, Movement, Network, Path
from .scenario import (
    FlowModel,
    MovementSignal,
    MovementVisit,
    Scenario,
    SignalPlan,
    VehicleRecord,
    _build_cycle_truth,
    _build_ground_truth,
)

SCENARIO_SCHEMA = "uavloc-scenario"
REPORT_SCHEMA = "uavloc-report"
SCHEMA_VERSION = 1
ARTIFACT_VERSION = "0.1.0"


class SchemaError(ValueError):
    pass


@dataclass
class RunManifest:
    command: str
    config: dict
    seeds: list[int]
    inputs: list[str]
    outputs: list[str] = field(default_factory=list)
    artifact_version: str = ARTIFACT_VERSION
    schema_version: int = SCHEMA_VERSION
    wall_time_s: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_", suffix=".part")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def write_json(path: str, obj: dict) -> None:
    atomic_write_text(path, dump_json(obj))


def write_csv(path: str, header: list[str], rows: list[list], manifest_name: str) -> None:
    lines = [f"# manifest={manifest_name} schema={SCHEMA_VERSION}"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    atomic_write_text(path, lines[0] + "\n" + buf.getvalue())


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


# ---------------------------------------------------------------------------
# scenario document
# ---------------------------------------------------------------------------


def scenario_to_dict(scenario: Scenario, manifest: Optional[RunManifest] = None) -> dict:
    net = scenario.network
    doc = {
        "schema": SCENARIO_SCHEMA,
        "version": SCHEMA_VERSION,
        "network": {
            "intersections": [
                {"id": i.id, "kind": i.kind, "x": i.position[0], "y": i.position[1]}
                for i in (net.intersections[k] for k in sorted(net.intersections))
            ],
            "links": [
                {
                    "id": l.id,
                    "from": l.from_intersection,
                    "to": l.to_intersection,
                    "length": l.length,
                    "lanes": l.lane_count,
                }
                for l in (net.links[k] for k in sorted(net.links))
            ],
            "movements": [
                {
                    "id": m.id,
                    "intersection": m.intersection,
                    "inbound": m.inbound_link,
                    "turn": m.turn,
                    "outbound": m.outbound_link,
                }
                for m in (net.movements[k] for k in sorted(net.movements))
            ],
            "paths": [
                {
                    "id": p.id,
                    "origin": p.origin_link,
                    "destination": p.destination_link,
                    "movements": list(p.movement_sequence),
                }
                for p in (net.paths[k] for k in sorted(net.paths))
            ],
        },
        "signals": {
            "horizon": scenario.signal.horizon,
            "default": asdict(scenario.signal.default),
            "per_movement": {
                mid: asdict(sig) for mid, sig in sorted(scenario.signal.per_movement.items())
            },
        },
        "flows": {
            "demand_veh_h": dict(sorted(scenario.flow.demand_veh_h.items())),
            "saturation_headway": scenario.flow.saturation_headway,
            "accumulation_speed": scenario.flow.accumulation_speed,
            "dissipation_speed": scenario.flow.dissipation_speed,
            "free_flow_speed": scenario.flow.free_flow_speed,
            "jam_spacing": scenario.flow.jam_spacing,
            "max_arrival_rate": scenario.flow.max_arrival_rate,
        },
        "loops": dict(sorted(scenario.loop_links.items())),
        "meta": {
            "penetration": scenario.penetration,
            "seed": scenario.seed,
            "delta": scenario.delta,
            "fov_box": scenario.fov_box,
        },
        "vehicles": [
            {
                "id": v.id,
                "path": v.path,
                "cv": v.is_cv,
                "entry": v.entry_abs,
                "visits": [
                    {
                        "m": x.movement,
                        "arr": x.arrival_abs,
                        "cross": x.cross_abs,
                        "q": x.queued,
                        "imp": x.impeded,
                        "jt": x.join_abs,
                        "jd": x.join_distance,
                        "jc": x.join_cycle,
                        "cc": x.cross_cycle,
                    }
                    for x in v.visits
                ],
            }
            for v in scenario.vehicles
        ],
    }
    if manifest is not None:
        doc["manifest"] = manifest.to_dict()
    return doc


def network_from_dict(data: dict) -> Network:
    try:
        intersections = [
            Intersection(i["id"], i["kind"], (float(i["x"]), float(i["y"])))
            for i in data["intersections"]
        ]
        links = [
            Link(l["id"], l["from"], l["to"], float(l["length"]), int(l["lanes"]))
            for l in data["links"]
        ]
        movements = [
            Movement(m["id"], m["intersection"], m["inbound"], m["turn"], m["outbound"])
            for m in data["movements"]
        ]
        paths = [
            Path(p["id"], p["origin"], p["destination"], tuple(p["movements"]))
            for p in data["paths"]
        ]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed network section: {exc}") from exc
    return Network(intersections, links, movements, paths)


def scenario_from_dict(doc: dict) -> Scenario:
    if doc.get("schema") != SCENARIO_SCHEMA:
        raise SchemaError(f"not a {SCENARIO_SCHEMA} document")
    if doc.get("version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {doc.get('version')}")
    net = network_from_dict(doc["network"])
    sig = doc["signals"]
    signal = SignalPlan(
        horizon=float(sig["horizon"]),
        default=MovementSignal(**sig["default"]),
        per_movement={mid: MovementSignal(**s) for mid, s in sig["per_movement"].items()},
    )
    fl = doc["flows"]
    flow = FlowModel(
        demand_veh_h={k: float(v) for k, v in fl["demand_veh_h"].items()},
        saturation_headway=float(fl["saturation_headway"]),
        accumulation_speed=float(fl["accumulation_speed"]),
        dissipation_speed=float(fl["dissipation_speed"]),
        free_flow_speed=float(fl["free_flow_speed"]),
        jam_spacing=float(fl["jam_spacing"]),
        max_arrival_rate=float(fl["max_arrival_rate"]),
    )
    vehicles = []
    for v in doc["vehicles"]:
        rec = VehicleRecord(
            id=v["id"], path=v["path"], is_cv=bool(v["cv"]), entry_abs=float(v["entry"])
        )
        for x in v["visits"]:
            rec.visits.append(
                MovementVisit(
                    movement=x["m"],
                    arrival_abs=float(x["arr"]),
                    cross_abs=float(x["cross"]),
                    queued=bool(x["q"]),
                    impeded=bool(x["imp"]),
                    join_abs=None if x["jt"] is None else float(x["jt"]),
                    join_distance=None if x["jd"] is None else float(x["jd"]),
                    join_cycle=x["jc"],
                    cross_cycle=int(x["cc"]),
                )
            )
        vehicles.append(rec)
    meta = doc["meta"]
    from .scenario import GroundTruth

    scenario = Scenario(
        network=net,
        signal=signal,
        flow=flow,
        penetration=float(meta["penetration"]),
        seed=int(meta["seed"]),
        delta=float(meta["delta"]),
        fov_box=float(meta["fov_box"]),
        loop_links={k: float(v) for k, v in doc["loops"].items()},
        vehicles=vehicles,
        movement_cycles={},
        ground_truth=GroundTruth({}, {}, {}, {}),
    )
    scenario.movement_cycles = _build_cycle_truth(scenario)
    scenario.ground_truth = _build_ground_truth(scenario)
    return scenario


def save_scenario(path: str, scenario: Scenario, manifest: Optional[RunManifest] = None) -> None:
    write_json(path, scenario_to_dict(scenario, manifest))


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON in {path}: {exc}") from exc
    return scenario_from_dict(doc)


def make_manifest(command: str, config: dict, seeds: list[int], inputs: list[str]) -> RunManifest:
    return RunManifest(command=command, config=config, seeds=seeds, inputs=list(inputs))
