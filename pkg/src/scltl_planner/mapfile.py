"""JSON map and scenario files."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from .formula import FormulaError, letter_names, letter_of
from .model import NORMALIZATION_TOL, Belief, Environment, ModelError, PlDmdp, grid_world

__all__ = [
    "MapFileError",
    "MapBundle",
    "Scenario",
    "MAP_SCHEMA",
    "load_map",
    "map_to_json",
    "load_scenario",
    "builtin_map",
]

_CELL = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2}

MAP_SCHEMA = {
    "type": "object",
    "required": ["grid", "alphabet"],
    "properties": {
        "grid": {
            "type": "object",
            "required": ["width", "height"],
            "properties": {
                "width": {"type": "integer", "minimum": 1},
                "height": {"type": "integer", "minimum": 1},
                "blocked": {"type": "array", "items": _CELL},
            },
        },
        "alphabet": {"type": "array", "items": {"type": "string"}, "uniqueItems": True},
        "belief": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["cell", "letters"],
                "properties": {
                    "cell": _CELL,
                    "letters": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "object",
                            "required": ["set", "p"],
                            "properties": {
                                "set": {"type": "array", "items": {"type": "string"}},
                                "p": {"type": "number", "minimum": 0, "maximum": 1},
                            },
                        },
                    },
                },
            },
        },
        "truth": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["cell", "set"],
                "properties": {"cell": _CELL, "set": {"type": "array", "items": {"type": "string"}}},
            },
        },
        "start": _CELL,
        "beta": {"type": "number", "exclusiveMinimum": 0},
    },
}


class MapFileError(ValueError):
    """Schema or semantic error in a map/scenario file; ``pointer`` is a JSON pointer."""

    def __init__(self, message: str, pointer: str = ""):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")


@dataclass
class MapBundle:
    mdp: PlDmdp
    belief: Belief
    environment: Environment | None
    start: int
    width: int
    height: int
    blocked: list[tuple[int, int]] = field(default_factory=list)


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


def load_map(source: str | Path | dict) -> MapBundle:
    data = _read_json(source) if not isinstance(source, dict) else source
    try:
        jsonschema.validate(data, MAP_SCHEMA)
    except jsonschema.ValidationError as err:
        raise MapFileError(err.message, _pointer(err.absolute_path)) from None

    grid = data["grid"]
    alphabet = list(data["alphabet"])
    blocked = [tuple(c) for c in grid.get("blocked", [])]
    try:
        mdp = grid_world(grid["width"], grid["height"], blocked, alphabet, data.get("beta", 1.0))
    except ModelError as err:
        raise MapFileError(str(err), "/grid") from None

    def cell_index(cell, where):
        key = tuple(cell)
        if key not in mdp.index:
            raise MapFileError(f"cell {list(key)} is outside the grid or blocked", where)
        return mdp.index[key]

    def letter(names, where):
        try:
            return letter_of(names, alphabet)
        except FormulaError as err:
            raise MapFileError(str(err), where) from None

    rows: list[dict[int, float]] = [{0: 1.0} for _ in range(mdp.num_states)]
    seen: set[int] = set()
    for i, entry in enumerate(data.get("belief", [])):
        where = f"/belief/{i}"
        x = cell_index(entry["cell"], where + "/cell")
        if x in seen:
            raise MapFileError(f"cell {entry['cell']} appears twice", where + "/cell")
        seen.add(x)
        row: dict[int, float] = {}
        for j, item in enumerate(entry["letters"]):
            lt = letter(item["set"], f"{where}/letters/{j}/set")
            row[lt] = row.get(lt, 0.0) + float(item["p"])
        total = sum(row.values())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise MapFileError(
                f"probabilities for cell {entry['cell']} sum to {total:g}, not 1", where + "/letters"
            )
        rows[x] = row
    belief = Belief(rows, mdp.num_letters)

    env = None
    if "truth" in data:
        truth = [0] * mdp.num_states
        for i, entry in enumerate(data["truth"]):
            where = f"/truth/{i}"
            truth[cell_index(entry["cell"], where + "/cell")] = letter(entry["set"], where + "/set")
        env = Environment(tuple(truth))

    start = cell_index(data.get("start", list(mdp.states[0])), "/start")
    return MapBundle(mdp, belief, env, start, grid["width"], grid["height"], blocked)


def map_to_json(bundle: MapBundle) -> dict:
    m, b = bundle.mdp, bundle.belief
    out: dict[str, Any] = {
        "grid": {"width": bundle.width, "height": bundle.height, "blocked": [list(c) for c in bundle.blocked]},
        "alphabet": list(m.alphabet),
        "belief": [
            {
                "cell": list(m.states[x]),
                "letters": [{"set": letter_names(lt, m.alphabet), "p": p} for lt, p in b.items(x)],
            }
            for x in range(m.num_states)
            if b.row(x) != {0: 1.0}
        ],
        "start": list(m.states[bundle.start]),
        "beta": m.beta,
    }
    if bundle.environment is not None:
        out["truth"] = [
            {"cell": list(m.states[x]), "set": letter_names(lt, m.alphabet)}
            for x, lt in enumerate(bundle.environment.truth)
            if lt
        ]
    return out


def builtin_map(name: str) -> dict:
    """Load one of the maps shipped in ``scltl_planner/data``."""
    text = resources.files("scltl_planner").joinpath("data", f"{name}.json").read_text(encoding="utf-8")
    return json.loads(text)


def _read_json(source) -> dict:
    path = Path(source)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise MapFileError(f"file not found: {path}") from None
    except json.JSONDecodeError as err:
        raise MapFileError(f"invalid JSON: {err}") from None


SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["map", "formula"],
    "properties": {
        "map": {"type": ["string", "object"]},
        "formula": {"type": "string"},
        "planner": {
            "type": "object",
            "properties": {
                "gamma": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "beta": {"type": "number", "exclusiveMinimum": 0},
                "eps": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "run": {
            "type": "object",
            "properties": {
                "h": {"type": "integer", "minimum": 0},
                "replan": {"enum": ["trigger", "every", "every_step", "never"]},
                "step_cap": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
            },
        },
        "bench": {
            "type": "object",
            "properties": {
                "worlds": {"type": "integer", "minimum": 1},
                "strategies": {"type": "array", "items": {"enum": ["trigger", "every", "every_step", "never"]}},
                "required": {"type": "array", "items": {"type": "string"}},
            },
        },
    },
}


@dataclass
class Scenario:
    map: MapBundle
    map_json: dict
    formula: str
    planner: dict
    run: dict
    bench: dict


def load_scenario(source: str | Path | dict) -> Scenario:
    data = _read_json(source) if not isinstance(source, dict) else source
    try:
        jsonschema.validate(data, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as err:
        raise MapFileError(err.message, _pointer(err.absolute_path)) from None
    raw_map = data["map"]
    if isinstance(raw_map, str):
        if raw_map.startswith("builtin:"):
            raw_map = builtin_map(raw_map.split(":", 1)[1])
        else:
            path = Path(raw_map)
            if not path.is_absolute() and not isinstance(source, dict):
                path = Path(source).parent / path
            raw_map = _read_json(path)
    try:
        bundle = load_map(raw_map)
    except MapFileError as err:
        raise MapFileError(str(err).split(": ", 1)[-1], "/map" + err.pointer) from None
    return Scenario(
        map=bundle,
        map_json=raw_map,
        formula=data["formula"],
        planner=dict(data.get("planner", {})),
        run=dict(data.get("run", {})),
        bench=dict(data.get("bench", {})),
    )
