"""Scenario files: JSON schema, validation, and round-trip writing.

Schema::

    {"dimension": int,
     "workspace": {"lower": [...], "upper": [...]},
     "obstacles": [{"vertices": [[...], ...]}, ...],     # or
     "free_regions": [{"vertices": [[...], ...]}, ...],
     "start": [...], "goal": [...], "name": str}

Exactly one of ``obstacles`` / ``free_regions`` is present.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .construct import ConvexRegion
from .errors import DegenerateRegion, MergeRequired, ScenarioError
from .sets import Box


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    dimension: int
    workspace: Box
    start: np.ndarray
    goal: np.ndarray
    obstacles: list | None = None
    free_regions: list | None = None

    def __post_init__(self):
        if (self.obstacles is None) == (self.free_regions is None):
            raise ScenarioError("exactly one of obstacles/free_regions must be given")
        start = np.asarray(self.start, dtype=float)
        goal = np.asarray(self.goal, dtype=float)
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "goal", goal)
        if start.shape != (self.dimension,) or goal.shape != (self.dimension,):
            raise ScenarioError("start/goal dimension mismatch", "start")
        if np.array_equal(start, goal):
            raise ScenarioError("start and goal coincide", "goal")
        if not self.workspace.contains(start):
            raise ScenarioError("start outside workspace", "start")
        if not self.workspace.contains(goal):
            raise ScenarioError("goal outside workspace", "goal")

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented

        def same_regions(a, b):
            if a is None or b is None:
                return a is b
            return len(a) == len(b) and all(np.array_equal(r.vertices, s.vertices) for r, s in zip(a, b))

        return (
            self.name == other.name
            and self.dimension == other.dimension
            and self.workspace == other.workspace
            and np.array_equal(self.start, other.start)
            and np.array_equal(self.goal, other.goal)
            and same_regions(self.obstacles, other.obstacles)
            and same_regions(self.free_regions, other.free_regions)
        )

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "dimension": self.dimension,
            "workspace": {"lower": self.workspace.lower.tolist(), "upper": self.workspace.upper.tolist()},
            "start": self.start.tolist(),
            "goal": self.goal.tolist(),
        }
        key = "obstacles" if self.obstacles is not None else "free_regions"
        regions = self.obstacles if self.obstacles is not None else self.free_regions
        d[key] = [{"vertices": r.vertices.tolist()} for r in regions]
        return d


def _numbers(value, where, length=None) -> np.ndarray:
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise ScenarioError("expected a list of numbers", where)
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ScenarioError("numbers must be finite", where)
    if length is not None and arr.size != length:
        raise ScenarioError(f"expected {length} numbers, got {arr.size}", where)
    return arr


def _regions(items, where, dim) -> list:
    if not isinstance(items, list):
        raise ScenarioError("expected a list", where)
    out = []
    for k, item in enumerate(items):
        loc = f"{where}[{k}]"
        if not isinstance(item, dict) or "vertices" not in item:
            raise ScenarioError("expected an object with 'vertices'", loc)
        verts = item["vertices"]
        if not isinstance(verts, list) or not verts:
            raise ScenarioError("expected a nonempty vertex list", f"{loc}.vertices")
        V = np.array([_numbers(v, f"{loc}.vertices[{j}]", dim) for j, v in enumerate(verts)])
        try:
            out.append(ConvexRegion(V))
        except DegenerateRegion as exc:
            raise ScenarioError(str(exc), f"{loc}.vertices") from None
    return out


def _sat_overlap(P: np.ndarray, Q: np.ndarray, tol: float = 1e-9) -> bool:
    """Interiors of two convex polygons intersect (separating axis test)."""
    for poly in (P, Q):
        edges = np.roll(poly, -1, axis=0) - poly
        for e in edges:
            nrm = np.array([e[1], -e[0]])
            a, b = P @ nrm, Q @ nrm
            scale = tol * max(1.0, float(np.abs(nrm).max()) * max(1.0, float(np.abs(np.vstack([P, Q])).max())))
            if a.max() <= b.min() + scale or b.max() <= a.min() + scale:
                return False
    return True


def overlapping_pairs(obstacles) -> list[tuple[int, int]]:
    return [
        (i, j)
        for (i, P), (j, Q) in itertools.combinations(enumerate(obstacles), 2)
        if _sat_overlap(P.vertices, Q.vertices)
    ]


def scenario_from_dict(data) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("top level must be an object")
    for key in ("dimension", "workspace", "start", "goal"):
        if key not in data:
            raise ScenarioError("missing field", key)
    dim = data["dimension"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 2:
        raise ScenarioError("dimension must be an integer >= 2", "dimension")
    ws = data["workspace"]
    if not isinstance(ws, dict) or "lower" not in ws or "upper" not in ws:
        raise ScenarioError("expected {'lower': [...], 'upper': [...]}", "workspace")
    lower = _numbers(ws["lower"], "workspace.lower", dim)
    upper = _numbers(ws["upper"], "workspace.upper", dim)
    if np.any(lower >= upper):
        raise ScenarioError("lower must be below upper", "workspace")
    has_obs, has_free = "obstacles" in data, "free_regions" in data
    if has_obs == has_free:
        raise ScenarioError("exactly one of 'obstacles' / 'free_regions' is required")
    obstacles = free = None
    if has_obs:
        if dim != 2:
            raise ScenarioError("obstacle lists are only supported in 2-D; give free_regions", "obstacles")
        obstacles = _regions(data["obstacles"], "obstacles", dim)
        pairs = overlapping_pairs(obstacles)
        if pairs:
            raise MergeRequired(pairs)
    else:
        free = _regions(data["free_regions"], "free_regions", dim)
        if not free:
            raise ScenarioError("needs at least one region", "free_regions")
    name = data.get("name", "")
    if not isinstance(name, str):
        raise ScenarioError("name must be a string", "name")
    return Scenario(
        name=name,
        dimension=dim,
        workspace=Box(lower, upper),
        start=_numbers(data["start"], "start", dim),
        goal=_numbers(data["goal"], "goal", dim),
        obstacles=obstacles,
        free_regions=free,
    )


def loads_scenario(text: str) -> Scenario:
    try:
        data = json.loads(text, parse_constant=lambda c: math.nan)
    except json.JSONDecodeError as exc:
        raise ScenarioError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    return scenario_from_dict(data)


def load_scenario(path) -> Scenario:
    return loads_scenario(Path(path).read_text(encoding="utf-8"))


def dumps_scenario(s: Scenario) -> str:
    return json.dumps(s.to_dict(), indent=2) + "\n"


def write_scenario(s: Scenario, path) -> None:
    Path(path).write_text(dumps_scenario(s), encoding="utf-8")


def bundled_scenario_path(name: str) -> Path:
    return Path(__file__).parent / "scenarios" / f"{name}.json"


def bundled_scenario(name: str) -> Scenario:
    return load_scenario(bundled_scenario_path(name))
