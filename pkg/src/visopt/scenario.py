"""Scenario files: environment, agent and adversary domains, sensing model and run settings."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

from .critical import CriticalStructure, critical_structure
from .errors import ScenarioError, VisoptError
from .geometry import Environment, FreeSpace, Polygon, build_free_space
from .metrics import MetricConfig
from .norcent import AugmentedObjective, NorcentConfig, project_to_domain

BUILTIN = ("fig2", "convex", "saddle", "climbers", "hide_and_seek")


@dataclass(eq=False)
class Scenario:
    name: str
    environment: Environment
    d1: Polygon
    d2: Polygon
    sensing: dict
    mode: str
    starts: list
    norcent: dict = field(default_factory=dict)
    seed: int = 0
    note: str = ""

    @cached_property
    def fs(self) -> FreeSpace:
        return build_free_space(self.environment)

    @cached_property
    def structure(self) -> CriticalStructure:
        return critical_structure(self.fs)

    @property
    def metric(self) -> MetricConfig:
        s = self.sensing
        kind = s.get("type", "full")
        if kind == "full":
            return MetricConfig(self.d2)
        if kind == "range":
            return MetricConfig(self.d2, range=float(s["R"]))
        return MetricConfig(self.d2, range=s.get("R"), fov=math.radians(float(s["phi_deg"])))

    @property
    def heading(self) -> float:
        return math.radians(float(self.sensing.get("heading_deg", 0.0)))

    def objective(self) -> AugmentedObjective:
        return AugmentedObjective(self.fs, self.structure, self.metric, self.d1, self.mode)

    def norcent_config(self, seed: int | None = None) -> NorcentConfig:
        over = dict(self.norcent)
        over["seed"] = self.seed if seed is None else seed
        return NorcentConfig.defaults(self.fs, **over)


def _polygon(value, path: str) -> Polygon:
    try:
        return Polygon.from_points(value)
    except (VisoptError, ValueError, TypeError) as err:
        raise ScenarioError(path, str(err)) from None


def _point(value, path: str) -> np.ndarray:
    try:
        p = np.asarray(value, float).reshape(2)
    except (ValueError, TypeError):
        raise ScenarioError(path, "expected [x, y]") from None
    if not np.all(np.isfinite(p)):
        raise ScenarioError(path, "non-finite coordinate")
    return p


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("$", "scenario must be a JSON object")
    env_doc = doc.get("environment")
    if not isinstance(env_doc, dict) or "outer" not in env_doc:
        raise ScenarioError("environment", "missing 'outer' ring")
    outer = _polygon(env_doc["outer"], "environment.outer")
    holes = tuple(_polygon(h, f"environment.holes[{i}]") for i, h in enumerate(env_doc.get("holes", [])))
    env = Environment(outer, holes)
    try:
        fs = build_free_space(env)
    except VisoptError as err:
        raise ScenarioError("environment", str(err)) from None

    for key in ("d1", "d2"):
        if key not in doc:
            raise ScenarioError(key, "missing")
    d1 = _polygon(doc["d1"], "d1")
    d2 = _polygon(doc["d2"], "d2")
    for key, poly in (("d1", d1), ("d2", d2)):
        if not fs.contains_polygon(poly):
            raise ScenarioError(key, "polygon is not contained in the free space")

    sensing = dict(doc.get("sensing", {"type": "full"}))
    kind = sensing.get("type", "full")
    if kind not in ("full", "range", "fov"):
        raise ScenarioError("sensing.type", f"unknown sensing type {kind!r}")
    if kind in ("range", "fov") and "R" in sensing:
        if not isinstance(sensing["R"], (int, float)) or sensing["R"] <= 0:
            raise ScenarioError("sensing.R", "range must be a positive number")
    if kind == "range" and "R" not in sensing:
        raise ScenarioError("sensing.R", "missing")
    if kind == "fov":
        phi = sensing.get("phi_deg")
        if not isinstance(phi, (int, float)) or not 0 < phi <= 360:
            raise ScenarioError("sensing.phi_deg", "aperture must lie in (0, 360]")

    mode = doc.get("mode", "min")
    if mode not in ("min", "max"):
        raise ScenarioError("mode", "must be 'min' or 'max'")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ScenarioError("seed", "must be an unsigned 64-bit integer")
    overrides = dict(doc.get("norcent", {}))
    known = set(NorcentConfig.__dataclass_fields__) - {"seed"}
    for k in overrides:
        if k not in known:
            raise ScenarioError(f"norcent.{k}", "unknown setting")
    try:
        cfg = NorcentConfig.defaults(fs, **overrides)
    except (ValueError, TypeError) as err:
        raise ScenarioError("norcent", str(err)) from None

    starts = [_point(s, f"starts[{i}]") for i, s in enumerate(doc.get("starts", []))]
    d1c = d1.oriented("ccw")
    for i, s in enumerate(starts):
        p, _ = project_to_domain(d1c, s, fs.eps)
        if math.hypot(*(s - p)) > cfg.a0 + fs.eps:
            raise ScenarioError(f"starts[{i}]", "start lies farther than a0 from D1")

    sc = Scenario(
        name=str(doc.get("name", "scenario")),
        environment=env,
        d1=d1,
        d2=d2,
        sensing=sensing,
        mode=mode,
        starts=starts,
        norcent=overrides,
        seed=seed,
        note=str(doc.get("note", "")),
    )
    sc.__dict__["fs"] = fs
    return sc


def load_scenario(path_or_name) -> Scenario:
    """Load a scenario file, or one of the bundled fixtures by name."""
    p = Path(path_or_name)
    if not p.exists() and str(path_or_name) in BUILTIN:
        text = resources.files("visopt").joinpath("data", f"{path_or_name}.json").read_text()
    else:
        try:
            text = p.read_text()
        except OSError as err:
            raise ScenarioError("$", f"cannot read {p}: {err.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ScenarioError("$", f"invalid JSON: {err}") from None
    return scenario_from_dict(doc)
