"""
Scenario configuration: loading, parsing and validation.

A scenario is a JSON document; the accepted keys are listed in
``docs/scenario-schema.md`` and anything else is rejected. Loading validates
positivity, the density band, subsonic initial data and compatibility of
initial data with boundary schedules and coupling conditions.
"""

from __future__ import annotations

import copy
import json
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from ..constants import DIAGNOSTIC, NUMERIC, PICARD
from ..exceptions import ConfigurationError, DomainError, OutOfBandError, ValidationError
from ..utils.unified_logger import get_logger
from .network import Edge, Incidence, NetworkTopology, Node
from .pressure import PressureLaw, ptilde_inv
from .profiles import Profile, Schedule, parse_profile, parse_schedule
from .state import FieldState, Grid
from .types import (
    BoundaryQuantity,
    FloatArray,
    LawKind,
    MeasurementMode,
    NodeKind,
    StepperKind,
)

logger = get_logger(__name__)

TOP_KEYS = {
    "name",
    "topology",
    "law",
    "physics",
    "initial",
    "observer_initial",
    "perturbation",
    "boundary",
    "grid",
    "time",
    "picard",
}
REQUIRED_TOP = ("topology", "law", "physics", "initial", "boundary", "grid", "time")


@dataclass(frozen=True)
class InitialData:
    """Initial profiles of one edge.

    Either ``(rho, v)`` or Riemann invariants ``(S+, S-)``; a perturbation
    ``amplitude * sin(pi x / length)`` may be added to rho and v.
    """

    first: Profile
    second: Profile
    law: PressureLaw
    riemann: bool = False
    d_rho: float = 0.0
    d_v: float = 0.0

    def evaluate(self, x: FloatArray) -> tuple[FloatArray, FloatArray]:
        a, b = self.first(x), self.second(x)
        if self.riemann:
            c = self.law.sound_scale
            rho = np.asarray(ptilde_inv(self.law, 0.5 * (a + b)), dtype=np.float64)
            v = 0.5 * c * (a - b)
        else:
            rho, v = a, b
        if self.d_rho or self.d_v:
            shape = np.sin(np.pi * np.asarray(x) / self.first.length)
            rho = rho + self.d_rho * shape
            v = v + self.d_v * shape
        return rho, v

    def perturbed(self, d_rho: float, d_v: float) -> InitialData:
        return replace(self, d_rho=self.d_rho + d_rho, d_v=self.d_v + d_v)


@dataclass(frozen=True)
class BoundaryCondition:
    node: str
    quantity: BoundaryQuantity
    schedule: Schedule


@dataclass(frozen=True)
class PicardSettings:
    T: float  # noqa: N815
    nx: int = 100
    nt: int = 200
    max_iters: int = PICARD.MAX_ITERS
    tol: float | None = None
    windows: int = 1
    S_max: float | None = None  # noqa: N815


@dataclass(frozen=True)
class Scenario:
    """Validated twin-experiment scenario."""

    name: str
    topology: NetworkTopology
    law: PressureLaw
    gamma: float
    mu: float
    mode: MeasurementMode
    v_bar: float
    initial: Mapping[str, InitialData]
    observer_initial: Mapping[str, InitialData]
    boundary: Mapping[str, BoundaryCondition]
    cells: int
    cfl: float
    T: float  # noqa: N815
    method: StepperKind = StepperKind.MOC
    samples: int = DIAGNOSTIC.DEFAULT_SAMPLES
    anchor_node: str | None = None
    picard: PicardSettings | None = None
    config: Mapping[str, Any] = field(default_factory=dict, compare=False)

    @property
    def grid(self) -> Grid:
        return Grid.uniform(self.topology, self.cells)

    def initial_state(self, observer: bool = False) -> FieldState:
        data = self.observer_initial if observer else self.initial
        grid = self.grid
        rho, v, traces = {}, {}, {}
        c = self.law.sound_scale
        for edge_id, eg in grid.edges.items():
            rho[edge_id], v[edge_id] = data[edge_id].evaluate(eg.centers)
            r_end, v_end = data[edge_id].evaluate(np.array([0.0, eg.length]))
            y = np.asarray(self.law.ptilde(r_end))
            traces[edge_id] = np.column_stack((y + v_end / c, y - v_end / c))
        return FieldState(0.0, grid, rho, v, traces)

    def with_overrides(self, **changes: Any) -> Scenario:
        """Copy with physics, grid or time fields replaced; the raw config follows."""
        config = copy.deepcopy(dict(self.config))
        sections = {
            "mu": ("physics", "mu"),
            "gamma": ("physics", "gamma"),
            "mode": ("physics", "mode"),
            "cells": ("grid", "cells"),
            "cfl": ("grid", "cfl"),
            "method": ("grid", "method"),
            "T": ("time", "T"),
        }
        for key, value in changes.items():
            if key not in sections:
                raise ConfigurationError(f"cannot override '{key}'")
            section, name = sections[key]
            raw = str(value) if key in ("mode", "method") else value
            config.setdefault(section, {})[name] = raw
        if "mode" in changes:
            changes["mode"] = MeasurementMode(changes["mode"])
        if "method" in changes:
            changes["method"] = StepperKind(changes["method"])
        updated = replace(self, config=config, **changes)
        if "mode" in changes:
            updated = replace(updated, anchor_node=_resolve_anchor(updated, None))
        return updated

    def with_perturbation(self, d_rho: float = 0.0, d_v: float = 0.0) -> Scenario:
        config = copy.deepcopy(dict(self.config))
        pert = config.setdefault("perturbation", {})
        pert["rho"] = pert.get("rho", 0.0) + d_rho
        pert["v"] = pert.get("v", 0.0) + d_v
        observer = {k: d.perturbed(d_rho, d_v) for k, d in self.observer_initial.items()}
        return replace(self, observer_initial=observer, config=config)

    def as_truth_run(self) -> Scenario:
        """Unobserved copy whose observer starts from the true initial data."""
        unobserved = self.with_overrides(mode=MeasurementMode.NONE, mu=0.0)
        return replace(unobserved, observer_initial=dict(self.initial))


# Parsing


def _section(
    tree: Mapping[str, Any], key: str, allowed: set[str], required: tuple[str, ...]
) -> Mapping[str, Any]:
    value = tree[key]
    if not isinstance(value, Mapping):
        raise ConfigurationError(f"'{key}' must be an object")
    _check_keys(value, allowed, required, key)
    return value


def _check_keys(
    value: Mapping[str, Any], allowed: set[str], required: tuple[str, ...], where: str
) -> None:
    unknown = sorted(set(value) - allowed)
    if unknown:
        raise ConfigurationError(
            f"unknown key '{unknown[0]}' in {where}", {"allowed": sorted(allowed)}
        )
    for key in required:
        if key not in value:
            raise ConfigurationError(f"missing key '{key}' in {where}")


def _num(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, int | float):
        raise ConfigurationError(f"{where} must be a number", {"value": value})
    return float(value)


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"{where} must be an integer", {"value": value})
    return value


def _parse_topology(doc: Any) -> NetworkTopology:
    if not isinstance(doc, Mapping):
        raise ConfigurationError("'topology' must be an object")
    _check_keys(doc, {"nodes", "edges"}, ("nodes", "edges"), "topology")
    nodes, edges = [], []
    for raw in doc["nodes"]:
        _check_keys(raw, {"id", "kind"}, ("id", "kind"), "topology.nodes")
        try:
            nodes.append(Node(str(raw["id"]), NodeKind(raw["kind"])))
        except ValueError as e:
            raise ConfigurationError(f"unknown node kind '{raw['kind']}'") from e
    for raw in doc["edges"]:
        keys = ("id", "from", "to", "length")
        _check_keys(raw, set(keys), keys, "topology.edges")
        length = _num(raw["length"], "edge length")
        edges.append(Edge(str(raw["id"]), str(raw["from"]), str(raw["to"]), length))
    return NetworkTopology(tuple(nodes), tuple(edges))


def _parse_law(doc: Mapping[str, Any]) -> PressureLaw:
    rho_ref = _num(doc.get("rho_ref", 1.0), "law.rho_ref")
    params = doc.get("params", {})
    if not isinstance(params, Mapping):
        raise ConfigurationError("'law.params' must be an object")
    band: dict[str, float] = {}
    if "band" in doc:
        lo_hi = doc["band"]
        if not isinstance(lo_hi, list) or len(lo_hi) != 2:
            raise ConfigurationError("'law.band' must be [rho_lo, rho_hi]")
        band = {"rho_lo": _num(lo_hi[0], "band"), "rho_hi": _num(lo_hi[1], "band")}
    kind = doc["kind"]
    if kind == LawKind.ISOTHERMAL:
        _check_keys(params, {"c"}, ("c",), "law.params")
        return PressureLaw.isothermal(_num(params["c"], "law.params.c"), rho_ref, **band)
    if kind == LawKind.POWER:
        _check_keys(params, {"kappa", "alpha"}, ("kappa", "alpha"), "law.params")
        return PressureLaw.power(
            _num(params["kappa"], "law.params.kappa"),
            _num(params["alpha"], "law.params.alpha"),
            rho_ref,
            **band,
        )
    if kind == "saint_venant":
        _check_keys(params, set(), (), "law.params")
        return PressureLaw.saint_venant(rho_ref, **band)
    raise ConfigurationError(f"unknown law kind '{kind}'")


def _parse_initial(
    doc: Any, topology: NetworkTopology, law: PressureLaw, where: str
) -> dict[str, InitialData]:
    if not isinstance(doc, Mapping):
        raise ConfigurationError(f"'{where}' must be an object")
    edge_ids = {e.id for e in topology.edges}
    unknown = sorted(set(doc) - edge_ids)
    if unknown:
        raise ConfigurationError(f"unknown key '{unknown[0]}' in {where}")
    out: dict[str, InitialData] = {}
    for edge in topology.edges:
        if edge.id not in doc:
            raise ConfigurationError(f"missing key '{edge.id}' in {where}")
        entry = doc[edge.id]
        if not isinstance(entry, Mapping):
            raise ConfigurationError(f"'{where}.{edge.id}' must be an object")
        if set(entry) == {"rho", "v"}:
            out[edge.id] = InitialData(
                parse_profile(entry["rho"], edge.length),
                parse_profile(entry["v"], edge.length),
                law,
            )
        elif set(entry) == {"S_plus", "S_minus"}:
            out[edge.id] = InitialData(
                parse_profile(entry["S_plus"], edge.length),
                parse_profile(entry["S_minus"], edge.length),
                law,
                riemann=True,
            )
        else:
            raise ConfigurationError(
                f"'{where}.{edge.id}' needs keys {{rho, v}} or {{S_plus, S_minus}}",
                {"keys": sorted(entry)},
            )
    return out


def _parse_boundary(doc: Any) -> dict[str, BoundaryCondition]:
    if not isinstance(doc, list):
        raise ConfigurationError("'boundary' must be a list")
    out: dict[str, BoundaryCondition] = {}
    for raw in doc:
        keys = ("node", "quantity", "schedule")
        _check_keys(raw, set(keys), keys, "boundary")
        node = str(raw["node"])
        if node in out:
            raise ValidationError("boundary node listed twice", {"node": node})
        try:
            quantity = BoundaryQuantity(raw["quantity"])
        except ValueError as e:
            raise ConfigurationError(f"unknown boundary quantity '{raw['quantity']}'") from e
        out[node] = BoundaryCondition(node, quantity, parse_schedule(raw["schedule"]))
    return out


def _parse_picard(doc: Any) -> PicardSettings:
    allowed = {"S_max", "T", "nx", "nt", "max_iters", "tol", "windows"}
    if not isinstance(doc, Mapping):
        raise ConfigurationError("'picard' must be an object")
    _check_keys(doc, allowed, ("T",), "picard")
    return PicardSettings(
        T=_num(doc["T"], "picard.T"),
        nx=_int(doc.get("nx", 100), "picard.nx"),
        nt=_int(doc.get("nt", 200), "picard.nt"),
        max_iters=_int(doc.get("max_iters", PICARD.MAX_ITERS), "picard.max_iters"),
        tol=_num(doc["tol"], "picard.tol") if "tol" in doc else None,
        windows=_int(doc.get("windows", 1), "picard.windows"),
        S_max=_num(doc["S_max"], "picard.S_max") if "S_max" in doc else None,
    )


def parse_scenario(tree: Any, compat_tol: float = NUMERIC.COMPAT_TOL) -> Scenario:
    """Build and validate a scenario from a parsed JSON tree."""
    if not isinstance(tree, Mapping):
        raise ConfigurationError("scenario must be a JSON object")
    _check_keys(tree, TOP_KEYS, REQUIRED_TOP, "scenario")

    topology = _parse_topology(tree["topology"])
    law = _parse_law(_section(tree, "law", {"kind", "params", "rho_ref", "band"}, ("kind",)))
    physics = _section(
        tree, "physics", {"gamma", "mu", "mode", "v_bar", "anchor_node"}, ("gamma", "mu", "mode")
    )
    grid = _section(tree, "grid", {"cells", "cfl", "method"}, ("cells", "cfl"))
    time = _section(tree, "time", {"T", "samples"}, ("T",))

    try:
        mode = MeasurementMode(physics["mode"])
        method = StepperKind(grid.get("method", StepperKind.MOC))
    except ValueError as e:
        raise ConfigurationError(str(e)) from e

    initial = _parse_initial(tree["initial"], topology, law, "initial")
    observer = (
        _parse_initial(tree["observer_initial"], topology, law, "observer_initial")
        if "observer_initial" in tree
        else dict(initial)
    )
    if "perturbation" in tree:
        pert = tree["perturbation"]
        if not isinstance(pert, Mapping):
            raise ConfigurationError("'perturbation' must be an object")
        _check_keys(pert, {"rho", "v"}, (), "perturbation")
        d_rho = _num(pert.get("rho", 0.0), "perturbation.rho")
        d_v = _num(pert.get("v", 0.0), "perturbation.v")
        observer = {k: d.perturbed(d_rho, d_v) for k, d in observer.items()}

    scenario = Scenario(
        name=str(tree.get("name", "scenario")),
        topology=topology,
        law=law,
        gamma=_num(physics["gamma"], "physics.gamma"),
        mu=_num(physics["mu"], "physics.mu"),
        mode=mode,
        v_bar=_num(physics.get("v_bar", 0.1 * law.sound_scale), "physics.v_bar"),
        initial=initial,
        observer_initial=observer,
        boundary=_parse_boundary(tree["boundary"]),
        cells=_int(grid["cells"], "grid.cells"),
        cfl=_num(grid["cfl"], "grid.cfl"),
        T=_num(time["T"], "time.T"),
        method=method,
        samples=_int(time.get("samples", DIAGNOSTIC.DEFAULT_SAMPLES), "time.samples"),
        picard=_parse_picard(tree["picard"]) if "picard" in tree else None,
        config=copy.deepcopy(dict(tree)),
    )
    scenario = replace(scenario, anchor_node=_resolve_anchor(scenario, physics.get("anchor_node")))
    validate_scenario(scenario, compat_tol)
    return scenario


def _resolve_anchor(scenario: Scenario, explicit: Any) -> str | None:
    """The enthalpy-anchored boundary node used by the density-mode functional."""
    h_nodes = [
        n for n, bc in scenario.boundary.items() if bc.quantity is BoundaryQuantity.ENTHALPY
    ]
    if explicit is not None:
        if str(explicit) not in h_nodes:
            raise ValidationError(
                "anchor node must be a boundary node with prescribed h",
                {"anchor_node": explicit, "h_nodes": h_nodes},
            )
        return str(explicit)
    return h_nodes[0] if len(h_nodes) == 1 else None


# Validation


def validate_scenario(scenario: Scenario, compat_tol: float = NUMERIC.COMPAT_TOL) -> None:
    """Check every scenario invariant; the error message names the violated one."""
    if scenario.gamma < 0.0:
        raise ValidationError("friction coefficient negative", {"gamma": scenario.gamma})
    if scenario.mu < 0.0 or not np.isfinite(scenario.mu):
        raise ValidationError("nudging parameter negative or not finite", {"mu": scenario.mu})
    if scenario.cells < 2:
        raise ValidationError("grid needs at least two cells per edge", {"cells": scenario.cells})
    if not 0.0 < scenario.cfl <= 1.0:
        raise ValidationError("cfl factor must lie in (0, 1]", {"cfl": scenario.cfl})
    if scenario.T <= 0.0:
        raise ValidationError("final time not positive", {"T": scenario.T})
    if scenario.samples < 1:
        raise ValidationError("samples must be positive", {"samples": scenario.samples})

    boundary_ids = {n.id for n in scenario.topology.boundary_nodes}
    for node_id in scenario.boundary:
        if node_id not in boundary_ids:
            raise ValidationError(
                "boundary condition on a node that is not a boundary node", {"node": node_id}
            )
    missing = sorted(boundary_ids - set(scenario.boundary))
    if missing:
        raise ValidationError("boundary node without boundary condition", {"node": missing[0]})

    profiles = (("initial", scenario.initial), ("observer_initial", scenario.observer_initial))
    for label, data in profiles:
        for edge in scenario.topology.edges:
            _check_profile(scenario, edge, data[edge.id], label)

    for label, data in profiles:
        _check_compatibility(scenario, data, label, compat_tol)


def _check_profile(scenario: Scenario, edge: Edge, data: InitialData, label: str) -> None:
    law = scenario.law
    x = np.linspace(0.0, edge.length, 4 * scenario.cells + 1)
    try:
        rho, v = data.evaluate(x)
    except OutOfBandError as e:
        raise ValidationError("density outside band", {"edge": edge.id, "data": label}) from e
    if not np.all(rho > 0.0):
        raise ValidationError("density not positive", {"edge": edge.id, "data": label})
    if np.any(rho < law.rho_lo) or np.any(rho > law.rho_hi):
        raise ValidationError(
            "density outside band",
            {
                "edge": edge.id,
                "data": label,
                "band": law.band,
                "range": (float(rho.min()), float(rho.max())),
            },
        )
    if np.any(np.abs(v) >= np.sqrt(np.asarray(law.dp(rho)))):
        raise ValidationError("supersonic initial data", {"edge": edge.id, "data": label})


def _end_values(
    law: PressureLaw, data: Mapping[str, InitialData], incidence: Incidence
) -> tuple[float, float]:
    """Mass flow and enthalpy of one initial state at the pipe end touching a node."""
    edge = incidence.edge
    x = np.array([0.0 if incidence.at_start else edge.length])
    rho, v = data[edge.id].evaluate(x)
    m = float(rho[0] * v[0])
    h = float(0.5 * v[0] ** 2 + law.dP(rho[0]))
    return m, h


def _check_compatibility(
    scenario: Scenario, data: Mapping[str, InitialData], label: str, tol: float
) -> None:
    topology = scenario.topology
    for node_id, bc in scenario.boundary.items():
        (incidence,) = topology.incident(node_id)
        m, h = _end_values(scenario.law, data, incidence)
        target = bc.schedule(0.0)
        value = m if bc.quantity is BoundaryQuantity.MASSFLOW else h
        if abs(value - target) > tol * max(1.0, abs(target)):
            raise ValidationError(
                "incompatible initial/boundary data",
                {
                    "node": node_id,
                    "data": label,
                    "quantity": bc.quantity.value,
                    "initial": value,
                    "boundary": target,
                },
            )
    for node in topology.inner_nodes:
        flux, enthalpies = 0.0, []
        for incidence in topology.incident(node.id):
            m, h = _end_values(scenario.law, data, incidence)
            flux += incidence.sign * m
            enthalpies.append(h)
        if abs(flux) > tol or max(enthalpies) - min(enthalpies) > tol:
            raise ValidationError(
                "initial data violate coupling conditions",
                {
                    "node": node.id,
                    "data": label,
                    "mass_defect": flux,
                    "h_spread": max(enthalpies) - min(enthalpies),
                },
            )


# Loading


def load_scenario(config_text: str, compat_tol: float = NUMERIC.COMPAT_TOL) -> Scenario:
    """Parse scenario JSON text.

    Raises:
        ConfigurationError: malformed text (with line and column) or schema errors
        ValidationError: a scenario invariant is violated
    """
    try:
        tree = json.loads(config_text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(
            f"malformed scenario at line {e.lineno} column {e.colno}: {e.msg}",
            {"line": e.lineno, "column": e.colno},
        ) from e
    try:
        scenario = parse_scenario(tree, compat_tol)
    except DomainError as e:
        raise ValidationError(str(e), e.details) from e
    except (KeyError, TypeError) as e:
        raise ConfigurationError(
            f"malformed scenario: {e}", {"error_type": type(e).__name__}
        ) from e
    logger.debug(
        "scenario loaded",
        name=scenario.name,
        edges=len(scenario.topology.edges),
        star=scenario.topology.is_star,
    )
    return scenario


def load_scenario_file(path: str | Path, compat_tol: float = NUMERIC.COMPAT_TOL) -> Scenario:
    file_path = Path(path)
    try:
        text = file_path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(
            f"Scenario file not readable: {file_path}", {"file_path": str(file_path)}
        ) from e
    return load_scenario(text, compat_tol)

