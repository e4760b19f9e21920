from scenario.base import Crown, MeshSpec, ProbeSet, Scenario, SupportSpec, Tolerances, TrajectorySample
from scenario.equivalent import (
    check_crown,
    fit_equivalent_currents,
    fit_loop_currents,
    inside_hull,
    sample_currents,
    training_bounds,
)
from scenario.fixtures import build_mesh, resolve_probes, support_dofs
from scenario.loader import list_presets, load_scenario, parse_scenario, save_scenario

__all__ = [
    "Crown",
    "MeshSpec",
    "ProbeSet",
    "Scenario",
    "SupportSpec",
    "Tolerances",
    "TrajectorySample",
    "check_crown",
    "fit_equivalent_currents",
    "fit_loop_currents",
    "inside_hull",
    "sample_currents",
    "training_bounds",
    "build_mesh",
    "resolve_probes",
    "support_dofs",
    "list_presets",
    "load_scenario",
    "parse_scenario",
    "save_scenario",
]
