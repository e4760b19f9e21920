import argparse
import json
import logging
from pathlib import Path

import numpy as np

from cli.bundle import FomArtifacts, check_tolerances, RomBundle, load_bundle, load_fom, save_fom, save_roms
from cli.report import console, hmatrix_table, mapping_table, rom_table
from coupling.maps import build_coupling_maps
from elasticity.stiffness import assemble_stiffness
from em_assembly.config import settings as assembly_settings
from em_assembly.fom import assemble_em_fom
from errors import BundleMismatchError, ConfigError, ValidationFailure
from hmatrix.config import settings as hmatrix_settings
from mesh import Mesh, load_mesh, mesh_hash, save_mesh
from mor.config import settings as rom_settings
from mor.deim import build_deim
from mor.em_rom import build_em_roms, decay_rate_range
from mor.snapshots import generate_force_snapshots, random_traces
from mor.struct_rom import build_struct_rom
from online.base import OnlineModel
from online.runner import resolve_stepper, run_scenario
from online.validation import compare_results, run_fom_chain
from scenario import build_mesh, load_scenario, resolve_probes, sample_currents, support_dofs, training_bounds
from scenario.base import Scenario

_logger = logging.getLogger("Cli")


def _pick(flag, from_scenario, default):
    """CLI flag > scenario file > environment/default."""
    if flag is not None:
        return flag
    if from_scenario is not None:
        return from_scenario
    return default


def _scenario(args: argparse.Namespace) -> Scenario:
    if args.scenario is None:
        raise ConfigError("--scenario is required")
    return load_scenario(args.scenario)


def _mesh(args: argparse.Namespace, scenario: Scenario) -> Mesh:
    if args.mesh is not None:
        return load_mesh(args.mesh)
    if scenario.mesh is None:
        raise ConfigError(f"scenario {scenario.name} defines no mesh; pass --mesh")
    return build_mesh(scenario.mesh)


def _out(args: argparse.Namespace) -> Path:
    if args.out is None:
        raise ConfigError("--out is required")
    return Path(args.out)


def _threads(args: argparse.Namespace) -> int:
    return _pick(args.threads, None, assembly_settings.threads)


def _stepper(args: argparse.Namespace, scenario: Scenario) -> tuple[float, float]:
    return resolve_stepper(scenario, args.theta, args.tau)


def cmd_assemble(args: argparse.Namespace) -> int:
    scenario = _scenario(args)
    mesh = _mesh(args, scenario)
    if scenario.support is None:
        raise ConfigError(f"scenario {scenario.name} defines no structural support")
    eps = _pick(args.eps, scenario.tolerances.eps, hmatrix_settings.eps)
    eta_adm = _pick(args.eta_adm, scenario.tolerances.eta_adm, hmatrix_settings.eta_adm)
    threads = _threads(args)

    em_fom = assemble_em_fom(
        mesh,
        resistivity=scenario.material.resistivity,
        coils=scenario.equivalent_loops(),
        eps=eps,
        eta_adm=eta_adm,
        threads=threads,
    )
    maps = build_coupling_maps(mesh, scenario.all_coils(), eps=eps, eta_adm=eta_adm, threads=threads)
    struct_fom = assemble_stiffness(mesh, scenario.material, support_dofs(mesh, scenario.support))
    save_fom(
        _out(args),
        FomArtifacts(mesh=mesh, em_fom=em_fom, maps=maps, struct_fom=struct_fom),
        scenario.name,
        {"eps": eps, "eta_adm": eta_adm},
    )
    console.print(hmatrix_table({"L": em_fom.L, "Kx": maps.K[0], "Ky": maps.K[1], "Kz": maps.K[2]}))
    return 0


def cmd_build_rom(args: argparse.Namespace) -> int:
    scenario = _scenario(args)
    bundle = load_bundle(_out(args))
    fom = bundle.fom
    check_tolerances(bundle, {"eps": args.eps, "eta_adm": args.eta_adm})
    eta = _pick(args.eta_rom, scenario.tolerances.eta_rom, rom_settings.eta_rom)
    seed = _pick(args.seed, None, rom_settings.seed)
    theta, tau = _stepper(args, scenario)
    threads = _threads(args)
    dynamic = [loop.name for loop in scenario.equivalent_loops()]
    if dynamic != fom.em_fom.coil_names:
        raise ConfigError(f"scenario loops {dynamic} do not match the assembled coils {fom.em_fom.coil_names}")
    if scenario.horizon <= 0.0:
        raise ConfigError("reduction needs a scenario horizon T > 0")

    s_range = decay_rate_range(scenario.horizon, tau)
    em_roms = build_em_roms(fom.em_fom, dynamic, maps=fom.maps, eta=eta, s_range=s_range, threads=threads)

    times = tau * np.arange(int(round(scenario.horizon / tau)) + 1)
    nominal = sample_currents(scenario, times)[:, len(scenario.coils) :]
    traces = [nominal] + random_traces(training_bounds(scenario), times, rom_settings.training_traces, seed=seed)
    snapshots = generate_force_snapshots(
        em_roms, fom.maps, traces, scenario.static_currents, theta, tau, threads=threads
    )
    probe_nodes, probe_elements = resolve_probes(fom.mesh, scenario.probes)
    struct_rom = build_struct_rom(fom.struct_fom, snapshots.f, eta, probe_nodes, probe_elements)
    deim = build_deim(snapshots.F, em_roms, fom.maps, struct_rom) if args.deim else None

    reduction = {
        "eta_rom": eta,
        "seed": seed,
        "s_range": list(s_range),
        "theta": theta,
        "tau": tau,
        "training_traces": len(traces),
        "snapshots": snapshots.count,
        "em_sizes": {rom.coil: rom.size for rom in em_roms},
        "em_max_error": {rom.coil: rom.max_error for rom in em_roms},
        "struct_size": struct_rom.size,
        "deim_rank": deim.rank if deim is not None else None,
    }
    save_roms(bundle, em_roms, struct_rom, deim, reduction)
    console.print(rom_table(em_roms, struct_rom, deim))
    return 0


def _online_model(args: argparse.Namespace, scenario: Scenario):
    bundle = load_bundle(_out(args))
    if bundle.em_roms is None or bundle.struct_rom is None:
        raise ConfigError(f"bundle {bundle.root} has no reduced models; run build-rom first")
    if args.deim and bundle.deim is None:
        raise ConfigError(f"bundle {bundle.root} has no DEIM operator; rebuild with --deim")
    if bundle.provenance.get("scenario") != scenario.name:
        _logger.warning(f"Bundle was reduced for scenario {bundle.provenance.get('scenario')}, running {scenario.name}")
    return bundle, OnlineModel.from_components(bundle.em_roms, bundle.fom.maps, bundle.struct_rom, bundle.deim)


def cmd_simulate(args: argparse.Namespace) -> int:
    scenario = _scenario(args)
    bundle, model = _online_model(args, scenario)
    theta, tau = _stepper(args, scenario)
    table = run_scenario(model, scenario, theta, tau, use_deim=args.deim)
    table.to_csv(bundle.root / "results.csv")
    table.write_summary(bundle.root / "summary.json")
    console.print(mapping_table(f"Scenario {scenario.name}", table.summary()))
    return 0


def _reference_fom(args: argparse.Namespace, bundle: RomBundle) -> FomArtifacts:
    if args.fom is None:
        return bundle.fom
    fom = load_fom(args.fom)
    if mesh_hash(fom.mesh) != bundle.mesh_hash:
        raise BundleMismatchError(f"reference bundle {args.fom} was assembled on a different mesh than {bundle.root}")
    if fom.maps.coil_names != bundle.fom.maps.coil_names:
        raise BundleMismatchError(f"reference bundle coils {fom.maps.coil_names} differ from {bundle.fom.maps.coil_names}")
    _logger.info(f"Validating against full-order models from {args.fom}")
    return fom


def cmd_validate(args: argparse.Namespace) -> int:
    scenario = _scenario(args)
    bundle, model = _online_model(args, scenario)
    theta, tau = _stepper(args, scenario)
    rom = run_scenario(model, scenario, theta, tau, use_deim=args.deim)
    fom = _reference_fom(args, bundle)
    reference = run_fom_chain(
        fom.em_fom,
        fom.maps,
        fom.struct_fom,
        scenario,
        bundle.struct_rom.probe_nodes,
        bundle.struct_rom.probe_elements,
        theta,
        tau,
    )
    report = compare_results(rom, reference)
    values = report.to_dict() | {"rom_wall_clock": rom.wall_clock, "fom_wall_clock": reference.wall_clock}
    (bundle.root / "validation.json").write_text(json.dumps(values, indent=2), encoding="utf-8")
    console.print(mapping_table(f"Validation {scenario.name}", values))
    if not report.passed:
        raise ValidationFailure(
            f"ROM deviates from the FOM chain: peak force {report.peak_force_deviation:.3e}, "
            f"worst step {report.max_force_deviation:.3e}, "
            f"final displacement {report.final_displacement_deviation:.3e} (threshold {report.threshold:.1e})"
        )
    return 0


def cmd_mesh(args: argparse.Namespace) -> int:
    scenario = _scenario(args)
    if scenario.mesh is None:
        raise ConfigError(f"scenario {scenario.name} defines no mesh")
    mesh = build_mesh(scenario.mesh)
    path = save_mesh(mesh, _out(args))
    console.print(
        mapping_table(
            f"Mesh {path}",
            {"nodes": mesh.n_nodes, "elements": mesh.n_elements, "faces": mesh.n_faces, "volume": mesh.total_volume},
        )
    )
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    bundle = load_bundle(_out(args))
    fom = bundle.fom
    console.print(hmatrix_table({"L": fom.em_fom.L, "Kx": fom.maps.K[0], "Ky": fom.maps.K[1], "Kz": fom.maps.K[2]}))
    if bundle.em_roms is not None:
        console.print(rom_table(bundle.em_roms, bundle.struct_rom, bundle.deim))
    return 0
