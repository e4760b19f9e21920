import argparse
import json
import shutil

import pytest

from cli import build_parser, main
from cli.bundle import (
    BUNDLE_VERSION,
    FomArtifacts,
    RomBundle,
    check_tolerances,
    load_bundle,
    load_fom,
    read_provenance,
    save_fom,
)
from cli.commands import _reference_fom
from coupling import build_coupling_maps
from elasticity import assemble_stiffness, clamp_plane
from em_assembly import assemble_em_fom
from errors import BundleMismatchError, ConfigError
from mesh import generate_box, load_mesh, mesh_hash
from models import CircularLoop, CoilRole, Material
from scenario import MeshSpec, load_scenario, save_scenario


TOLERANCES = {"eps": 1e-6, "eta_adm": 2.0}


def _artifacts(divisions: tuple[int, int, int]) -> FomArtifacts:
    mesh = generate_box((0.4, 0.2, 0.2), divisions, origin=(1.0, 0.0, -0.1))
    coils = [CircularLoop.axisymmetric("EQ01", 1.2, 0.3, role=CoilRole.DYNAMIC)]
    return FomArtifacts(
        mesh=mesh,
        em_fom=assemble_em_fom(mesh, coils=coils, eps=1e-6, eta_adm=2.0, threads=1),
        maps=build_coupling_maps(mesh, coils, eps=1e-6, eta_adm=2.0),
        struct_fom=assemble_stiffness(mesh, Material(), clamp_plane(mesh, 0, 1.0)),
    )


@pytest.fixture(scope="module")
def tiny():
    return _artifacts((2, 1, 1))


@pytest.fixture
def small_scenario(tmp_path):
    scenario = load_scenario("torus-fixture")
    mesh = MeshSpec(kind="torus", r_major=1.0, r_minor=0.3, thickness=0.02, n_tor=8, n_pol=6)
    small = scenario.model_copy(update={"name": "torus-small", "horizon": 0.02, "mesh": mesh})
    return save_scenario(small, tmp_path / "torus-small.json")


def test_parser_knows_every_command():
    parser = build_parser()
    for command in ("assemble", "build-rom", "simulate", "validate", "mesh", "stats"):
        args = parser.parse_args([command, "--scenario", "torus-fixture", "--out", "bundle"])
        assert args.command == command
    assert parser.parse_args(["validate", "--fom", "reference"]).fom == "reference"
    args = parser.parse_args(["build-rom", "--eta-rom", "1e-4", "--tau", "5e-4", "--deim", "--threads", "4"])
    assert args.eta_rom == 1e-4
    assert args.tau == 5e-4
    assert args.deim
    assert args.threads == 4


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_missing_scenario_exits_with_config_code(tmp_path):
    assert main(["assemble", "--out", str(tmp_path / "bundle")]) == 2
    assert main(["assemble", "--scenario", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2


def test_missing_mesh_exits_with_config_code(tmp_path):
    code = main(["assemble", "--scenario", "torus-fixture", "--mesh", str(tmp_path / "nope.msh"), "--out", str(tmp_path)])
    assert code == 2


def test_missing_bundle_exits_with_config_code(tmp_path):
    assert main(["simulate", "--scenario", "torus-fixture", "--out", str(tmp_path / "empty")]) == 2
    assert main(["stats", "--out", str(tmp_path / "empty")]) == 2


def test_mesh_command_writes_the_fixture(tmp_path):
    path = tmp_path / "torus.txt"
    assert main(["mesh", "--scenario", "torus-fixture", "--out", str(path)]) == 0
    mesh = load_mesh(path)
    assert mesh.n_elements == 6 * 16 * 12


def test_provenance_version_is_checked(tmp_path):
    (tmp_path / "provenance.json").write_text(json.dumps({"format_version": BUNDLE_VERSION + 1}))
    with pytest.raises(BundleMismatchError):
        read_provenance(tmp_path)
    with pytest.raises(ConfigError, match="missing"):
        read_provenance(tmp_path / "elsewhere")


def test_requested_tolerances_must_match_the_bundle(tmp_path):
    bundle = RomBundle(root=tmp_path, provenance={"tolerances": {"eps": 1e-6, "eta_adm": 2.0}})
    check_tolerances(bundle, {"eps": 1e-6, "eta_adm": None})
    with pytest.raises(BundleMismatchError, match="eps"):
        check_tolerances(bundle, {"eps": 1e-4})


@pytest.mark.slow
def test_assemble_reduce_simulate_validate(tmp_path, small_scenario):
    out = tmp_path / "bundle"
    common = ["--scenario", str(small_scenario), "--out", str(out)]
    assert main(["assemble", *common]) == 0
    assert main(["build-rom", *common, "--deim"]) == 0
    assert main(["stats", "--out", str(out)]) == 0
    provenance = json.loads((out / "provenance.json").read_text())
    assert provenance["stages"] == ["assemble", "build-rom"]
    assert provenance["reduction"]["deim_rank"] is not None

    assert main(["simulate", *common]) == 0
    assert (out / "results.csv").is_file()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["steps"] == 20

    assert main(["simulate", *common, "--deim"]) == 0
    assert main(["validate", *common]) in (0, 4)
    assert main(["validate", *common, "--fom", str(out)]) in (0, 4)
    assert (out / "validation.json").is_file()
    assert main(["build-rom", *common, "--eps", "1e-3"]) == 2


def test_reassembly_drops_reduced_models_of_the_previous_run(tmp_path, tiny):
    save_fom(tmp_path, tiny, "tiny", TOLERANCES)
    (tmp_path / "roms.npz").write_bytes(b"left over")
    save_fom(tmp_path, tiny, "tiny", TOLERANCES)
    assert not (tmp_path / "roms.npz").exists()
    bundle = load_bundle(tmp_path)
    assert bundle.em_roms is None
    assert bundle.provenance["stages"] == ["assemble"]


def test_artifacts_from_another_tolerance_set_are_rejected(tmp_path, tiny):
    save_fom(tmp_path / "a", tiny, "tiny", TOLERANCES)
    save_fom(tmp_path / "b", tiny, "tiny", {"eps": 1e-4, "eta_adm": 2.0})
    assert mesh_hash(load_fom(tmp_path / "b").mesh) == mesh_hash(tiny.mesh)
    shutil.copy(tmp_path / "b" / "coupling.npz", tmp_path / "a" / "coupling.npz")
    with pytest.raises(BundleMismatchError, match="coupling.npz"):
        load_fom(tmp_path / "a")


def test_validation_reference_can_come_from_another_bundle(tmp_path, tiny):
    save_fom(tmp_path / "rom", tiny, "tiny", TOLERANCES)
    save_fom(tmp_path / "tight", tiny, "tiny", {"eps": 1e-8, "eta_adm": 2.0})
    save_fom(tmp_path / "other", _artifacts((3, 1, 1)), "tiny", TOLERANCES)
    bundle = load_bundle(tmp_path / "rom")
    assert _reference_fom(argparse.Namespace(fom=None), bundle) is bundle.fom
    reference = _reference_fom(argparse.Namespace(fom=str(tmp_path / "tight")), bundle)
    assert mesh_hash(reference.mesh) == bundle.mesh_hash
    with pytest.raises(BundleMismatchError, match="different mesh"):
        _reference_fom(argparse.Namespace(fom=str(tmp_path / "other")), bundle)
    with pytest.raises(ConfigError):
        _reference_fom(argparse.Namespace(fom=str(tmp_path / "missing")), bundle)
