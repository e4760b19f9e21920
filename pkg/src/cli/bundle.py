import json
import logging
import platform
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy
import scipy.sparse as sp

from coupling.base import CouplingMaps
from elasticity.base import StructFom
from em_assembly.base import EmFom
from errors import BundleMismatchError, ConfigError
from hmatrix.storage import hmatrix_arrays, hmatrix_from_arrays
from mesh import Mesh, mesh_hash
from models import Material
from mor.base import DeimOperator, EmRom, StructRom

_logger = logging.getLogger("Bundle")

BUNDLE_VERSION = 1
PROVENANCE = "provenance.json"


def _sparse_arrays(name: str, M: sp.spmatrix) -> dict[str, np.ndarray]:
    M = sp.csr_matrix(M)
    return {
        f"{name}_data": M.data,
        f"{name}_indices": M.indices,
        f"{name}_indptr": M.indptr,
        f"{name}_shape": np.array(M.shape, dtype=np.int64),
    }


def _sparse_from(arrays, name: str) -> sp.csr_matrix:
    shape = arrays[f"{name}_shape"]
    return sp.csr_matrix(
        (arrays[f"{name}_data"], arrays[f"{name}_indices"], arrays[f"{name}_indptr"]),
        shape=(int(shape[0]), int(shape[1])),
    )


def _names(values: list[str]) -> np.ndarray:
    return np.array(values, dtype=np.str_)


@dataclass
class FomArtifacts:
    mesh: Mesh
    em_fom: EmFom
    maps: CouplingMaps
    struct_fom: StructFom


@dataclass
class RomBundle:
    """
    A bundle directory: provenance.json, mesh.npz, em_fom.npz, coupling.npz,
    struct_fom.npz and, once reduced, roms.npz. Every payload carries the
    mesh hash it was built for.
    """

    root: Path
    provenance: dict
    fom: FomArtifacts | None = None
    em_roms: list[EmRom] | None = None
    struct_rom: StructRom | None = None
    deim: DeimOperator | None = None

    @property
    def mesh_hash(self) -> str:
        return self.provenance["mesh_hash"]


def versions() -> dict[str, str]:
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}


def _tolerance_tag(tolerances: dict) -> str:
    return json.dumps(tolerances, sort_keys=True)


def _write(path: Path, arrays: dict[str, np.ndarray], digest: str, tolerances: dict) -> None:
    np.savez(path, mesh_hash=np.array(digest), tolerances=np.array(_tolerance_tag(tolerances)), **arrays)


def _read(path: Path, digest: str, tolerances: dict) -> dict[str, np.ndarray]:
    if not path.is_file():
        raise ConfigError(f"bundle artifact {path} not found")
    with np.load(path) as data:
        arrays = {k: data[k] for k in data.files}
    found = str(arrays.get("mesh_hash", ""))
    if found != digest:
        raise BundleMismatchError(f"{path.name} was built for mesh {found[:12]}, bundle mesh is {digest[:12]}")
    recorded = str(arrays.get("tolerances", ""))
    if recorded != _tolerance_tag(tolerances):
        raise BundleMismatchError(f"{path.name} was built with tolerances {recorded or 'unknown'}, bundle has {_tolerance_tag(tolerances)}")
    return arrays


def read_provenance(root: str | Path) -> dict:
    path = Path(root) / PROVENANCE
    if not path.is_file():
        raise ConfigError(f"no bundle at {root} ({PROVENANCE} missing)")
    provenance = json.loads(path.read_text(encoding="utf-8"))
    if provenance.get("format_version") != BUNDLE_VERSION:
        raise BundleMismatchError(f"bundle format {provenance.get('format_version')}, expected {BUNDLE_VERSION}")
    return provenance


def write_provenance(root: Path, provenance: dict) -> None:
    (root / PROVENANCE).write_text(json.dumps(provenance, indent=2, sort_keys=True), encoding="utf-8")


def save_fom(root: str | Path, artifacts: FomArtifacts, scenario: str, tolerances: dict) -> RomBundle:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    mesh, em, maps, struct = artifacts.mesh, artifacts.em_fom, artifacts.maps, artifacts.struct_fom
    digest = mesh_hash(mesh)
    stale = root / "roms.npz"
    if stale.exists():
        _logger.warning(f"Removing reduced models in {root} built from the previous assembly")
        stale.unlink()
    _write(root / "mesh.npz", {"nodes": mesh.nodes, "elements": mesh.elements, "tags": mesh.tags}, digest, tolerances)
    _write(
        root / "em_fom.npz",
        hmatrix_arrays(em.L, "L_")
        | _sparse_arrays("R", em.R)
        | _sparse_arrays("D", em.D)
        | {
            "B_i": em.B_i,
            "grounded": em.grounded,
            "resistivity": np.array(em.resistivity),
            "coil_names": _names(em.coil_names),
        },
        digest,
        tolerances,
    )
    coupling = {"coil_fields": maps.coil_fields, "coil_names": _names(maps.coil_names)} | _sparse_arrays("P", maps.P)
    for c, axis in enumerate("xyz"):
        coupling |= _sparse_arrays(f"W{axis}", maps.W[c]) | hmatrix_arrays(maps.K[c], f"K{axis}_")
    _write(root / "coupling.npz", coupling, digest, tolerances)
    _write(
        root / "struct_fom.npz",
        _sparse_arrays("S", struct.S) | {"dirichlet_dofs": struct.dirichlet_dofs},
        digest,
        tolerances,
    )
    provenance = {
        "format_version": BUNDLE_VERSION,
        "mesh_hash": digest,
        "scenario": scenario,
        "tolerances": tolerances,
        "material": struct.material.model_dump(),
        "coil_names": list(maps.coil_names),
        "dynamic_coils": list(em.coil_names),
        "versions": versions(),
        "stages": ["assemble"],
    }
    write_provenance(root, provenance)
    _logger.info(f"Saved full-order artifacts to {root}")
    return RomBundle(root=root, provenance=provenance, fom=artifacts)


def load_fom(root: str | Path) -> FomArtifacts:
    root = Path(root)
    provenance = read_provenance(root)
    digest = provenance["mesh_hash"]
    m = _read(root / "mesh.npz", digest, provenance["tolerances"])
    mesh = Mesh.from_arrays(m["nodes"], m["elements"], m["tags"])
    if mesh_hash(mesh) != digest:
        raise BundleMismatchError(f"mesh payload hashes to {mesh_hash(mesh)[:12]}, provenance says {digest[:12]}")
    e = _read(root / "em_fom.npz", digest, provenance["tolerances"])
    em = EmFom(
        mesh=mesh,
        L=hmatrix_from_arrays(e, "L_"),
        R=_sparse_from(e, "R"),
        D=_sparse_from(e, "D"),
        B_i=e["B_i"],
        coil_names=[str(n) for n in e["coil_names"]],
        grounded=e["grounded"],
        resistivity=float(e["resistivity"]),
    )
    c = _read(root / "coupling.npz", digest, provenance["tolerances"])
    maps = CouplingMaps(
        mesh=mesh,
        W=tuple(_sparse_from(c, f"W{axis}") for axis in "xyz"),
        K=tuple(hmatrix_from_arrays(c, f"K{axis}_") for axis in "xyz"),
        P=_sparse_from(c, "P"),
        coil_names=[str(n) for n in c["coil_names"]],
        coil_fields=c["coil_fields"],
    )
    s = _read(root / "struct_fom.npz", digest, provenance["tolerances"])
    struct = StructFom(
        mesh=mesh,
        S=_sparse_from(s, "S"),
        material=Material.model_validate(provenance["material"]),
        dirichlet_dofs=s["dirichlet_dofs"],
    )
    return FomArtifacts(mesh=mesh, em_fom=em, maps=maps, struct_fom=struct)


_EM_FIELDS = ("V", "E_hat", "A_hat", "B_hat", "s_grid", "errors", "WV", "KV")
_STRUCT_FIELDS = (
    "V",
    "S_hat",
    "singular_values",
    "probe_nodes",
    "probe_elements",
    "probe_displacement",
    "probe_strain",
)
_DEIM_FIELDS = ("Z", "points", "singular_values", "SZ", "load_lift", "force_lift", "J_a", "J_b", "K_a", "K_b", "B_a", "B_b")


def save_roms(
    bundle: RomBundle,
    em_roms: list[EmRom],
    struct_rom: StructRom,
    deim: DeimOperator | None,
    reduction: dict,
) -> RomBundle:
    arrays: dict[str, np.ndarray] = {"coils": _names([rom.coil for rom in em_roms])}
    for i, rom in enumerate(em_roms):
        arrays |= {f"em{i}_{name}": getattr(rom, name) for name in _EM_FIELDS}
        arrays[f"em{i}_history"] = np.array(rom.history)
        arrays[f"em{i}_samples"] = np.array(rom.samples)
    arrays |= {f"struct_{name}": getattr(struct_rom, name) for name in _STRUCT_FIELDS}
    arrays["struct_holdout_error"] = np.array(struct_rom.holdout_error)
    if deim is not None:
        arrays |= {f"deim_{name}": getattr(deim, name) for name in _DEIM_FIELDS}
    _write(bundle.root / "roms.npz", arrays, bundle.mesh_hash, bundle.provenance["tolerances"])
    bundle.provenance["reduction"] = reduction
    bundle.provenance["stages"] = sorted(set(bundle.provenance.get("stages", [])) | {"build-rom"})
    write_provenance(bundle.root, bundle.provenance)
    bundle.em_roms, bundle.struct_rom, bundle.deim = em_roms, struct_rom, deim
    return bundle


def load_bundle(root: str | Path, with_fom: bool = True) -> RomBundle:
    """Load a bundle; reduced models are attached when build-rom has run."""
    root = Path(root)
    provenance = read_provenance(root)
    bundle = RomBundle(root=root, provenance=provenance, fom=load_fom(root) if with_fom else None)
    if not (root / "roms.npz").is_file():
        return bundle
    arrays = _read(root / "roms.npz", bundle.mesh_hash, bundle.provenance["tolerances"])
    coils = [str(n) for n in arrays["coils"]]
    if coils != provenance.get("dynamic_coils"):
        raise BundleMismatchError(f"reduced coils {coils} differ from assembled coils {provenance.get('dynamic_coils')}")
    bundle.em_roms = [
        EmRom(
            coil=name,
            **{field: arrays[f"em{i}_{field}"] for field in _EM_FIELDS},
            history=arrays[f"em{i}_history"].tolist(),
            samples=arrays[f"em{i}_samples"].tolist(),
        )
        for i, name in enumerate(coils)
    ]
    bundle.struct_rom = StructRom(
        **{field: arrays[f"struct_{field}"] for field in _STRUCT_FIELDS},
        holdout_error=float(arrays["struct_holdout_error"]),
    )
    if "deim_Z" in arrays:
        bundle.deim = DeimOperator(**{field: arrays[f"deim_{field}"] for field in _DEIM_FIELDS})
    return bundle


def check_tolerances(bundle: RomBundle, requested: dict) -> None:
    """A requested tolerance differing from the one the bundle was built with is a hard error."""
    recorded = bundle.provenance.get("tolerances", {})
    for key, value in requested.items():
        if value is not None and key in recorded and not np.isclose(recorded[key], value, rtol=1e-12, atol=0.0):
            raise BundleMismatchError(f"bundle was built with {key}={recorded[key]}, requested {value}")
