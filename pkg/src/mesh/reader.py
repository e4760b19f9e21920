import logging
from pathlib import Path

import meshio
import numpy as np

from errors import MeshError
from mesh.base import Mesh
from models import MeshFormat

_logger = logging.getLogger("MeshReader")

_SUFFIXES = {".msh": MeshFormat.GMSH, ".txt": MeshFormat.FLAT}


def _detect_format(path: Path) -> MeshFormat:
    fmt = _SUFFIXES.get(path.suffix.lower())
    if fmt is None:
        raise MeshError(f"cannot infer mesh format from '{path.name}'; pass one of {[f.value for f in MeshFormat]}")
    return fmt


def _read_gmsh(path: Path) -> Mesh:
    try:
        data = meshio.read(path, file_format="gmsh")
    except Exception as e:
        raise MeshError(f"failed to parse gmsh file {path}: {e}") from e
    tets = [block.data for block in data.cells if block.type == "tetra"]
    if not tets:
        raise MeshError(f"{path} contains no 4-node tetrahedra")
    elements = np.concatenate(tets).astype(np.int64)
    tags = None
    physical = data.cell_data_dict.get("gmsh:physical", {})
    if "tetra" in physical:
        tags = np.asarray(physical["tetra"], dtype=np.int64)
    return Mesh.from_arrays(np.asarray(data.points, dtype=np.float64)[:, :3], elements, tags)


def _read_flat(path: Path) -> Mesh:
    """
    Flat text layout, '#' starts a comment:

        N_n
        x y z            (N_n lines)
        N_v
        a b c d [tag]    (N_v lines, 0-based node indices)
    """
    lines = []
    for raw in path.read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line.split())
    try:
        n_nodes = int(lines[0][0])
        nodes = np.array([[float(v) for v in row[:3]] for row in lines[1 : 1 + n_nodes]])
        n_elements = int(lines[1 + n_nodes][0])
        rows = lines[2 + n_nodes : 2 + n_nodes + n_elements]
        if len(nodes) != n_nodes or len(rows) != n_elements:
            raise ValueError(f"expected {n_nodes} nodes and {n_elements} elements")
        elements = np.array([[int(v) for v in row[:4]] for row in rows], dtype=np.int64)
        tags = np.array([int(row[4]) if len(row) > 4 else 0 for row in rows], dtype=np.int64)
    except (IndexError, ValueError) as e:
        raise MeshError(f"failed to parse flat mesh {path}: {e}") from e
    return Mesh.from_arrays(nodes, elements, tags)


def load_mesh(path: str | Path, fmt: MeshFormat | None = None) -> Mesh:
    path = Path(path)
    if not path.is_file():
        raise MeshError(f"mesh file not found: {path}")
    fmt = fmt or _detect_format(path)
    mesh = _read_gmsh(path) if fmt is MeshFormat.GMSH else _read_flat(path)
    _logger.info(f"Loaded {path.name}: N_n={mesh.n_nodes} N_v={mesh.n_elements} N_f={mesh.n_faces}")
    return mesh


def save_mesh(mesh: Mesh, path: str | Path, fmt: MeshFormat | None = None) -> Path:
    path = Path(path)
    fmt = fmt or _detect_format(path)
    if fmt is MeshFormat.GMSH:
        out = meshio.Mesh(
            mesh.nodes,
            [("tetra", mesh.elements)],
            cell_data={"gmsh:physical": [mesh.tags], "gmsh:geometrical": [mesh.tags]},
        )
        meshio.write(path, out, file_format="gmsh22", binary=False)
    else:
        with path.open("w") as fh:
            fh.write("# vv-twin flat mesh\n")
            fh.write(f"{mesh.n_nodes}\n")
            for x, y, z in mesh.nodes:
                fh.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n")
            fh.write(f"{mesh.n_elements}\n")
            for (a, b, c, d), tag in zip(mesh.elements, mesh.tags):
                fh.write(f"{int(a)} {int(b)} {int(c)} {int(d)} {int(tag)}\n")
    return path
