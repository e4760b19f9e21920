from rich.console import Console
from rich.table import Table

from hmatrix import HMatrix
from hmatrix.storage import stats
from mor.base import DeimOperator, EmRom, StructRom

console = Console()


def hmatrix_table(named: dict[str, HMatrix]) -> Table:
    table = Table(title="H-matrix compression")
    for column in ("matrix", "shape", "dense", "low-rank", "max rank", "ratio", "rank histogram"):
        table.add_column(column)
    for name, H in named.items():
        s = stats(H)
        histogram = " ".join(f"{rank}:{count}" for rank, count in s["rank_histogram"].items())
        table.add_row(
            name,
            f"{s['shape'][0]}x{s['shape'][1]}",
            str(s["full_blocks"]),
            str(s["low_rank_blocks"]),
            str(s["max_rank"]),
            f"{s['compression_ratio']:.3f}",
            histogram or "-",
        )
    return table


def rom_table(em_roms: list[EmRom], struct_rom: StructRom, deim: DeimOperator | None) -> Table:
    table = Table(title="Reduced models")
    for column in ("model", "size", "samples", "max error"):
        table.add_column(column)
    for rom in em_roms:
        table.add_row(f"EM {rom.coil}", str(rom.size), str(len(rom.samples)), f"{rom.max_error:.2e}")
    table.add_row("structural", str(struct_rom.size), str(len(struct_rom.singular_values)), f"{struct_rom.holdout_error:.2e}")
    if deim is not None:
        table.add_row("DEIM", str(deim.rank), str(len(deim.singular_values)), "-")
    return table


def mapping_table(title: str, values: dict) -> Table:
    table = Table(title=title)
    table.add_column("quantity")
    table.add_column("value")
    for key, value in values.items():
        table.add_row(key, f"{value:.4e}" if isinstance(value, float) else str(value))
    return table
