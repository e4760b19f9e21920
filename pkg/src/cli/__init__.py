from cli.bundle import FomArtifacts, RomBundle, load_bundle, load_fom, save_fom, save_roms
from cli.main import build_parser, main

__all__ = ["FomArtifacts", "RomBundle", "load_bundle", "load_fom", "save_fom", "save_roms", "build_parser", "main"]
