"""Model files, grids, reports and the ``nconn`` command line."""
from .grid import Axis, Grid, build_grid, parse_grid_spec
from .model import FORMAT, TOLERANCES, InputError, Model, load_model, parse_tolerance_overrides
from .report import REPORT_VERSION, canonical_json, csv_text

__all__ = [
    "Axis", "Grid", "build_grid", "parse_grid_spec", "FORMAT", "TOLERANCES", "InputError",
    "Model", "load_model", "parse_tolerance_overrides", "REPORT_VERSION", "canonical_json",
    "csv_text",
]
