import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from cli.schemas import COMMAND_CONFIGS, PotentialConfig, RunConfig
from inversion.reconstruct import RecordedDataMap
from model.grid import Field, Grid, make_grid, plane_wave
from model.norms import as_exponent
from model.potentials import (
    Potential,
    bump_potential,
    gaussian_potential,
    singular_potential,
    zero_potential,
)
from utils.field_io import read_field
from utils.report_writer import Manifest, read_csv

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunContext:
    command: str
    out: Path
    seed: int
    threads: int


def parse_config_file(path) -> Dict[str, str]:
    """Read `key = value` lines; '#' starts a comment, blank lines are skipped."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    values: Dict[str, str] = {}
    for number, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path.name}:{number}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"{path.name}:{number}: empty key")
        if key in values:
            raise ValueError(f"{path.name}:{number}: duplicate key {key!r}")
        values[key] = value
    return values


def load_config(command: str, path: Optional[str], overrides: Mapping) -> RunConfig:
    if command not in COMMAND_CONFIGS:
        raise ValueError(f"Unknown command {command!r}")
    raw = parse_config_file(path) if path else {}
    raw.update({k: v for k, v in overrides.items() if v is not None})
    cfg = COMMAND_CONFIGS[command].model_validate(raw)
    logger.info(f"Effective {command} config: {cfg.model_dump()}")
    return cfg


def run_parameters(cfg: RunConfig, ctx: RunContext) -> Dict:
    params = {k: v for k, v in cfg.model_dump().items() if v is not None}
    params["seed"] = ctx.seed
    return params


def grid_of(cfg) -> Grid:
    return make_grid(cfg.n, cfg.N, cfg.L)


def build_potential(cfg: PotentialConfig, path: Optional[str] = None) -> Potential:
    """V from a CFLD file, or the synthetic potential the config describes."""
    q = as_exponent(cfg.q)
    path = cfg.potential if path is None else path
    if path:
        field = read_field(path)
        if not field.is_spatial:
            raise ValueError(f"Potential file {path} holds a spectral field")
        logger.info(f"Loaded potential from {path}: n={field.grid.n}, N={field.grid.N}, L={field.grid.L}")
        return Potential(field, q)
    grid = grid_of(cfg)
    radius = 0.125 * grid.L if cfg.radius is None else cfg.radius
    if cfg.kind == "gaussian":
        return gaussian_potential(grid, cfg.amplitude, cfg.sigma, q)
    if cfg.kind == "bump":
        return bump_potential(grid, cfg.amplitude, radius, q)
    if cfg.kind == "singular":
        return singular_potential(grid, cfg.amplitude, cfg.alpha, radius, q)
    return zero_potential(grid, q)


def second_potential(cfg, V1: Potential) -> Potential:
    if cfg.potential2:
        V2 = build_potential(cfg, cfg.potential2)
        if V2.grid != V1.grid:
            raise ValueError(f"Potentials live on different grids: {V1.grid} vs {V2.grid}")
        return V2
    return zero_potential(V1.grid, V1.q)


def gaussian_packet(grid: Grid, width: float, wavevector: Optional[Sequence[float]] = None) -> Field:
    packet = Field(grid, np.exp(-np.broadcast_to(grid.radius2, grid.shape) / (2.0 * width ** 2)))
    if wavevector is None or not np.any(wavevector):
        return packet
    return packet * plane_wave(grid, wavevector).values


def prepare_output(out: Path) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def new_manifest(cfg: RunConfig, ctx: RunContext) -> Manifest:
    return Manifest(prepare_output(ctx.out), ctx.command, run_parameters(cfg, ctx))


def complex_cells(z: complex):
    return float(np.real(z)), float(np.imag(z))


DATA_COLUMNS = ("input", "output", "T")


def load_recorded_data(path) -> RecordedDataMap:
    """
    Read a data table written by `evolve` with xi_band set: one row per
    input wave, naming the input and final-state CFLD files relative to the
    table, and the final time T shared by all rows.
    """
    path = Path(path)
    rows = read_csv(path)
    if not rows:
        raise ValueError(f"Data table {path} lists no pairs")
    missing = [c for c in DATA_COLUMNS if c not in rows[0]]
    if missing:
        raise ValueError(f"Data table {path} lacks columns {missing}")
    times = {float(row["T"]) for row in rows}
    if len(times) != 1:
        raise ValueError(f"Data table {path} mixes final times {sorted(times)}")
    pairs = [(read_field(path.parent / row["input"]), read_field(path.parent / row["output"])) for row in rows]
    U = RecordedDataMap(pairs, times.pop())
    logger.info(f"Loaded {len(U)} recorded pairs from {path}: N={U.grid.N}, T={U.T}")
    return U
