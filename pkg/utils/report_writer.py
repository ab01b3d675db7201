import csv
import hashlib
import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import Iterable, List, Mapping, Sequence

import config

logger = logging.getLogger(__name__)


def format_value(value) -> str:
    """Fixed text form of a CSV cell: floats with 17 significant digits."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return config.FLOAT_FORMAT.format(value)
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(v) for v in value)
    if hasattr(value, "dtype") and getattr(value, "ndim", 1) == 0:
        return format_value(value.item())
    return str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            count = 0
            for row in rows:
                if len(row) != len(header):
                    raise ValueError(f"Row has {len(row)} cells, header has {len(header)}")
                writer.writerow([format_value(v) for v in row])
                count += 1
        logger.info(f"Wrote {path.name}: {count} rows")
        return path
    except ValueError:
        raise
    except Exception as e:
        logger.error(f"CSV write error for {path}: {str(e)}")
        raise RuntimeError(f"Failed to write {path}: {str(e)}")


def read_csv(path) -> List[dict]:
    """Rows of a headed CSV file as dicts keyed by column name."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"CSV file not found: {path}")
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def format_parameters(parameters: Mapping) -> str:
    """Sorted key=value pairs joined by ';'."""
    return ";".join(f"{k}={format_value(parameters[k])}" for k in sorted(parameters))


class Manifest:
    """Artifacts of one run, written as file,command,parameters,sha256."""

    def __init__(self, out_dir, command: str, parameters: Mapping):
        self.out_dir = Path(out_dir)
        self.command = command
        self.parameters = format_parameters(parameters)
        self.files: List[Path] = []

    def add(self, path) -> Path:
        path = Path(path)
        self.files.append(path)
        return path

    def write(self) -> Path:
        rows = [
            (p.relative_to(self.out_dir).as_posix(), self.command, self.parameters, sha256_file(p))
            for p in sorted(self.files)
        ]
        return write_csv(self.out_dir / config.MANIFEST_NAME, ("file", "command", "parameters", "sha256"), rows)
