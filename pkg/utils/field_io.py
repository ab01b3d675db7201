import logging
from pathlib import Path

import numpy as np

import config
from model.grid import Field, Grid, Representation

logger = logging.getLogger(__name__)

HEADER_DTYPE = np.dtype([
    ("magic", "S4"),
    ("version", "<u4"),
    ("n", "<u4"),
    ("N", "<u4"),
    ("L", "<f8"),
    ("rep", "u1"),
])
PAYLOAD_DTYPE = np.dtype("<c16")
_REP_FLAGS = {Representation.SPATIAL: 0, Representation.SPECTRAL: 1}


def encode_field(f: Field) -> bytes:
    try:
        header = np.zeros(1, dtype=HEADER_DTYPE)
        header["magic"] = config.CFLD_MAGIC
        header["version"] = config.CFLD_VERSION
        header["n"] = f.grid.n
        header["N"] = f.grid.N
        header["L"] = f.grid.L
        header["rep"] = _REP_FLAGS[f.rep]
        payload = np.ascontiguousarray(f.values, dtype=PAYLOAD_DTYPE)
        return header.tobytes() + payload.tobytes(order="C")
    except Exception as e:
        logger.error(f"CFLD encode error: {str(e)}")
        raise ValueError(f"Failed to encode field: {str(e)}")


def decode_field(data: bytes) -> Field:
    try:
        if len(data) < HEADER_DTYPE.itemsize:
            raise ValueError(f"truncated header ({len(data)} bytes)")
        header = np.frombuffer(data, dtype=HEADER_DTYPE, count=1)[0]
        if bytes(header["magic"]) != config.CFLD_MAGIC:
            raise ValueError(f"bad magic {bytes(header['magic'])!r}")
        if int(header["version"]) != config.CFLD_VERSION:
            raise ValueError(f"unsupported version {int(header['version'])}")
        rep_flag = int(header["rep"])
        if rep_flag not in (0, 1):
            raise ValueError(f"unknown representation flag {rep_flag}")
        grid = Grid(int(header["n"]), int(header["N"]), float(header["L"]))
        payload = np.frombuffer(data, dtype=PAYLOAD_DTYPE, offset=HEADER_DTYPE.itemsize)
        if payload.size != grid.size:
            raise ValueError(f"payload holds {payload.size} values, header implies {grid.size}")
        rep = Representation.SPECTRAL if rep_flag else Representation.SPATIAL
        logger.debug(f"Decoded CFLD: n={grid.n}, N={grid.N}, L={grid.L}, rep={rep.value}")
        return Field(grid, payload.reshape(grid.shape), rep)
    except Exception as e:
        logger.error(f"CFLD decode error: {str(e)}")
        raise ValueError(f"Invalid CFLD data: {str(e)}")


def write_field(path, f: Field) -> Path:
    path = Path(path)
    path.write_bytes(encode_field(f))
    logger.info(f"Wrote {path.name}: N={f.grid.N}, rep={f.rep.value}")
    return path


def read_field(path) -> Field:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Field file not found: {path}")
    return decode_field(path.read_bytes())
