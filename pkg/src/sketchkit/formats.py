"""Binary containers: MAT1 dense matrices and SKT1 sketched matrices.

MAT1 layout (little-endian)::

    b"MAT1" | u8 dtype (0 float64, 1 float32) | u32 rows | u32 cols | row-major payload

SKT1 layout (little-endian)::

    b"SKT1" | u16 version=1 | u32 rows | u32 cols | u16 gpr | u8 bits | u8 reserved
    | float32 sketched values, shape (rows, gpr, 2**bits), row-major
    | rows * ceil(cols * bits / 8) bytes of packed indices, one padded stream per row
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .numerics import as_matrix
from .runtime import SketchedMatrix, pack_indices, row_bytes, unpack_indices

MAT1_MAGIC = b"MAT1"
SKT1_MAGIC = b"SKT1"
SKT1_VERSION = 1

_MAT1_HEADER = struct.Struct("<4sBII")
_SKT1_HEADER = struct.Struct("<4sHIIHBB")
SKT1_HEADER_SIZE = _SKT1_HEADER.size
_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<f4")}


class FormatError(ValueError):
    pass


def _check_magic(data: bytes, magic: bytes, what: str):
    observed = bytes(data[:4])
    if observed != magic:
        raise FormatError(f"not a {what} file: expected magic {magic!r}, observed {observed!r}")


def encode_mat1(a, dtype: str = "float64") -> bytes:
    a = as_matrix(a)
    flag = {"float64": 0, "float32": 1}[dtype]
    header = _MAT1_HEADER.pack(MAT1_MAGIC, flag, a.shape[0], a.shape[1])
    return header + np.ascontiguousarray(a, dtype=_DTYPES[flag]).tobytes()


def decode_mat1(data: bytes) -> np.ndarray:
    _check_magic(data, MAT1_MAGIC, "MAT1")
    if len(data) < _MAT1_HEADER.size:
        raise FormatError(f"MAT1 header truncated: {len(data)} bytes")
    _, flag, rows, cols = _MAT1_HEADER.unpack_from(data)
    if flag not in _DTYPES:
        raise FormatError(f"unknown MAT1 dtype flag {flag}")
    dtype = _DTYPES[flag]
    expected = _MAT1_HEADER.size + rows * cols * dtype.itemsize
    if len(data) != expected:
        raise FormatError(f"MAT1 payload size mismatch: expected {expected} bytes, got {len(data)}")
    payload = np.frombuffer(data, dtype=dtype, offset=_MAT1_HEADER.size, count=rows * cols)
    return payload.astype(np.float64).reshape(rows, cols)


def write_mat1(path, a, dtype: str = "float64") -> None:
    Path(path).write_bytes(encode_mat1(a, dtype))


def read_mat1(path) -> np.ndarray:
    return decode_mat1(Path(path).read_bytes())


def skt1_size(rows: int, cols: int, gpr: int, bits: int) -> int:
    """Exact SKT1 file size in bytes."""
    return SKT1_HEADER_SIZE + rows * gpr * (2 ** bits) * 4 + rows * row_bytes(cols, bits)


def encode_skt1_header(rows: int, cols: int, gpr: int, bits: int) -> bytes:
    return _SKT1_HEADER.pack(SKT1_MAGIC, SKT1_VERSION, rows, cols, gpr, bits, 0)


def decode_skt1_header(data: bytes) -> dict:
    _check_magic(data, SKT1_MAGIC, "SKT1")
    if len(data) < SKT1_HEADER_SIZE:
        raise FormatError(f"SKT1 header truncated: {len(data)} bytes")
    _, version, rows, cols, gpr, bits, _ = _SKT1_HEADER.unpack_from(data)
    if version != SKT1_VERSION:
        raise FormatError(f"unsupported SKT1 version {version}")
    if bits not in (2, 3, 4):
        raise FormatError(f"SKT1 bits must be 2, 3 or 4, got {bits}")
    if gpr < 1 or cols % gpr:
        raise FormatError(f"SKT1 gpr={gpr} does not divide cols={cols}")
    return {"rows": rows, "cols": cols, "gpr": gpr, "bits": bits}


def encode_skt1(sm: SketchedMatrix) -> bytes:
    header = encode_skt1_header(sm.rows, sm.cols, sm.gpr, sm.bits)
    params = np.ascontiguousarray(sm.sketched, dtype="<f4").tobytes()
    return header + params + pack_indices(sm.indices, sm.bits)


def decode_skt1(data: bytes) -> SketchedMatrix:
    meta = decode_skt1_header(data)
    rows, cols, gpr, bits = meta["rows"], meta["cols"], meta["gpr"], meta["bits"]
    expected = skt1_size(rows, cols, gpr, bits)
    if len(data) != expected:
        raise FormatError(f"SKT1 size mismatch: expected {expected} bytes, got {len(data)}")
    k = 2 ** bits
    n_params = rows * gpr * k
    params = np.frombuffer(data, dtype="<f4", offset=SKT1_HEADER_SIZE, count=n_params)
    offset = SKT1_HEADER_SIZE + 4 * n_params
    indices = unpack_indices(data[offset:], rows, cols, bits)
    return SketchedMatrix(params.astype(np.float64).reshape(rows, gpr, k), indices, bits)


def write_skt1(path, sm: SketchedMatrix) -> None:
    Path(path).write_bytes(encode_skt1(sm))


def read_skt1(path) -> SketchedMatrix:
    return decode_skt1(Path(path).read_bytes())


def read_skt1_header(path) -> dict:
    """Header fields plus a size check, without decoding the payload."""
    path = Path(path)
    with path.open("rb") as fh:
        head = fh.read(SKT1_HEADER_SIZE)
    meta = decode_skt1_header(head)
    expected = skt1_size(meta["rows"], meta["cols"], meta["gpr"], meta["bits"])
    actual = path.stat().st_size
    if actual != expected:
        raise FormatError(f"SKT1 size mismatch: expected {expected} bytes, got {actual}")
    return meta
