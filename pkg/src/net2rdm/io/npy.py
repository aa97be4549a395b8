"""Minimal NPY v1.0 reader/writer for float interchange arrays.

The on-disk grammar is fixed: 6-byte magic, version (1, 0), little-endian
u16 header length, then an ASCII literal dict with exactly the keys descr,
fortran_order, shape, padded with spaces and terminated by a newline so the
payload starts on a 64-byte boundary. Only little-endian float payloads
('<f4', widened on load, and '<f8') in C order with 1-3 dimensions are
accepted; everything else is a format error, not a silent conversion.
"""

from __future__ import annotations

import ast
import os
import struct
from dataclasses import dataclass

import numpy as np

from ..errors import (
    BadHeader,
    BadMagic,
    FortranOrderUnsupported,
    MissingFile,
    TruncatedPayload,
    UnsupportedDescr,
    UnsupportedShape,
)

__all__ = ["NpyArray", "read_npy", "write_npy"]

MAGIC = b"\x93NUMPY"
_SUPPORTED_DESCR = {"<f4": np.dtype("<f4"), "<f8": np.dtype("<f8")}
_ALIGN = 64


@dataclass(frozen=True)
class NpyArray:
    """Parsed NPY payload: original shape and descr plus float64 values."""

    shape: tuple[int, ...]
    descr: str
    values: np.ndarray


def read_npy(path: str) -> NpyArray:
    """Parse an NPY v1.0 file into a float64 C-order array."""
    if not os.path.isfile(path):
        raise MissingFile(f"no such file: {path}")
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(MAGIC)] != MAGIC:
        raise BadMagic(f"{path}: not an NPY file (bad magic)")
    if len(blob) < len(MAGIC) + 4:
        raise BadHeader(f"{path}: file ends inside the NPY preamble")
    major, minor = blob[6], blob[7]
    if (major, minor) != (1, 0):
        raise BadHeader(f"{path}: unsupported NPY version {major}.{minor}")
    (header_len,) = struct.unpack_from("<H", blob, 8)
    header_end = 10 + header_len
    if len(blob) < header_end:
        raise BadHeader(f"{path}: header extends past end of file")
    try:
        header_text = blob[10:header_end].decode("ascii")
        header = ast.literal_eval(header_text)
    except (UnicodeDecodeError, ValueError, SyntaxError) as exc:
        raise BadHeader(f"{path}: unparseable NPY header: {exc}") from exc
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise BadHeader(f"{path}: NPY header must define descr, fortran_order, shape")

    descr = header["descr"]
    if descr not in _SUPPORTED_DESCR:
        raise UnsupportedDescr(
            f"{path}: dtype {descr!r} unsupported (need little-endian '<f4' or '<f8')"
        )
    if header["fortran_order"] is True:
        raise FortranOrderUnsupported(f"{path}: fortran_order arrays are not accepted")
    if header["fortran_order"] is not False:
        raise BadHeader(f"{path}: fortran_order must be a boolean")
    shape = header["shape"]
    if (
        not isinstance(shape, tuple)
        or not all(isinstance(d, int) and d >= 0 for d in shape)
        or not 1 <= len(shape) <= 3
    ):
        raise UnsupportedShape(f"{path}: shape {shape!r} unsupported (need 1-3 dims)")

    dtype = _SUPPORTED_DESCR[descr]
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    payload = blob[header_end:]
    if len(payload) != expected:
        raise TruncatedPayload(
            f"{path}: payload holds {len(payload)} bytes, shape {shape} needs {expected}"
        )
    values = np.frombuffer(payload, dtype=dtype).reshape(shape)
    return NpyArray(shape=tuple(shape), descr=descr, values=values.astype(np.float64))


def _format_shape(shape: tuple[int, ...]) -> str:
    if len(shape) == 1:
        return f"({shape[0]},)"
    return "(" + ", ".join(str(d) for d in shape) + ")"


def write_npy(path: str, array: np.ndarray) -> None:
    """Write a 1-3 dimensional array as little-endian float64 NPY v1.0."""
    arr = np.ascontiguousarray(array, dtype="<f8")
    if not 1 <= arr.ndim <= 3:
        raise UnsupportedShape(f"can only write 1-3 dims, got {arr.ndim}")
    header_body = (
        "{'descr': '<f8', 'fortran_order': False, "
        f"'shape': {_format_shape(arr.shape)}, }}"
    )
    unpadded = len(MAGIC) + 4 + len(header_body) + 1
    padding = (-unpadded) % _ALIGN
    header = header_body + " " * padding + "\n"
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes([1, 0]))
        fh.write(struct.pack("<H", len(header)))
        fh.write(header.encode("ascii"))
        fh.write(arr.tobytes(order="C"))
