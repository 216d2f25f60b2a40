"""Binary checkpoint container.

Layout::

    8 bytes   magic b"HNSCKPT1"
    8 bytes   little-endian uint64 header length H
    H bytes   UTF-8 JSON header
    payload   arrays in header order, each complex array stored as little-endian
              float64 with real/imag interleaved, C order over (component, k1, k2, y)

The header records grid dims, period, time, system tag, eps and the name/shape of
each array. Floats in the header are written with ``repr`` so they round-trip exactly.
"""

import json
import struct

import numpy as np

from .errors import StructuralError

MAGIC = b"HNSCKPT1"


def write_checkpoint(path, grid, t, system, arrays, eps=None, extra=None):
    names = list(arrays)
    header = {
        "grid": grid.dims(),
        "t": repr(float(t)),
        "system": system,
        "eps": None if eps is None else repr(float(eps)),
        "arrays": [{"name": n, "shape": list(np.shape(arrays[n]))} for n in names],
        "dtype": "<f8",
        "layout": "complex interleaved, C order (component, k1, k2, y)",
    }
    if extra:
        header["extra"] = extra
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for n in names:
            a = np.ascontiguousarray(arrays[n], dtype=np.complex128)
            fh.write(a.view(np.float64).astype("<f8", copy=False).tobytes(order="C"))


def read_checkpoint(path):
    """Returns (header, arrays) with ``t`` and ``eps`` decoded to floats."""
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise StructuralError(f"{path}: not a checkpoint file")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode())
        arrays = {}
        for spec in header["arrays"]:
            shape = tuple(spec["shape"])
            count = 2 * int(np.prod(shape, dtype=np.int64))
            raw = np.frombuffer(fh.read(8 * count), dtype="<f8")
            if raw.size != count:
                raise StructuralError(f"{path}: truncated payload for {spec['name']}")
            arrays[spec["name"]] = raw.astype(np.float64).view(np.complex128).reshape(shape)
    header["t"] = float(header["t"])
    if header["eps"] is not None:
        header["eps"] = float(header["eps"])
    return header, arrays
