"""Binary container formats: one JSON header line followed by raw arrays.

Layout of every file::

    <magic>\\n<compact JSON header>\\n<little-endian float64 blocks>

The header gives the shape and dtype of every named block, so the file
can be read without outside knowledge.  Complex arrays are stored as
interleaved real and imaginary parts.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

from .forward import BoundaryDataset
from .probe import FourierSamples
from .spectral import Box

FORMAT_VERSION = 1
MAGIC = {"btrace": b"WAVESRC-BTRACE", "fsamp": b"WAVESRC-FSAMP", "fsamp4": b"WAVESRC-FSAMP4"}


class FormatError(ValueError):
    """File does not follow the expected container layout."""


def _write(path, kind: str, meta: dict, blocks: dict[str, np.ndarray]) -> Path:
    path = Path(path)
    entries = []
    payload = []
    for name, arr in blocks.items():
        arr = np.asarray(arr)
        if np.iscomplexobj(arr):
            raw = np.ascontiguousarray(arr, dtype="<c16").view("<f8")
            dtype = "complex128"
        elif arr.dtype == bool:
            raw = np.ascontiguousarray(arr, dtype="<f8")
            dtype = "bool"
        elif np.issubdtype(arr.dtype, np.integer):
            raw = np.ascontiguousarray(arr, dtype="<f8")
            dtype = "int64"
        else:
            raw = np.ascontiguousarray(arr, dtype="<f8")
            dtype = "float64"
        entries.append({"name": name, "shape": list(arr.shape), "dtype": dtype})
        payload.append(raw.tobytes())
    header = {"format": kind, "version": FORMAT_VERSION, "endianness": "little",
              "float": "float64", "blocks": entries, **meta}
    with open(path, "wb") as fh:
        fh.write(MAGIC[kind] + b"\n")
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode() + b"\n")
        for chunk in payload:
            fh.write(chunk)
    return path


def _read(path, kind: str) -> tuple[dict, dict[str, np.ndarray]]:
    data = Path(path).read_bytes()
    first = data.find(b"\n")
    if data[:first] != MAGIC[kind]:
        raise FormatError(f"{path}: not a .{kind} file")
    second = data.find(b"\n", first + 1)
    header = json.loads(data[first + 1:second])
    if header.get("endianness") != "little":
        raise FormatError("only little-endian payloads are supported")
    offset = second + 1
    blocks = {}
    for e in header["blocks"]:
        shape = tuple(e["shape"])
        count = int(np.prod(shape, dtype=np.int64)) * (2 if e["dtype"] == "complex128" else 1)
        if offset + 8 * count > len(data):
            raise FormatError(f"{path}: payload size mismatch, block {e['name']!r} is truncated")
        raw = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
        offset += 8 * count
        if e["dtype"] == "complex128":
            arr = raw.view("<c16").reshape(shape)
        elif e["dtype"] == "bool":
            arr = raw.reshape(shape) != 0
        elif e["dtype"] == "int64":
            arr = raw.reshape(shape).astype(np.int64)
        else:
            arr = raw.reshape(shape)
        blocks[e["name"]] = np.array(arr)
    if offset != len(data):
        raise FormatError(f"{path}: payload size mismatch")
    return header, blocks


def write_btrace(path, ds: BoundaryDataset) -> Path:
    """Dirichlet then Neumann blocks, node-major and time-minor."""
    meta = {"radius_R": ds.radius_R, "lambda": ds.lam, "noise_level": ds.noise_level,
            "source_T0": ds.source_T0,
            "quadrature": {"rule": "gauss-legendre(cos theta) x trapezoid(phi)",
                           "n_theta": ds.n_theta, "n_phi": ds.n_phi},
            "times": {"start": float(ds.times[0]), "stop": float(ds.times[-1]), "count": int(ds.times.size)},
            "byteorder_native": sys.byteorder}
    return _write(path, "btrace", meta, {"dirichlet": ds.dirichlet, "neumann": ds.neumann})


def read_btrace(path) -> BoundaryDataset:
    h, b = _read(path, "btrace")
    t = h["times"]
    times = np.linspace(t["start"], t["stop"], t["count"])
    q = h["quadrature"]
    return BoundaryDataset(h["radius_R"], h["lambda"], q["n_theta"], q["n_phi"], times,
                           b["dirichlet"], b["neumann"], h["noise_level"], h["source_T0"])


def write_fsamp(path, s: FourierSamples, tag: str = "ip1") -> Path:
    meta = {"dimension_tag": tag, "band_b": s.band_b, "lambda": s.lam,
            "box": {"half_width": s.box.half_width, "n": s.box.n}}
    return _write(path, "fsamp", meta, {"xi": s.xi, "omega": s.omega, "value": s.value,
                                        "valid": s.valid, "divisor_mag": s.divisor_mag, "modes": s.modes})


def read_fsamp(path) -> FourierSamples:
    h, b = _read(path, "fsamp")
    box = Box(h["box"]["half_width"], h["box"]["n"])
    return FourierSamples(b["xi"], b["omega"], b["value"], b["valid"], b["divisor_mag"],
                          h["band_b"], box, b["modes"], h["lambda"])


def write_generic(path, kind: str, meta: dict, blocks: dict) -> Path:
    return _write(path, kind, meta, blocks)


def read_generic(path, kind: str):
    return _read(path, kind)
