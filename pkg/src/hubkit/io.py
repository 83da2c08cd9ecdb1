"""Vector-set container and the two on-disk formats.

Binary layout: one ASCII JSON header line ``{"n":N,"d":D,"dtype":"f32"}``
terminated by ``\\n``, then ``N*D`` little-endian float32 values, row-major.
CSV layout: one point per line, comma separated, no header row.

Values are stored as float32 but held in memory as float64.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["VectorSet", "VectorFormatError", "load_vectors", "save_vectors"]

_F32_LE = np.dtype("<f4")


class VectorFormatError(ValueError):
    """Raised for malformed or invalid vector files."""


@dataclass(frozen=True)
class VectorSet:
    """An ``n x d`` matrix of embedding vectors.

    Parameters
    ----------
    data : array_like
        Row-major ``(n, d)`` values. Converted to a read-only float64 array.
    label : str
        Free-form provenance string.
    """

    data: np.ndarray
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise VectorFormatError(f"expected a non-empty 2-D array, got shape {arr.shape}")
        bad = np.argwhere(~np.isfinite(arr))
        if bad.size:
            r, c = bad[0]
            raise VectorFormatError(f"non-finite value {arr[r, c]} at row {r}, column {c}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def subset(self, idx, label=None) -> "VectorSet":
        return VectorSet(self.data[np.asarray(idx)], label=self.label if label is None else label)

    def __eq__(self, other):
        if not isinstance(other, VectorSet):
            return NotImplemented
        return self.data.shape == other.data.shape and np.array_equal(self.data, other.data)

    __hash__ = None


def _detect_format(path: Path, fmt):
    if fmt is not None:
        if fmt not in ("binary", "csv"):
            raise ValueError(f"unknown format {fmt!r}; expected 'binary' or 'csv'")
        return fmt
    return "csv" if path.suffix.lower() in (".csv", ".txt") else "binary"


def load_vectors(path, format=None, label=None) -> VectorSet:
    """Read a vector set from ``path``.

    ``format`` is ``"binary"`` or ``"csv"``; when omitted it is inferred from
    the file suffix (``.csv``/``.txt`` mean CSV, anything else binary).
    """
    path = Path(path)
    fmt = _detect_format(path, format)
    label = str(path) if label is None else label
    if fmt == "csv":
        return _load_csv(path, label)
    return _load_binary(path, label)


def _load_binary(path: Path, label: str) -> VectorSet:
    raw = path.read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise VectorFormatError(f"{path}: missing header line")
    try:
        header = json.loads(raw[:nl].decode("ascii"))
        n, d = int(header["n"]), int(header["d"])
    except (UnicodeDecodeError, ValueError, KeyError, TypeError) as exc:
        raise VectorFormatError(f"{path}: malformed header: {exc}") from None
    dtype = header.get("dtype", "f32")
    if dtype != "f32":
        raise VectorFormatError(f"{path}: unsupported dtype {dtype!r}")
    if n < 1 or d < 1:
        raise VectorFormatError(f"{path}: header declares n={n}, d={d}")
    payload = raw[nl + 1:]
    if len(payload) != 4 * n * d:
        raise VectorFormatError(
            f"{path}: header declares {n}x{d} = {n * d} values "
            f"but payload holds {len(payload) / 4:g}")
    values = np.frombuffer(payload, dtype=_F32_LE).reshape(n, d)
    return VectorSet(values.astype(np.float64), label=label)


def _load_csv(path: Path, label: str) -> VectorSet:
    rows = []
    width = None
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                row = [float(tok) for tok in line.split(",")]
            except ValueError as exc:
                raise VectorFormatError(f"{path}:{lineno + 1}: {exc}") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise VectorFormatError(
                    f"{path}:{lineno + 1}: expected {width} values, got {len(row)}")
            rows.append(row)
    if not rows:
        raise VectorFormatError(f"{path}: no data rows")
    return VectorSet(np.array(rows), label=label)


def save_vectors(vs: VectorSet, path, format=None) -> None:
    """Write ``vs`` to ``path``. Binary output rounds values to float32."""
    path = Path(path)
    fmt = _detect_format(path, format)
    if fmt == "csv":
        # repr of the float32 value round-trips exactly through float()
        vals = vs.data.astype(np.float32)
        lines = [",".join(repr(float(v)) for v in row) for row in vals]
        path.write_text("\n".join(lines) + "\n", encoding="ascii")
        return
    header = json.dumps({"n": vs.n, "d": vs.d, "dtype": "f32"}, separators=(",", ":"))
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii") + b"\n")
        fh.write(np.ascontiguousarray(vs.data, dtype=_F32_LE).tobytes())
