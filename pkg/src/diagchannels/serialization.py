"""JSON encodings for matrices, channels and estimates.

Matrices: ``{"rows": r, "cols": c, "data": [[re, im], ...]}`` in row-major order.
Channels: ``{"kind": "kraus"|"diagonal"|"choi", "dim_in": n, "dim_out": m,
"payload": ...}`` where the payload is a list of matrices (kraus) or a single
Hermitian matrix (diagonal ``C``, Choi matrix).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .channels import ChoiMatrix, DiagonalChannel, KrausChannel, channel_from_choi, is_cp
from .exceptions import ValidationError
from .validation import check_hermitian


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in m.reshape(-1)],
    }


def matrix_from_json(obj, hermitian: bool = False, what: str = "matrix") -> np.ndarray:
    """Decode a matrix; with ``hermitian`` it is symmetrized or rejected."""
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{what}.schema", f"expected rows, cols and data fields ({exc})") from exc
    if rows < 1 or cols < 1:
        raise ValidationError(f"{what}.shape", f"rows and cols must be positive, got {rows}x{cols}")
    if len(data) != rows * cols:
        raise ValidationError(f"{what}.shape", f"{len(data)} entries for a {rows}x{cols} matrix")
    try:
        arr = np.array(data, dtype=float)
    except ValueError as exc:
        raise ValidationError(f"{what}.schema", f"entries must be [re, im] pairs ({exc})") from exc
    if arr.shape != (rows * cols, 2):
        raise ValidationError(f"{what}.schema", "entries must be [re, im] pairs")
    m = (arr[:, 0] + 1j * arr[:, 1]).reshape(rows, cols)
    if hermitian:
        m = check_hermitian(m, what=what)
    return m


def vector_to_json(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex).reshape(-1)]


def channel_to_json(ch) -> dict:
    if isinstance(ch, KrausChannel):
        payload = [matrix_to_json(a) for a in ch.kraus_ops]
        kind = "kraus"
    elif isinstance(ch, DiagonalChannel):
        payload = matrix_to_json(ch.c)
        kind = "diagonal"
    elif isinstance(ch, ChoiMatrix):
        payload = matrix_to_json(ch.matrix)
        kind = "choi"
    else:
        raise TypeError(f"not a channel: {type(ch).__name__}")
    return {"kind": kind, "dim_in": ch.dim_in, "dim_out": ch.dim_out, "payload": payload}


def channel_from_json(obj):
    """Decode and validate a channel.

    Returns a :class:`KrausChannel` or :class:`DiagonalChannel`; Choi input is
    converted to Kraus form after checking complete positivity.

    Raises
    ------
    ValidationError
        Naming the violated invariant.
    """
    if not isinstance(obj, dict):
        raise ValidationError("channel.schema", "top level must be an object")
    try:
        kind = obj["kind"]
        dim_in, dim_out = int(obj["dim_in"]), int(obj["dim_out"])
        payload = obj["payload"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError("channel.schema", f"missing or malformed field ({exc})") from exc

    if kind == "kraus":
        if not isinstance(payload, list) or not payload:
            raise ValidationError("kraus.nonempty", "payload must be a nonempty list of matrices")
        ops = [matrix_from_json(m, what="kraus_op") for m in payload]
        for a in ops:
            if a.shape != (dim_out, dim_in):
                raise ValidationError(
                    "kraus.shape", f"operator of shape {a.shape}, declared {dim_out}x{dim_in}"
                )
        return KrausChannel(np.stack(ops))
    if kind == "diagonal":
        if dim_in != dim_out:
            raise ValidationError("diagonal.square", "diagonal channels must have dim_in == dim_out")
        c = matrix_from_json(payload, hermitian=True, what="diagonal.c")
        if c.shape != (dim_in, dim_in):
            raise ValidationError("diagonal.shape", f"C of shape {c.shape}, declared dimension {dim_in}")
        return DiagonalChannel(c)
    if kind == "choi":
        m = matrix_from_json(payload, hermitian=True, what="choi")
        cm = ChoiMatrix(dim_in, dim_out, m)
        if not is_cp(cm):
            raise ValidationError("choi.psd", "Choi matrix is not positive semidefinite (map not CP)")
        return channel_from_choi(cm)
    raise ValidationError("channel.kind", f"unknown kind {kind!r}")


def load_channel(path):
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError("channel.json", f"{path}: {exc}") from exc
    return channel_from_json(obj)


def save_channel(ch, path) -> None:
    Path(path).write_text(json.dumps(channel_to_json(ch), indent=2) + "\n")


def load_matrix(path, hermitian: bool = False) -> np.ndarray:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError("matrix.json", f"{path}: {exc}") from exc
    return matrix_from_json(obj, hermitian=hermitian)
