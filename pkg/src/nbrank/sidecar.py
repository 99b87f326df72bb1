"""Dense per-hypothesis vector files (e.g. sentence embeddings).

A sidecar starts with one header line::

    #nbrank-vectors name=<name> dim=<dim> count=<rows> format=<text|f32le>

In ``text`` format each following line is ``utt_id hyp_index v_1 ... v_dim``
with values at 9 significant digits, which is exact for single precision.
In ``f32le`` format ``count`` lines of ``utt_id hyp_index`` follow the header,
then ``count * dim`` little-endian float32 values. ``hyp_index`` is the
hypothesis's original decoder rank.
"""

from dataclasses import dataclass

import numpy as np

from ._jsonio import atomic_write
from .errors import ParseError

MAGIC = "#nbrank-vectors"
FORMATS = ("text", "f32le")


@dataclass(frozen=True)
class VectorTable:
    name: str
    dim: int
    keys: list  # (utt_id, hyp_index) per row
    values: np.ndarray  # (rows, dim) float64 holding float32-exact values

    def row_of(self):
        return {key: i for i, key in enumerate(self.keys)}


def write_vectors(path, name, dim, rows, fmt="text"):
    """Write ``rows`` of ``(utt_id, hyp_index, vector)`` to ``path``."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown sidecar format {fmt!r}")
    if any(c.isspace() for c in name):
        raise ValueError(f"vector name {name!r} contains whitespace")
    rows = list(rows)
    mat = np.zeros((len(rows), dim), dtype=np.float32)
    for r, (utt_id, _, vec) in enumerate(rows):
        if not utt_id or any(c.isspace() for c in utt_id):
            raise ValueError(f"utt_id {utt_id!r} cannot be stored in a sidecar")
        vec = np.asarray(vec, dtype=np.float32)
        if vec.shape != (dim,):
            raise ValueError(f"row {r} has shape {vec.shape}, expected ({dim},)")
        mat[r] = vec
    header = f"{MAGIC} name={name} dim={dim} count={len(rows)} format={fmt}\n"
    if fmt == "text":
        with atomic_write(path) as fh:
            fh.write(header)
            for (utt_id, hyp_index, _), vec in zip(rows, mat):
                vals = " ".join(format(float(v), ".9g") for v in vec)
                fh.write(f"{utt_id} {int(hyp_index)} {vals}\n")
    else:
        with atomic_write(path, "wb") as fh:
            fh.write(header.encode("utf-8"))
            for utt_id, hyp_index, _ in rows:
                fh.write(f"{utt_id} {int(hyp_index)}\n".encode("utf-8"))
            fh.write(mat.astype("<f4").tobytes())


def _parse_header(line, path):
    parts = line.split()
    if not parts or parts[0] != MAGIC:
        raise ParseError("missing sidecar header", line=1, path=path)
    fields = {}
    for part in parts[1:]:
        key, sep, value = part.partition("=")
        if not sep:
            raise ParseError(f"bad header field {part!r}", line=1, path=path)
        fields[key] = value
    try:
        name = fields["name"]
        dim = int(fields["dim"])
        count = int(fields["count"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad sidecar header: {exc}", line=1, path=path) from None
    fmt = fields.get("format", "text")
    if fmt not in FORMATS or dim < 1 or count < 0:
        raise ParseError("bad sidecar header values", line=1, path=path)
    return name, dim, count, fmt


def _parse_key(text, lineno, path):
    parts = text.split()
    if len(parts) != 2:
        raise ParseError("expected 'utt_id hyp_index'", line=lineno, path=path)
    try:
        return parts[0], int(parts[1])
    except ValueError:
        raise ParseError("hyp_index is not an integer", line=lineno, path=path) from None


def read_vectors(path):
    with open(path, "rb") as fh:
        name, dim, count, fmt = _parse_header(fh.readline().decode("utf-8"), path)
        keys = []
        values = np.zeros((count, dim), dtype=np.float64)
        if fmt == "text":
            lines = fh.read().decode("utf-8").splitlines()
            if len(lines) != count:
                raise ParseError(f"declared {count} rows, found {len(lines)}", path=path)
            for r, line in enumerate(lines):
                lineno = r + 2
                parts = line.split()
                if len(parts) != dim + 2:
                    raise ParseError(f"expected {dim} values", line=lineno, path=path)
                keys.append(_parse_key(" ".join(parts[:2]), lineno, path))
                try:
                    values[r] = np.array(parts[2:], dtype=np.float32)
                except ValueError:
                    raise ParseError("non-numeric vector value", line=lineno, path=path) from None
        else:
            for r in range(count):
                keys.append(_parse_key(fh.readline().decode("utf-8"), r + 2, path))
            blob = fh.read()
            if len(blob) != 4 * count * dim:
                raise ParseError(f"expected {4 * count * dim} data bytes, found {len(blob)}", path=path)
            values[:] = np.frombuffer(blob, dtype="<f4").reshape(count, dim)
    return VectorTable(name, dim, keys, values)
