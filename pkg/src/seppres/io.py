"""Reading and writing kets and matrices.

JSON layout (row-major)::

    {"dims": [n1, ..., np], "re": [...], "im": [...]}                  # ket
    {"row_dims": [...], "col_dims": [...], "re": [...], "im": [...]}   # operator

``re``/``im`` may be flat or nested lists; ``im`` may be omitted for real data.
An operator with only ``dims`` is taken to be square with equal row and
column shapes.

Plain-text layout: the first non-comment line holds the dimensions
(``2 2`` for a ket, ``2 2 | 2 2`` for an operator: row dims, bar, column
dims); every following line holds one ``re im`` pair. ``#`` starts a comment.
"""

import json
from pathlib import Path

import numpy as np

from .errors import ShapeError
from .tensor import Ket, Opr


class FormatError(ValueError):
    """Malformed input file; ``field`` names the offending entry."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


def _dims(doc, key):
    try:
        dims = [int(d) for d in doc[key]]
    except KeyError:
        raise FormatError(f"missing field {key!r}", key) from None
    except (TypeError, ValueError):
        raise FormatError(f"field {key!r} must be a list of integers", key) from None
    if not dims or any(d < 1 for d in dims):
        raise FormatError(f"field {key!r} must hold positive integers", key)
    return dims


def _complex_data(doc):
    if "re" not in doc:
        raise FormatError("missing field 're'", "re")
    try:
        re = np.asarray(doc["re"], dtype=float).reshape(-1)
        im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float).reshape(-1)
    except (TypeError, ValueError):
        raise FormatError("fields 're'/'im' must be numeric arrays", "re") from None
    if re.shape != im.shape:
        raise FormatError(f"'re' has {re.size} entries but 'im' has {im.size}", "im")
    return re + 1j * im


def ket_from_dict(doc) -> Ket:
    dims = _dims(doc, "dims")
    data = _complex_data(doc)
    if data.size != int(np.prod(dims)):
        raise FormatError(f"{data.size} amplitudes do not match dims {dims}", "dims")
    return Ket(data, dims)


def opr_from_dict(doc) -> Opr:
    if "row_dims" in doc:
        row = _dims(doc, "row_dims")
        col = _dims(doc, "col_dims") if "col_dims" in doc else row
    else:
        row = col = _dims(doc, "dims")
    data = _complex_data(doc)
    r, c = int(np.prod(row)), int(np.prod(col))
    if data.size != r * c:
        raise FormatError(
            f"{data.size} entries do not match a {r}x{c} matrix (row_dims={row}, col_dims={col})",
            "row_dims",
        )
    try:
        return Opr(data.reshape(r, c), row, col)
    except ShapeError as exc:
        raise FormatError(str(exc), "row_dims") from None


def to_dict(obj):
    if isinstance(obj, Ket):
        return {"dims": list(obj.dims), "re": obj.amps.real.tolist(), "im": obj.amps.imag.tolist()}
    if isinstance(obj, Opr):
        flat = obj.entries.reshape(-1)
        return {
            "row_dims": list(obj.row_dims),
            "col_dims": list(obj.col_dims),
            "re": flat.real.tolist(),
            "im": flat.imag.tolist(),
        }
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _parse_text(text):
    rows = []
    header = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            header = line
            continue
        parts = line.split()
        if len(parts) not in (1, 2):
            raise FormatError(f"line {lineno}: expected 're im', got {raw!r}", "re")
        try:
            rows.append(complex(float(parts[0]), float(parts[1]) if len(parts) == 2 else 0.0))
        except ValueError:
            raise FormatError(f"line {lineno}: not a number: {raw!r}", "re") from None
    if header is None:
        raise FormatError("empty file", "dims")
    try:
        if "|" in header:
            left, right = header.split("|", 1)
            return [int(d) for d in left.split()], [int(d) for d in right.split()], np.array(rows)
        return [int(d) for d in header.split()], None, np.array(rows)
    except ValueError:
        raise FormatError(f"bad dimension header {header!r}", "dims") from None


def _load_doc(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}", "input") from None
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"malformed JSON in {path}: {exc.msg}", "input") from None
        if not isinstance(doc, dict):
            raise FormatError("top-level JSON value must be an object", "input")
        return doc
    dims, col, data = _parse_text(text)
    doc = {"re": data.real, "im": data.imag}
    if col is None:
        doc["dims"] = dims
    else:
        doc["row_dims"], doc["col_dims"] = dims, col
    return doc


def load_ket(path) -> Ket:
    return ket_from_dict(_load_doc(path))


def load_opr(path) -> Opr:
    return opr_from_dict(_load_doc(path))


def dump(obj, path):
    Path(path).write_text(json.dumps(to_dict(obj)))
