"""Matrix Market coordinate files and convergence-history CSV."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .history import SolverHistory
from .linalg import CsrMatrix

CSV_COLUMNS = ("iteration", "relative_residual_2norm", "alpha", "beta")


class MatrixMarketError(ValueError):
    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


def read_matrix_market(path) -> CsrMatrix:
    """Read a ``coordinate real|integer general|symmetric`` Matrix Market file.

    Indices on disk are 1-based. Symmetric files are expanded to general
    storage; duplicate entries are summed.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError(path, 1, "empty file")
    header = lines[0].split()
    if len(header) != 5 or header[0] != "%%MatrixMarket" or header[1].lower() != "matrix":
        raise MatrixMarketError(path, 1, "expected '%%MatrixMarket matrix coordinate real general|symmetric'")
    fmt, field, symmetry = (h.lower() for h in header[2:])
    if fmt != "coordinate":
        raise MatrixMarketError(path, 1, f"unsupported format {fmt!r}")
    if field not in ("real", "integer"):
        raise MatrixMarketError(path, 1, f"unsupported field {field!r}")
    if symmetry not in ("general", "symmetric"):
        raise MatrixMarketError(path, 1, f"unsupported symmetry {symmetry!r}")

    body = [(i + 1, line) for i, line in enumerate(lines[1:], start=1) if line.strip() and not line.lstrip().startswith("%")]
    if not body:
        raise MatrixMarketError(path, len(lines), "missing size line")
    lineno, size_line = body[0]
    try:
        n_rows, n_cols, nnz = (int(t) for t in size_line.split())
    except ValueError:
        raise MatrixMarketError(path, lineno, f"bad size line {size_line!r}") from None
    if n_rows < 0 or n_cols < 0 or nnz < 0:
        raise MatrixMarketError(path, lineno, "negative size")
    if symmetry == "symmetric" and n_rows != n_cols:
        raise MatrixMarketError(path, lineno, "symmetric matrix must be square")
    entries = body[1:]
    if len(entries) != nnz:
        where = entries[-1][0] if entries else lineno
        raise MatrixMarketError(path, where, f"expected {nnz} entries, found {len(entries)}")

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    for e, (lineno, line) in enumerate(entries):
        parts = line.split()
        if len(parts) != 3:
            raise MatrixMarketError(path, lineno, f"expected 'row col value', got {line!r}")
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise MatrixMarketError(path, lineno, f"cannot parse entry {line!r}") from None
        if not (1 <= i <= n_rows and 1 <= j <= n_cols):
            raise MatrixMarketError(path, lineno, f"index ({i}, {j}) out of range for {n_rows}x{n_cols}")
        if not math.isfinite(v):
            raise MatrixMarketError(path, lineno, "non-finite value")
        rows[e], cols[e], vals[e] = i - 1, j - 1, v

    if symmetry == "symmetric":
        off = rows != cols
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, vals[off]]),
        )
    return CsrMatrix.from_coo(n_rows, n_cols, rows, cols, vals)


def write_matrix_market(A: CsrMatrix, path, comment=None):
    path = Path(path)
    n_rows, n_cols = A.shape
    row_of = np.repeat(np.arange(n_rows), np.diff(A.row_offsets))
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{n_rows} {n_cols} {A.nnz}\n")
        for i, j, v in zip(row_of, A.col_indices, A.values):
            fh.write(f"{i + 1} {j + 1} {v:.17g}\n")


def _fmt(v):
    return "" if v is None or math.isnan(v) else f"{v:.17g}"


def emit_history_csv(history: SolverHistory, path):
    """One row per iteration ``k = 0..K``; ``eta`` only for smoothed runs."""
    path = Path(path)
    has_eta = bool(history.eta)
    columns = CSV_COLUMNS + (("eta",) if has_eta else ())
    rel = history.relative_residuals
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for k in range(len(rel)):
            row = [
                str(k),
                _fmt(float(rel[k])),
                _fmt(history.alpha[k] if k < len(history.alpha) else None),
                _fmt(history.beta[k] if k < len(history.beta) else None),
            ]
            if has_eta:
                row.append(_fmt(history.eta[k] if k < len(history.eta) else None))
            writer.writerow(row)


def read_history_csv(path) -> dict[str, np.ndarray]:
    """Parse an emitted CSV back into float columns (blank cells become nan)."""
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        names = reader.fieldnames or []
    return {name: np.array([float(r[name]) if r[name] != "" else math.nan for r in rows]) for name in names}


def read_vector(path) -> np.ndarray:
    """Whitespace- or newline-separated floats (``%``/``#`` lines skipped)."""
    values = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line[0] in "%#":
            continue
        values.extend(float(t) for t in line.replace(",", " ").split())
    return np.array(values)
