"""MatrixMarket and CSV helpers. All text output is UTF-8 with LF endings."""
import csv
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse


def read_matrix(path):
    """Read a MatrixMarket file (array or coordinate) as a dense array."""
    M = scipy.io.mmread(str(path))
    if scipy.sparse.issparse(M):
        M = M.toarray()
    return np.asarray(M, dtype=float)


def write_matrix(path, M):
    """Write a dense matrix in MatrixMarket array format, round-trip precision."""
    scipy.io.mmwrite(str(path), np.asarray(M, dtype=float), precision=17)


def write_coordinate(path, M):
    """Write the nonzeros of ``M`` in MatrixMarket coordinate format."""
    M = np.asarray(M, dtype=float)
    field = "integer" if np.all(M == np.round(M)) else "real"
    scipy.io.mmwrite(str(path), scipy.sparse.coo_matrix(M), field=field,
                     symmetry="general", precision=17)


def write_csv(path, header, rows):
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
