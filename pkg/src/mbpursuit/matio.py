"""Plain-text matrix format shared by the CLI tools.

First line: ``m n``.  Then m lines of n whitespace-separated complex entries
written as ``re{sign}imj`` (for example ``0.5-0.25j``).  Writers emit 17
significant digits; readers accept arbitrary precision.
"""

import numpy as np

from . import numlin


def format_entry(z):
    z = complex(z)
    return f"{z.real:.17g}{z.imag:+.17g}j"


def save_matrix(path, M):
    M = numlin.as_complex_matrix(M)
    m, n = M.shape
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{m} {n}\n")
        for i in range(m):
            fh.write(" ".join(format_entry(z) for z in M[i]) + "\n")


def load_matrix(path):
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: expected 'm n' on the first line")
        m, n = int(header[0]), int(header[1])
        rows = []
        for i in range(m):
            tokens = fh.readline().split()
            if len(tokens) != n:
                raise ValueError(f"{path}: row {i} has {len(tokens)} entries, expected {n}")
            rows.append([complex(tok) for tok in tokens])
    return numlin.as_complex_matrix(np.array(rows, dtype=complex))
