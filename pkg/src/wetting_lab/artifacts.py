"""File artifact writers: CSV tables, PGM snapshot rasters, text reports.

All writers are atomic (write to a temp file in the target directory, then
os.replace), so an interrupted run never leaves a truncated final artifact.
Floats in CSVs use 17 significant digits, which round-trips doubles exactly.
"""

import os
import tempfile


def _atomic_write(path, text):
    path = os.fspath(path)
    dirname = os.path.dirname(path) or "."
    os.makedirs(dirname, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=dirname, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_text(path, text):
    _atomic_write(path, text)


def format_cell(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_pgm(path, grid):
    """Write a +-1 spin grid as a P2 (ASCII) PGM with maxval 1.

    Plus spins map to 0 (black), minus spins to 1 (white)."""
    h = len(grid)
    w = len(grid[0])
    lines = ["P2", f"{w} {h}", "1"]
    for row in grid:
        lines.append(" ".join("0" if v > 0 else "1" for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def read_pgm(path):
    """Inverse of write_pgm; returns a list of +-1 rows."""
    with open(path) as fh:
        tokens = []
        for line in fh:
            line = line.split("#", 1)[0]
            tokens.extend(line.split())
    if tokens[0] != "P2":
        raise ValueError("not an ASCII PGM file")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 1:
        raise ValueError("expected a 2-level raster")
    vals = [int(t) for t in tokens[4:]]
    if len(vals) != w * h:
        raise ValueError("pixel count mismatch")
    return [
        [1 if v == 0 else -1 for v in vals[r * w:(r + 1) * w]]
        for r in range(h)
    ]
