import csv
import hashlib
import logging
from contextlib import contextmanager
from io import StringIO
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
import scipy.io
import scipy.sparse as sp
from pydantic import ValidationError

from uniexp.exceptions import ArtifactIOError, MatrixParseError, StructuralError
from uniexp.networks.graphs import WeightedGraph
from uniexp.networks.statespace import StateSpaceMap
from uniexp.services.generator import RateMatrix

logger = logging.getLogger(__name__)

MM_BANNER = "%%MatrixMarket"
FLOAT_FORMAT = "%.17g"


@contextmanager
def artifact(path, mode: str = "r") -> Iterator:
    """Open a file, turning OS failures into ArtifactIOError."""
    try:
        with open(path, mode, newline="" if mode in ("w", "a") else None, encoding="utf-8") as handle:
            yield handle
    except OSError as e:
        action = "read" if mode == "r" else "write"
        raise ArtifactIOError(f"cannot {action} {path}: {e.strerror}", {"path": str(path)}) from e


def _numbered_lines(path) -> list[tuple[int, str]]:
    with artifact(path) as handle:
        return [(k, line.strip()) for k, line in enumerate(handle, start=1)]


def file_digest(path) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError as e:
        raise ArtifactIOError(f"cannot read {path}: {e.strerror}", {"path": str(path)}) from e


def format_float(value: float) -> str:
    return FLOAT_FORMAT % value


def load_matrix(path) -> RateMatrix:
    """
    Read a square real coordinate Matrix Market file (1-based indices).

    Raises:
        ArtifactIOError: If the file cannot be read.
        MatrixParseError: On a malformed banner, size line or entry, with its line number.
        StructuralError: On entry-count mismatch, a non-square size, or bad coordinates.
    """
    lines = _numbered_lines(path)
    if not lines or not lines[0][1].startswith(MM_BANNER):
        raise MatrixParseError("missing %%MatrixMarket banner", 1)
    banner = lines[0][1].lower().split()
    if banner[1:3] != ["matrix", "coordinate"] or banner[3:4] not in (["real"], ["integer"]) or banner[4:5] != ["general"]:
        raise MatrixParseError(f"unsupported banner {lines[0][1]!r}; need coordinate real general", 1)

    body = [(k, text) for k, text in lines[1:] if text and not text.startswith("%")]
    if not body:
        raise MatrixParseError("missing size line", len(lines) + 1)
    size_line, size_text = body[0]
    try:
        n_rows, n_cols, nnz = (int(x) for x in size_text.split())
    except ValueError:
        raise MatrixParseError(f"bad size line {size_text!r}", size_line) from None
    if n_rows != n_cols:
        raise StructuralError(f"matrix is not square: {n_rows}x{n_cols}")

    entries = body[1:]
    if len(entries) != nnz:
        raise StructuralError(
            f"entry count mismatch: header declares {nnz}, found {len(entries)}",
            {"declared": nnz, "found": len(entries)},
        )
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    values = np.empty(nnz)
    for k, (number, text) in enumerate(entries):
        parts = text.split()
        try:
            if len(parts) != 3:
                raise ValueError
            rows[k] = int(parts[0]) - 1
            cols[k] = int(parts[1]) - 1
            values[k] = float(parts[2])
        except ValueError:
            raise MatrixParseError(f"bad entry {text!r}", number) from None
    return RateMatrix.from_entries(n_rows, rows, cols, values)


def store_matrix(Q: RateMatrix, path, comment: str = "") -> None:
    """Write Q as Matrix Market coordinate real general, column-major, 17 digits."""
    rows, cols, values = Q.entries()
    coo = sp.coo_matrix((values, (rows, cols)), shape=(Q.d, Q.d))
    text = f"layout {Q.layout}" + (f"\n{comment}" if comment else "")
    try:
        with open(path, "wb") as handle:
            scipy.io.mmwrite(handle, coo, comment=text, field="real", precision=17, symmetry="general")
    except OSError as e:
        raise ArtifactIOError(f"cannot write {path}: {e.strerror}", {"path": str(path)}) from e


def load_vector(path) -> np.ndarray:
    """
    One decimal per line; blank lines are ignored.

    Raises:
        MatrixParseError: On a line that is not a number.
    """
    values = []
    for number, text in _numbered_lines(path):
        if not text:
            continue
        try:
            values.append(float(text))
        except ValueError:
            raise MatrixParseError(f"bad number {text!r}", number) from None
    return np.array(values, dtype=float)


def store_vector(vector: np.ndarray, path) -> None:
    with artifact(path, "w") as handle:
        np.savetxt(handle, np.asarray(vector, dtype=float), fmt=FLOAT_FORMAT)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with artifact(path, "w") as handle:
        emit_csv(handle, header, rows)


def emit_csv(handle, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write CSV rows with floats at 17 significant digits."""
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(x) if isinstance(x, float) else x for x in row])


def store_statespace(smap: StateSpaceMap, path) -> None:
    write_csv(path, ["index", *smap.labels, "coffin"], smap.rows())


def store_graph(G: WeightedGraph, path) -> None:
    """Edge list "u v weight" with 1-based nodes under a seed header comment."""
    with artifact(path, "w") as handle:
        handle.write(f"# seed {G.seed if G.seed is not None else 'none'} nodes {G.n_nodes}\n")
        for u, v, w in G.edges:
            handle.write(f"{u + 1} {v + 1} {w}\n")


def load_graph(path) -> WeightedGraph:
    """
    Read an edge list written by store_graph.

    Raises:
        MatrixParseError: On a malformed header or edge line.
    """
    lines = _numbered_lines(path)
    if not lines or not lines[0][1].startswith("#"):
        raise MatrixParseError("missing '# seed ... nodes ...' header", 1)
    header = lines[0][1].lstrip("#").split()
    try:
        fields = dict(zip(header[::2], header[1::2]))
        n_nodes = int(fields["nodes"])
        seed = None if fields.get("seed", "none") == "none" else int(fields["seed"])
    except (KeyError, ValueError):
        raise MatrixParseError(f"bad graph header {lines[0][1]!r}", 1) from None
    edges = []
    for number, text in lines[1:]:
        if not text or text.startswith("#"):
            continue
        try:
            u, v, w = (int(x) for x in text.split())
        except ValueError:
            raise MatrixParseError(f"bad edge {text!r}", number) from None
        edges.append((min(u, v) - 1, max(u, v) - 1, w))
    try:
        return WeightedGraph(n_nodes=n_nodes, edges=tuple(sorted(edges)), seed=seed)
    except ValidationError as e:
        raise StructuralError(e.errors()[0]["msg"].removeprefix("Value error, ")) from e


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buffer = StringIO()
    emit_csv(buffer, header, rows)
    return buffer.getvalue()
