"""Result files: CSV tables, legacy VTK fields and JSON documents."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

VTK_HEXAHEDRON = 12


def _fmt(v) -> str:
    return repr(float(v))


def write_table(path, columns, rows) -> None:
    """CSV with a header row; floats written with full round-trip precision."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def read_table(path) -> tuple[list, list]:
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [[v if not _is_number(v) else float(v) for v in row] for row in r]
    return header, rows


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _finite(obj):
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and not math.isfinite(float(obj)):
        return None
    return obj


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(_finite(data), indent=2, sort_keys=True, default=_json_default) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def gauss_to_nodes(n_nodes: int, hexes: np.ndarray, element_values: np.ndarray) -> np.ndarray:
    """Average per-element values onto nodes; nan elements are skipped."""
    acc = np.zeros(n_nodes)
    cnt = np.zeros(n_nodes)
    ok = np.isfinite(element_values)
    conn = hexes[ok]
    np.add.at(acc, conn, np.repeat(element_values[ok][:, None], conn.shape[1], axis=1))
    np.add.at(cnt, conn, 1.0)
    out = np.full(n_nodes, np.nan)
    np.divide(acc, cnt, out=out, where=cnt > 0)
    return out


def write_vtk(path, nodes: np.ndarray, hexes: np.ndarray, point_data: dict | None = None,
              cell_data: dict | None = None, title: str = "windfound") -> None:
    """Legacy ASCII VTK unstructured grid of hex8 cells.

    Scalars of shape (n,) and vectors of shape (n, 3) are supported; nan is
    written as 0 with a companion ``<name>_defined`` mask for scalars.
    """
    n, ne = len(nodes), len(hexes)
    lines = ["# vtk DataFile Version 3.0", title[:255], "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {n} double"]
    lines += [" ".join(_fmt(c) for c in p) for p in nodes]
    lines.append(f"CELLS {ne} {ne * 9}")
    lines += ["8 " + " ".join(str(int(i)) for i in h) for h in hexes]
    lines.append(f"CELL_TYPES {ne}")
    lines += [str(VTK_HEXAHEDRON)] * ne

    def block(kind, count, data):
        if not data:
            return
        lines.append(f"{kind} {count}")
        for name, values in data.items():
            values = np.asarray(values, dtype=float)
            if values.ndim == 2:
                lines.append(f"VECTORS {name} double")
                lines.extend(" ".join(_fmt(c) for c in np.nan_to_num(v)) for v in values)
                continue
            defined = np.isfinite(values)
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(_fmt(v) for v in np.where(defined, values, 0.0))
            if not defined.all():
                lines.append(f"SCALARS {name}_defined int 1")
                lines.append("LOOKUP_TABLE default")
                lines.extend(str(int(d)) for d in defined)

    block("POINT_DATA", n, point_data)
    block("CELL_DATA", ne, cell_data)
    Path(path).write_text("\n".join(lines) + "\n")


def read_vtk(path) -> dict:
    """Parse files written by :func:`write_vtk`."""
    tokens = Path(path).read_text().split("\n")
    i = 4
    out = {"point_data": {}, "cell_data": {}}
    section = None
    while i < len(tokens):
        line = tokens[i].strip()
        i += 1
        if not line:
            continue
        head = line.split()
        if head[0] == "POINTS":
            n = int(head[1])
            out["nodes"] = np.array([[float(x) for x in tokens[i + k].split()] for k in range(n)])
            i += n
        elif head[0] == "CELLS":
            ne = int(head[1])
            out["hexes"] = np.array([[int(x) for x in tokens[i + k].split()[1:]] for k in range(ne)])
            i += ne
        elif head[0] == "CELL_TYPES":
            i += int(head[1])
        elif head[0] in ("POINT_DATA", "CELL_DATA"):
            section = ("point_data" if head[0] == "POINT_DATA" else "cell_data", int(head[1]))
        elif head[0] == "SCALARS":
            name, count = head[1], section[1]
            i += 1  # lookup table
            cast = int if head[2] == "int" else float
            out[section[0]][name] = np.array([cast(tokens[i + k]) for k in range(count)])
            i += count
        elif head[0] == "VECTORS":
            name, count = head[1], section[1]
            out[section[0]][name] = np.array([[float(x) for x in tokens[i + k].split()] for k in range(count)])
            i += count
    return out
