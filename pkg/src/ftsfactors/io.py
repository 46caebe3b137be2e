"""File formats: grid and panel CSV, and deterministic JSON documents.

Grid CSV: a single column ``u`` (header required), one abscissa per row.
Panel CSV: one row per (time, series) pair with columns
``t,series,v1..vG``; ``t`` and ``series`` are 1-based and consecutive, and
G must match the grid the panel is read against.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np

from .curves import CurvePanel, Grid

PathLike = Union[str, Path]


def _fmt(x: float) -> str:
    return repr(float(x))


def write_grid_csv(grid: Grid, path: PathLike) -> None:
    lines = ["u"] + [_fmt(u) for u in grid.points]
    Path(path).write_text("\n".join(lines) + "\n")


def read_grid_csv(path: PathLike) -> Grid:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != "u":
        raise ValueError(f"{path}:1: grid file must start with the header 'u'")
    points = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            points.append(float(line))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: not a number: {line!r}") from exc
    if len(points) < 2:
        raise ValueError(f"{path}: a grid needs at least two points")
    return Grid(np.asarray(points))


def write_panel_csv(panel: CurvePanel, path: PathLike) -> None:
    G = panel.n_points
    header = "t,series," + ",".join(f"v{g + 1}" for g in range(G))
    lines = [header]
    for t in range(panel.n_obs):
        for j in range(panel.n_series):
            row = panel.values[t, j]
            lines.append(f"{t + 1},{j + 1}," + ",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_panel_csv(path: PathLike, grid: Grid) -> CurvePanel:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty panel file")
    header = [h.strip() for h in lines[0].split(",")]
    expected = ["t", "series"] + [f"v{g + 1}" for g in range(len(header) - 2)]
    if header != expected or len(header) < 3:
        raise ValueError(
            f"{path}:1: header must be 't,series,v1..vG', got {lines[0]!r}"
        )
    G = len(header) - 2
    if G != grid.n_points:
        raise ValueError(
            f"{path}: panel rows carry {G} grid values but the grid has "
            f"{grid.n_points} points"
        )
    records = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != G + 2:
            raise ValueError(
                f"{path}:{lineno}: expected {G + 2} fields, got {len(parts)}"
            )
        try:
            t = int(parts[0])
            series = int(parts[1])
            values = [float(v) for v in parts[2:]]
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from exc
        if (t, series) in records:
            raise ValueError(f"{path}:{lineno}: duplicate (t, series) = ({t}, {series})")
        records[(t, series)] = values
    if not records:
        raise ValueError(f"{path}: no data rows")
    times = sorted({t for t, _ in records})
    series_ids = sorted({s for _, s in records})
    if times != list(range(1, len(times) + 1)):
        raise ValueError(f"{path}: time indices must be 1-based and consecutive")
    if series_ids != list(range(1, len(series_ids) + 1)):
        raise ValueError(f"{path}: series indices must be 1-based and consecutive")
    values = np.empty((len(times), len(series_ids), G))
    for t in times:
        for s in series_ids:
            if (t, s) not in records:
                raise ValueError(f"{path}: missing row for (t, series) = ({t}, {s})")
            values[t - 1, s - 1] = records[(t, s)]
    return CurvePanel(values, grid)


def dump_json(obj, path: PathLike) -> None:
    """Write a JSON document with a stable key order (byte-reproducible)."""
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def load_json(path: PathLike):
    return json.loads(Path(path).read_text())
