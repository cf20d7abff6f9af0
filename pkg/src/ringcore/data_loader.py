"""Utilities for loading datasets, constraints and coresets, and for writing results."""

from __future__ import annotations

import io
import json
import re
from pathlib import Path
from typing import Any

import networkx as nx
import numpy as np
import pandas as pd
import requests
from pydantic import ValidationError

from .assignment import AssignmentConstraint
from .config import Settings, resolve_settings
from .exceptions import (
    DataSourceError,
    HandleMismatchError,
    InvalidHandleError,
    ParseError,
    TupleLengthError,
)
from .logging_utils import configure_logging
from .metric_core import (
    EuclideanBackend,
    FrechetBackend,
    GraphBackend,
    WassersteinBackend,
    WeightedPointSet,
)

LOGGER = configure_logging(__name__)

COORD_COLUMN = re.compile(r"^x(\d+)$")
TOKENIZER_LINE = re.compile(r"line (\d+)")


def _is_remote(source: str | Path) -> bool:
    return str(source).startswith(("http://", "https://"))


def fetch_remote_text(url: str, settings: Settings | None = None) -> str:
    """Fetch a remote file, raising :class:`DataSourceError` on failure."""

    cfg = resolve_settings(settings)
    LOGGER.info("Fetching remote input from %s", url)
    try:
        response = requests.get(url, timeout=cfg.http_timeout)
        response.raise_for_status()
    except requests.RequestException as exc:
        LOGGER.error("Failed to download %s: %s", url, exc)
        raise DataSourceError(f"Failed to download {url}") from exc
    return response.text


def read_text(source: str | Path, settings: Settings | None = None) -> str:
    """Return the contents of a local path or an http(s) URL."""

    if _is_remote(source):
        return fetch_remote_text(str(source), settings)
    path = Path(source)
    if not path.exists():
        raise DataSourceError(f"Expected input file {path} was not found.")
    LOGGER.debug("Reading %s", path)
    return path.read_text(encoding="utf-8")


def _load_json(source: str | Path, settings: Settings | None) -> Any:
    text = read_text(source, settings)
    if not text.strip():
        raise ParseError(f"{source}: empty input", line=1, column=1)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: {exc.msg}", line=exc.lineno, column=exc.colno) from exc


def read_points_frame(source: str | Path, settings: Settings | None = None) -> pd.DataFrame:
    text = read_text(source, settings)
    try:
        df = pd.read_csv(io.StringIO(text), dtype={"groups": str})
    except pd.errors.EmptyDataError as exc:
        raise ParseError(f"{source}: empty input", line=1) from exc
    except pd.errors.ParserError as exc:
        match = TOKENIZER_LINE.search(str(exc))
        raise ParseError(f"{source}: malformed CSV", line=int(match.group(1)) if match else None) from exc
    # pandas drops blank lines before numbering rows; keep the file line of each row.
    filled = [number for number, line in enumerate(text.splitlines(), start=1) if line.strip()]
    if len(filled) == len(df) + 1:
        df.attrs["line_numbers"] = filled[1:]
    return df


def _line_of(df: pd.DataFrame, row: int) -> int:
    lines = df.attrs.get("line_numbers")
    return int(lines[row]) if lines is not None else row + 2


def _numeric(df: pd.DataFrame, column: str, source: str | Path) -> np.ndarray:
    values = pd.to_numeric(df[column], errors="coerce")
    bad = np.flatnonzero(values.isna().to_numpy())
    if bad.size:
        raise ParseError(
            f"{source}: non-numeric value in column {column!r}",
            line=_line_of(df, int(bad[0])),
            column=df.columns.get_loc(column) + 1,
        )
    return values.to_numpy(dtype=float)


def _split_groups(value: Any) -> frozenset[str]:
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return frozenset()
    return frozenset(part.strip() for part in str(value).split(";") if part.strip())


def points_from_frame(df: pd.DataFrame, source: str | Path = "<frame>") -> WeightedPointSet:
    """Build a Euclidean point set from ``x1..xd[, weight][, groups]`` columns."""

    dims = sorted(int(m.group(1)) for c in df.columns if (m := COORD_COLUMN.match(str(c))))
    required = {f"x{i}" for i in range(1, (max(dims) if dims else 1) + 1)}
    missing = required.difference(df.columns)
    if missing:
        raise ParseError(f"{source}: missing columns: {', '.join(sorted(missing))}", line=1)
    if df.empty:
        raise ParseError(f"{source}: no points", line=2)
    coords = np.column_stack([_numeric(df, f"x{i}", source) for i in range(1, len(required) + 1)])
    weights = _numeric(df, "weight", source) if "weight" in df.columns else None
    labels = [_split_groups(v) for v in df["groups"]] if "groups" in df.columns else None
    if weights is not None and np.any(weights < 0):
        row = int(np.flatnonzero(weights < 0)[0])
        column = df.columns.get_loc("weight") + 1
        raise ParseError(f"{source}: negative weight", line=_line_of(df, row), column=column)
    return WeightedPointSet.from_backend(EuclideanBackend(coords), weights, labels)


def load_euclidean_csv(source: str | Path, settings: Settings | None = None) -> WeightedPointSet:
    return points_from_frame(read_points_frame(source, settings), source)


def _parse_number(token: str, kind: type, source: str | Path, line: int, column: int):
    try:
        return kind(token)
    except ValueError as exc:
        raise ParseError(f"{source}: cannot read {token!r}", line=line, column=column) from exc


def load_graph(
    edges: str | Path,
    points: str | Path | None = None,
    settings: Settings | None = None,
) -> WeightedPointSet:
    """Edge list ``u v w`` per line; optional points file ``id [weight]`` per line."""

    cfg = resolve_settings(settings)
    graph = nx.Graph()
    for lineno, raw in enumerate(read_text(edges, cfg).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise ParseError(f"{edges}: expected 'u v w', got {len(tokens)} fields", line=lineno, column=1)
        u = _parse_number(tokens[0], int, edges, lineno, 1)
        v = _parse_number(tokens[1], int, edges, lineno, 2)
        w = _parse_number(tokens[2], float, edges, lineno, 3)
        if u < 0 or v < 0:
            raise ParseError(f"{edges}: vertex ids must be nonnegative", line=lineno, column=1)
        if not np.isfinite(w) or w < 0:
            raise ParseError(f"{edges}: edge weight must be nonnegative", line=lineno, column=3)
        graph.add_edge(u, v, weight=w)
    if graph.number_of_nodes() == 0:
        raise ParseError(f"{edges}: empty input", line=1)
    backend = GraphBackend(graph, cfg.graph_cache_size)

    if points is None:
        P = WeightedPointSet.from_backend(backend)
    else:
        vertices, weights = [], []
        for lineno, raw in enumerate(read_text(points, cfg).splitlines(), start=1):
            tokens = raw.split("#", 1)[0].split()
            if not tokens:
                continue
            if len(tokens) > 2:
                raise ParseError(f"{points}: expected 'id [weight]'", line=lineno, column=3)
            vertex = _parse_number(tokens[0], int, points, lineno, 1)
            if vertex not in graph:
                raise ParseError(f"{points}: vertex {vertex} is not in the graph", line=lineno, column=1)
            vertices.append(vertex)
            weights.append(_parse_number(tokens[1], float, points, lineno, 2) if len(tokens) == 2 else 1.0)
        if not vertices:
            raise ParseError(f"{points}: empty input", line=1)
        P = WeightedPointSet(backend, backend.handles_of(vertices), np.asarray(weights))
    backend.check_connected(P.handles)
    LOGGER.info("Loaded graph with %d vertices, %d edges, %d points", backend.size, graph.number_of_edges(), len(P))
    return P


def _payload_items(payload: Any, key: str, source: str | Path) -> tuple[list, list | None]:
    if isinstance(payload, dict):
        if key not in payload:
            raise ParseError(f"{source}: missing key {key!r}")
        return payload[key], payload.get("weights")
    return payload, None


def load_tuples(
    source: str | Path, p: float = 1.0, ell: int | None = None, settings: Settings | None = None
) -> WeightedPointSet:
    """JSON array of l-point tuples (or ``{"tuples": [...], "weights": [...]}``)."""

    items, weights = _payload_items(_load_json(source, settings), "tuples", source)
    if not isinstance(items, list) or not items:
        raise ParseError(f"{source}: expected a nonempty array of tuples")
    lengths = {len(t) for t in items}
    if len(lengths) != 1 or (ell is not None and lengths != {ell}):
        raise TupleLengthError(f"{source}: tuple lengths {sorted(lengths)} (expected {ell or 'one length'})")
    return WeightedPointSet.from_backend(WassersteinBackend(items, p), weights)


def load_curves(source: str | Path, m_cap: int | None = None, settings: Settings | None = None) -> WeightedPointSet:
    """JSON array of polylines (or ``{"curves": [...], "weights": [...]}``)."""

    items, weights = _payload_items(_load_json(source, settings), "curves", source)
    if not isinstance(items, list) or not items:
        raise ParseError(f"{source}: expected a nonempty array of curves")
    return WeightedPointSet.from_backend(FrechetBackend(items, m_cap), weights)


def load_constraint(source: str | Path, settings: Settings | None = None) -> AssignmentConstraint:
    payload = _load_json(source, settings)
    try:
        return AssignmentConstraint.model_validate(payload)
    except ValidationError as exc:
        raise ParseError(f"{source}: invalid constraint: {exc.errors()[0]['msg']}") from exc


def load_coreset(
    source: str | Path, dataset: WeightedPointSet, settings: Settings | None = None
) -> tuple[WeightedPointSet, dict[str, Any]]:
    """Read a coreset JSON written by ``build`` and bind it to ``dataset``'s backend."""

    payload = _load_json(source, settings)
    if not isinstance(payload, dict) or "points" not in payload or "weights" not in payload:
        raise ParseError(f"{source}: coreset JSON needs 'points' and 'weights'")
    backend_info = payload.get("backend", {})
    if backend_info and (
        backend_info.get("kind") != dataset.backend.kind.value
        or backend_info.get("size") != dataset.backend.size
    ):
        raise HandleMismatchError(f"{source}: coreset was built on a different dataset ({backend_info})")
    handles = np.asarray(payload["points"], dtype=np.int64)
    if not np.isin(handles, dataset.handles).all():
        raise HandleMismatchError(f"{source}: coreset references points outside the dataset")
    groups = payload.get("groups")
    labels = [frozenset(g) for g in groups] if groups is not None else None
    try:
        S = WeightedPointSet(dataset.backend, handles, np.asarray(payload["weights"], dtype=float), labels)
    except InvalidHandleError as exc:
        raise HandleMismatchError(str(exc)) from exc
    return S, payload


def write_json(payload: Any, path: str | Path) -> Path:
    """Write ``payload`` as JSON; floats use the shortest round-trip repr."""

    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    LOGGER.info("Wrote %s", target)
    return target


def coreset_frame(points: WeightedPointSet, provenance: list[str]) -> pd.DataFrame:
    frame = pd.DataFrame({"handle": points.handles, "weight": points.weights, "provenance": provenance})
    if isinstance(points.backend, EuclideanBackend):
        coords = points.backend.coords[points.handles]
        for i in range(coords.shape[1]):
            frame[f"x{i + 1}"] = coords[:, i]
    elif isinstance(points.backend, GraphBackend):
        frame["vertex"] = [points.backend.vertex_of(h) for h in points.handles]
    if points.group_labels is not None:
        frame["groups"] = [";".join(sorted(g)) for g in points.group_labels]
    return frame


def write_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(target, index=False, float_format="%.17g")
    LOGGER.info("Wrote %s", target)
    return target
