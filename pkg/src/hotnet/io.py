"""JSON loading and atomic, deterministic writing."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .density import Density
from .graph import MetricGraph
from .payoff import Profile

__all__ = ["read_json", "dumps", "write_json", "load_graph", "load_density", "load_profile"]


def read_json(path) -> object:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def dumps(data) -> str:
    """Canonical text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, data) -> Path:
    """Write ``data`` atomically (temporary file in the same directory, then rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(dumps(data))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load_graph(path, *, contract: bool = False) -> MetricGraph:
    return MetricGraph.from_json(read_json(path), contract=contract)


def load_density(path, graph: MetricGraph) -> Density:
    return Density.from_json(graph, read_json(path))


def load_profile(path, graph: MetricGraph) -> Profile:
    data = read_json(path)
    if isinstance(data, dict):
        data = data["profile"]
    return Profile.from_json(graph, data)
