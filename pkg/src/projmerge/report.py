"""Report envelopes, result schemas, CSV projection tables and SVG heatmaps."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import jsonschema
import numpy as np

from . import __version__
from .grid import AxisSubset, PartLabeling, ProjectionEntry, presence_maps

_FRACTION = {"type": "string", "pattern": r"^-?\d+(/\d+)?$"}
_AXES = {"type": "array", "items": {"type": "integer", "minimum": 0}}
_ENTRY = {
    "type": "object",
    "required": ["part", "axes", "size", "fraction", "fraction_float"],
    "properties": {
        "part": {"type": "integer", "minimum": 0},
        "axes": _AXES,
        "size": {"type": "integer", "minimum": 0},
        "fraction": _FRACTION,
        "fraction_float": {"type": "number"},
    },
}
_PARTITION = {
    "type": "object",
    "required": ["t", "n", "c", "labels"],
    "properties": {
        "t": {"type": "integer", "minimum": 1},
        "n": {"type": "integer", "minimum": 1},
        "c": {"type": "integer", "minimum": 1},
        "labels": {"type": "string"},
    },
}
_MERGER = {
    "type": "object",
    "required": ["n_vals", "t", "d_vals", "m_vals", "table"],
    "properties": {k: {"type": "integer", "minimum": 1} for k in ("n_vals", "t", "d_vals", "m_vals")}
    | {"table": {"type": "string"}},
}

SCHEMAS = {
    "verify-scheme": {
        "type": "object",
        "required": ["scheme", "n", "t", "c", "s", "projections", "max", "bound", "verdict", "notes"],
        "properties": {
            "projections": {"type": "array", "items": _ENTRY},
            "max": _ENTRY,
            "bound": {
                "type": "object",
                "required": ["kind", "fraction", "size"],
                "properties": {"fraction": {"type": "number"}, "size": {"type": "integer"}},
            },
            "verdict": {"enum": ["TIGHT", "ABOVE_BOUND", "VIOLATION"]},
            "notes": {"type": "array", "items": {"type": "string"}},
            "figures": {"type": "array", "items": {"type": "string"}},
        },
    },
    "search": {
        "type": "object",
        "required": ["minmax_value", "states_visited", "certified", "s", "witness", "lower_bound", "mode"],
        "properties": {
            "minmax_value": {"type": "integer", "minimum": 0},
            "states_visited": {"type": "integer", "minimum": 0},
            "certified": {"type": "boolean"},
            "witness": _PARTITION,
            "lower_bound": {"type": "integer", "minimum": 0},
        },
    },
    "solve-constants": {
        "type": "object",
        "required": ["constants", "published", "notes", "banner"],
        "properties": {
            "constants": {
                "type": "object",
                "required": ["eta0", "u_of_eta0", "lambda_star", "u_golden", "solver_iterations"],
            },
            "notes": {"type": "array", "items": {"type": "string"}},
            "banner": {"type": ["string", "null"]},
        },
    },
    "render": {
        "type": "object",
        "required": ["files"],
        "properties": {"files": {"type": "array", "items": {"type": "string"}}},
    },
    "merger-eval": {
        "type": "object",
        "required": ["mode", "verdict"],
        "properties": {"verdict": {"enum": ["passed", "failed", "unknown"]}},
    },
    "abnormal": {
        "type": "object",
        "required": ["kind"],
        "properties": {"kind": {"enum": ["conductor", "merger-slices"]}},
    },
    "make-partition": {
        "type": "object",
        "required": ["path", "partition"],
        "properties": {"partition": _PARTITION},
    },
    "find-extractor": {
        "type": "object",
        "required": ["found", "tested", "candidates", "exhaustive"],
        "properties": {"table": {"anyOf": [_MERGER, {"type": "null"}]}},
    },
    "nonexistence": {
        "type": "object",
        "required": ["nonexistent", "tables_checked", "total_tables"],
    },
}

ENVELOPE_SCHEMA = {
    "type": "object",
    "required": ["command", "input", "results", "version", "duration_s"],
    "properties": {
        "command": {"type": "string"},
        "input": {"type": "object"},
        "results": {"type": "object"},
        "version": {"type": "string"},
        "duration_s": {"type": "number", "minimum": 0},
    },
}


def schema_for(command: str) -> dict:
    return SCHEMAS["search"] if command.startswith("search-") else SCHEMAS[command]


@dataclass
class ReportEnvelope:
    command: str
    input: dict
    results: dict
    version: str = __version__
    duration_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "input": self.input,
            "results": self.results,
            "version": self.version,
            "duration_s": self.duration_s,
        }

    def validate(self) -> None:
        data = self.to_dict()
        jsonschema.validate(data, ENVELOPE_SCHEMA)
        jsonschema.validate(data["results"], schema_for(self.command))


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        self.elapsed = 0.0
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        return False


def projection_csv(entries: Sequence[ProjectionEntry]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["part", "axes", "size", "fraction", "fraction_float"])
    for e in entries:
        row = e.to_dict()
        writer.writerow([row["part"], "".join(map(str, row["axes"])), row["size"], row["fraction"], f"{row['fraction_float']:.9f}"])
    return buf.getvalue()


# categorical colours for presence bitmasks; index = bitmask of parts present
_BASE_COLORS = [
    "#ffffff", "#4e79a7", "#e15759", "#8c6bb1", "#59a14f", "#76b7b2", "#edc948", "#9c755f",
    "#f28e2b", "#b07aa1", "#ff9da7", "#bab0ac", "#86bcb6", "#d37295", "#a0cbe8", "#2f4b7c",
]


def _palette(c: int) -> list:
    import matplotlib

    count = 1 << c
    if count <= len(_BASE_COLORS):
        return _BASE_COLORS[:count]
    cmap = matplotlib.colormaps["turbo"]
    return ["#ffffff"] + [matplotlib.colors.to_hex(cmap(i / (count - 2))) for i in range(count - 1)]


def render_heatmap(pres: np.ndarray, c: int, axes: AxisSubset, path: Path, title: str = "") -> Path:
    """Write one SVG heatmap of a 2-dim presence map; colours encode the set of parts present."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.colors import ListedColormap
    from matplotlib.patches import Patch

    colors = _palette(c)
    names = "xyzwvu"
    with matplotlib.rc_context({"svg.hashsalt": "projmerge", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(5, 5))
        n = pres.shape[0]
        # row index = first axis; draw it on the horizontal axis
        ax.imshow(
            pres.T.astype(np.int64),
            cmap=ListedColormap(colors),
            vmin=-0.5,
            vmax=len(colors) - 0.5,
            origin="lower",
            interpolation="nearest",
            extent=(-0.5, n - 0.5, -0.5, n - 0.5),
        )
        a, b = axes.indices
        ax.set_xlabel(names[a] if a < len(names) else f"axis {a}")
        ax.set_ylabel(names[b] if b < len(names) else f"axis {b}")
        if title:
            ax.set_title(title)
        present = sorted(int(v) for v in np.unique(pres))
        handles = [
            Patch(facecolor=colors[m], edgecolor="black", label="{" + ",".join(str(i) for i in range(c) if m >> i & 1) + "}")
            for m in present
        ]
        ax.legend(handles=handles, loc="upper left", bbox_to_anchor=(1.02, 1.0), title="parts", fontsize="small")
        fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
        plt.close(fig)
    return path


def parse_axes(text: str, t: int) -> AxisSubset:
    """'xy', 'xz', '01', '0,2' and similar spellings of an axis pair."""
    letters = {"x": 0, "y": 1, "z": 2, "w": 3}
    text = text.strip().lower()
    if "," in text:
        idx = [int(v) for v in text.split(",") if v]
    elif text.isdigit():
        idx = [int(ch) for ch in text]
    else:
        idx = [letters[ch] for ch in text]
    axes = AxisSubset(tuple(idx))
    axes.check(t)
    return axes


def render_partition(p: PartLabeling, axes_list: Sequence[AxisSubset], out_dir: Path, stem: str) -> list:
    """One SVG per requested axis pair; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    maps = presence_maps(p, list(axes_list))
    paths = []
    for axes in axes_list:
        if axes.s != 2:
            raise ValueError(f"heatmaps need axis pairs, got {axes}")
        name = "".join(str(i) for i in axes.indices)
        path = out_dir / f"{stem}_proj{name}.svg"
        render_heatmap(maps[axes], p.c, axes, path, title=f"{stem} N={p.dims.side}")
        paths.append(path)
    return paths
