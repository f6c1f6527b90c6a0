"""Deterministic JSON/CSV output and matplotlib figures for CLI runs."""

from __future__ import annotations

import csv
import json
import math
import os
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_SEED = 12345
_MARK = "@@f17@@"
_MARK_RE = re.compile('"' + _MARK + r"([^\"]*)" + '"')


@dataclass
class RunConfig:
    """Everything that determines a run; embedded in its report."""

    command: str
    model: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    out: str | None = None
    tolerances: dict = field(default_factory=dict)
    threads: int = 1
    seed: int = DEFAULT_SEED

    def to_dict(self) -> dict:
        return asdict(self)


def threads_from_env(default: int = 1) -> int:
    """Parallelism cap from ``FERMI_KINETICS_THREADS``."""
    raw = os.environ.get("FERMI_KINETICS_THREADS", "")
    try:
        val = int(raw)
    except ValueError:
        return default
    return max(1, val)


def _format_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    out = format(x, ".17g")
    if not any(c in out for c in ".eE"):
        out += ".0"
    return out


def _prepare(obj):
    if isinstance(obj, dict):
        return {str(k): _prepare(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_prepare(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _prepare(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _MARK + _format_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return [_prepare(float(obj.real)), _prepare(float(obj.imag))]
    if hasattr(obj, "to_dict"):
        return _prepare(obj.to_dict())
    return obj


def dumps(obj) -> str:
    """JSON with sorted keys and every float at 17 significant digits."""
    text = json.dumps(_prepare(obj), sort_keys=True, indent=2, ensure_ascii=False)
    return _MARK_RE.sub(lambda m: m.group(1), text) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def write_csv(path, header, rows) -> Path:
    """Header row, comma separated, UTF-8, LF line endings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_format_float(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


def read_wfield_csv(path, dim: int, L: int) -> np.ndarray:
    """Occupation table from rows ``i_1, ..., i_d, w`` with a header row."""
    out = np.full((L,) * dim, np.nan)
    with open(path, encoding="utf-8", newline="") as fh:
        rows = csv.reader(fh)
        next(rows)
        for row in rows:
            if not row:
                continue
            idx = tuple(int(x) % L for x in row[:dim])
            out[idx] = float(row[dim])
    if np.isnan(out).any():
        raise ValueError("occupation file does not cover the grid")
    return out


def sibling(path, suffix: str) -> Path:
    """Path next to ``path`` with its suffix replaced."""
    path = Path(path)
    return path.with_name(path.stem + suffix)


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def figure_bound(path, sweep, measured, target, title: str, xlabel: str) -> Path:
    """Measured quantity against its envelope, and their ratio."""
    plt = _pyplot()
    fig, (a, b) = plt.subplots(1, 2, figsize=(9, 3.5))
    a.semilogy(sweep, measured, label="measured")
    a.semilogy(sweep, target, "--", label="envelope")
    a.set_xlabel(xlabel)
    a.legend()
    a.set_title(title)
    ratio = np.asarray(measured) / np.asarray(target)
    b.plot(sweep, ratio)
    b.set_xlabel(xlabel)
    b.set_ylabel("ratio")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def figure_series(path, partial, closed, title: str) -> Path:
    """Partial sums of the leading series against the closed form."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    m = np.arange(len(partial))
    err = np.abs(np.asarray(partial) - closed)
    ax.semilogy(m, np.maximum(err, 1e-300), "o-")
    ax.set_xlabel("M")
    ax.set_ylabel("|partial sum - closed form|")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def figure_counts(path, counts: dict, title: str) -> Path:
    """Bar chart of tag or check counts."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    keys = sorted(counts)
    ax.bar(range(len(keys)), [counts[k] for k in keys])
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels(keys, rotation=30, ha="right")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def figure_field(path, table: np.ndarray, title: str) -> Path:
    """Heat map of a two-dimensional grid table (first slice for higher dimension)."""
    plt = _pyplot()
    data = np.asarray(table)
    while data.ndim > 2:
        data = data[..., 0]
    if data.ndim == 1:
        data = data[None, :]
    fig, ax = plt.subplots(figsize=(4.5, 4))
    im = ax.imshow(data.T, origin="lower", extent=(0, 1, 0, 1), aspect="auto")
    fig.colorbar(im, ax=ax)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
