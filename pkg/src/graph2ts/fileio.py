"""Versioned on-disk formats for every pipeline artifact.

Text artifacts start with a `# graph2ts-<kind> v1 ...` header line and hold
comma-separated values; floats are written with repr so re-reading is exact
and runs with identical seeds produce byte-identical files. The checkpoint is
a little-endian binary container of named 2-D float64 arrays preceded by a
JSON echo of the training config.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict

import numpy as np

from .metrics import MetricsReport, TailStats
from .model import Graph2TS, LossBreakdown, TrainConfig
from .quantile_graph import QuantileBoundaries

__all__ = [
    "write_windows",
    "read_windows",
    "write_graphs",
    "read_graphs",
    "write_boundaries",
    "read_boundaries",
    "write_loss_log",
    "write_metrics_report",
    "write_tail_stats",
    "write_curve",
    "write_embeddings",
    "save_model",
    "load_model",
]

WINDOWS_MAGIC = "# graph2ts-windows v1"
GRAPHS_MAGIC = "# graph2ts-graphs v1"
BOUNDS_MAGIC = "# graph2ts-boundaries v1"
LOSSLOG_MAGIC = "# graph2ts-losslog v1"
METRICS_MAGIC = "# graph2ts-metrics v1"
TAILSTATS_MAGIC = "# graph2ts-tailstats v1"
CURVE_MAGIC = "# graph2ts-curve v1"
EMBED_MAGIC = "# graph2ts-embeddings v1"
CKPT_MAGIC = b"g2ts-ckpt v1\n"


def _fmt(v: float) -> str:
    return repr(float(v))


def _write_matrix_file(path, magic: str, rows: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(magic + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _read_header(path, expected: str) -> tuple[str, list[str]]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith(expected):
            raise ValueError(f"{path}: expected header '{expected} ...', got '{header}'")
        return header, fh.read().splitlines()


def _parse_rows(path, lines: list[str], width: int) -> np.ndarray:
    rows = []
    for i, line in enumerate(lines, start=2):
        if not line.strip():
            continue
        vals = [float(tok) for tok in line.split(",")]
        if len(vals) != width:
            raise ValueError(f"{path}: row {i} has {len(vals)} values, expected {width}")
        rows.append(vals)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.array(rows)


def _header_int(header: str, key: str, path) -> int:
    for tok in header.split():
        if tok.startswith(key + "="):
            return int(tok.split("=", 1)[1])
    raise ValueError(f"{path}: header missing {key}=")


def write_windows(path, windows: np.ndarray) -> None:
    w = np.atleast_2d(np.asarray(windows, dtype=np.float64))
    _write_matrix_file(path, f"{WINDOWS_MAGIC} T={w.shape[1]}", w)


def read_windows(path) -> np.ndarray:
    header, lines = _read_header(path, WINDOWS_MAGIC)
    return _parse_rows(path, lines, _header_int(header, "T", path))


def write_graphs(path, flat_graphs: np.ndarray, n_states: int) -> None:
    g = np.atleast_2d(np.asarray(flat_graphs, dtype=np.float64))
    if g.shape[1] != n_states * n_states:
        raise ValueError("flattened graph width does not match n_states")
    _write_matrix_file(path, f"{GRAPHS_MAGIC} Q={n_states}", g)


def read_graphs(path) -> tuple[np.ndarray, int]:
    header, lines = _read_header(path, GRAPHS_MAGIC)
    q = _header_int(header, "Q", path)
    return _parse_rows(path, lines, q * q), q


def write_boundaries(path, bounds: QuantileBoundaries) -> None:
    _write_matrix_file(
        path, f"{BOUNDS_MAGIC} Q={bounds.n_states}", bounds.edges.reshape(1, -1)
    )


def read_boundaries(path) -> QuantileBoundaries:
    header, lines = _read_header(path, BOUNDS_MAGIC)
    q = _header_int(header, "Q", path)
    edges = _parse_rows(path, lines, q + 1)
    return QuantileBoundaries(edges=edges[0], n_states=q)


def write_loss_log(path, log: list[LossBreakdown]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(LOSSLOG_MAGIC + "\n")
        fh.write("epoch,align,recon,dist,kl,beta,total\n")
        for epoch, e in enumerate(log):
            fh.write(
                f"{epoch},{_fmt(e.align)},{_fmt(e.recon)},{_fmt(e.dist)},"
                f"{_fmt(e.kl)},{_fmt(e.beta)},{_fmt(e.total)}\n"
            )


def _write_kv(path, magic: str, items) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(magic + "\n")
        for key, value in items:
            fh.write(f"{key}={_fmt(value)}\n")


def write_metrics_report(path, report: MetricsReport) -> None:
    _write_kv(path, METRICS_MAGIC, report.as_items())


def write_tail_stats(path, x_stats: TailStats, dx_stats: TailStats) -> None:
    items = []
    for prefix, ts in (("x", x_stats), ("dx", dx_stats)):
        items.append((f"{prefix}_mean", ts.mean))
        items.append((f"{prefix}_std", ts.std))
        items.append((f"{prefix}_excess_kurtosis", ts.excess_kurtosis))
        items.append((f"{prefix}_q_lo", ts.quantile_range[0]))
        items.append((f"{prefix}_q_hi", ts.quantile_range[1]))
    _write_kv(path, TAILSTATS_MAGIC, items)


def write_curve(path, name: str, values: np.ndarray) -> None:
    """One plot-ready value per row (lag or frequency-bin index implied)."""
    v = np.asarray(values, dtype=np.float64).ravel()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{CURVE_MAGIC} name={name} N={v.size}\n")
        for x in v:
            fh.write(_fmt(x) + "\n")


def write_embeddings(path, embeddings: np.ndarray) -> None:
    """Raw embedding rows for external projection tools (t-SNE and friends)."""
    e = np.atleast_2d(np.asarray(embeddings, dtype=np.float64))
    _write_matrix_file(path, f"{EMBED_MAGIC} D={e.shape[1]}", e)


# ---------------------------------------------------------------------------
# checkpoint container
# ---------------------------------------------------------------------------

def save_model(path, model: Graph2TS) -> None:
    """Binary checkpoint: magic, JSON meta (config echo, boundaries), named arrays."""
    meta = {
        "config": asdict(model.config),
        "best_epoch": model.best_epoch,
        "boundaries": None
        if model.boundaries is None
        else list(map(float, model.boundaries.edges)),
    }
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(json.dumps(meta, sort_keys=True).encode("utf-8") + b"\n")
        fh.write(struct.pack("<I", len(model.params)))
        for name in sorted(model.params):
            arr = np.ascontiguousarray(model.params[name], dtype="<f8")
            if arr.ndim != 2:
                raise ValueError(f"parameter '{name}' is not 2-D")
            blob = name.encode("utf-8")
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            fh.write(struct.pack("<II", arr.shape[0], arr.shape[1]))
            fh.write(arr.tobytes(order="C"))


def load_model(path) -> Graph2TS:
    with open(path, "rb") as fh:
        magic = fh.readline()
        if magic != CKPT_MAGIC:
            raise ValueError(f"{path}: not a g2ts-ckpt v1 checkpoint")
        meta = json.loads(fh.readline().decode("utf-8"))
        config = TrainConfig(**meta["config"])
        (count,) = struct.unpack("<I", fh.read(4))
        params: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<I", fh.read(4))
            name = fh.read(name_len).decode("utf-8")
            rows, cols = struct.unpack("<II", fh.read(8))
            data = np.frombuffer(fh.read(rows * cols * 8), dtype="<f8")
            if data.size != rows * cols:
                raise ValueError(f"{path}: truncated array '{name}'")
            params[name] = data.reshape(rows, cols).astype(np.float64)
    bounds = None
    if meta["boundaries"] is not None:
        edges = np.array(meta["boundaries"])
        bounds = QuantileBoundaries(edges=edges, n_states=config.n_states)
    return Graph2TS(
        config=config, params=params, boundaries=bounds, best_epoch=meta["best_epoch"]
    )
