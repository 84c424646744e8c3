"""Quantile-state discretization and first-order transition graphs.

Windows are mapped to state sequences through globally shared quantile
boundaries fitted on the training pool; each sequence yields a row-stochastic
transition matrix used as the structural conditioning vector.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _accel

__all__ = [
    "QuantileBoundaries",
    "fit_boundaries",
    "discretize",
    "transition_matrix",
    "windows_to_graphs",
    "flatten_graph",
    "reshape_graph",
    "identity_graph",
    "graph_distance",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuantileBoundaries:
    """Strictly increasing bin edges b_0..b_Q over z-score values."""

    edges: np.ndarray
    n_states: int

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.float64)
        object.__setattr__(self, "edges", edges)
        if edges.ndim != 1 or edges.size != self.n_states + 1:
            raise ValueError("boundaries need exactly n_states + 1 edges")
        if not np.all(np.diff(edges) > 0):
            raise ValueError("boundary edges must be strictly increasing")


def fit_boundaries(train_values: np.ndarray, n_states: int) -> QuantileBoundaries:
    """Equiprobable bin edges: the k/Q empirical quantiles of the pooled training values.

    Uses linear interpolation between order statistics, so b_0 is the minimum
    and b_Q the maximum. Ties that collapse adjacent edges are nudged apart by
    the smallest representable step and reported.
    """
    values = np.asarray(train_values, dtype=np.float64).ravel()
    if n_states < 2:
        raise ValueError("need at least 2 states")
    if np.unique(values).size < n_states:
        raise ValueError(
            f"need at least {n_states} distinct values, got {np.unique(values).size}"
        )
    edges = np.quantile(values, np.linspace(0.0, 1.0, n_states + 1))
    bumped = 0
    for k in range(1, edges.size):
        if edges[k] <= edges[k - 1]:
            edges[k] = np.nextafter(edges[k - 1], np.inf)
            bumped += 1
    if bumped:
        logger.warning("fit_boundaries: perturbed %d collapsed edge(s) apart", bumped)
    return QuantileBoundaries(edges=edges, n_states=n_states)


def discretize(window: np.ndarray, bounds: QuantileBoundaries) -> np.ndarray:
    """Map values to 1-based states: bin k is [b_{k-1}, b_k), last bin closed right.

    Values outside [b_0, b_Q] clip into the end bins (boundaries are fitted on
    the training pool, so eval values may fall outside).
    """
    x = np.asarray(window, dtype=np.float64)
    states = np.searchsorted(bounds.edges, x, side="right")
    return np.clip(states, 1, bounds.n_states).astype(np.int64)


def transition_matrix(states: np.ndarray, n_states: int) -> np.ndarray:
    """Empirical first-order transition probabilities from one state sequence.

    P[i, j] = count(i -> j) / count(i as source); rows of states never seen as
    a source stay all-zero rather than being filled uniformly, so "no
    evidence" remains distinguishable in the conditioning vector.
    """
    s = np.asarray(states, dtype=np.int64)
    if s.ndim != 1 or s.size < 2:
        raise ValueError("state sequence must be 1-D with length >= 2")
    if s.min() < 1 or s.max() > n_states:
        raise ValueError("state out of range")
    counts = np.zeros((n_states, n_states), dtype=np.float64)
    np.add.at(counts, (s[:-1] - 1, s[1:] - 1), 1.0)
    totals = counts.sum(axis=1, keepdims=True)
    nz = totals[:, 0] > 0
    counts[nz] /= totals[nz]
    return counts


def windows_to_graphs(windows: np.ndarray, bounds: QuantileBoundaries) -> np.ndarray:
    """Flattened transition graphs for a batch of windows, shape (N, Q*Q)."""
    w = np.atleast_2d(np.asarray(windows, dtype=np.float64))
    q = bounds.n_states
    states = np.clip(
        np.searchsorted(bounds.edges, w, side="right"), 1, q
    ).astype(np.int64)
    counts = _accel.transition_counts(states, q).astype(np.float64)
    totals = counts.sum(axis=2, keepdims=True)
    np.divide(counts, totals, out=counts, where=totals > 0)
    return counts.reshape(w.shape[0], q * q)


def flatten_graph(graph: np.ndarray) -> np.ndarray:
    """Row-major flattening; inverse of reshape_graph."""
    p = np.asarray(graph, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError("graph must be a square matrix")
    return p.reshape(-1).copy()


def reshape_graph(flat: np.ndarray, n_states: int) -> np.ndarray:
    v = np.asarray(flat, dtype=np.float64)
    if v.size != n_states * n_states:
        raise ValueError("flattened graph has wrong length")
    return v.reshape(n_states, n_states).copy()


def identity_graph(n_states: int) -> np.ndarray:
    if n_states < 1:
        raise ValueError("need at least one state")
    return np.eye(n_states)


def graph_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius norm of the difference of two transition matrices."""
    pa = np.asarray(a, dtype=np.float64)
    pb = np.asarray(b, dtype=np.float64)
    if pa.shape != pb.shape:
        raise ValueError(f"graph shape mismatch: {pa.shape} vs {pb.shape}")
    return float(np.sqrt(((pa - pb) ** 2).sum()))
