"""Undirected binary networks and edge-list ingestion.

A :class:`Network` stores adjacency in compressed sparse row form: the
neighbours of node ``i`` are ``indices[indptr[i]:indptr[i + 1]]``, sorted
ascending.  Instances are treated as immutable once built.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DataError",
    "Network",
    "from_edges",
    "load_edge_list",
    "write_edge_list",
    "edge_indicator",
]


class DataError(ValueError):
    """Raised for unreadable or malformed network data."""


@dataclass(frozen=True, eq=False)
class Network:
    n_nodes: int
    indptr: np.ndarray
    indices: np.ndarray
    original_ids: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.original_ids is None:
            object.__setattr__(self, "original_ids", np.arange(self.n_nodes, dtype=np.int64))
        for arr in (self.indptr, self.indices, self.original_ids):
            arr.flags.writeable = False

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def n_edges(self) -> int:
        return int(self.indices.shape[0] // 2)

    @property
    def adjacency(self) -> list[np.ndarray]:
        return [self.neighbors(i) for i in range(self.n_nodes)]

    @property
    def density(self) -> float:
        n = self.n_nodes
        if n < 2:
            return 0.0
        return self.n_edges / (n * (n - 1) / 2)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def edges(self) -> np.ndarray:
        """Undirected edges as an ``(n_edges, 2)`` array with ``i < j``."""
        src = np.repeat(np.arange(self.n_nodes, dtype=np.int64), self.degrees)
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep]])

    def adjacency_matrix(self) -> np.ndarray:
        """Dense 0/1 matrix; only sensible for small graphs."""
        y = np.zeros((self.n_nodes, self.n_nodes), dtype=np.int8)
        e = self.edges()
        y[e[:, 0], e[:, 1]] = 1
        y[e[:, 1], e[:, 0]] = 1
        return y

    def id_map(self) -> dict[int, int]:
        return {int(orig): dense for dense, orig in enumerate(self.original_ids)}

    def same_structure(self, other: "Network") -> bool:
        return (
            self.n_nodes == other.n_nodes
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def relabel(self, perm: np.ndarray) -> "Network":
        """Return the network with node ``i`` renamed ``perm[i]``."""
        e = self.edges()
        return from_edges(self.n_nodes, perm[e[:, 0]], perm[e[:, 1]],
                          original_ids=self.original_ids[np.argsort(perm)])


def from_edges(n_nodes, src, dst, original_ids=None) -> Network:
    """Build a network from endpoint arrays.

    Self-loops are dropped and ``(i, j)``/``(j, i)`` duplicates collapse to a
    single undirected edge.
    """
    src = np.asarray(src, dtype=np.int64).ravel()
    dst = np.asarray(dst, dtype=np.int64).ravel()
    if src.shape != dst.shape:
        raise ValueError("src and dst must have the same length")
    if n_nodes < 0:
        raise ValueError("n_nodes must be non-negative")
    if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n_nodes):
        raise ValueError("edge endpoint out of range")
    keep = src != dst
    a = np.concatenate([src[keep], dst[keep]])
    b = np.concatenate([dst[keep], src[keep]])
    keys = np.unique(a * np.int64(n_nodes) + b)
    rows = keys // n_nodes if n_nodes else keys
    cols = keys % n_nodes if n_nodes else keys
    indptr = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n_nodes), out=indptr[1:])
    if original_ids is not None:
        original_ids = np.asarray(original_ids, dtype=np.int64)
    return Network(int(n_nodes), indptr, cols.astype(np.int64), original_ids)


def load_edge_list(path, n_nodes: int | None = None) -> Network:
    """Read a whitespace-separated edge list.

    Lines starting with ``#`` and blank lines are skipped.  Node ids are
    remapped to ``0..N-1`` in order of first appearance unless ``n_nodes`` is
    given, in which case ids are taken as already dense (this preserves
    isolated nodes written by :func:`write_edge_list`).
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read edge list {path!r}: {exc}") from exc

    src, dst = [], []
    for lineno, line in enumerate(lines, start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected two node ids, got {s!r}")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-integer node id in {s!r}") from None
        if a < 0 or b < 0:
            raise DataError(f"{path}:{lineno}: negative node id in {s!r}")
        src.append(a)
        dst.append(b)

    if n_nodes is not None:
        if n_nodes <= 0:
            raise DataError("empty graph: n_nodes must be positive")
        if src and max(max(src), max(dst)) >= n_nodes:
            raise DataError(f"node id exceeds declared n_nodes={n_nodes}")
        return from_edges(n_nodes, src, dst)

    if not src:
        raise DataError(f"empty graph: no edges in {path!r}")
    # first-appearance order over the interleaved endpoint stream
    stream = np.empty(2 * len(src), dtype=np.int64)
    stream[0::2] = src
    stream[1::2] = dst
    uniq, first = np.unique(stream, return_index=True)
    order = np.argsort(first, kind="stable")
    original = uniq[order]
    dense_of_sorted = np.empty_like(order)
    dense_of_sorted[order] = np.arange(order.size)
    dense = dense_of_sorted[np.searchsorted(uniq, stream)]
    return from_edges(original.size, dense[0::2], dense[1::2], original_ids=original)


def write_edge_list(net: Network, path, header: str | None = None,
                    sidecar: bool = False) -> None:
    """Write ``i j`` lines (dense ids, ``i < j``); optionally a JSON id map."""
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for i, j in net.edges():
            fh.write(f"{i} {j}\n")
    if sidecar:
        with open(os.fspath(path) + ".ids.json", "w", encoding="utf-8") as fh:
            json.dump({str(k): v for k, v in net.id_map().items()}, fh)


def edge_indicator(net: Network, i: int, j: int) -> int:
    """Return ``y_ij``; binary search over the sorted neighbour list."""
    n = net.n_nodes
    if i == j or not (0 <= i < n) or not (0 <= j < n):
        raise ValueError(f"invalid node pair ({i}, {j}) for N={n}")
    nb = net.neighbors(i)
    k = np.searchsorted(nb, j)
    return int(k < nb.size and nb[k] == j)
