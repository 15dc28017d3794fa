"""Uniform M x M box partition of the latent square with incremental counts.

Boxes are indexed by lattice coordinates ``(a, c)`` in ``0..M-1`` along x and
y, flattened to ``a * M + c``.  A coordinate ``x`` falls in lattice index
``min(floor((x + S) / b), M - 1)`` with ``b = 2S / M``.

For every node ``i`` the grid keeps ``xi_i[box]``, the number of neighbours
of ``i`` located in ``box``, stored sparsely (zero counts are never stored).
The non-edge count ``zeta_i[box] = N[box] - xi_i[box] - 1{i in box}`` is
derived on demand.
"""

from __future__ import annotations

import io

import numpy as np

from . import _kernels as _k
from .graph import Network

__all__ = ["BoxGrid", "InternalConsistencyError", "build"]


class InternalConsistencyError(RuntimeError):
    """Grid counts no longer match their definitions."""


class BoxGrid:
    """Box partition and per-node edge aggregates for one configuration.

    Use :func:`build` (or :meth:`BoxGrid.build`) to construct; mutate only
    through :meth:`move_node`.
    """

    def __init__(self, M: int, S: float, indptr: np.ndarray, indices: np.ndarray):
        if int(M) != M or M < 1:
            raise ValueError(f"M must be a positive integer, got {M!r}")
        self.M = int(M)
        self.S = float(S)
        self.b = 2.0 * self.S / self.M
        self._indptr = indptr
        self._indices = indices
        n = indptr.shape[0] - 1
        nb = self.M * self.M
        self.box_of = np.zeros(n, dtype=np.int64)
        self.occ = np.zeros(nb, dtype=np.int64)
        self.ne_list = np.zeros(nb, dtype=np.int64)
        self.ne_pos = np.full(nb, -1, dtype=np.int64)
        self.n_ne = np.zeros(1, dtype=np.int64)
        self.xi_box = np.full(indices.shape[0], -1, dtype=np.int64)
        self.xi_cnt = np.zeros(indices.shape[0], dtype=np.int64)
        self.xi_len = np.zeros(n, dtype=np.int64)
        lat = -self.S + self.b * (np.arange(self.M) + 0.5)
        self.cx = np.repeat(lat, self.M)
        self.cy = np.tile(lat, self.M)

    @classmethod
    def build(cls, Z, net: Network, M: int, S: float = 1.0) -> "BoxGrid":
        Z = np.asarray(Z, dtype=float)
        if Z.shape != (net.n_nodes, 2):
            raise ValueError(f"Z must have shape ({net.n_nodes}, 2), got {Z.shape}")
        if np.any(np.abs(Z) > S) or not np.all(np.isfinite(Z)):
            raise ValueError("position outside the latent square")
        g = cls(M, S, net.indptr, net.indices)
        zx = np.ascontiguousarray(Z[:, 0])
        zy = np.ascontiguousarray(Z[:, 1])
        _k.grid_fill(zx, zy, g._indptr, g._indices, g.S, g.b, g.M, g.box_of, g.occ,
                     g.ne_list, g.ne_pos, g.n_ne, g.xi_box, g.xi_cnt, g.xi_len)
        return g

    # -- geometry ---------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return self.box_of.shape[0]

    @property
    def n_boxes(self) -> int:
        return self.M * self.M

    @property
    def centers(self) -> np.ndarray:
        """``(M*M, 2)`` box centres in flat box order."""
        return np.column_stack([self.cx, self.cy])

    @property
    def occupancy(self) -> np.ndarray:
        """Counts as an ``(M, M)`` array indexed by lattice ``(a, c)``."""
        return self.occ.reshape(self.M, self.M)

    def lattice_index(self, x) -> np.ndarray:
        k = np.floor((np.asarray(x, dtype=float) + self.S) / self.b).astype(np.int64)
        return np.clip(k, 0, self.M - 1)

    def box_id(self, z) -> int:
        a, c = self.lattice_index(z)
        return int(a * self.M + c)

    def _flat(self, g, h) -> int:
        if not (0 <= g < self.M and 0 <= h < self.M):
            raise IndexError(f"box ({g}, {h}) outside a {self.M}x{self.M} grid")
        return int(g * self.M + h)

    def center(self, g: int, h: int) -> np.ndarray:
        k = self._flat(g, h)
        return np.array([self.cx[k], self.cy[k]])

    def center_distance(self, z, g: int, h: int) -> float:
        c = self.center(g, h)
        return float(np.hypot(z[0] - c[0], z[1] - c[1]))

    # -- counts -----------------------------------------------------------

    def xi(self, i: int) -> dict[int, int]:
        """Sparse edge counts of node ``i`` as ``{flat box id: count}``."""
        s = self._indptr[i]
        n = self.xi_len[i]
        return dict(zip(self.xi_box[s:s + n].tolist(), self.xi_cnt[s:s + n].tolist()))

    def xi_dense(self, i: int) -> np.ndarray:
        out = np.zeros(self.n_boxes, dtype=np.int64)
        for k, v in self.xi(i).items():
            out[k] = v
        return out

    def zeta(self, i: int, g: int, h: int, i_in_box: bool | None = None) -> int:
        """Non-neighbours of ``i`` in box ``(g, h)``, excluding ``i`` itself."""
        k = self._flat(g, h)
        if i_in_box is None:
            i_in_box = self.box_of[i] == k
        val = int(self.occ[k] - self.xi(i).get(k, 0) - int(bool(i_in_box)))
        if val < 0:
            raise InternalConsistencyError(
                f"negative non-edge count {val} for node {i} in box ({g}, {h})")
        return val

    def nonempty_boxes(self) -> np.ndarray:
        return np.sort(self.ne_list[:self.n_ne[0]])

    # -- mutation ---------------------------------------------------------

    def move_node(self, i: int, z_new) -> None:
        """Relocate node ``i``; O(degree) when its box changes, O(1) otherwise."""
        z_new = np.asarray(z_new, dtype=float)
        if np.any(np.abs(z_new) > self.S):
            raise ValueError("position outside the latent square")
        _k.grid_move(int(i), self.box_id(z_new), self._indptr, self._indices, self.box_of,
                     self.occ, self.ne_list, self.ne_pos, self.n_ne,
                     self.xi_box, self.xi_cnt, self.xi_len)
        if self.xi_len[int(i)] < 0 or np.any(self.xi_len < 0):
            raise InternalConsistencyError("neighbour box counts are corrupt")

    # -- checks and comparison -------------------------------------------

    def canonical(self) -> tuple:
        """Order-independent snapshot of every count, for equality tests."""
        xi = []
        for i in range(self.n_nodes):
            d = self.xi(i)
            xi.append(tuple(sorted(d.items())))
        return (self.M, self.S, tuple(self.box_of.tolist()), tuple(self.occ.tolist()),
                tuple(xi))

    def __eq__(self, other) -> bool:
        if not isinstance(other, BoxGrid):
            return NotImplemented
        return self.canonical() == other.canonical()

    __hash__ = None

    def check_invariants(self, net: Network | None = None) -> None:
        """Raise :class:`InternalConsistencyError` if any count is inconsistent."""
        n = self.n_nodes
        if self.occ.sum() != n:
            raise InternalConsistencyError("occupancy does not sum to N")
        if np.any(np.bincount(self.box_of, minlength=self.n_boxes) != self.occ):
            raise InternalConsistencyError("occupancy disagrees with box assignment")
        ne = set(self.ne_list[:self.n_ne[0]].tolist())
        if ne != set(np.flatnonzero(self.occ).tolist()):
            raise InternalConsistencyError("non-empty box list is stale")
        deg = np.diff(self._indptr)
        for i in range(n):
            s, m = self._indptr[i], self.xi_len[i]
            if m < 0 or np.any(self.xi_cnt[s:s + m] <= 0):
                raise InternalConsistencyError(f"zero or negative stored count for node {i}")
            if self.xi_cnt[s:s + m].sum() != deg[i]:
                raise InternalConsistencyError(f"edge counts of node {i} do not sum to its degree")
            for k, v in self.xi(i).items():
                if self.occ[k] - v - int(self.box_of[i] == k) < 0:
                    raise InternalConsistencyError(f"negative non-edge count for node {i}")

    def to_csv(self) -> str:
        """Debug dump: one ``g,h,center_x,center_y,count`` row per box."""
        buf = io.StringIO()
        buf.write("g,h,center_x,center_y,count\n")
        for k in range(self.n_boxes):
            g, h = divmod(k, self.M)
            buf.write(f"{g},{h},{self.cx[k]:.10g},{self.cy[k]:.10g},{self.occ[k]}\n")
        return buf.getvalue()

    def copy(self) -> "BoxGrid":
        g = BoxGrid.__new__(BoxGrid)
        g.__dict__.update({k: (v.copy() if isinstance(v, np.ndarray) and not k.startswith("_")
                               else v) for k, v in self.__dict__.items()})
        return g


def build(Z, net: Network, M: int, space=None) -> BoxGrid:
    S = 1.0 if space is None else space.S
    return BoxGrid.build(Z, net, M, S)
