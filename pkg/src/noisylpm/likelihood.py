"""Exact and grid-approximated log-likelihoods and likelihood ratios.

The exact log-likelihood sums ``y_ij * logit_ij - softplus(logit_ij)`` over
unordered pairs, which is the square-rooted product over ordered pairs.  The
noisy version replaces ``z_j`` by the centre of the box holding ``j``:

    (1/2) sum_i sum_boxes [xi_i log p(z_i, c) + zeta_i log(1 - p(z_i, c))]

Ratios are formed in log space; the ``*_log_*`` functions return the log and
the others exponentiate it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .graph import Network
from .grid import BoxGrid
from .model import LinkFunction

__all__ = [
    "LatentState",
    "exact_log_lik",
    "noisy_log_lik",
    "exact_lr_z",
    "noisy_lr_z",
    "exact_lr_psi",
    "noisy_lr_psi",
    "exact_log_lr_z",
    "noisy_log_lr_z",
    "exact_log_lr_psi",
    "noisy_log_lr_psi",
]


@dataclass
class LatentState:
    """Positions ``Z`` (N x 2), global parameters ``psi`` and an optional grid."""

    Z: np.ndarray
    psi: np.ndarray
    grid: BoxGrid | None = None

    def __post_init__(self):
        self.Z = np.array(self.Z, dtype=float, order="C")
        self.psi = np.array(self.psi, dtype=float).ravel()
        if self.Z.ndim != 2 or self.Z.shape[1] != 2:
            raise ValueError("Z must have shape (N, 2)")

    @classmethod
    def with_grid(cls, Z, psi, net: Network, M: int, S: float = 1.0) -> "LatentState":
        Z = np.asarray(Z, dtype=float)
        return cls(Z, psi, BoxGrid.build(Z, net, M, S))

    @property
    def n_nodes(self) -> int:
        return self.Z.shape[0]

    def move(self, i: int, z_new) -> None:
        """Set ``z_i`` and keep the grid in step."""
        if self.grid is not None:
            self.grid.move_node(i, z_new)
        self.Z[i] = z_new

    def copy(self) -> "LatentState":
        return LatentState(self.Z.copy(), self.psi.copy(),
                           None if self.grid is None else self.grid.copy())


def _xy(state):
    return np.ascontiguousarray(state.Z[:, 0]), np.ascontiguousarray(state.Z[:, 1])


def _need_grid(state) -> BoxGrid:
    if state.grid is None:
        raise ValueError("noisy evaluation needs a state built with a grid")
    return state.grid


def _check_psi_step(psi, psi_new, k):
    psi_new = np.asarray(psi_new, dtype=float).ravel()
    if psi_new.shape != psi.shape:
        raise ValueError("psi_new has the wrong length")
    others = np.arange(psi.size) != k
    if np.any(psi_new[others] != psi[others]):
        raise ValueError(f"psi_new may differ from psi only in coordinate {k}")
    return psi_new


# ---------------------------------------------------------------------------
# log-likelihoods

def exact_log_lik(state: LatentState, net: Network, link: LinkFunction,
                  parallel: bool = False) -> float:
    """Full pairwise log-likelihood; O(N^2)."""
    beta, scale = link.beta_scale(state.psi)
    zx, zy = _xy(state)
    rows = np.empty(state.n_nodes)
    f = _k.exact_loglik_rows_par if parallel else _k.exact_loglik_rows
    f(zx, zy, net.indptr, net.indices, beta, scale, rows)
    return math.fsum(rows)


def noisy_log_lik(state: LatentState, net: Network, link: LinkFunction,
                  parallel: bool = False) -> float:
    """Box-centre approximation; O(N * non-empty boxes + edges)."""
    g = _need_grid(state)
    beta, scale = link.beta_scale(state.psi)
    zx, zy = _xy(state)
    rows = np.empty(state.n_nodes)
    f = _k.noisy_loglik_rows_par if parallel else _k.noisy_loglik_rows
    f(zx, zy, beta, scale, g._indptr, g.box_of, g.occ, g.ne_list, g.n_ne,
      g.xi_box, g.xi_cnt, g.xi_len, g.cx, g.cy, rows)
    return 0.5 * math.fsum(rows)


# ---------------------------------------------------------------------------
# latent position ratios

def exact_log_lr_z(state, net, link, i: int, z_new) -> float:
    beta, scale = link.beta_scale(state.psi)
    zx, zy = _xy(state)
    return float(_k.exact_z_logratio(int(i), float(z_new[0]), float(z_new[1]), zx, zy,
                                     net.indptr, net.indices, beta, scale))


def noisy_log_lr_z(state, net, link, i: int, z_new, kernel: str = "joint") -> float:
    """Log noisy likelihood ratio for moving node ``i``.

    ``kernel="joint"`` returns ``noisy_log_lik(new) - noisy_log_lik(old)``
    exactly, so a chain using it targets the approximate posterior.
    ``kernel="row"`` keeps only node ``i``'s own box products (edge and
    non-edge counts fixed at their current values), the cheaper form that
    ignores how the other nodes see ``i``'s box centre.
    """
    if kernel not in ("joint", "row"):
        raise ValueError(f"unknown kernel {kernel!r}")
    g = _need_grid(state)
    beta, scale = link.beta_scale(state.psi)
    zx, zy = _xy(state)
    joint = kernel == "joint"
    table = np.empty(g.n_boxes)
    if joint:
        _k.box_softplus_table(zx, zy, beta, scale, g.cx, g.cy, table)
    return float(_k.noisy_z_logratio(int(i), float(z_new[0]), float(z_new[1]), joint, beta,
                                     scale, zx, zy, g.S, g.b, g.M, g._indptr, g._indices,
                                     g.box_of, g.occ, g.ne_list, g.n_ne, g.xi_box, g.xi_cnt,
                                     g.xi_len, g.cx, g.cy, table))


def exact_lr_z(state, net, link, i, z_new) -> float:
    return math.exp(exact_log_lr_z(state, net, link, i, z_new))


def noisy_lr_z(state, net, link, i, z_new, kernel: str = "joint") -> float:
    return math.exp(noisy_log_lr_z(state, net, link, i, z_new, kernel))


# ---------------------------------------------------------------------------
# global parameter ratios

def exact_log_lr_psi(state, net, link, k: int, psi_new, parallel: bool = False) -> float:
    psi_new = _check_psi_step(state.psi, psi_new, k)
    b0, s0 = link.beta_scale(state.psi)
    b1, s1 = link.beta_scale(psi_new)
    zx, zy = _xy(state)
    rows = np.empty(state.n_nodes)
    f = _k.exact_psi_rows_par if parallel else _k.exact_psi_rows
    f(zx, zy, net.indptr, net.indices, b0, s0, b1, s1, rows)
    return math.fsum(rows)


def noisy_log_lr_psi(state, net, link, k: int, psi_new, parallel: bool = False) -> float:
    psi_new = _check_psi_step(state.psi, psi_new, k)
    g = _need_grid(state)
    b0, s0 = link.beta_scale(state.psi)
    b1, s1 = link.beta_scale(psi_new)
    zx, zy = _xy(state)
    rows = np.empty(state.n_nodes)
    f = _k.noisy_psi_rows_par if parallel else _k.noisy_psi_rows
    f(zx, zy, b0, s0, b1, s1, g._indptr, g.box_of, g.occ, g.ne_list, g.n_ne,
      g.xi_box, g.xi_cnt, g.xi_len, g.cx, g.cy, rows)
    return 0.5 * math.fsum(rows)


def exact_lr_psi(state, net, link, k, psi_new, parallel: bool = False) -> float:
    return math.exp(exact_log_lr_psi(state, net, link, k, psi_new, parallel))


def noisy_lr_psi(state, net, link, k, psi_new, parallel: bool = False) -> float:
    return math.exp(noisy_log_lr_psi(state, net, link, k, psi_new, parallel))
