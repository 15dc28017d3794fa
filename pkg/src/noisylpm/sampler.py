"""Metropolis-within-Gibbs samplers for the latent position model.

One sweep proposes each latent position ``z_i`` (both coordinates as a
block) and then each global parameter ``psi_k``, accepting against the exact
or the grid-approximated likelihood.  :func:`run` drives the compiled sweep
loops; :func:`sweep` is a plain-Python reference implementation of the same
kernel that also accepts custom position proposals and records every
decision, which is what the coupling tests use.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k
from .graph import Network
from .grid import BoxGrid, InternalConsistencyError
from .likelihood import (LatentState, exact_log_lr_psi, exact_log_lr_z, noisy_log_lr_psi,
                         noisy_log_lr_z)
from .model import (LinkFunction, ParameterSpace, log_prior_psi, log_prior_z, propose_psi,
                    propose_z, sample_truncnorm)

__all__ = [
    "SamplerConfig",
    "ChainSample",
    "accept_prob_z",
    "accept_prob_psi",
    "adapt_proposals",
    "initial_state",
    "sweep",
    "run",
]


@dataclass
class SamplerConfig:
    iterations: int = 1000
    burn_in: int = 0
    thin: int = 1
    mode: str = "exact"
    M: int = 8
    seed: int = 0
    adapt: bool = False
    adapt_window: tuple[float, float] = (0.2, 0.5)
    adapt_interval: int = 100
    random_scan: bool = False
    noisy_kernel: str = "joint"
    store_z: bool = True
    Z0: np.ndarray | None = None
    psi0: np.ndarray | None = None
    fixed_nodes: tuple[int, ...] = ()
    fixed_psi: tuple[int, ...] = ()
    check_grid: bool = True

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("need 0 <= burn_in < iterations")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.mode not in ("exact", "noisy"):
            raise ValueError(f"mode must be 'exact' or 'noisy', got {self.mode!r}")
        if self.mode == "noisy" and (int(self.M) != self.M or self.M < 1):
            raise ValueError("noisy mode needs an integer M >= 1")
        lo, hi = self.adapt_window
        if not 0 < lo < hi < 1:
            raise ValueError("adapt_window must satisfy 0 < lo < hi < 1")
        if self.adapt_interval < 1:
            raise ValueError("adapt_interval must be positive")
        if self.noisy_kernel not in ("joint", "row"):
            raise ValueError("noisy_kernel must be 'joint' or 'row'")

    @property
    def n_draws(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass(frozen=True)
class ChainSample:
    """Thinned post burn-in draws plus diagnostics.

    ``Z`` has shape ``(n_draws, N, 2)`` (``None`` if positions were not
    stored), ``psi`` has shape ``(n_draws, K)``.  Acceptance rates refer to
    the sampling phase.  ``timings`` holds total and per-sweep seconds for
    both phases.
    """

    Z: np.ndarray | None
    psi: np.ndarray
    acceptance_z: np.ndarray
    acceptance_psi: np.ndarray
    timings: dict
    std_z: np.ndarray
    std_psi: np.ndarray
    final_Z: np.ndarray
    final_psi: np.ndarray
    config: SamplerConfig = field(repr=False)

    def __post_init__(self):
        for name in ("Z", "psi", "acceptance_z", "acceptance_psi", "std_z", "std_psi",
                     "final_Z", "final_psi"):
            a = getattr(self, name)
            if a is not None:
                a.flags.writeable = False

    @property
    def n_draws(self) -> int:
        return self.psi.shape[0]


# ---------------------------------------------------------------------------
# acceptance probabilities

def _log_lr_z(state, net, link, i, z_new, mode, kernel):
    if mode == "exact":
        return exact_log_lr_z(state, net, link, i, z_new)
    return noisy_log_lr_z(state, net, link, i, z_new, kernel)


def _log_lr_psi(state, net, link, k, psi_new, mode):
    if mode == "exact":
        return exact_log_lr_psi(state, net, link, k, psi_new)
    return noisy_log_lr_psi(state, net, link, k, psi_new)


def _accept(log_a):
    return 1.0 if log_a >= 0 else math.exp(log_a)


def log_accept_z(state, net, link, space, i, z_new, log_q_ratio, mode="exact",
                 kernel="joint") -> float:
    z_new = np.asarray(z_new, dtype=float)
    lp = log_prior_z(z_new, space) - log_prior_z(state.Z[i], space)
    if lp == -math.inf:
        return -math.inf
    return log_q_ratio + lp + _log_lr_z(state, net, link, i, z_new, mode, kernel)


def accept_prob_z(state, net, link, space, i, z_new, log_q_ratio, mode="exact",
                  kernel="joint") -> float:
    """``min(1, q-ratio * prior ratio * likelihood ratio)`` for moving ``z_i``."""
    return _accept(log_accept_z(state, net, link, space, i, z_new, log_q_ratio, mode, kernel))


def log_accept_psi(state, net, link, space, k, psi_new, log_q_ratio, mode="exact") -> float:
    psi_new = np.asarray(psi_new, dtype=float)
    lp = log_prior_psi(psi_new, space) - log_prior_psi(state.psi, space)
    if lp == -math.inf:
        return -math.inf
    return log_q_ratio + lp + _log_lr_psi(state, net, link, k, psi_new, mode)


def accept_prob_psi(state, net, link, space, k, psi_new, log_q_ratio, mode="exact") -> float:
    return _accept(log_accept_psi(state, net, link, space, k, psi_new, log_q_ratio, mode))


# ---------------------------------------------------------------------------
# adaptation

def adapt_proposals(acc_rates, current_stds, window=(0.2, 0.5), up=1.25, down=0.8,
                    cap=None):
    """Scale each std by ``up`` above the window, by ``down`` below it."""
    acc = np.asarray(acc_rates, dtype=float)
    std = np.array(current_stds, dtype=float)
    lo, hi = window
    std[acc > hi] *= up
    std[acc < lo] *= down
    if cap is not None:
        std = np.minimum(std, cap)
    return std


# ---------------------------------------------------------------------------
# reference sweep

def initial_state(net: Network, link: LinkFunction, space: ParameterSpace,
                  config: SamplerConfig) -> LatentState:
    """Prior draw for positions and bound midpoints for ``psi`` unless given."""
    space.check_link(link)
    rng = np.random.default_rng(config.seed)
    if config.Z0 is None:
        g = space.gamma
        Z = g * sample_truncnorm(rng, 0.0, 1.0, -space.S / g, space.S / g,
                                 size=(net.n_nodes, 2))
    else:
        Z = np.array(config.Z0, dtype=float)
        if Z.shape != (net.n_nodes, 2):
            raise ValueError(f"Z0 must have shape ({net.n_nodes}, 2)")
        if not space.in_square(Z):
            raise ValueError("Z0 lies outside the latent square")
    psi = space.psi_midpoint() if config.psi0 is None else np.array(config.psi0, dtype=float)
    if not space.in_psi_bounds(psi) or psi.shape != (space.K,):
        raise ValueError("psi0 is outside the parameter bounds")
    grid = BoxGrid.build(Z, net, config.M, space.S) if config.mode == "noisy" else None
    return LatentState(Z, psi, grid)


def sweep(state: LatentState, net: Network, link: LinkFunction, space: ParameterSpace,
          config: SamplerConfig, rng: np.random.Generator, std_z=None, std_psi=None,
          z_proposal=None, record: list | None = None) -> None:
    """One in-place Metropolis-within-Gibbs sweep (reference implementation).

    ``z_proposal(rng, i, z)`` may replace the truncated Gaussian walk; it
    must return ``(z_new, log_q_ratio)``.  When ``record`` is a list, one
    ``(kind, index, accepted)`` tuple is appended per proposal.
    """
    n, K = state.n_nodes, state.psi.size
    std_z = np.broadcast_to(space.prop_std_z if std_z is None else std_z, (n,))
    std_psi = np.broadcast_to(space.prop_std_psi if std_psi is None else std_psi, (K,))
    fixed_z = set(config.fixed_nodes)
    fixed_psi = set(config.fixed_psi)
    order = rng.permutation(n + K) if config.random_scan else range(n + K)
    for r in order:
        if r < n:
            i = int(r)
            if i in fixed_z:
                continue
            if z_proposal is None:
                z_new, lq = propose_z(state.Z[i], space, rng, std_z[i])
            else:
                z_new, lq = z_proposal(rng, i, state.Z[i])
            la = log_accept_z(state, net, link, space, i, z_new, lq, config.mode,
                              config.noisy_kernel)
            ok = la >= 0 or rng.random() < math.exp(la)
            if ok:
                state.move(i, z_new)
            if record is not None:
                record.append(("z", i, bool(ok)))
        else:
            k = int(r - n)
            if k in fixed_psi:
                continue
            new_k, lq = propose_psi(state.psi[k], space.psi_bounds[k], rng, std_psi[k])
            psi_new = state.psi.copy()
            psi_new[k] = new_k
            la = log_accept_psi(state, net, link, space, k, psi_new, lq, config.mode)
            ok = la >= 0 or rng.random() < math.exp(la)
            if ok:
                state.psi = psi_new
            if record is not None:
                record.append(("psi", k, bool(ok)))
    if config.check_grid and state.grid is not None and np.any(state.grid.xi_len < 0):
        raise InternalConsistencyError("grid counts corrupted during sweep")


# ---------------------------------------------------------------------------
# compiled driver

class _Chain:
    """Mutable buffers shared by successive calls into the compiled loops."""

    def __init__(self, state, net, link, space, config):
        n, K = state.n_nodes, state.psi.size
        self.net, self.space, self.config = net, space, config
        self.kind = link.code
        self.zx = np.ascontiguousarray(state.Z[:, 0]).copy()
        self.zy = np.ascontiguousarray(state.Z[:, 1]).copy()
        self.psi = state.psi.copy()
        self.std_z = np.full(n, float(space.prop_std_z))
        self.std_psi = np.array(space.prop_std_psi, dtype=float)
        self.free_z = np.ones(n, dtype=np.bool_)
        self.free_z[list(config.fixed_nodes)] = False
        self.free_psi = np.ones(K, dtype=np.bool_)
        self.free_psi[list(config.fixed_psi)] = False
        self.grid = state.grid
        self.table = np.empty(config.M * config.M if config.mode == "noisy" else 1)
        self.reset_counts()

    def reset_counts(self):
        n, K = self.zx.size, self.psi.size
        self.prop_z = np.zeros(n, dtype=np.int64)
        self.acc_z = np.zeros(n, dtype=np.int64)
        self.prop_psi = np.zeros(K, dtype=np.int64)
        self.acc_psi = np.zeros(K, dtype=np.int64)

    def rates(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            rz = np.where(self.prop_z > 0, self.acc_z / np.maximum(self.prop_z, 1), np.nan)
            rp = np.where(self.prop_psi > 0, self.acc_psi / np.maximum(self.prop_psi, 1), np.nan)
        return rz, rp

    def advance(self, n_sweeps, store_every=0, z_out=None, psi_out=None, out_start=0):
        c, s, net = self.config, self.space, self.net
        n, K = self.zx.size, self.psi.size
        if psi_out is None:
            psi_out = np.empty((0, K))
        store_z = z_out is not None
        if z_out is None:
            z_out = np.empty((0, n, 2))
        common = (n_sweeps, store_every, out_start, z_out, psi_out, store_z,
                  self.zx, self.zy, self.psi, self.kind, net.indptr, net.indices,
                  s.S, s.gamma, s.psi_bounds[:, 0].copy(), s.psi_bounds[:, 1].copy(),
                  s.psi_prior_std, self.std_z, self.std_psi, self.free_z, self.free_psi,
                  c.random_scan, self.prop_z, self.acc_z, self.prop_psi, self.acc_psi)
        if c.mode == "exact":
            return _k.exact_sweeps(*common)
        g = self.grid
        stored = _k.noisy_sweeps(*common, c.noisy_kernel == "joint", g.M, g.b, g.box_of,
                                 g.occ, g.ne_list, g.ne_pos, g.n_ne, g.xi_box, g.xi_cnt,
                                 g.xi_len, g.cx, g.cy, self.table)
        if c.check_grid and np.any(g.xi_len < 0):
            raise InternalConsistencyError("grid counts corrupted during sweep")
        return stored


def _numba_seed(seed: int) -> int:
    return int(np.random.SeedSequence(seed).generate_state(1)[0])


def run(net: Network, link: LinkFunction, space: ParameterSpace,
        config: SamplerConfig) -> ChainSample:
    """Burn in (optionally adapting proposal scales), then sample with thinning."""
    state = initial_state(net, link, space, config)
    chain = _Chain(state, net, link, space, config)
    _k.seed(_numba_seed(config.seed))

    z_cap = space.S
    psi_cap = 0.5 * (space.psi_bounds[:, 1] - space.psi_bounds[:, 0])
    t0 = time.perf_counter()
    done = 0
    while done < config.burn_in:
        step = min(config.adapt_interval, config.burn_in - done) if config.adapt else config.burn_in
        chain.reset_counts()
        chain.advance(step)
        done += step
        if config.adapt:
            rz, rp = chain.rates()
            chain.std_z[:] = adapt_proposals(np.nan_to_num(rz, nan=0.35), chain.std_z,
                                             config.adapt_window, cap=z_cap)
            chain.std_psi[:] = adapt_proposals(np.nan_to_num(rp, nan=0.35), chain.std_psi,
                                               config.adapt_window, cap=psi_cap)
    t_burn = time.perf_counter() - t0

    n_keep = config.n_draws
    n_samp = config.iterations - config.burn_in
    psi_out = np.empty((n_keep, space.K))
    z_out = np.empty((n_keep, net.n_nodes, 2)) if config.store_z else None
    chain.reset_counts()
    t0 = time.perf_counter()
    stored = chain.advance(n_samp, config.thin, z_out, psi_out, 0)
    t_samp = time.perf_counter() - t0
    if stored != n_keep:
        raise InternalConsistencyError(f"stored {stored} draws, expected {n_keep}")
    if config.mode == "noisy" and config.check_grid:
        chain.grid.check_invariants()

    rz, rp = chain.rates()
    timings = {
        "burn_in_seconds": t_burn,
        "burn_in_per_sweep": t_burn / config.burn_in if config.burn_in else 0.0,
        "sampling_seconds": t_samp,
        "sampling_per_sweep": t_samp / n_samp,
        "total_seconds": t_burn + t_samp,
    }
    return ChainSample(
        Z=z_out,
        psi=psi_out,
        acceptance_z=rz,
        acceptance_psi=rp,
        timings=timings,
        std_z=chain.std_z.copy(),
        std_psi=chain.std_psi.copy(),
        final_Z=np.column_stack([chain.zx, chain.zy]),
        final_psi=chain.psi.copy(),
        config=config,
    )
