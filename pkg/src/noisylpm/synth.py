"""Synthetic latent position networks.

Positions are drawn in ``[-S, S]^2`` (uniform, or a truncated spherical
Gaussian), then every unordered pair is linked independently with
probability ``rho(d_ij; psi)``.  Edges are drawn a block of rows at a time so
memory stays O(block * N) rather than O(N^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import expit

from .graph import Network, from_edges
from .model import TWO_PARAM, LinkFunction, sample_truncnorm

__all__ = ["SynthSpec", "generate", "sample_positions", "expected_density", "STUDY1"]


@dataclass(frozen=True)
class SynthSpec:
    N: int = 200
    beta: float = 0.5
    theta: float = math.log(3.0)
    law: str = "uniform"
    seed: int = 0
    pin_first_node_at_origin: bool = False
    S: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if self.law not in ("uniform", "truncated-gaussian"):
            raise ValueError(f"unknown position law {self.law!r}")
        if not self.S > 0 or not self.gamma > 0:
            raise ValueError("S and gamma must be positive")

    def psi(self, link: LinkFunction = TWO_PARAM) -> np.ndarray:
        return np.array([self.beta]) if link.kind == "hoff" else np.array([self.beta, self.theta])


STUDY1 = SynthSpec()


def sample_positions(spec: SynthSpec, rng) -> np.ndarray:
    N, S = spec.N, spec.S
    if spec.law == "uniform":
        Z = rng.uniform(-S, S, size=(N, 2))
    else:
        g = spec.gamma
        Z = g * sample_truncnorm(rng, 0.0, 1.0, -S / g, S / g, size=(N, 2))
    if spec.pin_first_node_at_origin:
        Z[0] = 0.0
    return Z


def _draw_edges(Z, beta, scale, rng, block=512):
    N = Z.shape[0]
    src, dst = [], []
    for r0 in range(0, N - 1, block):
        r1 = min(r0 + block, N - 1)
        rows = np.arange(r0, r1)
        d = np.hypot(Z[rows, None, 0] - Z[None, :, 0], Z[rows, None, 1] - Z[None, :, 1])
        p = expit(beta - scale * d)
        u = rng.random(p.shape)
        hit = (u < p) & (np.arange(N)[None, :] > rows[:, None])
        i, j = np.nonzero(hit)
        src.append(rows[i])
        dst.append(j)
    return np.concatenate(src), np.concatenate(dst)


def generate(spec: SynthSpec, link: LinkFunction = TWO_PARAM):
    """Return ``(network, true positions, true psi)``; deterministic in ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    Z = sample_positions(spec, rng)
    psi = spec.psi(link)
    beta, scale = link.beta_scale(psi)
    src, dst = _draw_edges(Z, beta, scale, rng)
    return from_edges(spec.N, src, dst), Z, psi


def _square_distance_pdf(t):
    # distance between two uniform points in the unit square
    if t <= 1.0:
        return 2.0 * t * (math.pi - 4.0 * t + t * t)
    return 2.0 * t * (4.0 * math.sqrt(t * t - 1.0) - (t * t + 2.0 - math.pi)
                      - 4.0 * math.acos(1.0 / t))


def expected_density(spec: SynthSpec, link: LinkFunction = TWO_PARAM,
                     n_nodes: int = 48) -> float:
    """``E[rho(d)]`` for two independent nodes drawn from the position law.

    Uniform positions integrate against the closed-form distance density on
    the square; the truncated Gaussian uses tensor Gauss-Legendre quadrature
    over the four coordinates.
    """
    beta, scale = link.beta_scale(spec.psi(link))
    L = 2.0 * spec.S
    if spec.law == "uniform":
        f = lambda t: expit(beta - scale * L * t) * _square_distance_pdf(t)
        a, _ = integrate.quad(f, 0.0, 1.0, epsabs=1e-13, epsrel=1e-11)
        b, _ = integrate.quad(f, 1.0, math.sqrt(2.0), epsabs=1e-13, epsrel=1e-11)
        return a + b
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    x = spec.S * x
    w = spec.S * w * np.exp(-0.5 * (x / spec.gamma) ** 2)
    w = w / w.sum()
    X1, Y1, X2, Y2 = np.meshgrid(x, x, x, x, indexing="ij", sparse=True)
    W = (w[:, None, None, None] * w[None, :, None, None]
         * w[None, None, :, None] * w[None, None, None, :])
    d = np.sqrt((X1 - X2) ** 2 + (Y1 - Y2) ** 2)
    return float(np.sum(W * expit(beta - scale * d)))
