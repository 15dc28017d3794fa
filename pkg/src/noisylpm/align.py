"""Procrustes matching of posterior position draws.

The likelihood only sees pairwise distances, so positions are identified up
to translation, rotation and reflection.  Draws are mapped onto a reference
configuration with the translation and orthogonal transform minimising the
summed squared residual; no scaling is applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .likelihood import LatentState, exact_log_lik
from .model import log_prior_psi, log_prior_z

__all__ = [
    "ReferenceConfig",
    "procrustes_align",
    "procrustes_transform",
    "align_draws",
    "map_draw",
    "posterior_mean_positions",
    "rmse",
]


@dataclass(frozen=True)
class ReferenceConfig:
    points: np.ndarray
    source: str = "true-positions"
    index: int | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("reference points must have shape (N, 2)")
        if self.source not in ("true-positions", "MAP-draw"):
            raise ValueError(f"unknown reference source {self.source!r}")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)


def _as_points(ref):
    return ref.points if isinstance(ref, ReferenceConfig) else np.asarray(ref, dtype=float)


def procrustes_transform(draw, ref):
    """Return ``(R, t)`` with ``draw @ R + t`` closest to ``ref``.

    ``R`` is orthogonal (reflections allowed).  When ``draw`` has no spread
    the orthogonal part is the identity and only the translation is fitted.
    """
    X = np.asarray(draw, dtype=float)
    Y = _as_points(ref)
    if X.shape != Y.shape:
        raise ValueError(f"point sets differ in shape: {X.shape} vs {Y.shape}")
    mx, my = X.mean(axis=0), Y.mean(axis=0)
    Xc, Yc = X - mx, Y - my
    if np.allclose(Xc, 0.0):
        R = np.eye(X.shape[1])
    else:
        u, _, vt = np.linalg.svd(Xc.T @ Yc)
        R = u @ vt
    return R, my - mx @ R


def procrustes_align(draw, ref) -> np.ndarray:
    R, t = procrustes_transform(draw, ref)
    return np.asarray(draw, dtype=float) @ R + t


def align_draws(draws, ref) -> np.ndarray:
    """Align every draw in an ``(n_draws, N, 2)`` stack."""
    draws = np.asarray(draws, dtype=float)
    return np.stack([procrustes_align(d, ref) for d in draws]) if len(draws) else draws.copy()


def posterior_mean_positions(draws, ref) -> np.ndarray:
    """Mean of the aligned draws (alignment always precedes averaging)."""
    return align_draws(draws, ref).mean(axis=0)


def rmse(a, b) -> float:
    """Root mean squared Euclidean distance between matched points."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.sqrt(np.mean(np.sum((a - b) ** 2, axis=-1))))


def log_posterior(Z, psi, net, link, space) -> float:
    """Exact unnormalised log posterior of one configuration."""
    Z = np.asarray(Z, dtype=float)
    lp = log_prior_psi(psi, space)
    if lp == -math.inf or not space.in_square(Z):
        return -math.inf
    lp += sum(log_prior_z(z, space) for z in Z)
    return lp + exact_log_lik(LatentState(Z, psi), net, link)


def map_draw(sample, net, link, space) -> ReferenceConfig:
    """Stored draw with the largest exact log posterior; earliest wins ties."""
    if sample.Z is None or sample.Z.shape[0] == 0:
        raise ValueError("chain has no stored position draws")
    best, best_val = 0, -math.inf
    for t in range(sample.Z.shape[0]):
        v = log_posterior(sample.Z[t], sample.psi[t], net, link, space)
        if v > best_val:
            best, best_val = t, v
    return ReferenceConfig(sample.Z[best], "MAP-draw", best)
