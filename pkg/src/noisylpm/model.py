"""Link functions, bounded parameter spaces, priors and proposals.

Both supported links are logistic in a linear predictor of the latent
distance::

    logit rho(d, psi) = beta - scale * d

with ``scale = 1`` for the single-intercept logit link (``psi = (beta,)``)
and ``scale = exp(theta)`` for the two-parameter link (``psi = (beta, theta)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_ndtr, ndtr, ndtri

__all__ = [
    "LinkFunction",
    "ParameterSpace",
    "HOFF",
    "TWO_PARAM",
    "edge_prob",
    "log_prior_z",
    "log_prior_psi",
    "propose_z",
    "propose_psi",
    "derived_constants",
    "truncnorm_log_mass",
    "sample_truncnorm",
    "study_space",
]

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class LinkFunction:
    kind: str = "two_param"

    def __post_init__(self):
        if self.kind not in ("hoff", "two_param"):
            raise ValueError(f"unknown link kind {self.kind!r}")

    @property
    def code(self) -> int:
        return 0 if self.kind == "hoff" else 1

    @property
    def n_params(self) -> int:
        return 1 if self.kind == "hoff" else 2

    @property
    def param_names(self) -> tuple[str, ...]:
        return ("psi",) if self.kind == "hoff" else ("beta", "theta")

    def beta_scale(self, psi) -> tuple[float, float]:
        psi = np.asarray(psi, dtype=float)
        if self.kind == "hoff":
            return float(psi[0]), 1.0
        return float(psi[0]), math.exp(float(psi[1]))

    def logit(self, d, psi):
        beta, scale = self.beta_scale(psi)
        return beta - scale * np.asarray(d, dtype=float)

    def __call__(self, d, psi):
        return expit(self.logit(d, psi))


HOFF = LinkFunction("hoff")
TWO_PARAM = LinkFunction("two_param")


@dataclass
class ParameterSpace:
    """Bounded supports, prior scales and initial proposal scales.

    ``psi_bounds`` has one ``(lower, upper)`` row per global parameter.
    """

    S: float = 1.0
    psi_bounds: np.ndarray = field(default_factory=lambda: np.array([[-10.0, 10.0], [-5.0, 5.0]]))
    gamma: float = 1.0
    prop_std_z: float = 0.1
    prop_std_psi: np.ndarray | float = 0.1
    psi_prior_std: float = 10.0

    def __post_init__(self):
        self.psi_bounds = np.atleast_2d(np.asarray(self.psi_bounds, dtype=float))
        k = self.psi_bounds.shape[0]
        self.prop_std_psi = np.broadcast_to(
            np.asarray(self.prop_std_psi, dtype=float), (k,)).copy()
        if self.psi_bounds.shape[1] != 2:
            raise ValueError("psi_bounds must have shape (K, 2)")
        if not self.S > 0:
            raise ValueError("S must be positive")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.prop_std_z > 0 or not np.all(self.prop_std_psi > 0):
            raise ValueError("proposal standard deviations must be positive")
        if not self.psi_prior_std > 0:
            raise ValueError("psi_prior_std must be positive")
        if np.any(self.psi_bounds[:, 0] >= self.psi_bounds[:, 1]):
            raise ValueError("each psi interval needs lower < upper")

    @property
    def K(self) -> int:
        return self.psi_bounds.shape[0]

    @property
    def max_distance(self) -> float:
        return 2.0 * SQRT2 * self.S

    def psi_midpoint(self) -> np.ndarray:
        return self.psi_bounds.mean(axis=1)

    def in_square(self, z) -> bool:
        z = np.asarray(z, dtype=float)
        return bool(np.all(np.abs(z) <= self.S))

    def in_psi_bounds(self, psi) -> bool:
        psi = np.asarray(psi, dtype=float)
        return bool(np.all((psi >= self.psi_bounds[:, 0]) & (psi <= self.psi_bounds[:, 1])))

    def check_link(self, link: LinkFunction) -> None:
        if link.n_params != self.K:
            raise ValueError(
                f"link {link.kind!r} has {link.n_params} global parameters, space has {self.K}")

    def to_dict(self) -> dict:
        return {
            "S": self.S,
            "psi_bounds": self.psi_bounds.tolist(),
            "gamma": self.gamma,
            "prop_std_z": self.prop_std_z,
            "prop_std_psi": self.prop_std_psi.tolist(),
            "psi_prior_std": self.psi_prior_std,
        }


def study_space(link: LinkFunction = TWO_PARAM, **overrides) -> ParameterSpace:
    """Defaults used for the simulation studies (S = gamma = 1)."""
    if link.kind == "hoff":
        overrides.setdefault("psi_bounds", [[-10.0, 10.0]])
    return ParameterSpace(**overrides)


def edge_prob(link: LinkFunction, d, psi):
    return link(d, psi)


# ---------------------------------------------------------------------------
# truncated Gaussian helpers

def truncnorm_log_mass(loc, scale, lo, hi):
    """``log(Phi((hi - loc)/scale) - Phi((lo - loc)/scale))``, elementwise."""
    a = (np.asarray(lo, dtype=float) - loc) / scale
    b = (np.asarray(hi, dtype=float) - loc) / scale
    a, b = np.broadcast_arrays(a, b)
    out = np.empty(a.shape)
    # use the upper tail when both limits are positive to avoid cancellation
    upper = a > 0
    lb, la = log_ndtr(-a[upper]), log_ndtr(-b[upper])
    out[upper] = lb + np.log1p(-np.exp(la - lb))
    lb, la = log_ndtr(b[~upper]), log_ndtr(a[~upper])
    out[~upper] = lb + np.log1p(-np.exp(la - lb))
    return out if out.ndim else float(out)


def sample_truncnorm(rng, loc, scale, lo, hi, size=None):
    """Gaussian(loc, scale) truncated to ``[lo, hi]`` by inverse CDF."""
    loc = np.asarray(loc, dtype=float)
    shape = np.broadcast_shapes(loc.shape, np.shape(lo), np.shape(hi)) if size is None else size
    a = ndtr((np.asarray(lo) - loc) / scale)
    b = ndtr((np.asarray(hi) - loc) / scale)
    u = rng.uniform(size=shape)
    p = a + u * (b - a)
    x = loc + scale * ndtri(np.clip(p, 1e-300, 1 - 1e-16))
    return np.clip(x, lo, hi)


# ---------------------------------------------------------------------------
# priors

def log_prior_z(z, space: ParameterSpace) -> float:
    """Truncated spherical Gaussian prior on ``[-S, S]^2``."""
    z = np.asarray(z, dtype=float)
    if not space.in_square(z):
        return -math.inf
    g, S = space.gamma, space.S
    log_norm = math.log(g) + truncnorm_log_mass(0.0, 1.0, -S / g, S / g)
    return float(np.sum(-0.5 * (z / g) ** 2 - 0.5 * math.log(2 * math.pi) - log_norm))


def log_prior_psi(psi, space: ParameterSpace) -> float:
    """Independent Gaussian log-densities (mean 0) inside the bounds."""
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (space.K,) or not space.in_psi_bounds(psi):
        return -math.inf
    s = space.psi_prior_std
    return float(np.sum(-0.5 * (psi / s) ** 2 - 0.5 * math.log(2 * math.pi) - math.log(s)))


# ---------------------------------------------------------------------------
# proposals

def _tn_log_q_ratio(x, x_new, std, lo, hi):
    # log q(x_new -> x) - log q(x -> x_new); Gaussian kernels cancel
    return float(np.sum(truncnorm_log_mass(x, std, lo, hi) - truncnorm_log_mass(x_new, std, lo, hi)))


def propose_z(z, space: ParameterSpace, rng, std: float | None = None):
    """Truncated Gaussian random walk inside the latent square."""
    std = space.prop_std_z if std is None else std
    z = np.asarray(z, dtype=float)
    z_new = sample_truncnorm(rng, z, std, -space.S, space.S, size=z.shape)
    return z_new, _tn_log_q_ratio(z, z_new, std, -space.S, space.S)


def propose_psi(psi_k: float, bounds, rng, std: float):
    lo, hi = float(bounds[0]), float(bounds[1])
    new = float(sample_truncnorm(rng, psi_k, std, lo, hi, size=()))
    return new, _tn_log_q_ratio(psi_k, new, std, lo, hi)


def log_q_ratio(x, x_new, std, lo, hi) -> float:
    return _tn_log_q_ratio(np.asarray(x, float), np.asarray(x_new, float), std, lo, hi)


# ---------------------------------------------------------------------------
# Assumption constants

def derived_constants(link: LinkFunction, space: ParameterSpace) -> tuple[float, float, float]:
    """Return ``(p_lower, p_upper, lipschitz)`` over the bounded space.

    The logit is increasing in ``beta`` and decreasing in ``scale * d``, so
    the extremes sit at corners of the bound box: distance 0 with the largest
    intercept, and the diagonal ``2*sqrt(2)*S`` with the smallest intercept
    and largest scale.  ``|d rho / d d| = scale * rho * (1 - rho) <= scale / 4``.
    """
    space.check_link(link)
    lo, hi = space.psi_bounds[:, 0], space.psi_bounds[:, 1]
    beta_hi, beta_lo = hi[0], lo[0]
    scale_hi = 1.0 if link.kind == "hoff" else math.exp(hi[1])
    p_upper = float(expit(beta_hi))
    p_lower = float(expit(beta_lo - scale_hi * space.max_distance))
    return p_lower, p_upper, scale_hi / 4.0
