"""Error bounds for the grid approximation and their empirical certificates.

All bounds share the grid-refinement function

    eta(b) = chi1 * b + chi2 * log(1 + chi3 * b)

with ``chi1 = 2 sqrt(2) kp (N-1) / pL``, ``chi2 = 2 (N-1)`` and
``chi3 = kp sqrt(2) / (1 - pU)``, and the base

    [(1 - 1/pL) / (1 - 1/pU)] = (1 - pL) pU / ((1 - pU) pL) > 1.

Powers of the base overflow quickly, so every bound is formed in log space
and exponentiated last (``inf`` is a legitimate, vacuous, answer).
Constants for position-related quantities carry a ``z`` suffix and those for
the global parameters a ``psi`` suffix.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .likelihood import LatentState
from .likelihood import exact_log_lr_psi, exact_log_lr_z, noisy_log_lr_psi, noisy_log_lr_z
from .model import (LinkFunction, ParameterSpace, derived_constants, propose_psi,
                    propose_z)
from .sampler import log_accept_psi, log_accept_z

__all__ = [
    "BoundReport",
    "chi_constants",
    "eta",
    "log_base",
    "theorem2_bounds",
    "corollary2_bounds",
    "theorem3_bound",
    "prior_ratio_bounds",
    "proposal_ratio_bounds",
    "lemma1_certify",
    "certify_instance",
    "bound_report",
]


def _exp(x: float) -> float:
    return math.inf if x > 709.0 else math.exp(x)


def _exp_sum(*logs) -> float:
    # a zero factor wins over overflowing constants: 0 * inf is 0 here
    if any(v == -math.inf for v in logs):
        return 0.0
    return _exp(sum(logs))


def chi_constants(N, p_lower, p_upper, kp):
    chi1 = 2.0 * math.sqrt(2.0) * kp * (N - 1) / p_lower
    chi2 = 2.0 * (N - 1)
    chi3 = kp * math.sqrt(2.0) / (1.0 - p_upper)
    return chi1, chi2, chi3


def eta(b, N, p_lower, p_upper, kp):
    if b < 0:
        raise ValueError("box side must be non-negative")
    chi1, chi2, chi3 = chi_constants(N, p_lower, p_upper, kp)
    return chi1 * b + chi2 * math.log1p(chi3 * b)


def log_base(p_lower, p_upper):
    """log of ``(1 - pL) pU / ((1 - pU) pL)``."""
    if not 0 < p_lower <= p_upper < 1:
        raise ValueError("need 0 < p_lower <= p_upper < 1")
    return (math.log1p(-p_lower) + math.log(p_upper)
            - math.log1p(-p_upper) - math.log(p_lower))


def _log1mexp(x):
    # log(1 - exp(-x)) for x >= 0
    if x == 0:
        return -math.inf
    return math.log(-math.expm1(-x)) if x < 0.693 else math.log1p(-math.exp(-x))


def _theorem2_logs(b, N, p_lower, p_upper, kp):
    e = eta(b, N, p_lower, p_upper, kp)
    lb = log_base(p_lower, p_upper)
    lz = (N - 1) * lb + _log1mexp(e)
    lpsi = N * (N - 1) / 2 * lb + _log1mexp(0.5 * N * e)
    return lz, lpsi


def theorem2_bounds(b, N, p_lower, p_upper, kp):
    """``(z_bound, psi_bound)`` on |exact - noisy| likelihood ratios."""
    lz, lpsi = _theorem2_logs(b, N, p_lower, p_upper, kp)
    return _exp(lz), _exp(lpsi)


def prior_ratio_bounds(space: ParameterSpace):
    """``(psi, z)`` upper bounds on prior ratios over the bounded supports.

    Positions: truncated N(0, gamma^2) per coordinate, so the ratio is at most
    ``phi(0)/phi(S/gamma)`` per coordinate, ``exp(S^2/gamma^2)`` overall.
    Global parameters: N(0, s^2) restricted to the bounds, ratio at most
    ``exp(max(lo^2, hi^2) / (2 s^2))`` (one coordinate per update).
    """
    kz = math.exp(space.S ** 2 / space.gamma ** 2)
    m = float(np.max(space.psi_bounds ** 2))
    kpsi = math.exp(m / (2.0 * space.psi_prior_std ** 2))
    return kpsi, kz


def proposal_ratio_bounds(space: ParameterSpace, std_z=None, std_psi=None):
    """``(psi, z)`` upper bounds on truncated random-walk proposal ratios.

    A truncated Gaussian walk on an interval of width ``w`` has normaliser
    ratio at most ``phi(0)/phi(w/v)``; the square gives ``exp(4 S^2 / v^2)``.
    """
    vz = space.prop_std_z if std_z is None else std_z
    vpsi = np.asarray(space.prop_std_psi if std_psi is None else std_psi, dtype=float)
    kz = _exp(4.0 * space.S ** 2 / vz ** 2)
    w = space.psi_bounds[:, 1] - space.psi_bounds[:, 0]
    kpsi = _exp(float(np.max(w ** 2 / (2.0 * np.broadcast_to(vpsi, w.shape) ** 2))))
    return kpsi, kz


def _log(x):
    return math.log(x) if x > 0 else -math.inf


def corollary2_bounds(b, N, p_lower, p_upper, kp, k_pi_psi, k_q_psi, k_pi_z, k_q_z):
    """``(psi_acc_bound, z_acc_bound)`` on |exact - noisy| acceptance probabilities.

    The exponents follow the printed statement: the global-parameter bound
    uses ``N - 1`` with ``eta`` and the position bound ``N(N-1)/2`` with
    ``(N/2) eta``, i.e. they are swapped relative to the likelihood-ratio
    bounds.
    """
    lz, lpsi = _theorem2_logs(b, N, p_lower, p_upper, kp)
    return (_exp_sum(_log(k_pi_psi), _log(k_q_psi), lz),
            _exp_sum(_log(k_pi_z), _log(k_q_z), lpsi))


def ergodicity_lambda(C, tau):
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    if not C > 0:
        raise ValueError("C must be positive")
    return max(0, math.ceil(math.log(1.0 / C) / math.log(tau)))


def theorem3_bound(b, N, p_lower, p_upper, kp, k_pi_psi, k_q_psi, k_pi_z, k_q_z,
                   C=1.0, tau=0.99, t=None):
    """Total-variation bound between exact and noisy chains after any ``t`` steps.

    The bound does not depend on ``t``; it is accepted for symmetry with the
    statement.  ``lambda`` is floored at zero (for ``C < 1`` the ceiling is
    negative and the statement needs ``lambda >= 0``).
    """
    lam = ergodicity_lambda(C, tau)
    pre = lam + C * tau ** lam / (1.0 - tau)
    e = eta(b, N, p_lower, p_upper, kp)
    kmax = max(k_q_psi * k_pi_psi, k_q_z * k_pi_z)
    return _exp_sum(_log(pre), _log(kmax), (N - 1) * log_base(p_lower, p_upper),
                    _log1mexp(0.5 * N * e))


# ---------------------------------------------------------------------------
# report

@dataclass
class BoundReport:
    N: int
    K: int
    M: int
    b: float
    p_lower: float
    p_upper: float
    kp: float
    kappa_pi_psi: float
    kappa_pi_z: float
    kappa_q_psi: float
    kappa_q_z: float
    chi1: float
    chi2: float
    chi3: float
    eta: float
    theorem2_z: float
    theorem2_psi: float
    corollary2_psi: float
    corollary2_z: float
    C: float
    tau: float
    lam: int
    theorem3: float
    R: int
    nu_z: float
    nu_psi: float
    kernel_gap_z: float
    kernel_gap_psi: float
    composite_gap: float
    vacuous: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and math.isinf(v):
                return "inf"
            return v
        return {k: (clean(v) if not isinstance(v, dict) else v) for k, v in asdict(self).items()}


def bound_report(link: LinkFunction, space: ParameterSpace, N: int, M: int | None = None,
                 b: float | None = None, C: float = 1.0, tau: float = 0.99) -> BoundReport:
    """Evaluate every constant and bound for one (link, space, N, grid)."""
    if (M is None) == (b is None):
        raise ValueError("give exactly one of M or b")
    if b is None:
        b = 2.0 * space.S / M
    pL, pU, kp = derived_constants(link, space)
    kpi_psi, kpi_z = prior_ratio_bounds(space)
    kq_psi, kq_z = proposal_ratio_bounds(space)
    chi1, chi2, chi3 = chi_constants(N, pL, pU, kp)
    t2z, t2p = theorem2_bounds(b, N, pL, pU, kp)
    c2p, c2z = corollary2_bounds(b, N, pL, pU, kp, kpi_psi, kq_psi, kpi_z, kq_z)
    t3 = theorem3_bound(b, N, pL, pU, kp, kpi_psi, kq_psi, kpi_z, kq_z, C, tau)
    nu_z = (2.0 * space.S) ** 2
    nu_psi = float(np.max(space.psi_bounds[:, 1] - space.psi_bounds[:, 0]))
    gap_z, gap_psi = nu_z * c2z, nu_psi * c2p
    R = N + space.K
    vals = {"theorem2_z": t2z, "theorem2_psi": t2p, "corollary2_psi": c2p,
            "corollary2_z": c2z, "theorem3": t3}
    return BoundReport(
        N=N, K=space.K, M=-1 if M is None else int(M), b=b, p_lower=pL, p_upper=pU, kp=kp,
        kappa_pi_psi=kpi_psi, kappa_pi_z=kpi_z, kappa_q_psi=kq_psi, kappa_q_z=kq_z,
        chi1=chi1, chi2=chi2, chi3=chi3, eta=eta(b, N, pL, pU, kp),
        theorem2_z=t2z, theorem2_psi=t2p, corollary2_psi=c2p, corollary2_z=c2z,
        C=C, tau=tau, lam=ergodicity_lambda(C, tau), theorem3=t3, R=R,
        nu_z=nu_z, nu_psi=nu_psi, kernel_gap_z=gap_z, kernel_gap_psi=gap_psi,
        composite_gap=R * max(gap_z, gap_psi),
        vacuous={k: bool(v > 1.0) for k, v in vals.items() if k != "theorem2_z" and k != "theorem2_psi"},
        notes=[
            "prior ratio bound for positions is exp(S^2/gamma^2); a printed "
            "exp(-S^2/gamma^2) is below 1 and cannot bound a ratio",
            "theorem3 uses the printed exponents (N-1 with (N/2) eta)",
        ],
    )


# ---------------------------------------------------------------------------
# certificates

def lemma1_certify(link: LinkFunction, space: ParameterSpace, samples: int = 100_000,
                   seed: int = 0) -> dict:
    """Check both Lipschitz ratio sandwiches on random ``(d1, d2, psi)``.

    Returns the number of violations of each sandwich and the smallest
    slack (distance from the ratio to the nearer bound, in log units).
    """
    rng = np.random.default_rng(seed)
    pL, pU, kp = derived_constants(link, space)
    dmax = space.max_distance
    d1 = rng.uniform(0.0, dmax, samples)
    d2 = rng.uniform(0.0, dmax, samples)
    lo, hi = space.psi_bounds[:, 0], space.psi_bounds[:, 1]
    psi = rng.uniform(lo, hi, size=(samples, space.K))
    beta = psi[:, 0]
    scale = np.ones(samples) if link.kind == "hoff" else np.exp(psi[:, 1])
    x1, x2 = beta - scale * d1, beta - scale * d2
    delta = np.abs(d2 - d1)
    # log f(d2)/f(d1) and log (1-f(d2))/(1-f(d1)) through log-sigmoids
    lr1 = -np.logaddexp(0, -x2) + np.logaddexp(0, -x1)
    lr0 = -np.logaddexp(0, x2) + np.logaddexp(0, x1)
    b1 = kp * delta / pL
    b0 = np.log1p(kp * delta / (1.0 - pU))
    tol = 1e-12
    v1 = int(np.sum((lr1 > b1 + tol) | (lr1 < -b1 - tol)))
    v0 = int(np.sum((lr0 > b0 + tol) | (lr0 < -b0 - tol)))
    slack1 = np.minimum(b1 - lr1, lr1 + b1)
    slack0 = np.minimum(b0 - lr0, lr0 + b0)
    return {
        "samples": samples,
        "violations_lemma_1": v1,
        "violations_lemma_2": v0,
        "min_slack_lemma_1": float(slack1.min()),
        "min_slack_lemma_2": float(slack0.min()),
        "passed": v1 == 0 and v0 == 0,
    }


def certify_instance(state: LatentState, net, link: LinkFunction, space: ParameterSpace,
                     n_proposals: int = 1000, seed: int = 0, kernel: str = "joint",
                     C: float = 1.0, tau: float = 0.99) -> dict:
    """Compare exact and noisy ratios and acceptances against every bound.

    ``state`` must carry a grid; proposals are the truncated random walks
    with the space's proposal scales.  Returns the
    violation count and the largest observed gap for each bound.
    """
    if state.grid is None:
        raise ValueError("state needs a grid")
    rng = np.random.default_rng(seed)
    N = state.n_nodes
    rep = bound_report(link, space, N, M=state.grid.M, C=C, tau=tau)
    out = {k: {"bound": getattr(rep, k), "max_gap": 0.0, "violations": 0}
           for k in ("theorem2_z", "theorem2_psi", "corollary2_z", "corollary2_psi")}
    # log-scale errors, the step of the argument before the base is introduced
    out["log_z"] = {"bound": rep.eta, "max_gap": 0.0, "violations": 0}
    out["log_psi"] = {"bound": 0.5 * N * rep.eta, "max_gap": 0.0, "violations": 0}

    def note(key, gap):
        r = out[key]
        r["max_gap"] = max(r["max_gap"], gap)
        if gap > r["bound"] * (1 + 1e-9) + 1e-15:
            r["violations"] += 1

    for _ in range(n_proposals):
        i = int(rng.integers(N))
        z_new, lq = propose_z(state.Z[i], space, rng)
        le = exact_log_lr_z(state, net, link, i, z_new)
        ln = noisy_log_lr_z(state, net, link, i, z_new, kernel)
        note("theorem2_z", abs(_exp(le) - _exp(ln)) if max(le, ln) < 700 else math.inf)
        note("log_z", abs(le - ln))
        ae = log_accept_z(state, net, link, space, i, z_new, lq, "exact")
        an = log_accept_z(state, net, link, space, i, z_new, lq, "noisy", kernel)
        note("corollary2_z", abs(math.exp(min(ae, 0.0)) - math.exp(min(an, 0.0))))

        k = int(rng.integers(space.K))
        psi_new = state.psi.copy()
        psi_new[k], lq = propose_psi(state.psi[k], space.psi_bounds[k], rng,
                                     space.prop_std_psi[k])
        le = exact_log_lr_psi(state, net, link, k, psi_new)
        ln = noisy_log_lr_psi(state, net, link, k, psi_new)
        note("theorem2_psi", abs(_exp(le) - _exp(ln)) if max(le, ln) < 700 else math.inf)
        note("log_psi", abs(le - ln))
        ae = log_accept_psi(state, net, link, space, k, psi_new, lq, "exact")
        an = log_accept_psi(state, net, link, space, k, psi_new, lq, "noisy")
        note("corollary2_psi", abs(math.exp(min(ae, 0.0)) - math.exp(min(an, 0.0))))

    out["passed"] = all(v["violations"] == 0 for v in out.values() if isinstance(v, dict))
    return out
