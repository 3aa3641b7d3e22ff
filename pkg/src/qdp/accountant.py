"""Renyi-DP accounting for the quantized Gaussian mechanism.

Divergences between level distributions are evaluated in log space. The
alpha = 1 budget is the KL divergence between the distributions at the two
extremal inputs +-c_q/2; the alpha -> infinity budget is the closed-form
worst-case log-ratio bound. A plain Gaussian baseline, additive
composition, RDP-to-DP conversion, and noise calibration complete a small
accounting toolkit. All epsilons are in natural-log units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .pmf import LevelPmf, NoiseSpec, partial_first_moment, quantized_gaussian_pmf
from .quantizer import QuantizerSpec

__all__ = [
    "RdpPoint",
    "DpPoint",
    "MechanismSpec",
    "SweepRow",
    "renyi_divergence",
    "epsilon_one",
    "epsilon_infinity",
    "gaussian_rdp_baseline",
    "compose",
    "rdp_to_dp",
    "calibrate_sigma",
    "budget_sweep",
]

# Orders used when calibrating noise; standard accountant grid, recorded in
# calibration output via the docstring contract.
DEFAULT_ALPHA_GRID = (1.25, 1.5, 2.0, 3.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0)


@dataclass(frozen=True)
class RdpPoint:
    """(alpha, epsilon) Renyi-DP guarantee; alpha may be math.inf."""

    alpha: float
    epsilon: float

    def __post_init__(self):
        if not self.alpha >= 1:
            raise ValueError(f"Renyi order must be >= 1, got {self.alpha}")
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")


@dataclass(frozen=True)
class DpPoint:
    """(epsilon, delta) approximate-DP guarantee."""

    epsilon: float
    delta: float

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")


@dataclass(frozen=True)
class MechanismSpec:
    """Quantized Gaussian mechanism: noise scale, lattice, and L2 sensitivity.

    The scalar worst case puts the two neighboring inputs at +-c_q/2, so the
    sensitivity is pinned to c_q; passing anything else is rejected to keep
    the Gaussian-baseline comparison apples-to-apples.
    """

    noise: NoiseSpec
    quant: QuantizerSpec
    sensitivity: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.sensitivity is None:
            object.__setattr__(self, "sensitivity", self.quant.c_q)
        elif self.sensitivity != self.quant.c_q:
            raise ValueError(
                f"sensitivity {self.sensitivity} must equal c_q={self.quant.c_q} "
                "for the worst-case scalar analysis"
            )


def renyi_divergence(p: LevelPmf, q: LevelPmf, alpha: float) -> float:
    """Order-alpha Renyi divergence D_alpha(p || q) between two level pmfs.

    alpha = 1 uses the KL sum directly, finite alpha > 1 the standard
    log-mean-exponential form, and alpha = inf the worst-case log ratio.
    Any level where q vanishes but p does not makes the divergence +inf;
    true zeros are never clamped.
    """
    if p.spec != q.spec:
        raise ValueError(f"pmfs live on different lattices: {p.spec} vs {q.spec}")
    if not alpha >= 1:
        raise ValueError(f"Renyi order must be >= 1, got {alpha}")
    pp = p.probs
    qp = q.probs
    support = pp > 0
    if np.any(qp[support] == 0):
        return math.inf
    with np.errstate(divide="ignore"):
        log_ratio = np.log(pp[support]) - np.log(qp[support])
    if alpha == math.inf:
        return max(float(np.max(log_ratio)), 0.0)
    if alpha == 1:
        return max(float(np.dot(pp[support], log_ratio)), 0.0)
    # sum_r p^alpha q^(1-alpha), accumulated in log space
    log_terms = np.log(pp[support]) + (alpha - 1.0) * log_ratio
    return max(float(special.logsumexp(log_terms)) / (alpha - 1.0), 0.0)


def epsilon_one(mech: MechanismSpec) -> float:
    """alpha = 1 budget: KL divergence between the extremal-input pmfs."""
    half = mech.quant.c_q / 2.0
    p = quantized_gaussian_pmf(+half, mech.noise, mech.quant)
    q = quantized_gaussian_pmf(-half, mech.noise, mech.quant)
    return renyi_divergence(p, q, 1.0)


def epsilon_infinity(mech: MechanismSpec) -> float:
    """alpha -> infinity budget: log(delta / m) with m the partial first
    moment of N(-c_q/2, sigma^2) over the topmost lattice cell.

    Finite and positive for every valid configuration, unlike the Gaussian
    baseline whose alpha -> infinity budget diverges.
    """
    quant = mech.quant
    top_lo = quant.level(quant.k - 2)
    top_hi = quant.level(quant.k - 1)
    m = float(partial_first_moment(top_lo, top_hi, -quant.c_q / 2.0, mech.noise.sigma))
    return math.log(quant.delta / m)


def gaussian_rdp_baseline(sensitivity: float, sigma: float, alpha: float) -> RdpPoint:
    """RDP of the unquantized Gaussian mechanism: epsilon = alpha*s^2/(2*sigma^2).

    At alpha = inf the budget is unbounded and is reported as such.
    """
    if sensitivity < 0:
        raise ValueError(f"sensitivity must be nonnegative, got {sensitivity}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not alpha >= 1:
        raise ValueError(f"Renyi order must be >= 1, got {alpha}")
    if alpha == math.inf:
        return RdpPoint(alpha=math.inf, epsilon=math.inf)
    return RdpPoint(alpha=alpha, epsilon=alpha * sensitivity**2 / (2.0 * sigma**2))


def compose(points: list[RdpPoint]) -> RdpPoint:
    """Additive RDP composition of mechanisms sharing one Renyi order."""
    if not points:
        raise ValueError("cannot compose an empty list of RDP points")
    alpha = points[0].alpha
    if any(pt.alpha != alpha for pt in points):
        raise ValueError("composition requires a common Renyi order")
    return RdpPoint(alpha=alpha, epsilon=sum(pt.epsilon for pt in points))


def rdp_to_dp(point: RdpPoint, delta: float) -> DpPoint:
    """Convert an (alpha, epsilon) guarantee to (epsilon', delta)-DP.

    Finite alpha adds the standard log(1/delta)/(alpha - 1) slack; at
    alpha = inf the RDP epsilon carries over unchanged.
    """
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if point.alpha == 1:
        raise ValueError("conversion undefined at alpha = 1; use alpha > 1")
    if point.alpha == math.inf:
        return DpPoint(epsilon=point.epsilon, delta=delta)
    return DpPoint(
        epsilon=point.epsilon + math.log(1.0 / delta) / (point.alpha - 1.0),
        delta=delta,
    )


def calibrate_sigma(
    target: DpPoint,
    rounds: int,
    sensitivity: float,
    alpha_grid=DEFAULT_ALPHA_GRID,
    rel_tol: float = 1e-4,
) -> float:
    """Smallest Gaussian noise scale meeting ``target`` over ``rounds`` releases.

    Minimizes the converted epsilon over the order grid at each candidate
    sigma and bisects to relative tolerance ``rel_tol``. Raises if the target
    is unreachable at any noise scale (the conversion slack alone exceeds it).
    """
    if rounds < 1:
        raise ValueError(f"rounds must be positive, got {rounds}")
    if not sensitivity > 0:
        raise ValueError(f"sensitivity must be positive, got {sensitivity}")
    grid = tuple(alpha_grid)
    if not grid or any(not a > 1 for a in grid):
        raise ValueError("alpha grid must be nonempty with every order > 1")

    def converted_eps(sigma: float) -> float:
        best = math.inf
        for alpha in grid:
            point = gaussian_rdp_baseline(sensitivity, sigma, alpha)
            total = compose([point] * rounds)
            best = min(best, rdp_to_dp(total, target.delta).epsilon)
        return best

    # The sigma -> inf limit leaves only the conversion slack.
    floor = min(math.log(1.0 / target.delta) / (a - 1.0) for a in grid)
    if target.epsilon <= floor:
        raise ValueError(
            f"target epsilon {target.epsilon} is unreachable: conversion slack "
            f"alone is {floor:.6g} on the given alpha grid"
        )
    lo = 1e-12
    if converted_eps(lo) <= target.epsilon:
        return lo
    hi = 1.0
    while converted_eps(hi) > target.epsilon:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError("no noise scale below 1e12 meets the target budget")
    lo = hi / 2.0 if hi > 1.0 else 1e-12
    while (hi - lo) / hi > rel_tol:
        mid = 0.5 * (lo + hi)
        if converted_eps(mid) <= target.epsilon:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class SweepRow:
    """One line of a budget sweep: both quantized budgets plus the baseline."""

    k: int
    eps1: float
    eps_inf: float
    eps_gauss_alpha1: float


def budget_sweep(k_values, noise: NoiseSpec, c_q: float) -> list[SweepRow]:
    """Budgets for each quantization level, sorted by k.

    The Gaussian column is the alpha = 1 baseline c_q^2/(2*sigma^2) with the
    sensitivity convention matching the quantized analysis.
    """
    gauss = gaussian_rdp_baseline(c_q, noise.sigma, 1.0).epsilon
    rows = []
    for k in sorted(int(k) for k in k_values):
        mech = MechanismSpec(noise=noise, quant=QuantizerSpec(k=k, c_q=c_q))
        rows.append(
            SweepRow(
                k=k,
                eps1=epsilon_one(mech),
                eps_inf=epsilon_infinity(mech),
                eps_gauss_alpha1=gauss,
            )
        )
    return rows
