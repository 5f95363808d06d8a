"""Compound MIMO capacity under norm-bounded additive channel uncertainty.

Pipeline for the spectral-norm region:

    svd(H₀) ─▶ worst_case_sigma ─▶ water-fill ─▶ Q*, H* ─▶ min-max ─▶ saddle check

Every problem is reduced to the diagonal modes of the nominal channel, where
the mutual information is Σ ln(1 + γσᵢ²λᵢ).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.typing import ArrayLike

from config import (
    DUALITY_TOL,
    FROBENIUS_MAX_ITER,
    FROBENIUS_STALL_TOL,
    FROBENIUS_STALL_WINDOW,
    PROJECTION_ROUNDS,
    PROJECTION_TOL,
    PSD_TOL,
    RANK_TOL,
    SADDLE_TOL,
)
from errors import CertificateError, InvalidParameter, UnsupportedNorm
from matrix_kernel import (
    ComplexArray,
    MatrixLike,
    NominalDecomposition,
    NormKind,
    RealArray,
    is_psd,
    spectral_objective,
    svd,
)

logger = logging.getLogger(__name__)

_MAX_HALVINGS = 60


# ──────────────────────────────────────────────────────────────
# 1. Domain types
@dataclass(frozen=True)
class UncertaintyRegion:
    kind: NormKind
    epsilon: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.epsilon) or self.epsilon < 0:
            raise InvalidParameter(f"epsilon must be finite and >= 0, got {self.epsilon}")


@dataclass(frozen=True)
class SumPower:
    """tr(Q) <= budget; ``None`` means the number of transmit antennas."""

    budget: float | None = None

    def __post_init__(self) -> None:
        if self.budget is not None and not (math.isfinite(self.budget) and self.budget > 0):
            raise InvalidParameter(f"sum-power budget must be positive, got {self.budget}")

    def resolve(self, t: int) -> SumPower:
        return self if self.budget is not None else SumPower(float(t))

    def contains(self, q: ArrayLike, tol: float = PSD_TOL) -> bool:
        qa = np.asarray(q, dtype=np.complex128)
        if not is_psd(qa, tol):
            return False
        budget = self.resolve(qa.shape[0]).budget
        assert budget is not None
        return bool(np.real(np.trace(qa)) <= budget + tol)

    @property
    def label(self) -> str:
        return f"sum:{self.budget:g}" if self.budget is not None else "sum:t"


@dataclass(frozen=True)
class MaxPower:
    """max eigenvalue of Q <= cap."""

    cap: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.cap) and self.cap > 0):
            raise InvalidParameter(f"max-power cap must be positive, got {self.cap}")

    def resolve(self, t: int) -> MaxPower:
        return self

    def contains(self, q: ArrayLike, tol: float = PSD_TOL) -> bool:
        qa = np.asarray(q, dtype=np.complex128)
        if not is_psd(qa, tol):
            return False
        return bool(np.linalg.eigvalsh((qa + qa.conj().T) / 2).max(initial=0.0) <= self.cap + tol)

    @property
    def label(self) -> str:
        return f"max:{self.cap:g}"


PowerConstraint = Union[SumPower, MaxPower]


@dataclass(frozen=True, eq=False)
class Allocation:
    """Optimal eigenvalues of Q for fixed channel singular values."""

    lam: RealArray
    capacity: float
    water_level: float | None
    active: int
    all_zero_channel: bool
    iterations: int


@dataclass(frozen=True)
class SaddleGaps:
    max_side_gap: float
    min_side_gap: float

    def certified(self, tol: float = SADDLE_TOL) -> bool:
        return self.max_side_gap <= tol and self.min_side_gap <= tol


@dataclass(frozen=True, eq=False)
class MinMaxResult:
    c_minmax: float
    sigma: RealArray
    lam: RealArray
    kind: NormKind
    epsilon: float
    q_prime: ComplexArray
    h_prime: ComplexArray
    iterations: int
    converged: bool


@dataclass(frozen=True, eq=False)
class CapacityReport:
    c_maxmin: float
    c_minmax: float
    duality_gap: float
    gamma: float
    epsilon: float
    constraint: PowerConstraint
    sigma0: RealArray
    sigma_star: RealArray
    lambda_star: RealArray
    q_star: ComplexArray
    h_star: ComplexArray
    saddle: SaddleGaps
    saddle_certified: bool
    solver_iterations: int
    all_zero_channel: bool


@dataclass(frozen=True)
class NormBounds:
    lower: float
    upper: float
    kind: NormKind
    alpha_low: float
    alpha_high: float


# ──────────────────────────────────────────────────────────────
# 2. Reduced vector problem
def _check_gamma(gamma: float) -> None:
    if not (math.isfinite(gamma) and gamma > 0):
        raise InvalidParameter(f"gamma must be positive, got {gamma}")


def _as_singulars(sigma: ArrayLike, name: str = "sigma") -> RealArray:
    s = np.asarray(sigma, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(s)) or np.any(s < 0):
        raise InvalidParameter(f"{name} must be finite and nonnegative")
    return s


def _active_mask(sigma: RealArray) -> np.ndarray:
    if sigma.size == 0:
        return np.zeros(0, dtype=bool)
    return sigma > RANK_TOL * sigma.max()


def worst_case_sigma(sigma0: ArrayLike, epsilon: float) -> RealArray:
    """σᵢ* = max{σ₀ᵢ − ε, 0}."""
    s = _as_singulars(sigma0, "sigma0")
    if not math.isfinite(epsilon) or epsilon < 0:
        raise InvalidParameter(f"epsilon must be finite and >= 0, got {epsilon}")
    return np.maximum(s - epsilon, 0.0)


def waterfill_sum_power(sigma: ArrayLike, gamma: float, budget: float) -> Allocation:
    """λᵢ = max{μ − 1/(γσᵢ²), 0} with Σλᵢ = budget.

    The water level comes from active-set enumeration over the modes sorted
    by gain: the active count is the largest k whose level clears the k-th
    inverse gain.
    """
    s = _as_singulars(sigma)
    _check_gamma(gamma)
    if not (math.isfinite(budget) and budget > 0):
        raise InvalidParameter(f"budget must be positive, got {budget}")

    lam = np.zeros_like(s)
    # subnormal singular values underflow to a zero gain
    mask = _active_mask(s) & (gamma * s**2 > 0)
    if not mask.any():
        logger.warning("All channel modes are zero; capacity is 0")
        return Allocation(lam, 0.0, None, 0, True, 0)

    gains = gamma * s[mask] ** 2
    inv_sorted = np.sort(1.0 / gains)
    levels = (budget + np.cumsum(inv_sorted)) / np.arange(1, inv_sorted.size + 1)
    active = int(np.nonzero(levels > inv_sorted)[0].max()) + 1
    mu = float(levels[active - 1])

    lam[mask] = np.maximum(mu - 1.0 / gains, 0.0)
    capacity = spectral_objective(s, lam, gamma)
    logger.debug(f"Water level {mu:.6g} with {active}/{inv_sorted.size} active modes")
    return Allocation(lam, capacity, mu, active, False, inv_sorted.size)


def waterfill_max_power(sigma: ArrayLike, gamma: float, cap: float) -> Allocation:
    """λᵢ = cap on every nonzero mode; the objective is increasing in each λᵢ."""
    s = _as_singulars(sigma)
    _check_gamma(gamma)
    if not (math.isfinite(cap) and cap > 0):
        raise InvalidParameter(f"cap must be positive, got {cap}")

    mask = _active_mask(s)
    lam = np.where(mask, cap, 0.0)
    if not mask.any():
        logger.warning("All channel modes are zero; capacity is 0")
    return Allocation(lam, spectral_objective(s, lam, gamma), None, int(mask.sum()), not mask.any(), 1)


def allocate(sigma: ArrayLike, gamma: float, constraint: PowerConstraint) -> Allocation:
    """Water-fill under ``constraint``; an unset sum budget defaults to len(sigma)."""
    match constraint:
        case SumPower(budget=None):
            return waterfill_sum_power(sigma, gamma, float(np.size(sigma)))
        case SumPower(budget=budget):
            return waterfill_sum_power(sigma, gamma, budget)
        case MaxPower(cap=cap):
            return waterfill_max_power(sigma, gamma, cap)
    raise InvalidParameter(f"unknown power constraint {constraint!r}")


def _covariance(dec: NominalDecomposition, lam: RealArray) -> ComplexArray:
    """Q = V₀ · diag(λ, 0, …) · V₀ᴴ, padded to t×t."""
    full = np.zeros(dec.cols)
    full[: lam.size] = lam
    v = dec.right_basis
    q = (v * full) @ v.conj().T
    return (q + q.conj().T) / 2


def nominal_capacity(h0: MatrixLike, gamma: float, constraint: PowerConstraint) -> float:
    dec = svd(h0)
    return allocate(dec.singulars, gamma, constraint.resolve(dec.cols)).capacity


# ──────────────────────────────────────────────────────────────
# 3. Min-max (dual) problem
def project_ball_orthant(
    y: ArrayLike,
    center: ArrayLike,
    radius: float,
    rounds: int = PROJECTION_ROUNDS,
    tol: float = PROJECTION_TOL,
) -> RealArray:
    """Euclidean projection onto {‖σ − center‖₂ <= radius, σ >= 0}.

    Alternating projections with Dykstra's corrections; ``center`` must be
    nonnegative so the final radial pull-back stays in the orthant.
    """
    x = np.asarray(y, dtype=np.float64).copy()
    c = np.asarray(center, dtype=np.float64)
    p = np.zeros_like(x)
    q = np.zeros_like(x)

    for _ in range(rounds):
        w = x + p
        d = np.linalg.norm(w - c)
        z = w if d <= radius else c + (w - c) * (radius / d)
        p = w - z
        x_next = np.maximum(z + q, 0.0)
        q = z + q - x_next
        step = float(np.max(np.abs(x_next - x), initial=0.0))
        x = x_next
        if step <= tol:
            break

    d = np.linalg.norm(x - c)
    if d > radius:
        x = c + (x - c) * (radius / d)
    return x


def _envelope_gradient(sigma: RealArray, lam: RealArray, gamma: float) -> RealArray:
    """∂/∂σᵢ of max_λ Σ ln(1+γσᵢ²λᵢ), holding λ at its optimizer."""
    return 2 * gamma * sigma * lam / (1 + gamma * sigma**2 * lam)


@dataclass
class _DescentRun:
    sigma: RealArray
    alloc: Allocation
    iterations: int
    converged: bool


def _projected_descent(
    start: RealArray, sigma0: RealArray, epsilon: float, gamma: float, constraint: PowerConstraint
) -> _DescentRun:
    sigma = start
    alloc = allocate(sigma, gamma, constraint)
    history = [alloc.capacity]

    for iteration in range(1, FROBENIUS_MAX_ITER + 1):
        grad = _envelope_gradient(sigma, alloc.lam, gamma)
        if not np.any(grad > 0):
            return _DescentRun(sigma, alloc, iteration, True)

        step = 1.0
        for _ in range(_MAX_HALVINGS):
            cand = project_ball_orthant(sigma - step * grad, sigma0, epsilon)
            cand_alloc = allocate(cand, gamma, constraint)
            if cand_alloc.capacity < alloc.capacity:
                break
            step /= 2
        else:
            return _DescentRun(sigma, alloc, iteration, True)

        sigma, alloc = cand, cand_alloc
        history.append(alloc.capacity)
        logger.debug(f"descent iter {iteration}: value {alloc.capacity:.12g}, step {step:g}")
        if (
            len(history) > FROBENIUS_STALL_WINDOW
            and history[-FROBENIUS_STALL_WINDOW - 1] - alloc.capacity < FROBENIUS_STALL_TOL
        ):
            return _DescentRun(sigma, alloc, iteration, True)

    return _DescentRun(sigma, alloc, FROBENIUS_MAX_ITER, False)


def _frobenius_starts(sigma0: RealArray, epsilon: float) -> list[RealArray]:
    k = sigma0.size
    starts = [np.maximum(sigma0 - epsilon / math.sqrt(k), 0.0)]
    for i in range(k):
        s = sigma0.copy()
        s[i] = max(s[i] - epsilon, 0.0)
        starts.append(s)
    return starts


def _minmax_on(
    dec: NominalDecomposition, region: UncertaintyRegion, gamma: float, constraint: PowerConstraint
) -> MinMaxResult:
    sigma0 = dec.singulars
    eps = region.epsilon

    if region.kind is NormKind.NUCLEAR:
        raise UnsupportedNorm("minmax_capacity supports spectral and frobenius norms, not nuclear")

    if region.kind is NormKind.SPECTRAL or eps == 0 or sigma0.size == 0:
        sigma = worst_case_sigma(sigma0, eps)
        alloc = allocate(sigma, gamma, constraint)
        iterations, converged = alloc.iterations, True
    else:
        runs = [_projected_descent(s, sigma0, eps, gamma, constraint) for s in _frobenius_starts(sigma0, eps)]
        best = min(runs, key=lambda run: run.alloc.capacity)
        sigma, alloc = best.sigma, best.alloc
        iterations = sum(run.iterations for run in runs)
        converged = best.converged
        if not converged:
            logger.warning(f"Frobenius min-max hit the {FROBENIUS_MAX_ITER}-iteration cap; returning best iterate")

    return MinMaxResult(
        c_minmax=alloc.capacity,
        sigma=sigma,
        lam=alloc.lam,
        kind=region.kind,
        epsilon=eps,
        q_prime=_covariance(dec, alloc.lam),
        h_prime=dec.synthesize(sigma),
        iterations=iterations,
        converged=converged,
    )


def minmax_capacity(
    h0: MatrixLike, region: UncertaintyRegion, gamma: float, constraint: PowerConstraint
) -> MinMaxResult:
    """min over σ in the region's vector-norm ball of the water-filled capacity."""
    _check_gamma(gamma)
    dec = svd(h0)
    result = _minmax_on(dec, region, gamma, constraint.resolve(dec.cols))
    logger.info(
        f"Min-max capacity ({region.kind.value}, eps={region.epsilon:g}): "
        f"{result.c_minmax:.12g} nats after {result.iterations} iterations"
    )
    return result


# ──────────────────────────────────────────────────────────────
# 4. Max-min (compound) capacity and its certificate
def saddle_check(
    sigma_star: ArrayLike,
    lambda_star: ArrayLike,
    sigma0: ArrayLike,
    epsilon: float,
    gamma: float,
    constraint: PowerConstraint,
) -> SaddleGaps:
    """Gaps of (λ*, σ*) from being a saddle point of f(λ, σ) = Σ ln(1+γσᵢ²λᵢ)."""
    s_star = _as_singulars(sigma_star, "sigma_star")
    l_star = np.asarray(lambda_star, dtype=np.float64)
    f_star = spectral_objective(s_star, l_star, gamma)

    best_response = allocate(s_star, gamma, constraint).capacity
    # f increases in every σᵢ, so the box minimum sits on the lower edge
    lower_edge = worst_case_sigma(sigma0, epsilon)
    return SaddleGaps(
        max_side_gap=best_response - f_star,
        min_side_gap=f_star - spectral_objective(lower_edge, l_star, gamma),
    )


def compound_capacity(
    h0: MatrixLike, region: UncertaintyRegion, gamma: float, constraint: PowerConstraint
) -> CapacityReport:
    """Compound capacity for a spectral-norm region, with Q*, H* and a duality certificate."""
    _check_gamma(gamma)
    if region.kind is not NormKind.SPECTRAL:
        raise UnsupportedNorm(
            f"compound_capacity needs a spectral region, got {region.kind.value}; "
            "use minmax_capacity or capacity_bounds_other_norm"
        )

    dec = svd(h0)
    constraint = constraint.resolve(dec.cols)
    sigma_star = worst_case_sigma(dec.singulars, region.epsilon)
    alloc = allocate(sigma_star, gamma, constraint)

    minmax = _minmax_on(dec, region, gamma, constraint)
    gap = minmax.c_minmax - alloc.capacity
    if abs(gap) > DUALITY_TOL:
        raise CertificateError(f"duality gap {gap:.3e} exceeds {DUALITY_TOL:g}")

    saddle = saddle_check(sigma_star, alloc.lam, dec.singulars, region.epsilon, gamma, constraint)
    certified = saddle.certified()
    if not certified:
        logger.warning(f"Saddle certificate failed: {saddle}")

    logger.info(
        f"Compound capacity {alloc.capacity:.12g} nats (eps={region.epsilon:g}, gamma={gamma:g}, "
        f"{constraint.label}), gap {gap:.2e}"
    )
    return CapacityReport(
        c_maxmin=alloc.capacity,
        c_minmax=minmax.c_minmax,
        duality_gap=gap,
        gamma=gamma,
        epsilon=region.epsilon,
        constraint=constraint,
        sigma0=dec.singulars,
        sigma_star=sigma_star,
        lambda_star=alloc.lam,
        q_star=_covariance(dec, alloc.lam),
        h_star=dec.synthesize(sigma_star),
        saddle=saddle,
        saddle_certified=certified,
        solver_iterations=alloc.iterations,
        all_zero_channel=alloc.all_zero_channel,
    )


def capacity_bounds_other_norm(
    h0: MatrixLike, kind: NormKind, epsilon: float, gamma: float, constraint: PowerConstraint
) -> NormBounds:
    """Bracket the capacity for a non-spectral region via norm-equivalence constants.

    With α_l‖·‖₂ <= ⦀·⦀ <= α_h‖·‖₂, the ⦀·⦀-ball of radius ε sits between the
    spectral balls of radii ε/α_h and ε/α_l.
    """
    if kind is NormKind.SPECTRAL:
        raise UnsupportedNorm("bounds degenerate to equality for the spectral norm; call compound_capacity")
    dec = svd(h0)
    k = min(dec.rows, dec.cols)
    alpha_low = 1.0
    alpha_high = math.sqrt(k) if kind is NormKind.FROBENIUS else float(k)

    lower = compound_capacity(h0, UncertaintyRegion(NormKind.SPECTRAL, epsilon / alpha_low), gamma, constraint)
    upper = compound_capacity(h0, UncertaintyRegion(NormKind.SPECTRAL, epsilon / alpha_high), gamma, constraint)
    if lower.c_maxmin > upper.c_maxmin + DUALITY_TOL:
        raise CertificateError(f"lower bound {lower.c_maxmin} exceeds upper bound {upper.c_maxmin}")

    logger.info(f"{kind.value} bounds: [{lower.c_maxmin:.12g}, {upper.c_maxmin:.12g}] nats")
    return NormBounds(lower.c_maxmin, upper.c_maxmin, kind, alpha_low, alpha_high)
