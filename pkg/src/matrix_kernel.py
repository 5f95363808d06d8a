"""Dense complex-matrix primitives: SVD, norms, log-determinant, PSD checks and norm-ball sampling.

Every solver and verifier builds on these. All functions are pure; random
draws are reproducible for a fixed seed.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray
from tenacity import RetryCallState, Retrying, retry_if_exception_type, stop_after_attempt

from config import BOUNDARY_FRACTION, PSD_TOL
from errors import (
    ConvergenceFailure,
    DimensionMismatch,
    InvalidParameter,
    NonFiniteError,
    NotPSDError,
)

logger = logging.getLogger(__name__)

ComplexArray = NDArray[np.complex128]
RealArray = NDArray[np.float64]
SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]

# gesdd first; gesvd is slower but converges on inputs gesdd gives up on
_SVD_DRIVERS = ("gesdd", "gesvd")


class NormKind(enum.Enum):
    """Unitarily invariant norms, each a vector norm on the singular values."""

    SPECTRAL = "spectral"
    FROBENIUS = "frobenius"
    NUCLEAR = "nuclear"

    @property
    def vector_order(self) -> float:
        return _VECTOR_ORDER[self]

    def of_singulars(self, values: ArrayLike) -> float | RealArray:
        """Apply the matching vector norm along the last axis."""
        s = np.abs(np.asarray(values, dtype=np.float64))
        if s.shape[-1] == 0:
            return np.zeros(s.shape[:-1]) if s.ndim > 1 else 0.0
        out = np.linalg.norm(s, ord=self.vector_order, axis=-1)
        return float(out) if s.ndim == 1 else out


_VECTOR_ORDER = {NormKind.SPECTRAL: np.inf, NormKind.FROBENIUS: 2.0, NormKind.NUCLEAR: 1.0}


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """An r×t complex channel (H, H₀ or Δ); entries are stored read-only."""

    rows: int
    cols: int
    entries: ComplexArray

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise DimensionMismatch(f"channel needs rows, cols >= 1, got {self.rows}x{self.cols}")
        entries = np.array(self.entries, dtype=np.complex128, copy=True)
        if entries.size != self.rows * self.cols:
            raise DimensionMismatch(
                f"entries has {entries.size} elements, expected rows*cols = {self.rows * self.cols}"
            )
        entries = entries.reshape(self.rows, self.cols)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_array(cls, array: ArrayLike) -> ChannelMatrix:
        a = np.asarray(array, dtype=np.complex128)
        if a.ndim != 2:
            raise DimensionMismatch(f"channel must be a 2-D matrix, got shape {a.shape}")
        return cls(a.shape[0], a.shape[1], a)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def array(self) -> ComplexArray:
        return self.entries


MatrixLike = Union[ChannelMatrix, ArrayLike]


def as_array(m: MatrixLike) -> ComplexArray:
    if isinstance(m, ChannelMatrix):
        return m.entries
    return np.asarray(m, dtype=np.complex128)


def diag_embed(values: ArrayLike, rows: int, cols: int) -> ComplexArray:
    """Place ``values`` on the main diagonal of a zero rows×cols matrix."""
    v = np.asarray(values)
    k = min(rows, cols)
    if v.shape[-1] > k:
        raise DimensionMismatch(f"{v.shape[-1]} diagonal values do not fit a {rows}x{cols} matrix")
    out = np.zeros((rows, cols), dtype=np.complex128)
    idx = np.arange(v.shape[-1])
    out[idx, idx] = v
    return out


@dataclass(frozen=True, eq=False)
class NominalDecomposition:
    """Full SVD H₀ = U₀ · diag_embed(σ₀) · V₀ᴴ."""

    left_basis: ComplexArray
    singulars: RealArray
    right_basis: ComplexArray

    @property
    def rows(self) -> int:
        return int(self.left_basis.shape[0])

    @property
    def cols(self) -> int:
        return int(self.right_basis.shape[0])

    def embed(self, values: ArrayLike) -> ComplexArray:
        return diag_embed(values, self.rows, self.cols)

    def synthesize(self, values: ArrayLike) -> ComplexArray:
        """U₀ · diag_embed(values) · V₀ᴴ."""
        return self.left_basis @ self.embed(values) @ self.right_basis.conj().T

    def reconstruct(self) -> ComplexArray:
        return self.synthesize(self.singulars)


def _require_finite(a: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"{name} contains NaN or Inf entries")


def _log_svd_retry(state: RetryCallState) -> None:
    driver = _SVD_DRIVERS[state.attempt_number - 1]
    logger.warning(f"SVD driver {driver} did not converge, falling back")


def svd(m: MatrixLike) -> NominalDecomposition:
    """Full SVD with singular values in descending order."""
    a = as_array(m)
    if a.ndim != 2:
        raise DimensionMismatch(f"svd expects a 2-D matrix, got shape {a.shape}")
    _require_finite(a, "matrix")

    try:
        for attempt in Retrying(
            stop=stop_after_attempt(len(_SVD_DRIVERS)),
            retry=retry_if_exception_type(np.linalg.LinAlgError),
            after=_log_svd_retry,
            reraise=True,
        ):
            with attempt:
                driver = _SVD_DRIVERS[attempt.retry_state.attempt_number - 1]
                u, s, vh = scipy.linalg.svd(
                    a, full_matrices=True, lapack_driver=driver, check_finite=False
                )
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"SVD did not converge for {a.shape[0]}x{a.shape[1]} matrix: {exc}") from exc

    return NominalDecomposition(
        left_basis=np.asarray(u, dtype=np.complex128),
        singulars=np.asarray(s, dtype=np.float64),
        right_basis=np.asarray(vh, dtype=np.complex128).conj().T,
    )


def singular_values(m: MatrixLike) -> RealArray:
    a = as_array(m)
    _require_finite(a, "matrix")
    return np.asarray(scipy.linalg.svdvals(a, check_finite=False), dtype=np.float64)


def matrix_norm(m: MatrixLike, kind: NormKind) -> float:
    a = as_array(m)
    _require_finite(a, "matrix")
    if kind is NormKind.FROBENIUS:
        return float(np.sqrt(np.sum(np.abs(a) ** 2)))
    return float(kind.of_singulars(singular_values(a)))


def is_psd(q: ArrayLike, tol: float = PSD_TOL) -> bool:
    a = np.asarray(q, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    if not np.all(np.isfinite(a)):
        return False
    if a.size and np.max(np.abs(a - a.conj().T)) > tol:
        return False
    if a.size == 0:
        return True
    herm = (a + a.conj().T) / 2
    return bool(np.linalg.eigvalsh(herm).min() >= -tol)


def _checked_covariance(h_cols: int, q: ArrayLike, gamma: float, tol: float) -> ComplexArray:
    if gamma <= 0:
        raise InvalidParameter(f"gamma must be positive, got {gamma}")
    qa = np.asarray(q, dtype=np.complex128)
    if qa.ndim != 2 or qa.shape[0] != qa.shape[1]:
        raise DimensionMismatch(f"Q must be square, got shape {qa.shape}")
    if qa.shape[0] != h_cols:
        raise DimensionMismatch(f"H has {h_cols} columns but Q is {qa.shape[0]}x{qa.shape[1]}")
    _require_finite(qa, "Q")
    if not is_psd(qa, tol):
        raise NotPSDError(f"Q is not Hermitian PSD within tolerance {tol:g}")
    return (qa + qa.conj().T) / 2


def _log_det_identity_plus(a: ComplexArray) -> RealArray:
    """ln det of Hermitian PD matrices (stacked) through Cholesky factors."""
    herm = (a + a.conj().swapaxes(-1, -2)) / 2
    chol = np.linalg.cholesky(herm)
    diag = np.real(np.diagonal(chol, axis1=-2, axis2=-1))
    return 2.0 * np.sum(np.log(diag), axis=-1)


def log_det_capacity(h: MatrixLike, q: ArrayLike, gamma: float, tol: float = PSD_TOL) -> float:
    """Mutual information ln det(I_r + γ H Q Hᴴ) in nats."""
    ha = as_array(h)
    _require_finite(ha, "H")
    qa = _checked_covariance(ha.shape[1], q, gamma, tol)
    a = np.eye(ha.shape[0], dtype=np.complex128) + gamma * (ha @ qa @ ha.conj().T)
    return max(float(_log_det_identity_plus(a)), 0.0)


def batch_log_det_capacity(
    h_stack: ArrayLike, q: ArrayLike, gamma: float, tol: float = PSD_TOL
) -> RealArray:
    """``log_det_capacity`` over a (count, r, t) stack of channels."""
    hs = np.asarray(h_stack, dtype=np.complex128)
    if hs.ndim != 3:
        raise DimensionMismatch(f"expected a (count, r, t) stack, got shape {hs.shape}")
    _require_finite(hs, "H stack")
    qa = _checked_covariance(hs.shape[2], q, gamma, tol)
    a = np.eye(hs.shape[1], dtype=np.complex128) + gamma * (hs @ qa @ hs.conj().swapaxes(-1, -2))
    return np.maximum(_log_det_identity_plus(a), 0.0)


def spectral_objective(sigma: ArrayLike, lam: ArrayLike, gamma: float) -> float:
    """Σ ln(1 + γσᵢ²λᵢ), the diagonalized mutual information."""
    s = np.asarray(sigma, dtype=np.float64)
    l = np.asarray(lam, dtype=np.float64)
    return float(np.sum(np.log1p(gamma * s**2 * l)))


# ── Random sampling ──────────────────────────────────────────────


def haar_unitaries(rng: np.random.Generator, n: int, count: int) -> ComplexArray:
    """A (count, n, n) stack of Haar-distributed unitaries (QR with phase fix)."""
    z = (rng.standard_normal((count, n, n)) + 1j * rng.standard_normal((count, n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    phase = d / np.abs(d)
    return q * phase[:, None, :]


def haar_unitary(n: int, seed: SeedLike = None) -> ComplexArray:
    return haar_unitaries(np.random.default_rng(seed), n, 1)[0]


def _singular_profiles(rng: np.random.Generator, count: int, k: int) -> RealArray:
    # flat (all modes hit at once), one-hot, uniform, exponential
    choice = rng.integers(0, 4, size=count)[:, None]
    flat = np.ones((count, k))
    onehot = np.zeros((count, k))
    onehot[np.arange(count), rng.integers(0, k, size=count)] = 1.0
    uniform = rng.random((count, k))
    expo = rng.exponential(size=(count, k))
    profiles = np.where(choice == 0, flat, np.where(choice == 1, onehot, np.where(choice == 2, uniform, expo)))
    dead = ~np.any(profiles > 0, axis=1)
    profiles[dead] = 1.0
    return profiles


def _draw_ball(
    rng: np.random.Generator,
    rows: int,
    cols: int,
    epsilon: float,
    kind: NormKind,
    boundary: np.ndarray,
) -> ComplexArray:
    count = boundary.shape[0]
    if epsilon == 0 or count == 0:
        return np.zeros((count, rows, cols), dtype=np.complex128)

    k = min(rows, cols)
    profiles = _singular_profiles(rng, count, k)
    profiles /= np.asarray(kind.of_singulars(profiles))[:, None]

    u = rng.random(count)
    radius = np.where(boundary, epsilon * (0.99 + 0.01 * u), epsilon * u)
    left = haar_unitaries(rng, rows, count)[:, :, :k]
    right = haar_unitaries(rng, cols, count)[:, :, :k]
    delta = (left * (radius[:, None] * profiles)[:, None, :]) @ right.conj().swapaxes(-1, -2)

    # rounding can push a boundary sample a few ulps past epsilon
    norms = np.asarray(kind.of_singulars(np.linalg.svd(delta, compute_uv=False)))
    over = norms > epsilon
    if np.any(over):
        scale = np.where(over, epsilon / np.where(over, norms, 1.0) * (1 - 1e-15), 1.0)
        delta *= scale[:, None, None]
    return delta


def _validate_ball(rows: int, cols: int, epsilon: float) -> None:
    if rows < 1 or cols < 1:
        raise DimensionMismatch(f"ball dimensions must be >= 1, got {rows}x{cols}")
    if not np.isfinite(epsilon) or epsilon < 0:
        raise InvalidParameter(f"epsilon must be finite and >= 0, got {epsilon}")


def sample_ball(rows: int, cols: int, epsilon: float, kind: NormKind, seed: SeedLike) -> ChannelMatrix:
    """One Δ with matrix_norm(Δ, kind) <= epsilon, boundary-heavy."""
    _validate_ball(rows, cols, epsilon)
    rng = np.random.default_rng(seed)
    boundary = np.array([rng.random() < BOUNDARY_FRACTION])
    return ChannelMatrix.from_array(_draw_ball(rng, rows, cols, epsilon, kind, boundary)[0])


def sample_ball_batch(
    rows: int, cols: int, epsilon: float, kind: NormKind, count: int, seed: SeedLike
) -> ComplexArray:
    """A (count, rows, cols) stack of ball samples.

    Positions are assigned to the [0.99ε, ε] shell deterministically, so the
    boundary share is exactly BOUNDARY_FRACTION per block of 100 samples.
    """
    _validate_ball(rows, cols, epsilon)
    if count < 0:
        raise InvalidParameter(f"count must be >= 0, got {count}")
    rng = np.random.default_rng(seed)
    boundary = (np.arange(count) % 100) < round(100 * BOUNDARY_FRACTION)
    return _draw_ball(rng, rows, cols, epsilon, kind, boundary)
