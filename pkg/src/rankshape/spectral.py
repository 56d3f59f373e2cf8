"""Eigen-spectrum machinery for hidden-state trajectories.

A trajectory is a (T, d) matrix whose rows are per-step hidden states.
Everything downstream (effective rank, windowed profiles, probe geometry)
derives from the eigenvalues of the trajectory's centered covariance, so
this module owns that decomposition and the cleanup rules applied to it.

The decomposition runs on whichever of the d x d covariance or the T x T
Gram matrix of centered rows is smaller, keeping the cost at
O(min(T, d)^3). Both share the same nonzero eigenvalues, and the reported
spectrum always has min(T, d) entries regardless of path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrumError, InputError, ZeroVarianceError

# Eigenvalues below this fraction of the largest are eigensolver noise and
# are reported as exact zeros.
EIGENVALUE_FLOOR = 1e-12

DEFAULT_ENERGY_THRESHOLD = 0.9


def validate_trajectory(values) -> np.ndarray:
    """Coerce to a float64 (T, d) matrix, rejecting non-finite entries."""
    H = np.asarray(values, dtype=np.float64)
    if H.ndim != 2:
        raise InputError(f"trajectory must be 2-D, got shape {H.shape}")
    if H.shape[0] < 1 or H.shape[1] < 1:
        raise InputError(f"trajectory must have at least one row and column, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise InputError("trajectory contains non-finite values")
    return H


def center(H) -> tuple[np.ndarray, np.ndarray]:
    """Subtract the mean row; returns (centered, mean)."""
    H = validate_trajectory(H)
    mean = H.mean(axis=0)
    return H - mean, mean


@dataclass(frozen=True)
class Spectrum:
    """Descending eigenvalues of a trajectory's centered covariance.

    ``mean`` carries the row mean of the source trajectory when the
    spectrum came from one; hand-built spectra may leave it None.
    """

    eigenvalues: np.ndarray
    mean: np.ndarray | None = None

    def __post_init__(self):
        vals = np.asarray(self.eigenvalues, dtype=np.float64)
        if vals.ndim != 1 or vals.size == 0:
            raise InputError("eigenvalues must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(vals)):
            raise InputError("eigenvalues must be finite")
        if np.any(vals < 0.0):
            raise InputError("eigenvalues must be nonnegative")
        if np.any(np.diff(vals) > 0.0):
            raise InputError("eigenvalues must be sorted nonincreasing")
        object.__setattr__(self, "eigenvalues", vals)

    @property
    def total_mass(self) -> float:
        return float(self.eigenvalues.sum())

    @property
    def probs(self) -> np.ndarray:
        """Eigenvalues normalized to a distribution; needs positive mass."""
        total = self.total_mass
        if total <= 0.0:
            raise DegenerateSpectrumError("degenerate spectrum: total eigenvalue mass is zero")
        return self.eigenvalues / total

    @property
    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.eigenvalues))


def _cleanup(vals: np.ndarray) -> np.ndarray:
    """Clamp negatives to zero and zero out near-noise eigenvalues."""
    vals = np.clip(vals, 0.0, None)
    if vals.size and vals[0] > 0.0:
        vals[vals < EIGENVALUE_FLOOR * vals[0]] = 0.0
    return vals


def covariance_spectrum(H, method: str = "auto") -> Spectrum:
    """Eigenvalues of the covariance (1/T)(H - mean)^T (H - mean).

    ``method`` picks the decomposition path: "covariance" for the d x d
    covariance, "gram" for the T x T Gram matrix of centered rows, or
    "auto" for whichever is smaller. A trajectory with a single row has
    zero centered variance and yields the zero spectrum.
    """
    centered, mean = center(H)
    T, d = centered.shape
    if method == "auto":
        method = "gram" if T < d else "covariance"
    if method == "gram":
        M = centered @ centered.T / T
    elif method == "covariance":
        M = centered.T @ centered / T
    else:
        raise InputError(f"unknown spectrum method {method!r}")
    vals = np.linalg.eigvalsh(M)[::-1]
    return Spectrum(_cleanup(vals[: min(T, d)]), mean)


def spectral_entropy(spectrum: Spectrum) -> float:
    """Shannon entropy (nats) of the normalized eigenvalue distribution.

    Zero eigenvalues contribute nothing (the p ln p -> 0 limit), so the
    value lies in [0, ln(#nonzero)].
    """
    p = spectrum.probs
    p = p[p > 0.0]
    return float(-(p * np.log(p)).sum())


def effective_rank(spectrum: Spectrum) -> float:
    """exp of the spectral entropy: a continuous dimensionality in [1, rank]."""
    return float(np.exp(spectral_entropy(spectrum)))


@dataclass(frozen=True)
class ManifoldBasis:
    """Orthonormal principal directions of a local state cloud."""

    mean: np.ndarray
    directions: np.ndarray  # (d, k), orthonormal columns
    captured_energy: float

    @property
    def k(self) -> int:
        return int(self.directions.shape[1])

    @property
    def dim(self) -> int:
        return int(self.directions.shape[0])

    def project_out(self, vec) -> np.ndarray:
        """Component of (vec - mean) orthogonal to the spanned subspace."""
        v = np.asarray(vec, dtype=np.float64) - self.mean
        return v - self.directions @ (self.directions.T @ v)


def _count_for_energy(vals: np.ndarray, total: float, threshold: float) -> int:
    frac = np.cumsum(vals) / total
    # Tolerance keeps threshold=1.0 from overshooting past the last nonzero
    # eigenvalue on rounding.
    k = int(np.searchsorted(frac, threshold - 1e-12)) + 1
    return min(k, int(np.count_nonzero(vals)))


def principal_subspace(H, energy_threshold: float = DEFAULT_ENERGY_THRESHOLD) -> ManifoldBasis:
    """Smallest leading eigen-basis capturing the requested energy fraction.

    Energy is cumulative eigenvalue mass over total mass. The returned
    directions are orthonormal columns; on the Gram path (T < d) they are
    recovered as centered^T u / sqrt(T lambda).
    """
    if not 0.0 < energy_threshold <= 1.0:
        raise InputError(f"energy_threshold must be in (0, 1], got {energy_threshold}")
    centered, mean = center(H)
    T, d = centered.shape
    if T < 2:
        raise InputError("principal subspace needs at least 2 rows")
    if T < d:
        gram = centered @ centered.T / T
        raw, u = np.linalg.eigh(gram)
        vals = _cleanup(raw[::-1])
        u = u[:, ::-1]
        total = float(vals.sum())
        if total <= 0.0:
            raise ZeroVarianceError("zero-variance trajectory: all rows identical")
        k = _count_for_energy(vals, total, energy_threshold)
        directions = centered.T @ u[:, :k] / np.sqrt(T * vals[:k])
    else:
        cov = centered.T @ centered / T
        raw, v = np.linalg.eigh(cov)
        vals = _cleanup(raw[::-1])
        total = float(vals.sum())
        if total <= 0.0:
            raise ZeroVarianceError("zero-variance trajectory: all rows identical")
        k = _count_for_energy(vals, total, energy_threshold)
        directions = v[:, ::-1][:, :k]
    captured = float(vals[:k].sum() / total)
    return ManifoldBasis(mean=mean, directions=directions, captured_energy=captured)


def confinement_ratio(spectrum: Spectrum, k: int) -> float:
    """Fraction of eigenvalue mass held by the top k components."""
    m = spectrum.eigenvalues.size
    if not 1 <= k <= m:
        raise InputError(f"k must be in [1, {m}], got {k}")
    total = spectrum.total_mass
    if total <= 0.0:
        raise DegenerateSpectrumError("degenerate spectrum: total eigenvalue mass is zero")
    return float(spectrum.eigenvalues[:k].sum() / total)
