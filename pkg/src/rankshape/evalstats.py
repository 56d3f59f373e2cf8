"""Evaluation statistics: exact pass@k curves, token-entropy aggregation,
and the logistic fit separating trajectory rank from predictive entropy as
predictors of correctness.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import (
    DegenerateLabelsError,
    FileFormatError,
    InputError,
    RangeError,
    SeparableDataError,
)

DECOUPLING_CSV_HEADER = ("eff_rank", "entropy", "correct")

# Coefficient norm at which the fit is declared separated: logits this far
# out move predictions by < 1e-13, so growth past it is pure divergence.
COEF_BOUND = 30.0


def pass_at_k(n: int, c: int, k: int) -> float:
    """Unbiased pass@k for one problem: 1 - C(n-c, k) / C(n, k).

    Evaluated as a running product of (n-c-i)/(n-i) so no binomial
    coefficient is ever materialized; exact 1.0 when fewer than k samples
    are incorrect.
    """
    if n < 1:
        raise RangeError(f"n must be >= 1, got {n}")
    if not 1 <= k <= n:
        raise RangeError(f"k must be in [1, {n}], got {k}")
    if not 0 <= c <= n:
        raise RangeError(f"c must be in [0, {n}], got {c}")
    if n - c < k:
        return 1.0
    miss = 1.0
    for i in range(k):
        miss *= (n - c - i) / (n - i)
    return 1.0 - miss


@dataclass(frozen=True)
class PassCounts:
    """Per-problem correct counts out of n samples each."""

    n: int
    counts: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise RangeError(f"n must be >= 1, got {self.n}")
        counts = tuple(int(c) for c in self.counts)
        if not counts:
            raise InputError("need at least one problem")
        for c in counts:
            if not 0 <= c <= self.n:
                raise RangeError(f"count {c} outside [0, {self.n}]")
        object.__setattr__(self, "counts", counts)

    @property
    def problems(self) -> int:
        return len(self.counts)


def pass_curve(pc: PassCounts, ks) -> dict[int, float]:
    """Mean pass@k over problems for each requested k."""
    result: dict[int, float] = {}
    for k in ks:
        k = int(k)
        result[k] = float(np.mean([pass_at_k(pc.n, c, k) for c in pc.counts]))
    return result


def mean_token_entropy(step_distributions) -> float:
    """Mean over steps of the Shannon entropy (nats) of each distribution."""
    dists = [np.asarray(p, dtype=np.float64) for p in step_distributions]
    if not dists:
        raise InputError("need at least one step distribution")
    entropies = []
    for i, p in enumerate(dists):
        if p.ndim != 1 or p.size == 0 or not np.all(np.isfinite(p)) or np.any(p < 0.0):
            raise InputError(f"malformed distribution at step {i}")
        if abs(p.sum() - 1.0) > 1e-9:
            raise InputError(f"malformed distribution at step {i}: sums to {p.sum():.12g}")
        q = p[p > 0.0]
        entropies.append(float(-(q * np.log(q)).sum()))
    return float(np.mean(entropies))


@dataclass(frozen=True)
class DecouplingSample:
    """One rollout's effective rank, mean token entropy, and verdict."""

    eff_rank: float
    entropy: float
    correct: bool

    def __post_init__(self):
        if not np.isfinite(self.eff_rank) or self.eff_rank < 1.0:
            raise InputError(f"eff_rank must be >= 1, got {self.eff_rank}")
        if not np.isfinite(self.entropy) or self.entropy < 0.0:
            raise InputError(f"entropy must be >= 0, got {self.entropy}")


@dataclass(frozen=True)
class LogitFit:
    """Wald summary of the two-predictor logistic regression."""

    beta0: float
    beta_r: float
    beta_e: float
    std_errors: tuple[float, float, float]
    p_values: tuple[float, float, float]
    converged: bool
    iterations: int

    def to_record(self) -> dict:
        return {
            "beta0": self.beta0,
            "beta_r": self.beta_r,
            "beta_e": self.beta_e,
            "std_errors": list(self.std_errors),
            "p_values": list(self.p_values),
            "converged": self.converged,
            "iterations": self.iterations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record())


def fit_decoupling_logit(samples, max_iter: int = 100, tol: float = 1e-8,
                         coef_bound: float = COEF_BOUND) -> LogitFit:
    """Logistic regression of correctness on z-scored (eff_rank, entropy).

    Newton/IRLS steps run until the log-likelihood gradient norm drops
    below tol. Standard errors come from the inverse observed information
    at the optimum; p-values are two-sided normal. Raises on single-class
    labels and on coefficient divergence (perfect separation).
    """
    samples = list(samples)
    if len(samples) < 20:
        raise InputError(f"need at least 20 samples, got {len(samples)}")
    y = np.array([1.0 if s.correct else 0.0 for s in samples])
    if y.min() == y.max():
        raise DegenerateLabelsError("degenerate labels: only one class present")
    raw = np.array([[s.eff_rank, s.entropy] for s in samples])
    spread = raw.std(axis=0)
    if np.any(spread <= 0.0):
        which = "eff_rank" if spread[0] <= 0.0 else "entropy"
        raise InputError(f"constant feature {which}: cannot standardize")
    X = np.column_stack([np.ones(len(samples)), (raw - raw.mean(axis=0)) / spread])

    beta = np.zeros(3)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        p = _sigmoid(X @ beta)
        grad = X.T @ (y - p)
        if np.linalg.norm(grad) < tol:
            converged = True
            break
        w = np.maximum(p * (1.0 - p), 1e-12)
        hessian = X.T @ (X * w[:, None])
        beta = beta + np.linalg.solve(hessian, grad)
        if np.linalg.norm(beta) > coef_bound:
            raise SeparableDataError(
                "separable data: coefficients diverged, Wald inference is meaningless")

    p = _sigmoid(X @ beta)
    w = np.maximum(p * (1.0 - p), 1e-12)
    covariance = np.linalg.inv(X.T @ (X * w[:, None]))
    se = np.sqrt(np.diag(covariance))
    pvals = 2.0 * stats.norm.sf(np.abs(beta / se))
    return LogitFit(
        beta0=float(beta[0]),
        beta_r=float(beta[1]),
        beta_e=float(beta[2]),
        std_errors=tuple(float(x) for x in se),
        p_values=tuple(float(x) for x in pvals),
        converged=converged,
        iterations=iterations,
    )


def _sigmoid(eta: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(eta, -35.0, 35.0)))


def load_decoupling_csv(path) -> list[DecouplingSample]:
    """Read ``eff_rank,entropy,correct`` rows; correct must be 0 or 1."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FileFormatError("bad_header", "empty samples file") from None
        if tuple(h.strip() for h in header) != DECOUPLING_CSV_HEADER:
            raise FileFormatError(
                "bad_header",
                f"expected header {','.join(DECOUPLING_CSV_HEADER)}, got {','.join(header)}")
        samples = []
        for row_number, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != 3:
                raise FileFormatError(
                    "dimension_mismatch", f"row {row_number} has {len(row)} fields, expected 3")
            try:
                eff_rank = float(row[0])
                entropy = float(row[1])
                flag = int(row[2])
            except ValueError:
                raise FileFormatError(
                    "bad_value", f"unparseable value at row {row_number}") from None
            if flag not in (0, 1):
                raise FileFormatError(
                    "bad_value", f"correct must be 0 or 1 at row {row_number}, got {row[2]}")
            try:
                samples.append(DecouplingSample(eff_rank, entropy, bool(flag)))
            except InputError as exc:
                raise FileFormatError("bad_value", f"row {row_number}: {exc}") from None
    return samples
