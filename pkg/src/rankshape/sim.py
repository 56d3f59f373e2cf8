"""A desk-scale subspace bandit whose hidden-state geometry makes rank
collapse observable in seconds.

The environment draws a random orthogonal frame, reserves the first few
directions as a bias subspace, and builds a vocabulary of unit token
directions: most live entirely inside the bias subspace, a minority carry
most of their norm in the orthogonal complement, tilted toward a hidden
target direction. A rollout samples tokens i.i.d. from a softmax policy
and accumulates states through a leaky recurrence, so the trajectory's
effective rank directly reflects how many directions the policy still
visits. A rollout is correct when the final state points far enough along
the hidden target. Training is plain group-normalized REINFORCE on the
logits, with the correctness-gated rank reward from the rewards module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GroupSizeError, InputError, RangeError
from .rewards import DEFAULT_GROUP_SIZE, RolloutOutcome, group_advantages, total_reward
from .spectral import covariance_spectrum, effective_rank
from .windows import DEFAULT_STRIDE, DEFAULT_WIDTH, norm_rank, windowed_min_effrank

DEFAULT_LEARNING_RATE = 0.05
DEFAULT_BIAS_LOGIT = 2.0

# Null tokens put this fraction range of their norm in the complement and
# scatter around the target with this much unit-sphere spread. Chosen so
# correctness is reachable from the complement (projections on the target
# stay well above typical tau) while the null directions remain distinct
# enough that spreading over them raises effective rank.
NULL_MASS_RANGE = (0.85, 0.98)
TARGET_SPREAD = 0.5


@dataclass(frozen=True)
class EnvSpec:
    """Geometry and dynamics of one subspace bandit instance."""

    d: int
    vocab: int
    bias_dim: int
    n_null: int
    directions: np.ndarray  # (vocab, d) unit rows; bias tokens first
    bias_basis: np.ndarray  # (d, bias_dim) orthonormal columns
    u_star: np.ndarray      # unit target, orthogonal to the bias subspace
    tau: float
    horizon: int
    decay: float
    seed: int

    @property
    def n_bias(self) -> int:
        return self.vocab - self.n_null

    @property
    def bias_token_ids(self) -> np.ndarray:
        return np.arange(self.n_bias)

    @property
    def null_token_ids(self) -> np.ndarray:
        return np.arange(self.n_bias, self.vocab)

    def null_component(self, vec) -> np.ndarray:
        """Component of vec orthogonal to the bias subspace."""
        v = np.asarray(vec, dtype=np.float64)
        return v - self.bias_basis @ (self.bias_basis.T @ v)

    def config(self) -> dict:
        return {
            "d": self.d,
            "vocab": self.vocab,
            "bias_dim": self.bias_dim,
            "n_null": self.n_null,
            "tau": self.tau,
            "horizon": self.horizon,
            "decay": self.decay,
            "seed": self.seed,
        }


def _unit(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise InputError("cannot normalize a zero vector")
    return v / norm


def build_env(seed: int, d: int = 16, vocab: int = 32, bias_dim: int = 4,
              n_null: int = 8, tau: float = 0.3, horizon: int = 32,
              decay: float = 0.7) -> EnvSpec:
    """Deterministically construct the bandit geometry for a seed.

    The orthogonal frame comes from the QR of a seeded Gaussian matrix;
    its first bias_dim columns span the bias subspace, the rest the
    complement holding the target u_star. The same seed gives a
    bit-identical environment.
    """
    if seed < 0:
        raise InputError(f"seed must be >= 0, got {seed}")
    if not 1 <= bias_dim < d:
        raise InputError(f"need 1 <= bias_dim < d, got bias_dim={bias_dim}, d={d}")
    if not 1 <= n_null < vocab:
        raise InputError(f"need 1 <= n_null < vocab, got n_null={n_null}, vocab={vocab}")
    if horizon < 1:
        raise InputError(f"horizon must be >= 1, got {horizon}")
    if not 0.0 <= decay < 1.0:
        raise InputError(f"decay must be in [0, 1), got {decay}")
    if not 0.0 < tau <= 1.0:
        raise InputError(f"tau must be in (0, 1], got {tau}")

    rng = np.random.default_rng(seed)
    frame, _ = np.linalg.qr(rng.normal(size=(d, d)))
    bias_basis = frame[:, :bias_dim]
    null_basis = frame[:, bias_dim:]
    u_star = null_basis @ _unit(rng.normal(size=d - bias_dim))

    n_bias = vocab - n_null
    directions = np.empty((vocab, d))
    for i in range(n_bias):
        directions[i] = bias_basis @ _unit(rng.normal(size=bias_dim))
    for i in range(n_bias, vocab):
        in_bias = bias_basis @ _unit(rng.normal(size=bias_dim))
        tilt = null_basis @ rng.normal(size=d - bias_dim)
        in_null = _unit(u_star + TARGET_SPREAD * _unit(tilt))
        mass = rng.uniform(*NULL_MASS_RANGE)
        directions[i] = np.sqrt(1.0 - mass * mass) * in_bias + mass * in_null
    return EnvSpec(d=d, vocab=vocab, bias_dim=bias_dim, n_null=n_null,
                   directions=directions, bias_basis=bias_basis, u_star=u_star,
                   tau=float(tau), horizon=int(horizon), decay=float(decay),
                   seed=int(seed))


@dataclass
class PolicyParams:
    """Softmax policy over tokens: probs = softmax(scale * logits)."""

    logits: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        logits = np.asarray(self.logits, dtype=np.float64)
        if logits.ndim != 1 or logits.size < 1:
            raise InputError(f"logits must be a non-empty vector, got shape {logits.shape}")
        if not np.all(np.isfinite(logits)):
            raise InputError("logits must be finite")
        if not np.isfinite(self.scale) or self.scale <= 0.0:
            raise InputError(f"scale must be positive, got {self.scale}")
        self.logits = logits

    def probs(self) -> np.ndarray:
        return _softmax(self.scale * self.logits)

    def entropy(self) -> float:
        p = self.probs()
        p = p[p > 0.0]
        return float(-(p * np.log(p)).sum())

    def copy(self) -> "PolicyParams":
        return PolicyParams(logits=self.logits.copy(), scale=self.scale)


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max())
    return e / e.sum()


def biased_init(env: EnvSpec, offset: float = DEFAULT_BIAS_LOGIT) -> PolicyParams:
    """Policy concentrated on the bias subspace: bias-token logits get +offset."""
    logits = np.zeros(env.vocab)
    logits[: env.n_bias] = offset
    return PolicyParams(logits=logits)


@dataclass(frozen=True)
class Rollout:
    """One sampled trajectory and its verdict."""

    tokens: np.ndarray
    states: np.ndarray  # (horizon, d)
    correct: bool
    log_prob: float


def rollout(policy: PolicyParams, env: EnvSpec, seed) -> Rollout:
    """Sample horizon tokens i.i.d. and run the leaky state recurrence.

    ``seed`` is anything numpy's default_rng accepts (int, SeedSequence,
    Generator). Correctness: the normalized final state's projection on
    u_star reaches tau.
    """
    if policy.logits.size != env.vocab:
        raise InputError(
            f"policy has {policy.logits.size} logits for a {env.vocab}-token vocabulary")
    rng = np.random.default_rng(seed)
    p = policy.probs()
    tokens = rng.choice(env.vocab, size=env.horizon, p=p)
    states = np.empty((env.horizon, env.d))
    h = np.zeros(env.d)
    for t, a in enumerate(tokens):
        h = env.decay * h + env.directions[a]
        states[t] = h
    final = states[-1]
    norm = float(np.linalg.norm(final))
    correct = norm > 0.0 and float(final @ env.u_star) / norm >= env.tau
    log_prob = float(np.log(p[tokens]).sum())
    return Rollout(tokens=tokens, states=states, correct=bool(correct), log_prob=log_prob)


def weighted_log_prob(logits, scale: float, token_seqs, advantages) -> float:
    """sum_i A_i * log pi(tokens_i) with the advantages held fixed."""
    logits = np.asarray(logits, dtype=np.float64)
    logp = np.log(_softmax(scale * logits))
    return float(sum(a * logp[np.asarray(seq)].sum()
                     for seq, a in zip(token_seqs, advantages)))


def policy_gradient(logits, scale: float, token_seqs, advantages) -> np.ndarray:
    """Gradient of weighted_log_prob with respect to the logits.

    For i.i.d. softmax sampling this is scale * sum_i A_i (counts_i - T_i * p).
    """
    logits = np.asarray(logits, dtype=np.float64)
    p = _softmax(scale * logits)
    grad = np.zeros_like(logits)
    for seq, a in zip(token_seqs, advantages):
        seq = np.asarray(seq)
        counts = np.bincount(seq, minlength=logits.size)
        grad += a * (counts - seq.size * p)
    return scale * grad


@dataclass(frozen=True)
class SimTrace:
    """Per-iteration training metrics plus the run's config snapshot.

    Metrics are recorded before each update, so row 0 describes the
    initial policy.
    """

    iteration: np.ndarray
    mean_windowed_erank: np.ndarray
    success_rate: np.ndarray
    mean_reward: np.ndarray
    policy_entropy: np.ndarray
    config: dict = field(default_factory=dict)
    seed: int = 0
    final_policy: PolicyParams | None = None

    CSV_HEADER = "iteration,mean_windowed_erank,success_rate,mean_reward,policy_entropy"

    def __len__(self) -> int:
        return int(self.iteration.size)

    def to_csv(self, path) -> None:
        lines = [self.CSV_HEADER]
        for i in range(len(self)):
            lines.append(",".join([
                str(int(self.iteration[i])),
                repr(float(self.mean_windowed_erank[i])),
                repr(float(self.success_rate[i])),
                repr(float(self.mean_reward[i])),
                repr(float(self.policy_entropy[i])),
            ]))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def from_csv(cls, path) -> "SimTrace":
        text = Path(path).read_text(encoding="utf-8").strip().splitlines()
        if not text or text[0].strip() != cls.CSV_HEADER:
            raise InputError(f"not a trace CSV (bad header): {path}")
        rows = [line.split(",") for line in text[1:] if line.strip()]
        if not rows or any(len(r) != 5 for r in rows):
            raise InputError(f"malformed trace CSV: {path}")
        cols = list(zip(*rows))
        return cls(
            iteration=np.array([int(x) for x in cols[0]]),
            mean_windowed_erank=np.array([float(x) for x in cols[1]]),
            success_rate=np.array([float(x) for x in cols[2]]),
            mean_reward=np.array([float(x) for x in cols[3]]),
            policy_entropy=np.array([float(x) for x in cols[4]]),
        )

    def config_json(self) -> str:
        import json

        return json.dumps(dict(self.config, seed=self.seed), sort_keys=True, indent=2) + "\n"


def train(env: EnvSpec, init_policy: PolicyParams, alpha: float,
          group_size: int = DEFAULT_GROUP_SIZE, iterations: int = 500,
          learning_rate: float = DEFAULT_LEARNING_RATE, seed: int = 0,
          window: int | None = None, stride: int = DEFAULT_STRIDE) -> SimTrace:
    """Group-normalized REINFORCE on the logits with the rank-aware reward.

    Each iteration samples group_size rollouts (sub-seeded from seed and
    the iteration index, so runs are bit-reproducible), scores them with
    total_reward at this alpha, standardizes within the group, and ascends
    the advantage-weighted log-probability. No KL term, no clipping, no
    baseline beyond the group mean.
    """
    if alpha < 0.0:
        raise InputError(f"alpha must be >= 0, got {alpha}")
    if group_size < 2:
        raise GroupSizeError(f"group too small: need at least 2 rollouts, got {group_size}")
    if iterations < 1:
        raise InputError(f"iterations must be >= 1, got {iterations}")
    if seed < 0:
        raise InputError(f"seed must be >= 0, got {seed}")
    if not np.isfinite(learning_rate):
        raise InputError("learning_rate must be finite")
    width = window if window is not None else min(DEFAULT_WIDTH, env.horizon)

    theta = np.asarray(init_policy.logits, dtype=np.float64).copy()
    scale = init_policy.scale
    its = np.arange(iterations)
    eranks = np.empty(iterations)
    successes = np.empty(iterations)
    rewards_out = np.empty(iterations)
    entropies = np.empty(iterations)

    for it in range(iterations):
        policy = PolicyParams(logits=theta, scale=scale)
        samples = [rollout(policy, env, np.random.SeedSequence([seed, it, i]))
                   for i in range(group_size)]
        min_eranks = []
        outcomes = []
        for r in samples:
            profile = windowed_min_effrank(r.states, width, stride)
            min_eranks.append(profile.min_erank)
            outcomes.append(RolloutOutcome(correct=r.correct,
                                           norm_rank=norm_rank(profile),
                                           log_prob=r.log_prob))
        rewards = np.array([total_reward(o, alpha) for o in outcomes])
        advantages = group_advantages(rewards)

        eranks[it] = np.mean(min_eranks)
        successes[it] = np.mean([r.correct for r in samples])
        rewards_out[it] = rewards.mean()
        entropies[it] = policy.entropy()

        grad = policy_gradient(theta, scale, [r.tokens for r in samples], advantages)
        theta = theta + learning_rate * grad

    config = {
        "alpha": float(alpha),
        "group_size": int(group_size),
        "iterations": int(iterations),
        "learning_rate": float(learning_rate),
        "window": int(width),
        "stride": int(stride),
        "train_seed": int(seed),
        "scale": float(scale),
        "env": env.config(),
    }
    return SimTrace(iteration=its, mean_windowed_erank=eranks, success_rate=successes,
                    mean_reward=rewards_out, policy_entropy=entropies,
                    config=config, seed=int(seed),
                    final_policy=PolicyParams(logits=theta, scale=scale))


@dataclass(frozen=True)
class SweepResult:
    """Mean full-trajectory effective rank per logit scale."""

    scales: tuple[float, ...]
    mean_erank: tuple[float, ...]
    std_error: tuple[float, ...]


def temperature_sweep(policy: PolicyParams, env: EnvSpec, scales,
                      samples_per_scale: int, seed: int = 0) -> SweepResult:
    """Monte Carlo effective-rank estimate at each concentration scale.

    Scales multiply the policy's own scale; they must be positive and
    ascending. Sharper policies visit fewer directions, so the estimated
    mean rank should fall (within sampling noise) as the scale grows.
    """
    scales = [float(s) for s in scales]
    if not scales or any(s <= 0.0 for s in scales):
        raise InputError("scales must be positive")
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise InputError("scales must be strictly ascending")
    if samples_per_scale < 1:
        raise RangeError(f"samples_per_scale must be >= 1, got {samples_per_scale}")
    if seed < 0:
        raise InputError(f"seed must be >= 0, got {seed}")
    means = []
    errors = []
    for j, s in enumerate(scales):
        scaled = PolicyParams(logits=policy.logits, scale=policy.scale * s)
        values = np.empty(samples_per_scale)
        for i in range(samples_per_scale):
            r = rollout(scaled, env, np.random.SeedSequence([seed, j, i]))
            spectrum = covariance_spectrum(r.states)
            values[i] = 1.0 if spectrum.total_mass <= 0.0 else effective_rank(spectrum)
        means.append(float(values.mean()))
        errors.append(float(values.std(ddof=1) / np.sqrt(samples_per_scale))
                      if samples_per_scale > 1 else 0.0)
    return SweepResult(scales=tuple(scales), mean_erank=tuple(means), std_error=tuple(errors))


def geometric_barrier_probe(policy: PolicyParams, env: EnvSpec, delta: float,
                            samples: int, seed: int = 0) -> float:
    """Monte Carlo P(||null-space component of the final state|| > delta).

    Near zero for policies trapped in the bias subspace; rises once the
    policy routes mass through complement-heavy tokens.
    """
    if delta <= 0.0:
        raise RangeError(f"delta must be positive, got {delta}")
    if samples < 1:
        raise RangeError(f"samples must be >= 1, got {samples}")
    if seed < 0:
        raise InputError(f"seed must be >= 0, got {seed}")
    hits = 0
    for i in range(samples):
        r = rollout(policy, env, np.random.SeedSequence([seed, i]))
        if float(np.linalg.norm(env.null_component(r.states[-1]))) > delta:
            hits += 1
    return hits / samples
