"""Adversarial and baseline training of the scoring classifier.

Two trainers share one loss family. The discriminator loss on a minibatch is

    mean cross-entropy(InD)
      - beta_ood * mean score(observed OoD)
      - beta_z   * mean score(generated points)

which the discriminator descends: it learns to classify labeled points
confidently while mapping both observed and generated outliers to high
scores, so the generated batch acts as beta_z-weighted augmentation of the
observed pool. The generator ascends ``beta_z * mean score(D(G(z)))``,
steering its samples toward regions the discriminator still finds uncertain;
the two updates together let the pair stake out out-of-distribution
territory beyond the observed points. `train_see_ood` alternates n_d
discriminator steps with n_g generator steps per outer iteration;
`train_wood` drops the generator entirely and takes one descent step per
iteration.

Minibatches are drawn uniformly with replacement from each pool, with the
OoD batch size clamped to the pool size. Runs are deterministic functions of
(config, data, seed): the discriminator is initialized first, then the
generator, then the loop consumes draws in sampling order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .data import Dataset, sample_noise
from .nets import (
    Activation,
    AdamState,
    Gradients,
    Head,
    MlpParams,
    NumericError,
    adam_step,
    init_adam,
    init_mlp,
    log_softmax,
    mlp_backward,
    mlp_forward,
)
from .rng import Rng
from .wasserstein import binary_cost_matrix, validate_cost_matrix

__all__ = [
    "TrainConfig",
    "IterationRecord",
    "TrainHistory",
    "discriminator_loss_and_grads",
    "generator_objective_and_grads",
    "train_see_ood",
    "train_wood",
    "sample_generator",
    "write_history_csv",
]


@dataclass(frozen=True)
class TrainConfig:
    """Every knob of a training run; defaults match the 2-D benchmark."""

    beta_ood: float = 1.0
    beta_z: float = 0.001
    n_d: int = 2
    n_g: int = 1
    lr_d: float = 1e-4
    lr_g: float = 1e-4
    batch_ind: int = 64
    batch_ood: int = 32
    batch_gen: int = 64
    noise_dim: int = 2
    iterations: int = 2000
    seed: int = 0
    discriminator_arch: tuple[int, ...] = (2, 128, 3)
    generator_arch: tuple[int, ...] = (2, 128, 2)
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8

    def __post_init__(self):
        if self.beta_ood <= 0.0:
            raise ValueError(f"beta_ood must be > 0, got {self.beta_ood}")
        if self.beta_z < 0.0:
            raise ValueError(f"beta_z must be >= 0, got {self.beta_z}")
        for name in ("n_d", "n_g", "batch_ind", "batch_ood", "batch_gen", "noise_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("lr_d", "lr_g"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")

    def effective_batch_ood(self, pool_size: int) -> int:
        """OoD minibatches never exceed the observed pool."""
        return min(self.batch_ood, pool_size)


@dataclass(frozen=True)
class IterationRecord:
    """Loss breakdown at the end of one outer iteration.

    Generator fields are None for runs without a generator.
    """

    iteration: int
    loss: float
    ce: float
    ood_score_mean: float
    gen_score_mean: float | None
    gen_objective: float | None


@dataclass(frozen=True)
class TrainHistory:
    records: tuple[IterationRecord, ...]
    discriminator: MlpParams
    generator: MlpParams | None


def _one_hot(labels: np.ndarray, K: int) -> np.ndarray:
    if labels.size and (labels.min() < 1 or labels.max() > K):
        raise ValueError(f"labels must lie in 1..{K}")
    return np.eye(K)[labels - 1]


def _score_values_and_logit_grads(probs: np.ndarray,
                                  M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row scores and d(score)/d(logits) for softmax outputs.

    With cost column g of the (smallest-index) argmin target, the chain rule
    through the softmax gives d(score)/dz_i = p_i * (g_i - p.g).
    """
    costs = probs @ M
    k_star = np.argmin(costs, axis=1)
    scores = costs[np.arange(costs.shape[0]), k_star]
    g = M[:, k_star].T
    inner = np.sum(probs * g, axis=1, keepdims=True)
    return scores, probs * (g - inner)


def discriminator_loss_and_grads(
    D: MlpParams,
    ind_x: np.ndarray,
    ind_y: np.ndarray,
    ood_x: np.ndarray,
    gen_x: np.ndarray,
    beta_ood: float,
    beta_z: float,
    M: np.ndarray,
) -> tuple[float, tuple[float, float, float], Gradients]:
    """Full three-term loss and its gradient over the discriminator.

    ``loss = ce - beta_ood * mean_ood_score - beta_z * mean_gen_score``;
    returns (loss, (ce, mean_ood_score, mean_gen_score), grads) with grads
    the exact gradient of that loss. `gen_x` may be empty for generator-free
    training, in which case the third component is 0. The generated batch is
    treated as a fixed sample of augmentation points; nothing backpropagates
    into whatever produced it.
    """
    mat = validate_cost_matrix(M)
    if D.head is not Head.SOFTMAX:
        raise ValueError("the discriminator needs a Softmax head")
    ind_x = np.asarray(ind_x, dtype=float)
    ind_y = np.asarray(ind_y)
    if ind_x.ndim != 2 or ind_x.shape[0] == 0:
        raise ValueError("the labeled batch must be a nonempty (n, d) array")
    ood_x = np.asarray(ood_x, dtype=float)
    if ood_x.ndim != 2 or ood_x.shape[0] == 0:
        raise ValueError("the observed OoD batch must be a nonempty (n, d) array")
    gen_x = np.asarray(gen_x, dtype=float)

    K = D.output_dim
    targets = _one_hot(ind_y, K)

    probs_ind, cache_ind = mlp_forward(D, ind_x)
    n_ind = ind_x.shape[0]
    logits_ind = cache_ind.pre_activations[-1]
    ce = float(-np.sum(log_softmax(logits_ind) * targets) / n_ind)
    grads, _ = mlp_backward(D, cache_ind, (probs_ind - targets) / n_ind)

    probs_ood, cache_ood = mlp_forward(D, ood_x)
    n_ood = ood_x.shape[0]
    ood_scores, ood_logit_grads = _score_values_and_logit_grads(probs_ood, mat)
    mean_ood = float(ood_scores.mean())
    g_ood, _ = mlp_backward(D, cache_ood, (-beta_ood / n_ood) * ood_logit_grads)
    grads = grads.plus(g_ood)

    mean_gen = 0.0
    if gen_x.shape[0] > 0:
        probs_gen, cache_gen = mlp_forward(D, gen_x)
        n_gen = gen_x.shape[0]
        gen_scores, gen_logit_grads = _score_values_and_logit_grads(probs_gen, mat)
        mean_gen = float(gen_scores.mean())
        g_gen, _ = mlp_backward(D, cache_gen, (-beta_z / n_gen) * gen_logit_grads)
        grads = grads.plus(g_gen)

    loss = ce - beta_ood * mean_ood - beta_z * mean_gen
    if not np.isfinite(loss):
        raise NumericError(f"discriminator loss is not finite: {loss}")
    return loss, (ce, mean_ood, mean_gen), grads


def generator_objective_and_grads(
    D: MlpParams,
    G: MlpParams,
    noise_batch: np.ndarray,
    beta_z: float,
    M: np.ndarray,
) -> tuple[float, Gradients]:
    """``beta_z * mean score(D(G(z)))`` and its gradient over the generator.

    The discriminator is treated as frozen; its input gradient chains the
    score back into G.
    """
    mat = validate_cost_matrix(M)
    noise = np.asarray(noise_batch, dtype=float)
    if noise.ndim != 2 or noise.shape[0] == 0:
        raise ValueError("the noise batch must be a nonempty (n, dim) array")
    if G.head is Head.SOFTMAX:
        raise ValueError("the generator head must be Identity or Tanh")
    if G.output_dim != D.input_dim:
        raise ValueError(
            f"generator emits dimension {G.output_dim}, discriminator expects {D.input_dim}"
        )
    if D.head is not Head.SOFTMAX:
        raise ValueError("the discriminator needs a Softmax head")

    fake, cache_g = mlp_forward(G, noise)
    probs, cache_d = mlp_forward(D, fake)
    n = noise.shape[0]
    scores, logit_grads = _score_values_and_logit_grads(probs, mat)
    objective = float(beta_z * scores.mean())
    if not np.isfinite(objective):
        raise NumericError(f"generator objective is not finite: {objective}")

    _, d_fake = mlp_backward(D, cache_d, (beta_z / n) * logit_grads)
    grads, _ = mlp_backward(G, cache_g, d_fake)
    return objective, grads


def _check_architectures(config: TrainConfig, data: Dataset, with_generator: bool) -> None:
    if config.discriminator_arch[0] != data.d:
        raise ValueError(
            f"discriminator input dimension {config.discriminator_arch[0]} "
            f"does not match data dimension {data.d}"
        )
    if config.discriminator_arch[-1] != data.K:
        raise ValueError(
            f"discriminator output dimension {config.discriminator_arch[-1]} "
            f"does not match class count {data.K}"
        )
    if with_generator:
        if config.generator_arch[0] != config.noise_dim:
            raise ValueError(
                f"generator input dimension {config.generator_arch[0]} "
                f"does not match noise_dim {config.noise_dim}"
            )
        if config.generator_arch[-1] != data.d:
            raise ValueError(
                f"generator output dimension {config.generator_arch[-1]} "
                f"does not match data dimension {data.d}"
            )


def train_see_ood(config: TrainConfig, data: Dataset, rng: Rng | None = None) -> TrainHistory:
    """Alternating adversarial training; requires at least one observed OoD point.

    Per outer iteration: n_d discriminator descent steps, each on fresh InD,
    OoD and generated minibatches, then n_g generator ascent steps on fresh
    noise. The recorded loss breakdown comes from the iteration's last
    discriminator step, the objective from its last generator step.
    """
    if data.ood_train.shape[0] == 0:
        raise ValueError("adversarial training requires at least one observed OoD sample")
    if rng is None:
        rng = Rng(config.seed)
    _check_architectures(config, data, with_generator=True)

    M = binary_cost_matrix(data.K)
    D = init_mlp(config.discriminator_arch, Activation.RELU, Head.SOFTMAX, rng)
    G = init_mlp(config.generator_arch, Activation.RELU, Head.IDENTITY, rng)
    adam_d = init_adam(D, config.adam_beta1, config.adam_beta2, config.adam_epsilon)
    adam_g = init_adam(G, config.adam_beta1, config.adam_beta2, config.adam_epsilon)

    n_ind = data.ind_train_x.shape[0]
    n_ood_pool = data.ood_train.shape[0]
    b_ood = config.effective_batch_ood(n_ood_pool)

    records = []
    for it in range(1, config.iterations + 1):
        loss = ce = mean_ood = mean_gen = 0.0
        for _ in range(config.n_d):
            ind_idx = rng.indices_below(n_ind, config.batch_ind)
            ood_idx = rng.indices_below(n_ood_pool, b_ood)
            noise = sample_noise(config.noise_dim, config.batch_gen, rng)
            fake, _ = mlp_forward(G, noise)
            loss, (ce, mean_ood, mean_gen), grads = discriminator_loss_and_grads(
                D,
                data.ind_train_x[ind_idx],
                data.ind_train_y[ind_idx],
                data.ood_train[ood_idx],
                fake,
                config.beta_ood,
                config.beta_z,
                M,
            )
            D, adam_d = adam_step(D, grads, adam_d, config.lr_d)

        objective = 0.0
        for _ in range(config.n_g):
            noise = sample_noise(config.noise_dim, config.batch_gen, rng)
            objective, g_grads = generator_objective_and_grads(D, G, noise, config.beta_z, M)
            # Ascent: feed Adam the negated gradient.
            G, adam_g = adam_step(G, g_grads.scaled(-1.0), adam_g, config.lr_g)

        records.append(IterationRecord(it, loss, ce, mean_ood, mean_gen, objective))

    return TrainHistory(tuple(records), D, G)


def train_wood(config: TrainConfig, data: Dataset, rng: Rng | None = None) -> TrainHistory:
    """Generator-free baseline: descend ``mean CE - beta_ood * mean score(OoD)``."""
    if data.ood_train.shape[0] == 0:
        raise ValueError("training requires at least one observed OoD sample")
    if rng is None:
        rng = Rng(config.seed)
    _check_architectures(config, data, with_generator=False)

    M = binary_cost_matrix(data.K)
    D = init_mlp(config.discriminator_arch, Activation.RELU, Head.SOFTMAX, rng)
    adam_d = init_adam(D, config.adam_beta1, config.adam_beta2, config.adam_epsilon)

    n_ind = data.ind_train_x.shape[0]
    n_ood_pool = data.ood_train.shape[0]
    b_ood = config.effective_batch_ood(n_ood_pool)
    empty_gen = np.empty((0, data.d))

    records = []
    for it in range(1, config.iterations + 1):
        ind_idx = rng.indices_below(n_ind, config.batch_ind)
        ood_idx = rng.indices_below(n_ood_pool, b_ood)
        loss, (ce, mean_ood, _), grads = discriminator_loss_and_grads(
            D,
            data.ind_train_x[ind_idx],
            data.ind_train_y[ind_idx],
            data.ood_train[ood_idx],
            empty_gen,
            config.beta_ood,
            0.0,
            M,
        )
        D, adam_d = adam_step(D, grads, adam_d, config.lr_d)
        records.append(IterationRecord(it, loss, ce, mean_ood, None, None))

    return TrainHistory(tuple(records), D, None)


def sample_generator(G: MlpParams, count: int, n: int, rng: Rng) -> np.ndarray:
    """`count` generated points from standard-normal noise of dimension n."""
    if G.input_dim != n:
        raise ValueError(f"generator expects noise dimension {G.input_dim}, got {n}")
    if count == 0:
        return np.empty((0, G.output_dim))
    noise = sample_noise(n, count, rng)
    out, _ = mlp_forward(G, noise)
    return out


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_history_csv(history: TrainHistory, path) -> None:
    """One row per iteration; generator columns stay empty when absent."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["iteration", "loss", "ce", "ood_score_mean", "gen_score_mean", "gen_objective"]
        )
        for rec in history.records:
            writer.writerow([
                rec.iteration,
                _fmt(rec.loss),
                _fmt(rec.ce),
                _fmt(rec.ood_score_mean),
                "" if rec.gen_score_mean is None else _fmt(rec.gen_score_mean),
                "" if rec.gen_objective is None else _fmt(rec.gen_objective),
            ])
