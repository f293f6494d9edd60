"""Adversarial generator training, sampling, and epoch checkpoints.

The generator maps Gaussian noise to tanh-ranged samples; the discriminator
scores realness with a sigmoid applied inside the loss. Training follows the
original two-phase minibatch scheme with the non-saturating generator
objective, 1:1 update ratio, plain SGD with momentum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .errors import DataRangeError, ParameterError


class GanModel:
    """Generator/discriminator pair plus the trained-epoch counter.

    Optimizer velocities live on the model so momentum carries across
    epoch-by-epoch training calls, but they are not parameters: bundles and
    checkpoints serialize weights only.
    """

    def __init__(self, generator: nn.MLP, discriminator: nn.MLP,
                 noise_dim: int, epochs_trained: int = 0):
        if generator.in_dim != noise_dim:
            raise ParameterError("generator input width must equal noise_dim")
        if generator.out_dim != discriminator.in_dim:
            raise ParameterError(
                "generator output width must match discriminator input")
        if generator.layers[-1].activation != "tanh":
            raise ParameterError("generator must end in tanh")
        self.generator = generator
        self.discriminator = discriminator
        self.noise_dim = noise_dim
        self.epochs_trained = epochs_trained
        self._g_opt = None
        self._d_opt = None

    @property
    def output_dim(self) -> int:
        return self.generator.out_dim

    def sample(self, count: int, seed: int) -> np.ndarray:
        return sample(self, count, seed)

    def copy(self) -> "GanModel":
        return GanModel(self.generator.copy(), self.discriminator.copy(),
                        self.noise_dim, self.epochs_trained)


class NoiseGenerator:
    """Degenerate generator: i.i.d. N(0,1) noise clipped to [-1, 1].

    Swapping this in for a trained GAN reproduces the classic
    pseudo-rehearsal baseline with no other code path change.
    """

    def __init__(self, d: int):
        if d < 1:
            raise ParameterError("output dimensionality must be positive")
        self.d = d

    @property
    def output_dim(self) -> int:
        return self.d

    def sample(self, count: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x2E]))
        return np.clip(rng.standard_normal((count, self.d)), -1.0, 1.0)


@dataclass
class GanTrainConfig:
    batch_size: int = 64
    lr: float = 0.05
    momentum: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ParameterError("batch size must be positive")


def build_gan(data_dim: int, noise_dim: int, generator_hidden: list[int],
              discriminator_hidden: list[int], seed: int,
              discriminator_pool: int = 5,
              discriminator_dropout: float = 0.0) -> GanModel:
    """Seeded GAN: relu generator hiddens ending in tanh; maxout critic."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x6A]))
    g_layers = []
    width = noise_dim
    for h in generator_hidden:
        g_layers.append(nn.init_dense(rng, width, h, "relu"))
        width = h
    g_layers.append(nn.init_dense(rng, width, data_dim, "tanh"))

    d_layers = []
    width = data_dim
    for h in discriminator_hidden:
        d_layers.append(nn.init_dense(rng, width, h * discriminator_pool,
                                      "maxout", discriminator_pool,
                                      dropout=discriminator_dropout))
        width = h
    d_layers.append(nn.init_dense(rng, width, 1, "identity"))
    return GanModel(nn.MLP(g_layers), nn.MLP(d_layers), noise_dim)


def sample(gan: GanModel, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` generator outputs, deterministic per seed."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5A]))
    z = rng.standard_normal((count, gan.noise_dim))
    return gan.generator.forward(z, cache=False)


def gan_train_epoch(gan: GanModel, samples: np.ndarray,
                    config: GanTrainConfig) -> tuple[float, float]:
    """One adversarial epoch over ``samples``; returns (d_loss, g_loss).

    Per minibatch: one discriminator update on real-vs-fake binary
    cross-entropy, then one generator update on the non-saturating
    objective. Each phase touches only its own sub-network's parameters.
    """
    samples = nn.as_matrix(samples)
    if samples.size and np.abs(samples).max() > 1.0 + 1e-6:
        raise DataRangeError("GAN training data must be normalized to [-1, 1]")
    if gan._d_opt is None:
        sched = nn.LearningSchedule(config.lr)
        gan._d_opt = nn.OptimizerState(sched, config.momentum)
        gan._g_opt = nn.OptimizerState(nn.LearningSchedule(config.lr),
                                       config.momentum)
    rng = np.random.default_rng(
        np.random.SeedSequence([int(config.seed), gan.epochs_trained, 0xE0]))
    order = rng.permutation(samples.shape[0])
    d_losses, g_losses = [], []
    for start in range(0, samples.shape[0], config.batch_size):
        real = samples[order[start:start + config.batch_size]]
        b = real.shape[0]

        # discriminator phase: real=1, fake=0 (fake batch is held constant)
        z = rng.standard_normal((b, gan.noise_dim))
        fake = gan.generator.forward(z, cache=False)
        scores = gan.discriminator.forward(np.vstack([real, fake]), cache=True)
        targets = np.concatenate([np.ones(b), np.zeros(b)])
        d_res = nn.binary_cross_entropy_logits(scores, targets)
        _, d_grads = gan.discriminator.backward(d_res.grad.reshape(-1, 1))
        nn.sgd_step(gan.discriminator.parameters(), d_grads, gan._d_opt)
        d_losses.append(d_res.loss)

        # generator phase: maximize log D(G(z)) on a fresh noise draw
        z = rng.standard_normal((b, gan.noise_dim))
        generated = gan.generator.forward(z, cache=True)
        scores = gan.discriminator.forward(generated, cache=True)
        g_res = nn.binary_cross_entropy_logits(scores, np.ones(b))
        d_input, _ = gan.discriminator.backward(g_res.grad.reshape(-1, 1))
        _, g_grads = gan.generator.backward(d_input)
        nn.sgd_step(gan.generator.parameters(), g_grads, gan._g_opt)
        g_losses.append(g_res.loss)

    gan.epochs_trained += 1
    return float(np.mean(d_losses)), float(np.mean(g_losses))


def train(gan: GanModel, samples: np.ndarray, epochs: int,
          config: GanTrainConfig, snapshot_epochs=()) -> tuple[
              GanModel, list[tuple[float, float]], dict[int, GanModel]]:
    """Train for ``epochs`` epochs, snapshotting copies at requested counts.

    Snapshot keys are epochs_trained values; requesting 0 captures the
    untrained state.
    """
    snapshots = {}
    losses = []
    if gan.epochs_trained in snapshot_epochs:
        snapshots[gan.epochs_trained] = gan.copy()
    for _ in range(epochs):
        losses.append(gan_train_epoch(gan, samples, config))
        if gan.epochs_trained in snapshot_epochs:
            snapshots[gan.epochs_trained] = gan.copy()
    return gan, losses, snapshots


def checkpoint_epoch(gan: GanModel, path) -> str:
    """Write an epoch-tagged snapshot in the broadcast bundle format."""
    from . import bundle  # bundle serializes gan models; avoid import cycle

    return str(bundle.write_bundle(path, gan=gan, input_dim=gan.output_dim,
                                   base_class_count=0,
                                   gan_epoch=gan.epochs_trained))


def load_checkpoint(path) -> GanModel:
    """Restore a checkpointed GAN; integrity failures raise, atomically."""
    from . import bundle

    loaded = bundle.read_bundle(path)
    if loaded.gan is None:
        raise ParameterError(f"no GAN stored in bundle at {path}")
    return loaded.gan
