"""Bounded-continual learning: repeated increments, one GAN per increment.

Each step snapshots the current classifier as the phantom labeler, builds a
mixture sampler that draws every phantom minibatch from one uniformly
chosen past GAN, expands the head, trains interleaved, and finally trains a
fresh GAN on the step's own data for future increments to replay.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gan as gan_mod
from . import nn, sites
from .data import LabeledDataset
from .errors import ConfigError
from .phantom import PhantomBatch, PhantomSampler, expand_targets

_PICK_STREAM = 0x61


class MixturePhantomSampler:
    """Phantom sampler over a set of generators, chosen per minibatch.

    With a single generator this is bit-identical to a plain
    :class:`PhantomSampler`: the samples for a given seed come from
    ``generator.sample(batch, seed)`` either way; only the uniform pick
    consumes a separate seed stream.
    """

    def __init__(self, generators, labeler: nn.ClassifierModel,
                 temperature: float, total_classes: int):
        if not generators:
            raise ConfigError("mixture sampler needs at least one generator")
        self._inner = [PhantomSampler(g, labeler, temperature, total_classes)
                       for g in generators]
        self.temperature = float(temperature)
        self.total_classes = int(total_classes)

    @property
    def generator_count(self) -> int:
        return len(self._inner)

    def sample(self, batch: int, seed: int) -> PhantomBatch:
        pick_rng = np.random.default_rng(
            np.random.SeedSequence([int(seed), _PICK_STREAM]))
        idx = int(pick_rng.integers(len(self._inner)))
        return self._inner[idx].sample(batch, seed)


def mixture_phantom_sample(gans, labeler: nn.ClassifierModel,
                           temperature: float, total_classes: int,
                           batch: int, seed: int) -> PhantomBatch:
    """One mixture minibatch: uniform GAN choice, label, zero-pad."""
    sampler = MixturePhantomSampler(gans, labeler, temperature, total_classes)
    return sampler.sample(batch, seed)


@dataclass
class ContinualState:
    """What survives between increments."""

    classifier: nn.ClassifierModel
    gans: list[gan_mod.GanModel] = field(default_factory=list)
    schedule: list[tuple[int, int]] = field(default_factory=list)
    completed: int = 0
    labeler: nn.ClassifierModel | None = None  # last increment's snapshot


def validate_schedule(schedule: list[tuple[int, int]]) -> None:
    """Label ranges must be half-open, contiguous, and strictly growing."""
    if not schedule:
        raise ConfigError("empty class schedule")
    expected_lo = 0
    for lo, hi in schedule:
        if lo != expected_lo or hi <= lo:
            raise ConfigError(
                f"schedule ranges must be contiguous and increasing, got "
                f"{schedule}")
        expected_lo = hi


def start_continual(data_0: LabeledDataset, schedule: list[tuple[int, int]],
                    config: sites.BaseConfig) -> tuple[ContinualState, dict]:
    """Increment 0: ordinary base training plus the first replay GAN."""
    validate_schedule(schedule)
    lo, hi = schedule[0]
    if lo != 0:
        raise ConfigError("the first increment must start at class 0")
    classifier, g, logs = sites.train_base(data_0, config)
    if classifier.num_classes != hi:
        raise ConfigError(
            f"increment 0 data covers {classifier.num_classes} classes but "
            f"the schedule says {hi}")
    state = ContinualState(classifier, [g], list(schedule), completed=1)
    return state, logs


def continual_step(state: ContinualState, data_i: LabeledDataset,
                   plan: sites.IncrementPlan,
                   gan_config: sites.GanConfig,
                   gan_seed: int | None = None) -> tuple[ContinualState, dict]:
    """Run one increment: snapshot labeler, replay from all GANs, train,
    then fit this increment's GAN for the next step."""
    i = state.completed
    if i >= len(state.schedule):
        raise ConfigError("schedule exhausted")
    lo, hi = state.schedule[i]
    if plan.old_classes != lo or plan.total_classes != hi:
        raise ConfigError(
            f"plan classes ({plan.old_classes}, {plan.total_classes}) do not "
            f"match schedule range ({lo}, {hi})")
    if data_i.n and (data_i.labels.min() < lo or data_i.labels.max() >= hi):
        raise ConfigError(
            f"increment {i} data must carry labels in [{lo}, {hi})")

    labeler = state.classifier.copy()  # P^{i-1}, frozen for this increment
    sampler = MixturePhantomSampler(state.gans, labeler, plan.temperature,
                                    plan.total_classes)
    classifier = sites.expand_classifier(state.classifier, hi, plan.seed)
    train_log = sites.train_incremental(classifier, data_i, sampler, plan)

    g = gan_mod.build_gan(data_i.d, gan_config.noise_dim,
                          list(gan_config.generator_hidden),
                          list(gan_config.discriminator_hidden),
                          gan_seed if gan_seed is not None else plan.seed,
                          gan_config.discriminator_pool)
    g_cfg = gan_mod.GanTrainConfig(
        gan_config.batch_size, gan_config.lr, gan_config.momentum,
        gan_seed if gan_seed is not None else plan.seed)
    g, gan_log, _ = gan_mod.train(g, data_i.samples, gan_config.epochs, g_cfg)

    state.classifier = classifier
    state.gans.append(g)
    state.labeler = labeler
    state.completed = i + 1
    logs = {"train": train_log,
            "gan": [{"epoch": e, "d_loss": d, "g_loss": gl}
                    for e, (d, gl) in enumerate(gan_log)]}
    return state, logs
