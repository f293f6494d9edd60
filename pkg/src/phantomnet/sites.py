"""The two-site protocol: base training, broadcast, incremental training.

The base site trains a classifier and a GAN on its own classes and seals
both into a bundle. The increment site initializes an expanded classifier
from the bundle (old head columns copied, new ones drawn from N(0,1)) and
trains it on the new classes, interleaving k real minibatches with one
phantom minibatch. Two head readouts share the single weight matrix: the
plain softmax consumes real labels via cross-entropy, the temperature
softmax consumes phantom soft targets via squared error.

Baselines live here too: the naive trainer (no phantom stream, the
catastrophic-forgetting reference) and the exemplar trainer (real old
samples carried across the membrane, used only to measure what the
relaxation would buy).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bundle as bundle_mod
from . import gan as gan_mod
from . import nn
from .data import LabeledDataset
from .errors import (
    ConfigError,
    DataError,
    LabelError,
    ParameterError,
)
from .phantom import PhantomSampler

_DATA_STREAM = 0xD0
_PHANTOM_STREAM = 0xF0
_EXPAND_STREAM = 0xE2


@dataclass
class ClassifierConfig:
    """Architecture + schedule for one classifier training run.

    ``dropout`` and ``batch_norm`` are optional knobs; every packaged
    preset leaves them off so runs stay deterministic end to end.
    """

    hidden: tuple[int, ...] = (128, 96)
    activation: str = "tanh"
    pool_size: int = 1
    epochs: int = 30
    batch_size: int = 32
    lr: float = 0.1
    momentum: float = 0.9
    lr_decay: float = 1.0
    lr_decay_every: int = 0  # in updates; 0 disables
    dropout: float = 0.0
    batch_norm: bool = False

    def schedule(self) -> nn.LearningSchedule:
        return nn.LearningSchedule(self.lr, self.lr_decay,
                                   self.lr_decay_every)


@dataclass
class GanConfig:
    noise_dim: int = 32
    generator_hidden: tuple[int, ...] = (128, 128)
    discriminator_hidden: tuple[int, ...] = (48, 48)
    discriminator_pool: int = 5
    epochs: int = 60
    batch_size: int = 64
    lr: float = 0.05
    momentum: float = 0.5


@dataclass
class BaseConfig:
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    gan: GanConfig = field(default_factory=GanConfig)
    seed: int = 0
    gan_snapshot_epochs: tuple[int, ...] = ()


@dataclass
class IncrementPlan:
    """Everything the increment site needs to run one training pass.

    ``total_classes == old_classes`` selects the same-label-space mode (a
    cross-domain increment: new data, no new classes); real labels then
    span the full range and phantom targets need no padding.
    """

    old_classes: int
    total_classes: int
    interleave_ratio: int = 1
    temperature: float = 2.0
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    lr: float = 0.1
    momentum: float = 0.9
    lr_decay: float = 1.0
    lr_decay_every: int = 0

    def __post_init__(self):
        if self.old_classes < 1:
            raise ConfigError("old_classes must be >= 1")
        if self.total_classes < self.old_classes:
            raise ConfigError("total_classes must be >= old_classes")
        if self.interleave_ratio < 1:
            raise ConfigError("interleave_ratio must be >= 1")
        if self.temperature < 1.0:
            raise ConfigError("temperature must be >= 1")

    @property
    def same_label_space(self) -> bool:
        return self.total_classes == self.old_classes

    def schedule(self) -> nn.LearningSchedule:
        return nn.LearningSchedule(self.lr, self.lr_decay,
                                   self.lr_decay_every)


def default_interleave_ratio(old_classes: int, new_classes: int) -> int:
    """Default k from the class balance; any plan may override it."""
    return max(1, round(new_classes / old_classes * 2))


@dataclass
class EvalReport:
    confusion: np.ndarray
    accuracy: float
    per_class_accuracy: dict[int, float]
    old_block_accuracy: float | None = None
    new_block_accuracy: float | None = None

    def to_dict(self) -> dict:
        return {
            "confusion": self.confusion.tolist(),
            "accuracy": self.accuracy,
            "per_class_accuracy": {str(k): v for k, v
                                   in self.per_class_accuracy.items()},
            "old_block_accuracy": self.old_block_accuracy,
            "new_block_accuracy": self.new_block_accuracy,
        }


# ---------------------------------------------------------------------------
# plain supervised loop (base site, exemplar baseline)
# ---------------------------------------------------------------------------

def train_classifier(model: nn.ClassifierModel, data: LabeledDataset,
                     epochs: int, batch_size: int,
                     schedule: nn.LearningSchedule, momentum: float,
                     seed: int) -> list[dict]:
    """Minibatch cross-entropy training, shuffled fresh each epoch."""
    if data.n == 0:
        raise DataError("cannot train on an empty dataset")
    opt = nn.OptimizerState(schedule, momentum)
    params = model.parameters()
    log = []
    for epoch in range(epochs):
        rng = np.random.default_rng(
            np.random.SeedSequence([int(seed), epoch, _DATA_STREAM]))
        order = rng.permutation(data.n)
        losses = []
        for start in range(0, data.n, batch_size):
            idx = order[start:start + batch_size]
            logits = model.forward(data.samples[idx], cache=True)
            res = nn.softmax_cross_entropy(logits, data.labels[idx])
            nn.sgd_step(params, model.backward(res.grad), opt)
            losses.append(res.loss)
        log.append({"epoch": epoch, "loss": float(np.mean(losses))})
    return log


def train_base(data: LabeledDataset, config: BaseConfig) -> tuple[
        nn.ClassifierModel, gan_mod.GanModel, dict]:
    """Train the base classifier and GAN on labels 0..j-1.

    Returns (classifier, gan, logs); ``logs["gan_snapshots"]`` holds copies
    at the epoch counts requested in the config (epoch 0 = untrained).
    """
    labels_present = set(int(v) for v in np.unique(data.labels))
    j = len(labels_present)
    if labels_present != set(range(j)):
        raise LabelError(
            f"base labels must exactly cover 0..j-1, got {sorted(labels_present)}")

    classifier = nn.build_classifier(
        data.d, list(config.classifier.hidden), j, config.seed,
        config.classifier.activation, config.classifier.pool_size,
        config.classifier.dropout, config.classifier.batch_norm)
    clf_log = train_classifier(classifier, data, config.classifier.epochs,
                               config.classifier.batch_size,
                               config.classifier.schedule(),
                               config.classifier.momentum, config.seed)

    g = gan_mod.build_gan(data.d, config.gan.noise_dim,
                          list(config.gan.generator_hidden),
                          list(config.gan.discriminator_hidden),
                          config.seed, config.gan.discriminator_pool)
    g_cfg = gan_mod.GanTrainConfig(config.gan.batch_size, config.gan.lr,
                                   config.gan.momentum, config.seed)
    g, gan_log, snapshots = gan_mod.train(g, data.samples, config.gan.epochs,
                                          g_cfg, config.gan_snapshot_epochs)
    logs = {"classifier": clf_log,
            "gan": [{"epoch": i, "d_loss": d, "g_loss": gl}
                    for i, (d, gl) in enumerate(gan_log)],
            "gan_snapshots": snapshots}
    return classifier, g, logs


# ---------------------------------------------------------------------------
# broadcast boundary
# ---------------------------------------------------------------------------

def broadcast(classifier: nn.ClassifierModel, gan: gan_mod.GanModel,
              path, creation_seed: int | None = None) -> Path:
    """Seal the trained models into a bundle directory at ``path``."""
    return bundle_mod.write_bundle(
        path, classifier=classifier, gan=gan,
        input_dim=classifier.input_dim,
        base_class_count=classifier.num_classes,
        gan_epoch=gan.epochs_trained, creation_seed=creation_seed)


def load_bundle(path) -> bundle_mod.LoadedBundle:
    return bundle_mod.read_bundle(path)


def expand_classifier(classifier: nn.ClassifierModel, total_classes: int,
                      seed: int,
                      new_column_scale: str = "unit") -> nn.ClassifierModel:
    """Grow the head to ``total_classes``: old columns copied bit-exactly,
    new columns i.i.d. N(0,1) (or std 1/sqrt(fan-in) with scale="fan_in"),
    new bias entries zero."""
    j = classifier.num_classes
    if total_classes < j:
        raise ParameterError(
            f"cannot shrink head from {j} to {total_classes} classes")
    if total_classes == j:
        return classifier.copy()
    rng = np.random.default_rng(
        np.random.SeedSequence([int(seed), _EXPAND_STREAM]))
    trunk = classifier.trunk.copy()
    head_w = np.empty((classifier.head_weights.shape[0], total_classes))
    head_w[:, :j] = classifier.head_weights
    fresh = rng.standard_normal((head_w.shape[0], total_classes - j))
    if new_column_scale == "fan_in":
        fresh = fresh / np.sqrt(head_w.shape[0])
    elif new_column_scale != "unit":
        raise ParameterError(f"unknown new_column_scale {new_column_scale!r}")
    head_w[:, j:] = fresh
    head_b = np.zeros(total_classes)
    head_b[:j] = classifier.head_bias
    return nn.ClassifierModel(trunk, head_w, head_b)


def init_incremental(loaded: bundle_mod.LoadedBundle, total_classes: int,
                     seed: int,
                     new_column_scale: str = "unit") -> nn.ClassifierModel:
    """Initialize the increment-site classifier from a broadcast bundle."""
    if loaded.classifier is None:
        raise ParameterError("bundle holds no classifier")
    return expand_classifier(loaded.classifier, total_classes, seed,
                             new_column_scale)


# ---------------------------------------------------------------------------
# incremental training (phantom-interleaved) and baselines
# ---------------------------------------------------------------------------

def train_incremental(model: nn.ClassifierModel, data: LabeledDataset,
                      sampler: PhantomSampler | None,
                      plan: IncrementPlan) -> list[dict]:
    """Train on new-class data, interleaving phantom updates every k steps.

    ``sampler=None`` removes the phantom stream entirely, which is exactly
    the naive baseline: the real-data code path, RNG draws included, is
    identical either way. The interleave counter persists across epochs so
    every window of k+1 consecutive updates holds exactly one phantom
    update.
    """
    if data.n == 0:
        raise DataError("increment dataset is empty")
    lo = 0 if plan.same_label_space else plan.old_classes
    hi = plan.total_classes
    if data.labels.min() < lo or data.labels.max() >= hi:
        raise LabelError(
            f"increment labels must lie in [{lo}, {hi})")
    if model.num_classes != plan.total_classes:
        raise ConfigError("model head width must equal plan.total_classes")
    if sampler is not None:
        if sampler.total_classes != plan.total_classes:
            raise ConfigError(
                "sampler.total_classes must match plan.total_classes")
        if abs(sampler.temperature - plan.temperature) > 1e-12:
            raise ConfigError("sampler and plan disagree on temperature")

    opt = nn.OptimizerState(plan.schedule(), plan.momentum)
    params = model.parameters()
    phantom_seeds = np.random.default_rng(
        np.random.SeedSequence([int(plan.seed), _PHANTOM_STREAM]))
    since_phantom = 0
    log = []
    for epoch in range(plan.epochs):
        rng = np.random.default_rng(
            np.random.SeedSequence([int(plan.seed), epoch, _DATA_STREAM]))
        order = rng.permutation(data.n)
        real_losses, phantom_losses = [], []
        for start in range(0, data.n, plan.batch_size):
            idx = order[start:start + plan.batch_size]
            logits = model.forward(data.samples[idx], cache=True)
            res = nn.softmax_cross_entropy(logits, data.labels[idx])
            nn.sgd_step(params, model.backward(res.grad), opt)
            real_losses.append(res.loss)
            since_phantom += 1
            if sampler is not None and since_phantom == plan.interleave_ratio:
                since_phantom = 0
                draw_seed = int(phantom_seeds.integers(2 ** 62))
                batch = sampler.sample(plan.batch_size, draw_seed)
                logits = model.forward(batch.samples, cache=True)
                res = nn.temperature_soft_loss(logits, batch.soft_targets,
                                               plan.temperature)
                nn.sgd_step(params, model.backward(res.grad), opt)
                phantom_losses.append(res.loss)
        log.append({
            "epoch": epoch,
            "real_loss": float(np.mean(real_losses)),
            "phantom_loss": (float(np.mean(phantom_losses))
                             if phantom_losses else None),
            "real_updates": len(real_losses),
            "phantom_updates": len(phantom_losses),
        })
    return log


def train_baseline_naive(model: nn.ClassifierModel, data: LabeledDataset,
                         plan: IncrementPlan) -> list[dict]:
    """The forgetting reference: incremental training minus the phantom
    stream."""
    return train_incremental(model, data, None, plan)


def select_exemplars(base_data: LabeledDataset, per_class: int,
                     seed: int) -> LabeledDataset:
    """Uniform-random exemplars per base class (without replacement; a class
    smaller than ``per_class`` contributes everything it has)."""
    if per_class < 1:
        raise ConfigError("per_class must be >= 1 (use the naive baseline "
                          "for p = 0)")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xE8]))
    picks = []
    for label in np.unique(base_data.labels):
        idx = np.flatnonzero(base_data.labels == label)
        take = min(per_class, idx.size)
        picks.append(rng.choice(idx, size=take, replace=False))
    return base_data.subset(np.sort(np.concatenate(picks)))


def train_baseline_exemplar(model: nn.ClassifierModel, data: LabeledDataset,
                            exemplars: LabeledDataset,
                            plan: IncrementPlan) -> list[dict]:
    """Membrane-relaxed baseline: old exemplars mixed into the new stream.

    Plain cross-entropy over the shuffled union; the log marks the run as a
    membrane violation so reports cannot pass it off as compliant.
    """
    if exemplars.n == 0:
        raise ConfigError("exemplar baseline needs p >= 1 exemplars")
    if exemplars.labels.max() >= plan.old_classes:
        raise LabelError("exemplars must carry base-range labels")
    merged_samples = np.concatenate([data.samples, exemplars.samples])
    merged_labels = np.concatenate([data.labels, exemplars.labels])
    merged = LabeledDataset(merged_samples, merged_labels,
                            (0, plan.total_classes))
    log = train_classifier(model, merged, plan.epochs, plan.batch_size,
                           plan.schedule(), plan.momentum, plan.seed)
    for entry in log:
        entry["membrane_violation"] = True
        entry["exemplars_per_class"] = int(
            np.bincount(exemplars.labels).max())
    return log


def evaluate(model: nn.ClassifierModel, test: LabeledDataset,
             old_classes: int | None = None) -> EvalReport:
    """Confusion matrix and accuracy over the combined label space."""
    if test.n == 0:
        raise DataError("empty test set")
    if model.num_classes < test.labels.max() + 1:
        raise ParameterError("model predicts fewer classes than test labels")
    c = model.num_classes
    pred = model.predict(test.samples)
    confusion = np.zeros((c, c), dtype=np.int64)
    np.add.at(confusion, (test.labels, pred), 1)
    accuracy = float(np.trace(confusion) / test.n)
    per_class = {}
    for label in np.unique(test.labels):
        row = confusion[label]
        per_class[int(label)] = float(row[label] / row.sum())

    old_acc = new_acc = None
    if old_classes is not None:
        old_mask = test.labels < old_classes
        if old_mask.any():
            old_acc = float((pred[old_mask] == test.labels[old_mask]).mean())
        if (~old_mask).any():
            new_acc = float((pred[~old_mask] == test.labels[~old_mask]).mean())
    return EvalReport(confusion, accuracy, per_class, old_acc, new_acc)
