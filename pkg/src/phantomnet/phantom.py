"""Phantom sampling: generated samples paired with hallucinated soft targets.

A phantom sampler owns a frozen generator and a frozen labeler. Each draw
pushes generator output through the labeler, softens the resulting
distribution with a temperature softmax, and zero-pads it over classes the
labeler has never seen. Both models are deep-copied at construction and used
feed-forward only, so sampling can never leak updates back into them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .errors import ParameterError, ShapeError


@dataclass(frozen=True)
class PhantomBatch:
    samples: np.ndarray       # [B, d]
    soft_targets: np.ndarray  # [B, c]


def expand_targets(soft: np.ndarray, total_classes: int) -> np.ndarray:
    """Zero-pad probability rows on the right out to ``total_classes``."""
    soft = nn.as_matrix(soft)
    if total_classes < soft.shape[1]:
        raise ParameterError(
            f"cannot shrink targets from {soft.shape[1]} to {total_classes}")
    if total_classes == soft.shape[1]:
        return soft.copy()
    out = np.zeros((soft.shape[0], total_classes))
    out[:, :soft.shape[1]] = soft
    return out


class PhantomSampler:
    """Pairs generator samples with temperature-softened labeler targets.

    ``generator`` is anything with ``sample(count, seed)`` and
    ``output_dim`` (a trained GAN, or a NoiseGenerator for the
    pseudo-rehearsal configuration). ``labeler`` is the frozen base
    classifier; its class count may be smaller than ``total_classes``, in
    which case targets are zero-padded.
    """

    def __init__(self, generator, labeler: nn.ClassifierModel,
                 temperature: float, total_classes: int):
        if temperature < 1.0:
            raise ParameterError("temperature must be >= 1")
        if generator.output_dim != labeler.input_dim:
            raise ShapeError(
                f"generator emits width {generator.output_dim} but labeler "
                f"expects {labeler.input_dim}")
        if total_classes < labeler.num_classes:
            raise ParameterError(
                "total_classes must be >= the labeler's class count")
        self.generator = _frozen_copy(generator)
        self.labeler = labeler.copy()
        self.temperature = float(temperature)
        self.total_classes = int(total_classes)

    @property
    def labeled_classes(self) -> int:
        return self.labeler.num_classes

    def sample(self, batch: int, seed: int) -> PhantomBatch:
        return phantom_sample(self, batch, seed)


def phantom_sample(sampler: PhantomSampler, batch: int,
                   seed: int) -> PhantomBatch:
    """Draw one phantom minibatch, deterministic per seed."""
    samples = sampler.generator.sample(batch, seed)
    logits = sampler.labeler.forward(samples, cache=False)
    soft = nn.temperature_softmax(logits, sampler.temperature)
    return PhantomBatch(samples, expand_targets(soft, sampler.total_classes))


def _frozen_copy(generator):
    copier = getattr(generator, "copy", None)
    return copier() if copier is not None else generator
