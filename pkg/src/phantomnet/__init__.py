"""Strict two-site incremental learning with generative phantom sampling.

A base site trains a classifier and a GAN, seals both into a broadcast
bundle, and an increment site grows the classifier onto new classes using
generated samples labeled by the frozen base classifier's temperature-
softened output. No training data ever crosses between sites.
"""

from . import bundle, continual, data, gan, nn, phantom, presets, runner, sites
from .errors import PhantomNetError

__all__ = ["bundle", "continual", "data", "gan", "nn", "phantom", "presets",
           "runner", "sites", "PhantomNetError"]

__version__ = "0.1.0"
