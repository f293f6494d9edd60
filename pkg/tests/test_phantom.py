import numpy as np
import pytest

from phantomnet import gan, nn, phantom
from phantomnet.errors import ParameterError, ShapeError


class FixedGenerator:
    """Degenerate generator that always emits the same sample row."""

    def __init__(self, row):
        self.row = np.asarray(row, dtype=np.float64)

    @property
    def output_dim(self):
        return self.row.shape[0]

    def sample(self, count, seed):
        return np.tile(self.row, (count, 1))


def make_labeler(d=6, j=4, seed=0):
    return nn.build_classifier(d, [8], j, seed=seed, activation="tanh")


def test_expand_targets_pads_with_zeros():
    out = phantom.expand_targets(np.array([[0.7, 0.3]]), 4)
    np.testing.assert_array_equal(out, [[0.7, 0.3, 0.0, 0.0]])


def test_expand_targets_identity_when_equal():
    soft = np.array([[0.2, 0.8]])
    out = phantom.expand_targets(soft, 2)
    np.testing.assert_array_equal(out, soft)
    out[0, 0] = 0.0  # returned array is a copy
    assert soft[0, 0] == 0.2


def test_expand_targets_preserves_row_sums():
    rng = np.random.default_rng(0)
    soft = nn.softmax(rng.normal(size=(20, 5)))
    out = phantom.expand_targets(soft, 9)
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)


def test_expand_targets_rejects_shrink():
    with pytest.raises(ParameterError):
        phantom.expand_targets(np.array([[0.5, 0.5]]), 1)


def test_fixed_generator_composition_oracle():
    # compose the two stages independently and compare
    labeler = make_labeler()
    x0 = np.linspace(-0.5, 0.5, 6)
    sampler = phantom.PhantomSampler(FixedGenerator(x0), labeler,
                                     temperature=2.0, total_classes=7)
    batch = sampler.sample(3, seed=1)
    np.testing.assert_array_equal(batch.samples, np.tile(x0, (3, 1)))
    logits = labeler.forward(x0[None, :], cache=False)
    expected = phantom.expand_targets(nn.temperature_softmax(logits, 2.0), 7)
    np.testing.assert_allclose(batch.soft_targets,
                               np.tile(expected, (3, 1)), atol=1e-12)


def test_no_padding_when_classes_match():
    labeler = make_labeler(j=4)
    sampler = phantom.PhantomSampler(FixedGenerator(np.zeros(6)), labeler,
                                     temperature=1.5, total_classes=4)
    batch = sampler.sample(2, seed=0)
    assert batch.soft_targets.shape == (2, 4)
    np.testing.assert_allclose(batch.soft_targets.sum(axis=1), 1.0)


def test_t1_confident_labeler_near_onehot():
    labeler = make_labeler(j=3)
    labeler.head_weights *= 50.0  # force confidence
    sampler = phantom.PhantomSampler(FixedGenerator(np.full(6, 0.3)), labeler,
                                     temperature=1.0, total_classes=5)
    batch = sampler.sample(1, seed=0)
    assert batch.soft_targets.max() > 0.99
    np.testing.assert_array_equal(batch.soft_targets[:, 3:], 0.0)


def test_target_invariants_with_gan():
    g = gan.build_gan(6, 3, [10], [4], seed=1, discriminator_pool=2)
    labeler = make_labeler(j=4, seed=2)
    sampler = phantom.PhantomSampler(g, labeler, temperature=2.0,
                                     total_classes=9)
    batch = sampler.sample(32, seed=5)
    assert batch.samples.shape == (32, 6)
    assert batch.soft_targets.shape == (32, 9)
    np.testing.assert_allclose(batch.soft_targets[:, :4].sum(axis=1), 1.0,
                               atol=1e-6)
    np.testing.assert_array_equal(batch.soft_targets[:, 4:], 0.0)


def test_sampling_never_mutates_models():
    g = gan.build_gan(6, 3, [10], [4], seed=3, discriminator_pool=2)
    labeler = make_labeler(j=4, seed=4)
    gen_before = {k: v.copy() for k, v in g.generator.parameters().items()}
    lab_before = {k: v.copy() for k, v in labeler.parameters().items()}
    sampler = phantom.PhantomSampler(g, labeler, 2.0, 6)
    for i in range(1000):
        sampler.sample(4, seed=i)
    for k, v in g.generator.parameters().items():
        np.testing.assert_array_equal(v, gen_before[k])
    for k, v in labeler.parameters().items():
        np.testing.assert_array_equal(v, lab_before[k])


def test_labeler_frozen_against_external_updates():
    # the sampler copies its models: mutating the originals afterwards
    # must not change what the sampler produces
    g = gan.build_gan(6, 3, [10], [4], seed=5, discriminator_pool=2)
    labeler = make_labeler(j=4, seed=6)
    sampler = phantom.PhantomSampler(g, labeler, 2.0, 6)
    before = sampler.sample(8, seed=42)
    labeler.head_weights += 100.0
    g.generator.layers[0].weights += 100.0
    after = sampler.sample(8, seed=42)
    np.testing.assert_array_equal(before.samples, after.samples)
    np.testing.assert_array_equal(before.soft_targets, after.soft_targets)


def test_reproducible_per_seed():
    g = gan.build_gan(6, 3, [10], [4], seed=7, discriminator_pool=2)
    sampler = phantom.PhantomSampler(g, make_labeler(j=4, seed=8), 2.0, 6)
    b1 = sampler.sample(16, seed=3)
    b2 = sampler.sample(16, seed=3)
    np.testing.assert_array_equal(b1.samples, b2.samples)
    np.testing.assert_array_equal(b1.soft_targets, b2.soft_targets)
    b3 = sampler.sample(16, seed=4)
    assert np.abs(b1.samples - b3.samples).max() > 0


def test_noise_generator_swaps_in_unchanged():
    # the pseudo-rehearsal configuration is just a different generator
    ng = gan.NoiseGenerator(6)
    sampler = phantom.PhantomSampler(ng, make_labeler(j=4, seed=9), 1.0, 10)
    batch = sampler.sample(12, seed=0)
    assert batch.samples.shape == (12, 6)
    np.testing.assert_allclose(batch.soft_targets[:, :4].sum(axis=1), 1.0,
                               atol=1e-6)
    np.testing.assert_array_equal(batch.soft_targets[:, 4:], 0.0)


def test_dimension_mismatch_fails_at_construction():
    g = gan.build_gan(5, 3, [10], [4], seed=0, discriminator_pool=2)
    with pytest.raises(ShapeError):
        phantom.PhantomSampler(g, make_labeler(d=6), 2.0, 6)


def test_total_classes_below_labeler_rejected():
    with pytest.raises(ParameterError):
        phantom.PhantomSampler(FixedGenerator(np.zeros(6)),
                               make_labeler(j=4), 2.0, 3)


def test_temperature_below_one_rejected():
    with pytest.raises(ParameterError):
        phantom.PhantomSampler(FixedGenerator(np.zeros(6)),
                               make_labeler(), 0.9, 6)
