"""The full two-site protocol with phantom sampling.

The base site trains a classifier and a GAN on classes 0-5 and seals them
into a broadcast bundle. The increment site never sees a single base
sample: it reloads the bundle, expands the classifier head, and interleaves
its own 6-9 minibatches with phantom minibatches (GAN samples labeled by
the frozen base classifier's temperature-softened output, zero-padded over
the new classes).
"""

import tempfile
import time
from pathlib import Path

from phantomnet import data, phantom, presets, sites
from phantomnet.runner import render_confusion

digits = data.load_digits_dataset()
train, test = data.stratified_split(digits, presets.DIGITS_TEST_FRACTION,
                                    presets.DIGITS_SPLIT_SEED)
train_b, train_i = data.split_by_labels(train, range(6), range(6, 10))
test_b, test_i = data.split_by_labels(test, range(6), range(6, 10))
full_test = data.concat([test_b, test_i])

# --- base site --------------------------------------------------------------

t0 = time.time()
print("[base site] training classifier and GAN on classes 0-5 ...")
classifier, generator, _ = sites.train_base(train_b,
                                            presets.digits_base_config())
print(f"[base site] done in {time.time() - t0:.0f}s "
      f"(GAN trained {generator.epochs_trained} epochs)")

workdir = Path(tempfile.mkdtemp(prefix="phantomnet_demo_"))
bundle_path = workdir / "bundle"
sites.broadcast(classifier, generator, bundle_path, creation_seed=0)
size_kb = sum(f.stat().st_size for f in bundle_path.rglob("*")
              if f.is_file()) // 1024
print(f"[broadcast] sealed bundle at {bundle_path} ({size_kb} KB)")
print("[broadcast] the base site now deletes its data and forgets N_b\n")

# --- increment site ----------------------------------------------------------

loaded = sites.load_bundle(bundle_path)
plan = presets.digits_phantom_plan(seed=1, temperature=1.0)
model = sites.init_incremental(loaded, total_classes=10, seed=1)
sampler = phantom.PhantomSampler(loaded.gan, loaded.classifier,
                                 plan.temperature, plan.total_classes)

batch = sampler.sample(4, seed=0)
print("[increment site] a phantom target row (classes 6-9 pinned to 0):")
print("   ", batch.soft_targets[0].round(3))

print("[increment site] interleaved training: "
      f"{plan.interleave_ratio} real minibatch(es) per phantom minibatch")
sites.train_incremental(model, train_i, sampler, plan)
report = sites.evaluate(model, full_test, old_classes=6)

naive = sites.init_incremental(loaded, 10, seed=1)
sites.train_baseline_naive(naive, train_i,
                           presets.digits_phantom_plan(seed=1,
                                                       temperature=1.0))
naive_report = sites.evaluate(naive, full_test, old_classes=6)

print(f"\n                combined   old(0-5)   new(6-9)")
print(f"naive baseline    {naive_report.accuracy:.3f}     "
      f"{naive_report.old_block_accuracy:.3f}      "
      f"{naive_report.new_block_accuracy:.3f}")
print(f"phantom sampling  {report.accuracy:.3f}     "
      f"{report.old_block_accuracy:.3f}      "
      f"{report.new_block_accuracy:.3f}")
print("\nphantom confusion matrix over all ten classes:")
print(render_confusion(report.confusion))
