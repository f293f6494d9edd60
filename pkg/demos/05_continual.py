"""Bounded-continual learning: three increments, one GAN per increment.

Schedule [0-3], [4-6], [7-9] on the synthetic blob set. Each step
snapshots the current classifier as the phantom labeler, replays every
past GAN uniformly, expands the head, trains, then fits a new GAN on the
step's own data for future increments.
"""

import numpy as np

from phantomnet import continual, data, presets, sites
from phantomnet.runner import render_confusion

schedule = presets.CONTINUAL_SCHEDULE
train_all = data.synth_blobs(**presets.BLOB_SPEC)
test_all = data.synth_blobs(**presets.BLOB_TEST_SPEC)
parts = [data.select_classes(train_all, range(lo, hi))
         for lo, hi in schedule]
print("schedule:", [f"{lo}-{hi - 1}" for lo, hi in schedule])

base_cfg = presets.blob_continual_base_config()
state, _ = continual.start_continual(parts[0], schedule, base_cfg)
seen = data.select_classes(test_all, range(schedule[0][1]))
print(f"\nincrement 0 (classes 0-3): accuracy "
      f"{sites.evaluate(state.classifier, seen).accuracy:.3f}, "
      f"GAN set size {len(state.gans)}")

for i, (lo, hi) in enumerate(schedule[1:], start=1):
    plan = presets.blob_continual_plan(lo, hi, seed=1 + i)
    state, _ = continual.continual_step(state, parts[i], plan, base_cfg.gan)
    seen = data.select_classes(test_all, range(hi))
    report = sites.evaluate(state.classifier, seen)
    print(f"increment {i} (classes {lo}-{hi - 1}): accuracy "
          f"{report.accuracy:.3f} over classes 0-{hi - 1}, "
          f"GAN set size {len(state.gans)}")

final = sites.evaluate(state.classifier, test_all)
print("\nfinal confusion over all ten classes:")
print(render_confusion(final.confusion))

pred = state.classifier.predict(test_all.samples)
for lo, hi in schedule:
    mask = (test_all.labels >= lo) & (test_all.labels < hi)
    acc = float((pred[mask] == test_all.labels[mask]).mean())
    print(f"block {lo}-{hi - 1}: accuracy {acc:.3f}")

# the sequential naive baseline forgets each increment as the next arrives
model, _, _ = sites.train_base(parts[0], base_cfg)
for i, (lo, hi) in enumerate(schedule[1:], start=1):
    model = sites.expand_classifier(model, hi, seed=1 + i)
    sites.train_baseline_naive(model, parts[i],
                               presets.blob_continual_plan(lo, hi, 1 + i))
naive = sites.evaluate(model, test_all)
print(f"\ncontinual {final.accuracy:.3f} vs naive sequential "
      f"{naive.accuracy:.3f}")
