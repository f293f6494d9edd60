"""Catastrophic forgetting, demonstrated.

Train a classifier on digits 0-5, then naively retrain it on 6-9 with no
access to the old data: old-class accuracy collapses to zero. A very low
learning rate trades the collapse for the opposite failure: the new
classes never get learned properly.
"""

from phantomnet import data, presets, sites
from phantomnet.runner import render_confusion

digits = data.load_digits_dataset()
train, test = data.stratified_split(digits, presets.DIGITS_TEST_FRACTION,
                                    presets.DIGITS_SPLIT_SEED)
train_b, train_i = data.split_by_labels(train, range(6), range(6, 10))
test_b, test_i = data.split_by_labels(test, range(6), range(6, 10))
full_test = data.concat([test_b, test_i])

print(f"base site data: {train_b.n} samples of classes 0-5")
print(f"increment data: {train_i.n} samples of classes 6-9\n")

base_cfg = presets.digits_base_config(gan_epochs=0)  # classifier only here
classifier, _, _ = sites.train_base(train_b, base_cfg)
base_report = sites.evaluate(classifier, test_b)
print(f"base classifier accuracy on classes 0-5: {base_report.accuracy:.3f}")
print(render_confusion(base_report.confusion))

# naive retraining: expand the head per the copied+random rule, train on
# the new classes only
model = sites.expand_classifier(classifier, 10, seed=1)
sites.train_baseline_naive(model, train_i, presets.digits_forgetting_plan(1))
report = sites.evaluate(model, full_test, old_classes=6)
print("naive retraining on 6-9 (lr 0.1):")
print(f"  combined accuracy {report.accuracy:.3f}, "
      f"old block {report.old_block_accuracy:.3f}, "
      f"new block {report.new_block_accuracy:.3f}")
print(render_confusion(report.confusion))
print("old classes are gone: every row of the 0-5 block leaks into 6-9\n")

# the low-learning-rate trade-off: retention without learning
model = sites.expand_classifier(classifier, 10, seed=1)
sites.train_baseline_naive(model, train_i, presets.digits_low_lr_plan(1))
report = sites.evaluate(model, full_test, old_classes=6)
print("naive retraining at lr 1e-4 (2 epochs):")
print(f"  combined accuracy {report.accuracy:.3f}, "
      f"old block {report.old_block_accuracy:.3f}, "
      f"new block {report.new_block_accuracy:.3f}")
print("old classes survive, but the new ones were never really learned")
