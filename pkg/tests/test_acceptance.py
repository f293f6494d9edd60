"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
go by. The experiment criteria (4-10) run on the packaged 8x8 digits and
synthetic blobs at the calibrated presets; all thresholds below are the
stated ones, never loosened. Median-over-3-seeds is used wherever a
criterion compares methods.
"""

import json
import shutil
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from phantomnet import bundle, continual, data, gan, nn, phantom, presets, sites

SEEDS = presets.ACCEPTANCE_SEEDS


def report_line(number, name, passed, detail):
    status = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE {number:>2} [{name}]: {status} ({detail})")
    assert passed, f"criterion {number} {name}: {detail}"


def median(values):
    return float(np.median(values))


# ---------------------------------------------------------------------------
# shared experiment state (built once)
# ---------------------------------------------------------------------------

class DigitsEnv:
    def __init__(self):
        digits = data.load_digits_dataset()
        train, test = data.stratified_split(digits,
                                            presets.DIGITS_TEST_FRACTION,
                                            presets.DIGITS_SPLIT_SEED)
        self.train_b, self.train_i = data.split_by_labels(
            train, presets.DIGITS_BASE_CLASSES,
            presets.DIGITS_INCREMENT_CLASSES)
        self.test_b, self.test_i = data.split_by_labels(
            test, presets.DIGITS_BASE_CLASSES,
            presets.DIGITS_INCREMENT_CLASSES)
        self.full_test = data.concat([self.test_b, self.test_i])

        cfg = presets.digits_base_config(
            seed=0, gan_epochs=max(presets.GAN_SWEEP_EPOCHS),
            snapshot_epochs=presets.GAN_SWEEP_EPOCHS)
        self.classifier, self.gan, logs = sites.train_base(self.train_b, cfg)
        self.gan_snapshots = logs["gan_snapshots"]

    def eval_full(self, model):
        return sites.evaluate(model, self.full_test, old_classes=6)

    def phantom_run(self, generator, temperature, seed, plan=None):
        plan = plan or presets.digits_phantom_plan(seed,
                                                   temperature=temperature)
        model = sites.expand_classifier(self.classifier, 10, seed)
        sampler = phantom.PhantomSampler(generator, self.classifier,
                                         temperature, 10)
        sites.train_incremental(model, self.train_i, sampler, plan)
        return self.eval_full(model)

    def naive_run(self, seed, plan=None):
        plan = plan or presets.digits_phantom_plan(seed, temperature=1.0)
        model = sites.expand_classifier(self.classifier, 10, seed)
        sites.train_baseline_naive(model, self.train_i, plan)
        return self.eval_full(model)

    def exemplar_run(self, per_class, seed):
        plan = presets.digits_phantom_plan(seed, temperature=1.0)
        model = sites.expand_classifier(self.classifier, 10, seed)
        exemplars = sites.select_exemplars(self.train_b, per_class, seed)
        sites.train_baseline_exemplar(model, self.train_i, exemplars, plan)
        return self.eval_full(model)


@pytest.fixture(scope="module")
def env():
    return DigitsEnv()


@pytest.fixture(scope="module")
def phantom_results(env):
    """Shared by criteria 5-8: naive, T-sweep, GAN-epoch sweep, noise."""
    out = {"naive": [env.naive_run(s) for s in SEEDS]}
    best_gan = env.gan_snapshots[max(presets.GAN_SWEEP_EPOCHS)]
    out["by_temperature"] = {
        t: [env.phantom_run(best_gan, t, s) for s in SEEDS]
        for t in presets.TEMPERATURE_GRID}
    best_t = max(presets.TEMPERATURE_GRID,
                 key=lambda t: median([r.accuracy
                                       for r in out["by_temperature"][t]]))
    out["best_t"] = best_t
    out["by_gan_epochs"] = {
        e: (out["by_temperature"][best_t]
            if e == max(presets.GAN_SWEEP_EPOCHS)
            else [env.phantom_run(env.gan_snapshots[e], best_t, s)
                  for s in SEEDS])
        for e in presets.GAN_SWEEP_EPOCHS}
    out["noise"] = [env.phantom_run(gan.NoiseGenerator(64), 1.0, s)
                    for s in SEEDS]
    return out


# ---------------------------------------------------------------------------
# 1. gradient correctness
# ---------------------------------------------------------------------------

def test_criterion_01_gradient_correctness():
    start = time.time()
    rng = np.random.default_rng(np.random.SeedSequence([0, 0x9C]))
    activations = ["relu", "tanh", "maxout"]
    worst = 0.0
    for trial in range(100):
        act = activations[trial % 3]
        pool = 2 if act == "maxout" else 1
        hidden = [int(rng.integers(3, 8))
                  for _ in range(int(rng.integers(1, 3)))]
        c = int(rng.integers(2, 6))
        d = int(rng.integers(3, 7))
        model = nn.build_classifier(d, hidden, c, seed=trial,
                                    activation=act, pool_size=pool)
        x = rng.normal(size=(4, d))
        if trial % 2 == 0:
            err = nn.gradient_check(model, nn.softmax_cross_entropy, x,
                                    rng.integers(0, c, size=4), seed=trial)
        else:
            t = float(rng.choice([1.0, 2.0, 5.0]))
            target = nn.softmax(rng.normal(size=(4, c)))
            err = nn.gradient_check(
                model,
                lambda lg, tt, _t=t: nn.temperature_soft_loss(lg, tt, _t),
                x, target, seed=trial)
        worst = max(worst, err)
    elapsed = time.time() - start
    report_line(1, "gradient correctness",
                worst < 1e-4 and elapsed < 60,
                f"max rel err {worst:.2e} over 100 nets, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 2. temperature-softmax suite
# ---------------------------------------------------------------------------

def test_criterion_02_temperature_softmax_suite():
    rng = np.random.default_rng(2024)
    logits = rng.normal(scale=4.0, size=(1000, 8))
    t1_gap = np.abs(nn.temperature_softmax(logits, 1.0)
                    - nn.softmax(logits)).max()
    base_argmax = nn.softmax(logits).argmax(axis=1)
    row_sum_gap, argmax_ok, entropy_ok = 0.0, True, True
    prev_entropy = None
    for t in (1.0, 1.5, 2.0, 5.0, 20.0, 100.0):
        p = nn.temperature_softmax(logits, t)
        row_sum_gap = max(row_sum_gap, np.abs(p.sum(axis=1) - 1.0).max())
        argmax_ok &= bool(np.array_equal(p.argmax(axis=1), base_argmax))
        ent = nn.entropy(p)
        if prev_entropy is not None:
            entropy_ok &= bool(np.all(ent >= prev_entropy - 1e-9))
        prev_entropy = ent
    passed = (t1_gap < 1e-7 and row_sum_gap < 1e-6 and argmax_ok
              and entropy_ok)
    report_line(2, "temperature softmax suite", passed,
                f"T=1 gap {t1_gap:.1e}, row-sum gap {row_sum_gap:.1e}, "
                f"argmax {'kept' if argmax_ok else 'broken'}, entropy "
                f"{'monotone' if entropy_ok else 'non-monotone'} "
                f"over 1000 vectors")


# ---------------------------------------------------------------------------
# 3. incremental weight initialization
# ---------------------------------------------------------------------------

def test_criterion_03_initialization(env):
    grown = sites.expand_classifier(env.classifier, 10, seed=5)
    copied_ok = (np.array_equal(grown.head_weights[:, :6],
                                env.classifier.head_weights)
                 and np.array_equal(grown.head_bias[:6],
                                    env.classifier.head_bias))
    x = env.full_test.samples[:200]
    logits_ok = np.array_equal(grown.forward(x, cache=False)[:, :6],
                               env.classifier.forward(x, cache=False))

    # fresh-column statistics over >= 1000 entries (wide trunk)
    wide = nn.build_classifier(16, [512], 2, seed=0)
    wide_grown = sites.expand_classifier(wide, 4, seed=6)
    fresh = wide_grown.head_weights[:, 2:].reshape(-1)
    mean_ok = abs(fresh.mean()) < 0.15
    std_ok = abs(fresh.std() - 1.0) < 0.15
    passed = copied_ok and logits_ok and mean_ok and std_ok
    report_line(3, "incremental initialization", passed,
                f"copied columns bit-equal={copied_ok}, old logits "
                f"bit-equal={logits_ok}, new-column mean {fresh.mean():+.3f} "
                f"std {fresh.std():.3f} over {fresh.size} entries")


# ---------------------------------------------------------------------------
# 4. catastrophic forgetting reproduction
# ---------------------------------------------------------------------------

def test_criterion_04_catastrophic_forgetting(env):
    runs = [env.naive_run(s, presets.digits_forgetting_plan(s))
            for s in SEEDS]
    old = median([r.old_block_accuracy for r in runs])
    new = median([r.new_block_accuracy for r in runs])
    slow = [env.naive_run(s, presets.digits_low_lr_plan(s)) for s in SEEDS]
    slow_old = median([r.old_block_accuracy for r in slow])
    slow_new = median([r.new_block_accuracy for r in slow])
    passed = (old < 0.10 and new > 0.90
              and slow_old > 0.60 and slow_new < 0.70)
    report_line(4, "catastrophic forgetting", passed,
                f"naive old {old:.3f} (<0.10) new {new:.3f} (>0.90); "
                f"low-lr old {slow_old:.3f} (>0.60) new {slow_new:.3f} "
                f"(<0.70)")


# ---------------------------------------------------------------------------
# 5. phantom recovery
# ---------------------------------------------------------------------------

def test_criterion_05_phantom_recovery(env, phantom_results):
    naive_acc = median([r.accuracy for r in phantom_results["naive"]])
    best_t = phantom_results["best_t"]
    best = phantom_results["by_temperature"][best_t]
    combined = median([r.accuracy for r in best])
    old_block = median([r.old_block_accuracy for r in best])
    passed = (combined >= naive_acc + 0.25) and (old_block >= 0.60)
    report_line(5, "phantom recovery", passed,
                f"best T={best_t}: combined {combined:.3f} vs naive "
                f"{naive_acc:.3f} (need +0.25), old block {old_block:.3f} "
                f"(need >=0.60), medians over {len(SEEDS)} seeds")


# ---------------------------------------------------------------------------
# 6. pseudo-rehearsal (noise generator, T = 1)
# ---------------------------------------------------------------------------

def test_criterion_06_pseudo_rehearsal(phantom_results):
    naive_acc = median([r.accuracy for r in phantom_results["naive"]])
    noise_acc = median([r.accuracy for r in phantom_results["noise"]])
    passed = noise_acc >= naive_acc + 0.05
    report_line(6, "pseudo-rehearsal boost", passed,
                f"noise phantom {noise_acc:.3f} vs naive {naive_acc:.3f} "
                f"(need +0.05)")


# ---------------------------------------------------------------------------
# 7. GAN-quality ordering
# ---------------------------------------------------------------------------

def test_criterion_07_gan_quality_ordering(phantom_results):
    medians = {e: median([r.accuracy for r in rs])
               for e, rs in phantom_results["by_gan_epochs"].items()}
    ordered = sorted(medians)
    steps_ok = all(medians[b] >= medians[a] - 0.02
                   for a, b in zip(ordered, ordered[1:]))
    detail = " -> ".join(f"{e}ep {medians[e]:.3f}" for e in ordered)
    report_line(7, "GAN-quality ordering", steps_ok,
                f"{detail} (non-decreasing within 2 points)")


# ---------------------------------------------------------------------------
# 8. relaxation sweep shape
# ---------------------------------------------------------------------------

def test_criterion_08_relaxation_sweep(env, phantom_results):
    best = phantom_results["by_temperature"][phantom_results["best_t"]]
    phantom_acc = median([r.accuracy for r in best])
    per_class = int(np.median(list(env.train_b.class_counts().values())))
    tiny, small, large = presets.relaxation_p_values(per_class)
    accs = {p: median([env.exemplar_run(p, s).accuracy for s in SEEDS])
            for p in (tiny, small, large)}
    below = accs[tiny] < phantom_acc and accs[small] < phantom_acc
    reaches = accs[large] >= phantom_acc - 0.03
    passed = below and reaches
    report_line(8, "relaxation sweep shape", passed,
                f"exemplar p={tiny}:{accs[tiny]:.3f} p={small}:"
                f"{accs[small]:.3f} < phantom {phantom_acc:.3f}; "
                f"p={large} ({large / per_class:.0%} of class): "
                f"{accs[large]:.3f} within 3 points")


# ---------------------------------------------------------------------------
# 9. bounded-continual learning
# ---------------------------------------------------------------------------

def _continual_vs_naive(parts, test_all, schedule, base_cfg, plan_fn,
                        gan_cfg, seed):
    state, _ = continual.start_continual(parts[0], schedule, base_cfg)
    for i, (lo, hi) in enumerate(schedule[1:], start=1):
        state, _ = continual.continual_step(state, parts[i],
                                            plan_fn(lo, hi, seed + i),
                                            gan_cfg)
    model = state.classifier

    naive, _, _ = sites.train_base(parts[0], base_cfg)
    for i, (lo, hi) in enumerate(schedule[1:], start=1):
        naive = sites.expand_classifier(naive, hi, seed + i)
        sites.train_baseline_naive(naive, parts[i], plan_fn(lo, hi, seed + i))

    def blocks(m):
        pred = m.predict(test_all.samples)
        acc = float((pred == test_all.labels).mean())
        per_block = [float((pred[(test_all.labels >= lo)
                                 & (test_all.labels < hi)]
                            == test_all.labels[(test_all.labels >= lo)
                                               & (test_all.labels < hi)])
                           .mean()) for lo, hi in schedule]
        return acc, per_block

    return blocks(model), blocks(naive)


def _run_continual_criterion(parts, test_all, base_cfg_fn, plan_fn):
    schedule = presets.CONTINUAL_SCHEDULE
    rows = [_continual_vs_naive(parts, test_all, schedule, base_cfg_fn(),
                                plan_fn, base_cfg_fn().gan, seed)
            for seed in SEEDS]
    combined = median([r[0][0] for r in rows])
    naive_combined = median([r[1][0] for r in rows])
    block_medians = [median([r[0][1][b] for r in rows]) for b in range(3)]
    return combined, naive_combined, block_medians


def test_criterion_09_continual_learning():
    start = time.time()
    blob_train = data.synth_blobs(**presets.BLOB_SPEC)
    blob_test = data.synth_blobs(**presets.BLOB_TEST_SPEC)
    parts = [data.select_classes(blob_train, range(lo, hi))
             for lo, hi in presets.CONTINUAL_SCHEDULE]
    combined, naive_combined, blocks = _run_continual_criterion(
        parts, blob_test, presets.blob_continual_base_config,
        presets.blob_continual_plan)
    blob_elapsed = time.time() - start
    blob_ok = (all(b >= 0.50 for b in blocks)
               and combined >= naive_combined + 0.20 and blob_elapsed < 300)

    digits = data.load_digits_dataset()
    train, test = data.stratified_split(digits,
                                        presets.DIGITS_TEST_FRACTION,
                                        presets.DIGITS_SPLIT_SEED)
    d_parts = [data.select_classes(train, range(lo, hi))
               for lo, hi in presets.CONTINUAL_SCHEDULE]
    d_combined, d_naive, d_blocks = _run_continual_criterion(
        d_parts, test, presets.digits_continual_base_config,
        presets.digits_continual_plan)
    digits_ok = (all(b >= 0.50 for b in d_blocks)
                 and d_combined >= d_naive + 0.20)
    report_line(9, "continual learning", blob_ok and digits_ok,
                f"blobs {combined:.3f} vs naive {naive_combined:.3f}, blocks "
                f"{[f'{b:.2f}' for b in blocks]}, {blob_elapsed:.0f}s; "
                f"digits {d_combined:.3f} vs naive {d_naive:.3f}, blocks "
                f"{[f'{b:.2f}' for b in d_blocks]}")


# ---------------------------------------------------------------------------
# 10. cross-domain increment (rotated base, plain increment, same labels)
# ---------------------------------------------------------------------------

def test_criterion_10_cross_domain():
    digits = data.load_digits_dataset()
    rotated = data.rotate_digits(digits, "uniform",
                                 seed=presets.ROTATION_SEED)
    rot_train, rot_test = data.stratified_split(
        rotated, presets.DIGITS_TEST_FRACTION, presets.DIGITS_SPLIT_SEED)
    plain_train, plain_test = data.stratified_split(
        digits, presets.DIGITS_TEST_FRACTION, presets.DIGITS_SPLIT_SEED)
    union_test = data.concat([rot_test, plain_test])

    clf, _, _ = sites.train_base(rot_train, presets.crossdomain_base_config())
    g = gan.build_gan(64, 16, [96, 96], [32], seed=0, discriminator_pool=5)
    gan.train(g, rot_train.samples, 400, gan.GanTrainConfig(64, 0.05, 0.5,
                                                            seed=0))

    def run(with_phantom, seed):
        model = clf.copy()
        plan = presets.crossdomain_plan(seed)
        sampler = (phantom.PhantomSampler(g, clf, plan.temperature, 10)
                   if with_phantom else None)
        sites.train_incremental(model, plain_train, sampler, plan)
        return sites.evaluate(model, union_test).accuracy

    naive_acc = median([run(False, s) for s in SEEDS])
    phantom_acc = median([run(True, s) for s in SEEDS])
    passed = phantom_acc >= naive_acc + 0.10
    report_line(10, "cross-domain increment", passed,
                f"phantom {phantom_acc:.3f} vs naive {naive_acc:.3f} on the "
                f"combined domain test (need +0.10)")


# ---------------------------------------------------------------------------
# 11. protocol integrity: round trip, membrane sandbox, determinism
# ---------------------------------------------------------------------------

def _write(path, cfg):
    path.write_text(json.dumps(cfg, indent=1))
    return path


def _cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "phantomnet.cli", *args],
                          capture_output=True, text=True, cwd=cwd)


def test_criterion_11_protocol_integrity(env, tmp_path):
    # (a) bundle round trip is byte-identical
    p1 = bundle.write_bundle(tmp_path / "b1", classifier=env.classifier,
                             gan=env.gan, input_dim=64, base_class_count=6)
    loaded = bundle.read_bundle(p1)
    p2 = bundle.write_bundle(tmp_path / "b2", classifier=loaded.classifier,
                             gan=loaded.gan, input_dim=64,
                             base_class_count=6)
    files1 = {f.relative_to(p1): f.read_bytes() for f in sorted(p1.rglob("*"))
              if f.is_file()}
    files2 = {f.relative_to(p2): f.read_bytes() for f in sorted(p2.rglob("*"))
              if f.is_file()}
    roundtrip_ok = files1 == files2

    # (b) membrane sandbox: base data deleted, increment completes from
    # bundle + D_i alone; pointing it at base data is refused (exit 3)
    site = tmp_path / "site"
    site.mkdir()
    train = data.synth_blobs(6, 8, 80, 6.0, seed=0)
    test = data.synth_blobs(6, 8, 30, 6.0, seed=0)
    d_b, d_i = data.split_by_labels(train, range(4), range(4, 6))
    data.save_npz(d_b, site / "d_b.npz")
    data.save_npz(d_i, site / "d_i.npz")
    data.save_npz(test, site / "test.npz")
    base_cfg = _write(site / "base.json", {
        "kind": "base-train", "seed": 0, "out_dir": "base",
        "dataset": {"kind": "npz", "path": "d_b.npz"},
        "classifier": {"hidden": [12], "epochs": 25, "batch_size": 16,
                       "lr": 0.2},
        "gan": {"noise_dim": 4, "generator_hidden": [12],
                "discriminator_hidden": [4], "discriminator_pool": 2,
                "epochs": 3, "batch_size": 16},
        "bundle_path": "bundle"})
    assert _cli(["base-train", "--config", "base.json"],
                site).returncode == 0

    sandbox = tmp_path / "sandbox"  # only the bundle and D_i cross
    sandbox.mkdir()
    shutil.copytree(site / "bundle", sandbox / "bundle")
    shutil.copy(site / "d_i.npz", sandbox / "d_i.npz")
    shutil.copy(site / "test.npz", sandbox / "test.npz")
    shutil.rmtree(site)  # base site data and outputs are gone
    inc_cfg_body = {
        "kind": "increment", "seed": 1, "out_dir": "run",
        "bundle": "bundle",
        "dataset": {"kind": "npz", "path": "d_i.npz"},
        "plan": {"old_classes": 4, "total_classes": 6,
                 "interleave_ratio": 2, "temperature": 2.0, "epochs": 4,
                 "batch_size": 16, "lr": 0.05},
        "phantom": {"generator": "gan"},
        "eval_dataset": {"kind": "npz", "path": "test.npz"}}
    _write(sandbox / "inc.json", inc_cfg_body)
    sandbox_ok = _cli(["increment", "--config", "inc.json"],
                      sandbox).returncode == 0

    bad_cfg = dict(inc_cfg_body, dataset={"kind": "npz", "path": "test.npz"},
                   out_dir="bad")
    _write(sandbox / "bad.json", bad_cfg)
    refusal_ok = _cli(["increment", "--config", "bad.json"],
                      sandbox).returncode == 3

    # (c) determinism: identical seeded runs produce byte-identical reports
    def snapshot():
        run_dir = sandbox / "run"
        return {f.name: f.read_bytes() for f in sorted(run_dir.iterdir())
                if f.is_file()}

    first = snapshot()
    shutil.rmtree(sandbox / "run")
    assert _cli(["increment", "--config", "inc.json"],
                sandbox).returncode == 0
    determinism_ok = snapshot() == first

    passed = roundtrip_ok and sandbox_ok and refusal_ok and determinism_ok
    report_line(11, "protocol integrity", passed,
                f"round-trip bytes equal={roundtrip_ok}, sandbox run "
                f"without base data={sandbox_ok}, membrane refusal exit "
                f"3={refusal_ok}, byte-identical reports={determinism_ok}")
