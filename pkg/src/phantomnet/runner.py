"""Declarative experiment runner: JSON configs in, deterministic reports out.

One config describes one run kind (base-train, increment, baselines,
continual, evaluate, gradient-check) or a sweep/report over other runs.
Every run writes ``report.json`` (full config echo + logs + metrics),
``metrics.csv``, and a rendered ``confusion.txt`` into its output
directory; identical configs and seeds produce byte-identical files.

The membrane is enforced here: an increment-kind run whose *training* data
carries base-range labels is refused unless the exemplar relaxation was
explicitly requested on the command line. Evaluation data is exempt (the
combined test set lives at the increment site for scoring only).
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from . import bundle as bundle_mod
from . import continual as continual_mod
from . import data as data_mod
from . import gan as gan_mod
from . import nn, sites
from .errors import ConfigError, MembraneError
from .phantom import PhantomSampler

DATA_DIR_ENV = "PHANTOMNET_DATA_DIR"

RUN_KINDS = ("base-train", "broadcast", "increment", "baseline-naive",
             "baseline-exemplar", "continual", "evaluate", "gradient-check",
             "sweep", "report")


def load_config(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _need(cfg: dict, field: str, where: str = "config"):
    if field not in cfg:
        raise ConfigError(f"{where}: missing required field {field!r}")
    return cfg[field]


def _data_path(raw) -> Path:
    """Resolve a dataset path, relative paths against $PHANTOMNET_DATA_DIR."""
    p = Path(raw)
    base = os.environ.get(DATA_DIR_ENV)
    if not p.is_absolute() and base:
        return Path(base) / p
    return p


def resolve_dataset(spec: dict, where: str = "dataset") -> data_mod.LabeledDataset:
    """Build a dataset from its config spec.

    Kinds: ``digits`` (packaged 8x8 set), ``blobs`` (synthetic), ``idx``
    (MNIST-format file pair), ``npz`` (this package's interchange file).
    Optional post-steps on any kind: ``classes`` selection, ``rotate``,
    and a deterministic stratified ``part``: "train" / "test" split.
    """
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: must be an object")
    kind = _need(spec, "kind", where)
    if kind == "digits":
        ds = data_mod.load_digits_dataset()
    elif kind == "blobs":
        ds = data_mod.synth_blobs(
            _need(spec, "num_classes", where), _need(spec, "dim", where),
            _need(spec, "per_class", where), _need(spec, "separation", where),
            spec.get("seed", 0))
    elif kind == "idx":
        ds = data_mod.load_idx(_data_path(_need(spec, "images", where)),
                               _data_path(_need(spec, "labels", where)))
    elif kind == "npz":
        ds = data_mod.load_npz(_data_path(_need(spec, "path", where)))
    else:
        raise ConfigError(f"{where}: unknown dataset kind {kind!r}")

    if spec.get("rotate") is not None:
        ds = data_mod.rotate_digits(ds, spec["rotate"],
                                    seed=spec.get("rotate_seed", 0))
    part = spec.get("part", "all")
    if part != "all":
        train, test = data_mod.stratified_split(
            ds, spec.get("test_fraction", 0.25), spec.get("split_seed", 7))
        if part == "train":
            ds = train
        elif part == "test":
            ds = test
        else:
            raise ConfigError(f"{where}: part must be train/test/all")
    if spec.get("classes") is not None:
        ds = data_mod.select_classes(ds, spec["classes"],
                                     spec.get("remap_contiguous", False))
    return ds


def _classifier_config(cfg: dict) -> sites.ClassifierConfig:
    return sites.ClassifierConfig(
        hidden=tuple(cfg.get("hidden", (128, 96))),
        activation=cfg.get("activation", "tanh"),
        pool_size=cfg.get("pool_size", 1),
        epochs=cfg.get("epochs", 30),
        batch_size=cfg.get("batch_size", 32),
        lr=cfg.get("lr", 0.1),
        momentum=cfg.get("momentum", 0.9),
        lr_decay=cfg.get("lr_decay", 1.0),
        lr_decay_every=cfg.get("lr_decay_every", 0),
        dropout=cfg.get("dropout", 0.0),
        batch_norm=cfg.get("batch_norm", False))


def _gan_config(cfg: dict) -> sites.GanConfig:
    return sites.GanConfig(
        noise_dim=cfg.get("noise_dim", 16),
        generator_hidden=tuple(cfg.get("generator_hidden", (96, 96))),
        discriminator_hidden=tuple(cfg.get("discriminator_hidden", (32,))),
        discriminator_pool=cfg.get("discriminator_pool", 5),
        epochs=cfg.get("epochs", 300),
        batch_size=cfg.get("batch_size", 64),
        lr=cfg.get("lr", 0.05),
        momentum=cfg.get("momentum", 0.5))


def _plan(cfg: dict, seed: int) -> sites.IncrementPlan:
    try:
        return sites.IncrementPlan(
            old_classes=_need(cfg, "old_classes", "plan"),
            total_classes=_need(cfg, "total_classes", "plan"),
            interleave_ratio=cfg.get("interleave_ratio", 1),
            temperature=cfg.get("temperature", 2.0),
            epochs=cfg.get("epochs", 30),
            batch_size=cfg.get("batch_size", 32),
            seed=seed,
            lr=cfg.get("lr", 0.1),
            momentum=cfg.get("momentum", 0.9),
            lr_decay=cfg.get("lr_decay", 1.0),
            lr_decay_every=cfg.get("lr_decay_every", 0))
    except ConfigError:
        raise
    except Exception as exc:  # surface plan field errors as config errors
        raise ConfigError(f"plan: {exc}")


# ---------------------------------------------------------------------------
# report writing
# ---------------------------------------------------------------------------

def render_confusion(confusion) -> str:
    confusion = np.asarray(confusion)
    width = max(5, len(str(int(confusion.max()))) + 1) if confusion.size else 5
    header = "true\\pred" + "".join(f"{j:>{width}}"
                                    for j in range(confusion.shape[1]))
    lines = [header]
    for i, row in enumerate(confusion):
        lines.append(f"{i:>9}" + "".join(f"{int(v):>{width}}" for v in row))
    return "\n".join(lines) + "\n"


def _write_report(out_dir: Path, report: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(
        json.dumps(report, sort_keys=True, indent=1) + "\n")
    evals = report.get("eval")
    rows = []
    if evals:
        rows.append(_metrics_row(report, evals))
    for inc in report.get("increments", []):
        if inc.get("eval"):
            rows.append(_metrics_row(report, inc["eval"],
                                     increment=inc["increment"]))
    if rows:
        with open(out_dir / "metrics.csv", "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    if evals and "confusion" in evals:
        (out_dir / "confusion.txt").write_text(
            render_confusion(evals["confusion"]))


def _metrics_row(report: dict, evals: dict, increment=None) -> dict:
    return {
        "method": report.get("method", report["kind"]),
        "p": report.get("p", 0),
        "gan_epochs": report.get("gan_epochs", ""),
        "T": report.get("T", ""),
        "seed": report["seed"],
        "increment": "" if increment is None else increment,
        "accuracy": evals["accuracy"],
        "old_block_accuracy": evals.get("old_block_accuracy", ""),
        "new_block_accuracy": evals.get("new_block_accuracy", ""),
    }


def _eval_dict(model, cfg, default_old=None):
    spec = cfg.get("eval_dataset")
    if spec is None:
        return None
    test = resolve_dataset(spec, "eval_dataset")
    report = sites.evaluate(model, test,
                            old_classes=cfg.get("eval_old_classes",
                                                default_old))
    return report.to_dict()


# ---------------------------------------------------------------------------
# run kinds
# ---------------------------------------------------------------------------

def _run_base_train(cfg: dict, out_dir: Path) -> dict:
    dataset = resolve_dataset(_need(cfg, "dataset"))
    seed = cfg.get("seed", 0)
    base_cfg = sites.BaseConfig(
        classifier=_classifier_config(cfg.get("classifier", {})),
        gan=_gan_config(cfg.get("gan", {})),
        seed=seed,
        gan_snapshot_epochs=tuple(cfg.get("gan", {}).get("snapshot_epochs",
                                                         ())))
    classifier, g, logs = sites.train_base(dataset, base_cfg)

    bundle_path = Path(cfg.get("bundle_path", out_dir / "bundle"))
    sites.broadcast(classifier, g, bundle_path, creation_seed=seed)
    snapshot_paths = {}
    for epoch, snap in logs.pop("gan_snapshots").items():
        p = out_dir / f"gan_epoch_{epoch}"
        gan_mod.checkpoint_epoch(snap, p)
        snapshot_paths[str(epoch)] = str(p)

    report = {"kind": "base-train", "method": "base", "seed": seed,
              "config": cfg, "logs": logs,
              "bundle": str(bundle_path), "gan_snapshots": snapshot_paths,
              "class_schedule": {"old": classifier.num_classes,
                                 "total": classifier.num_classes},
              "eval": _eval_dict(classifier, cfg)}
    return report


def _run_broadcast(cfg: dict, out_dir: Path) -> dict:
    loaded = bundle_mod.read_bundle(_need(cfg, "source"))
    target = Path(_need(cfg, "bundle_path"))
    bundle_mod.write_bundle(
        target, classifier=loaded.classifier, gan=loaded.gan,
        input_dim=loaded.metadata["input_dim"],
        base_class_count=loaded.metadata["base_class_count"],
        gan_epoch=loaded.metadata.get("gan_epoch"),
        creation_seed=loaded.metadata.get("creation_seed"))
    return {"kind": "broadcast", "seed": cfg.get("seed", 0), "config": cfg,
            "bundle": str(target)}


def _check_membrane(train_data, plan, cfg):
    if plan.same_label_space:
        return
    if train_data.labels.size and train_data.labels.min() < plan.old_classes:
        raise MembraneError(
            "increment training data carries base-range labels; the data "
            "membrane forbids this (use baseline-exemplar with "
            "--allow-relaxation p=<n> to measure the relaxation)")


def _run_increment_kind(cfg: dict, out_dir: Path, kind: str,
                        allow_relaxation: int | None) -> dict:
    seed = cfg.get("seed", 0)
    loaded = bundle_mod.read_bundle(_need(cfg, "bundle"))
    plan = _plan(_need(cfg, "plan"), seed)
    if plan.old_classes != loaded.metadata["base_class_count"]:
        raise ConfigError("plan.old_classes must match the bundle's "
                          "base_class_count")
    train_data = resolve_dataset(_need(cfg, "dataset"))
    model = sites.init_incremental(loaded, plan.total_classes, seed,
                                   cfg.get("new_column_scale", "unit"))

    report = {"kind": kind, "seed": seed, "config": cfg,
              "class_schedule": {"old": plan.old_classes,
                                 "total": plan.total_classes},
              "T": plan.temperature, "p": 0, "gan_epochs": None}

    if kind == "baseline-exemplar":
        if allow_relaxation is None:
            raise MembraneError(
                "baseline-exemplar transfers real base samples across the "
                "membrane; rerun with an explicit --allow-relaxation p=<n>")
        ex_cfg = _need(cfg, "exemplars")
        per_class = ex_cfg.get("per_class", allow_relaxation)
        if per_class != allow_relaxation:
            raise ConfigError(
                f"--allow-relaxation p={allow_relaxation} does not match "
                f"exemplars.per_class={per_class}")
        source = resolve_dataset(_need(ex_cfg, "dataset"), "exemplars.dataset")
        exemplars = sites.select_exemplars(source, per_class, seed)
        log = sites.train_baseline_exemplar(model, train_data, exemplars,
                                            plan)
        report.update(method="exemplar", p=per_class,
                      membrane_violation=True)
    elif kind == "baseline-naive":
        _check_membrane(train_data, plan, cfg)
        log = sites.train_baseline_naive(model, train_data, plan)
        report.update(method="naive")
    else:  # increment (phantom)
        _check_membrane(train_data, plan, cfg)
        ph_cfg = cfg.get("phantom", {})
        gen_kind = ph_cfg.get("generator", "gan")
        if gen_kind == "noise":
            generator = gan_mod.NoiseGenerator(train_data.d)
            report.update(method="phantom-noise", gan_epochs=None)
        elif gen_kind == "gan":
            if ph_cfg.get("gan_checkpoint"):
                generator = gan_mod.load_checkpoint(ph_cfg["gan_checkpoint"])
            else:
                generator = loaded.gan
            if generator is None:
                raise ConfigError("bundle has no GAN and no gan_checkpoint "
                                  "was given")
            report.update(method="phantom-gan",
                          gan_epochs=generator.epochs_trained)
        else:
            raise ConfigError(f"phantom.generator must be gan/noise, got "
                              f"{gen_kind!r}")
        sampler = PhantomSampler(generator, loaded.classifier,
                                 plan.temperature, plan.total_classes)
        log = sites.train_incremental(model, train_data, sampler, plan)

    report["logs"] = {"train": log}
    report["eval"] = _eval_dict(model, cfg, default_old=plan.old_classes)
    model_path = out_dir / "model"
    bundle_mod.write_bundle(model_path, classifier=model,
                            input_dim=model.input_dim,
                            base_class_count=plan.old_classes)
    report["model"] = str(model_path)
    return report


def _run_continual(cfg: dict, out_dir: Path) -> dict:
    seed = cfg.get("seed", 0)
    schedule = [tuple(r) for r in _need(cfg, "schedule")]
    continual_mod.validate_schedule(schedule)
    full = resolve_dataset(_need(cfg, "dataset"))
    parts = [data_mod.select_classes(full, range(lo, hi))
             for lo, hi in schedule]

    base_cfg = sites.BaseConfig(
        classifier=_classifier_config(cfg.get("classifier", {})),
        gan=_gan_config(cfg.get("gan", {})), seed=seed)
    inc_defaults = cfg.get("increment_defaults", {})

    eval_spec = cfg.get("eval_dataset")
    full_eval = (resolve_dataset(eval_spec, "eval_dataset")
                 if eval_spec is not None else None)

    def eval_seen(model, classes_seen):
        # score each increment against the classes that exist so far
        if full_eval is None:
            return None
        seen = data_mod.select_classes(full_eval, range(classes_seen))
        return sites.evaluate(model, seen).to_dict()

    naive_mode = cfg.get("naive_baseline", False)
    increments = []
    if naive_mode:
        model, _, logs0 = sites.train_base(parts[0], base_cfg)
    else:
        state, logs0 = continual_mod.start_continual(parts[0], schedule,
                                                     base_cfg)
        model = state.classifier
    for i, (lo, hi) in enumerate(schedule[1:], start=1):
        plan_cfg = {"old_classes": lo, "total_classes": hi, **inc_defaults}
        plan = _plan(plan_cfg, seed + i)
        if naive_mode:
            model = sites.expand_classifier(model, hi, seed + i)
            log = sites.train_baseline_naive(model, parts[i], plan)
        else:
            state, step_logs = continual_mod.continual_step(
                state, parts[i], plan, base_cfg.gan)
            model = state.classifier
            log = step_logs["train"]
        entry = {"increment": i, "classes": [lo, hi],
                 "logs": {"train": log}, "eval": eval_seen(model, hi)}
        increments.append(entry)

    report = {"kind": "continual", "seed": seed, "config": cfg,
              "method": "naive-sequential" if naive_mode else "continual",
              "class_schedule": {"old": schedule[-1][0],
                                 "total": schedule[-1][1],
                                 "schedule": [list(r) for r in schedule]},
              "base_logs": logs0["classifier"] if naive_mode
              else logs0["classifier"],
              "increments": increments,
              "eval": increments[-1]["eval"] if increments else None}
    if report["eval"] and full_eval is not None:
        pred = model.predict(full_eval.samples)
        pred_blocks = {}
        for lo, hi in schedule:
            mask = (full_eval.labels >= lo) & (full_eval.labels < hi)
            if mask.any():
                pred_blocks[f"{lo}-{hi}"] = float(
                    (pred[mask] == full_eval.labels[mask]).mean())
        report["block_accuracies"] = pred_blocks
    return report


def _run_evaluate(cfg: dict, out_dir: Path) -> dict:
    loaded = bundle_mod.read_bundle(_need(cfg, "model"))
    if loaded.classifier is None:
        raise ConfigError("model bundle holds no classifier")
    test = resolve_dataset(_need(cfg, "dataset"))
    report = sites.evaluate(loaded.classifier, test,
                            old_classes=cfg.get("old_classes"))
    return {"kind": "evaluate", "seed": cfg.get("seed", 0), "config": cfg,
            "method": "evaluate", "eval": report.to_dict(),
            "class_schedule": {"old": cfg.get("old_classes"),
                               "total": loaded.classifier.num_classes}}


def _run_gradient_check(cfg: dict, out_dir: Path) -> dict:
    trials = cfg.get("trials", 100)
    seed = cfg.get("seed", 0)
    tolerance = cfg.get("tolerance", 1e-4)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x9C]))
    activations = ["relu", "tanh", "maxout"]
    worst = 0.0
    for trial in range(trials):
        act = activations[trial % 3]
        pool = 2 if act == "maxout" else 1
        hidden = [int(rng.integers(3, 8))
                  for _ in range(int(rng.integers(1, 3)))]
        c = int(rng.integers(2, 6))
        d = int(rng.integers(3, 7))
        model = nn.build_classifier(d, hidden, c, seed=trial, activation=act,
                                    pool_size=pool)
        x = rng.normal(size=(4, d))
        if trial % 2 == 0:
            y = rng.integers(0, c, size=4)
            err = nn.gradient_check(model, nn.softmax_cross_entropy, x, y,
                                    seed=trial)
        else:
            t = float(rng.choice([1.0, 2.0, 5.0]))
            target = nn.softmax(rng.normal(size=(4, c)))
            err = nn.gradient_check(
                model, lambda lg, tt, _t=t: nn.temperature_soft_loss(lg, tt, _t),
                x, target, seed=trial)
        worst = max(worst, err)
    passed = worst < tolerance
    report = {"kind": "gradient-check", "seed": seed, "config": cfg,
              "method": "gradient-check", "trials": trials,
              "max_relative_error": worst, "tolerance": tolerance,
              "passed": passed}
    if not passed:
        from .errors import NumericError

        _write_report(out_dir, report)
        raise NumericError(
            f"gradient check failed: max relative error {worst} >= "
            f"{tolerance}")
    return report


# ---------------------------------------------------------------------------
# sweep and merge
# ---------------------------------------------------------------------------

def _set_dotted(cfg: dict, dotted: str, value):
    parts = dotted.split(".")
    node = cfg
    for key in parts[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(f"sweep key {dotted!r} crosses a non-object")
    node[parts[-1]] = value


def expand_sweep(cfg: dict) -> list[dict]:
    """Expand a sweep template into concrete run configs."""
    template = _need(cfg, "template", "sweep")
    cases = [dict(c) for c in cfg.get("cases", [])]
    grid = cfg.get("grid", {})
    if grid:
        keys = sorted(grid)
        combos = [{}]
        for key in keys:
            combos = [{**combo, key: value}
                      for combo in combos for value in grid[key]]
        base_cases = cases or [{}]
        cases = [{**base, **combo} for combo in combos for base in base_cases]
    if not cases:
        raise ConfigError("sweep: needs a grid or explicit cases")
    runs = []
    for idx, overrides in enumerate(cases):
        run_cfg = json.loads(json.dumps(template))  # deep copy
        for dotted, value in overrides.items():
            _set_dotted(run_cfg, dotted, value)
        run_cfg.setdefault("name", f"case_{idx:03d}")
        runs.append(run_cfg)
    return runs


def _run_sweep(cfg: dict, out_dir: Path,
               allow_relaxation: int | None) -> dict:
    runs = expand_sweep(cfg)
    run_dirs = []
    for run_cfg in runs:
        sub = out_dir / run_cfg["name"]
        run_cfg["out_dir"] = str(sub)
        execute(run_cfg, allow_relaxation=allow_relaxation)
        run_dirs.append(sub)
    merged = merge_reports(run_dirs)
    _write_merged(out_dir, merged)
    return {"kind": "sweep", "seed": cfg.get("seed", 0), "config": cfg,
            "runs": [str(d) for d in run_dirs], "merged": merged}


def merge_reports(run_dirs) -> dict:
    """Consolidate run reports into one table keyed by
    (method, p, gan_epochs, T, seed); refuses mixed class schedules."""
    rows = []
    schedule = None
    for d in run_dirs:
        report_path = Path(d) / "report.json"
        if not report_path.is_file():
            raise ConfigError(f"no report.json under {d}")
        report = json.loads(report_path.read_text())
        if report.get("eval") is None:
            continue
        sched = report.get("class_schedule")
        if schedule is None:
            schedule = sched
        elif sched != schedule:
            raise ConfigError(
                f"refusing to merge mixed class schedules: {schedule} vs "
                f"{sched} ({d})")
        rows.append({
            "method": report.get("method", report["kind"]),
            "p": report.get("p", 0),
            "gan_epochs": report.get("gan_epochs"),
            "T": report.get("T"),
            "seed": report["seed"],
            "accuracy": report["eval"]["accuracy"],
            "old_block_accuracy": report["eval"].get("old_block_accuracy"),
            "new_block_accuracy": report["eval"].get("new_block_accuracy"),
        })
    rows.sort(key=lambda r: (str(r["method"]), r["p"] or 0,
                             r["gan_epochs"] or -1, r["T"] or 0, r["seed"]))

    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        key = (row["method"], row["p"], row["gan_epochs"], row["T"])
        groups.setdefault(key, []).append(row)
    summary = []
    for key, members in groups.items():
        accs = [m["accuracy"] for m in members]
        entry = {"method": key[0], "p": key[1], "gan_epochs": key[2],
                 "T": key[3], "seeds": len(members),
                 "accuracy_median": float(np.median(accs))}
        if len(members) > 1:
            entry["accuracy_min"] = float(min(accs))
            entry["accuracy_max"] = float(max(accs))
        olds = [m["old_block_accuracy"] for m in members
                if m["old_block_accuracy"] is not None]
        if olds:
            entry["old_block_median"] = float(np.median(olds))
        news = [m["new_block_accuracy"] for m in members
                if m["new_block_accuracy"] is not None]
        if news:
            entry["new_block_median"] = float(np.median(news))
        summary.append(entry)
    return {"class_schedule": schedule, "rows": rows, "summary": summary}


def _write_merged(out_dir: Path, merged: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "merged.json").write_text(
        json.dumps(merged, sort_keys=True, indent=1) + "\n")
    if merged["rows"]:
        with open(out_dir / "merged.csv", "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(merged["rows"][0]))
            writer.writeheader()
            writer.writerows(merged["rows"])
    if merged["summary"]:
        fields = sorted({k for row in merged["summary"] for k in row})
        with open(out_dir / "summary.csv", "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=fields, restval="")
            writer.writeheader()
            writer.writerows(merged["summary"])


def _run_report(cfg: dict, out_dir: Path) -> dict:
    run_dirs = [Path(p) for p in _need(cfg, "runs")]
    if not run_dirs:
        raise ConfigError("report: needs at least one run directory")
    merged = merge_reports(run_dirs)
    _write_merged(out_dir, merged)
    return {"kind": "report", "seed": cfg.get("seed", 0), "config": cfg,
            "merged": merged}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def execute(cfg: dict, seed_override: int | None = None,
            out_override=None, allow_relaxation: int | None = None) -> dict:
    """Validate and run one config; returns the report it wrote."""
    kind = _need(cfg, "kind")
    if kind not in RUN_KINDS:
        raise ConfigError(f"unknown run kind {kind!r}; expected one of "
                          f"{', '.join(RUN_KINDS)}")
    if seed_override is not None:
        cfg = {**cfg, "seed": seed_override}
    if out_override is not None:
        cfg = {**cfg, "out_dir": str(out_override)}
    out_dir = Path(_need(cfg, "out_dir"))

    if kind == "base-train":
        report = _run_base_train(cfg, out_dir)
    elif kind == "broadcast":
        report = _run_broadcast(cfg, out_dir)
    elif kind in ("increment", "baseline-naive", "baseline-exemplar"):
        report = _run_increment_kind(cfg, out_dir, kind, allow_relaxation)
    elif kind == "continual":
        report = _run_continual(cfg, out_dir)
    elif kind == "evaluate":
        report = _run_evaluate(cfg, out_dir)
    elif kind == "gradient-check":
        report = _run_gradient_check(cfg, out_dir)
    elif kind == "sweep":
        report = _run_sweep(cfg, out_dir, allow_relaxation)
    else:  # report
        report = _run_report(cfg, out_dir)
    _write_report(out_dir, report)
    return report
