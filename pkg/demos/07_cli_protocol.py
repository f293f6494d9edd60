"""The CLI protocol, end to end, with the membrane enforced for real.

Runs `phantomnet` as subprocesses: base-train writes a sealed bundle, the
base data is deleted, the increment run completes from the bundle + D_i
alone. Pointing the increment at base-range data is refused (exit 3) and
the exemplar baseline only runs with an explicit --allow-relaxation flag.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

from phantomnet import data

work = Path(tempfile.mkdtemp(prefix="phantomnet_cli_"))
print("working in", work)


def cli(*args):
    proc = subprocess.run([sys.executable, "-m", "phantomnet.cli", *args],
                          capture_output=True, text=True, cwd=work)
    return proc


def write(name, cfg):
    (work / name).write_text(json.dumps(cfg, indent=1))
    return name


# site data as files: D_b (classes 0-3), D_i (classes 4-5), combined test
train = data.synth_blobs(6, 8, 120, 6.0, seed=0)
test = data.synth_blobs(6, 8, 40, 6.0, seed=0)
d_b, d_i = data.split_by_labels(train, range(4), range(4, 6))
data.save_npz(d_b, work / "d_b.npz")
data.save_npz(d_i, work / "d_i.npz")
data.save_npz(test, work / "test.npz")

write("base.json", {
    "kind": "base-train", "seed": 0, "out_dir": "base",
    "dataset": {"kind": "npz", "path": "d_b.npz"},
    "classifier": {"hidden": [24], "epochs": 40, "batch_size": 16,
                   "lr": 0.2},
    "gan": {"noise_dim": 6, "generator_hidden": [24, 24],
            "discriminator_hidden": [8], "discriminator_pool": 2,
            "epochs": 120, "batch_size": 32},
    "bundle_path": "bundle"})
proc = cli("base-train", "--config", "base.json")
print(f"\n$ phantomnet base-train --config base.json   -> exit {proc.returncode}")

(work / "d_b.npz").unlink()
print("$ rm d_b.npz                                 # the membrane: base "
      "data is gone")

write("inc.json", {
    "kind": "increment", "seed": 1, "out_dir": "inc",
    "bundle": "bundle",
    "dataset": {"kind": "npz", "path": "d_i.npz"},
    "plan": {"old_classes": 4, "total_classes": 6, "interleave_ratio": 1,
             "temperature": 2.0, "epochs": 40, "batch_size": 16,
             "lr": 0.05},
    "phantom": {"generator": "gan"},
    "eval_dataset": {"kind": "npz", "path": "test.npz"}})
proc = cli("increment", "--config", "inc.json")
print(f"$ phantomnet increment --config inc.json     -> exit {proc.returncode}")
report = json.loads((work / "inc" / "report.json").read_text())
print(f"    combined accuracy {report['eval']['accuracy']:.3f} "
      f"(old block {report['eval']['old_block_accuracy']:.3f})")

# a run that would read base-range data is refused
write("bad.json", json.loads((work / "inc.json").read_text())
      | {"dataset": {"kind": "npz", "path": "test.npz"}, "out_dir": "bad"})
proc = cli("increment", "--config", "bad.json")
print(f"\n$ phantomnet increment --config bad.json     -> exit "
      f"{proc.returncode} (membrane refusal)")
print("   ", proc.stderr.strip())

# the exemplar baseline demands the explicit relaxation flag
data.save_npz(d_b, work / "d_b.npz")  # restore for the sanctioned violation
write("ex.json", {
    "kind": "baseline-exemplar", "seed": 1, "out_dir": "ex",
    "bundle": "bundle",
    "dataset": {"kind": "npz", "path": "d_i.npz"},
    "plan": {"old_classes": 4, "total_classes": 6, "epochs": 40,
             "batch_size": 16, "lr": 0.05},
    "exemplars": {"dataset": {"kind": "npz", "path": "d_b.npz"},
                  "per_class": 5},
    "eval_dataset": {"kind": "npz", "path": "test.npz"}})
proc = cli("baseline-exemplar", "--config", "ex.json")
print(f"\n$ phantomnet baseline-exemplar --config ex.json")
print(f"                                             -> exit "
      f"{proc.returncode} (needs --allow-relaxation)")
proc = cli("baseline-exemplar", "--config", "ex.json",
           "--allow-relaxation", "p=5")
print(f"$ ... --allow-relaxation p=5                 -> exit "
      f"{proc.returncode}")
report = json.loads((work / "ex" / "report.json").read_text())
print(f"    marked in the report: membrane_violation="
      f"{report['membrane_violation']}, p={report['p']}")

print(f"\nrun artifacts under {work}/inc: "
      f"{sorted(p.name for p in (work / 'inc').iterdir())}")
