# %% [markdown]
# # The `diffmig` command line, end to end
#
# Simulate tracks, estimate parameters, then compute a migration matrix,
# all from one JSON config written to a temporary directory.

# %%
import json
import tempfile
from pathlib import Path

from diffmig.cli import run

work = Path(tempfile.mkdtemp())
config = {
    "domain": {"lx": 10.0, "ly": 10.0},
    "areas": [{"name": "west", "x": [0, 5], "y": [0, 10]}, {"name": "east", "x": [5, 10], "y": [0, 10]}],
    "horizon": 5.0,
    "bootstrap": {"replicates": 200, "level": 0.9},
    "seed": 42,
    "simulate": {"n_paths": 5, "n": 200, "beta": [0.2, 0.0], "d": 0.5,
                 "intervals": {"kind": "exponential", "mean": 0.3}, "noise": {"kind": "none"}},
}
(work / "config.json").write_text(json.dumps(config))

# %%
assert run(["simulate", "--config", str(work / "config.json"), "--out", str(work / "sim")]) == 0
assert run(["estimate", "--config", str(work / "config.json"), "--data", str(work / "sim" / "tracks.csv"),
            "--out", str(work / "est")]) == 0
report = json.loads((work / "est" / "report.json").read_text())
print(json.dumps(report["collective"], indent=1)[:600])

# %%
assert run(["proportions", "--config", str(work / "config.json"), "--data", str(work / "sim" / "tracks.csv"),
            "--out", str(work / "prop")]) == 0
print((work / "prop" / "proportions.csv").read_text())
