"""
Command-line pipeline
=====================

synth, train, embed, evaluate and plot, driven by one key=value config.
Outputs go to a temporary directory whose path is printed at the end.
"""

import subprocess
import sys
import tempfile
from pathlib import Path

work = Path(tempfile.mkdtemp(prefix="xim-demo-"))
xim_cmd = [sys.executable, "-m", "xim.cli"]


def run(*args):
    out = subprocess.run(xim_cmd + list(args), cwd=work, capture_output=True, text=True)
    print("$ xim", " ".join(args), f"-> exit {out.returncode}")
    if out.stdout.strip():
        print(out.stdout.rstrip())
    return out.returncode


(work / "run.cfg").write_text(
    "# c-XIM on a 10x10 lattice\n"
    "method = c-xim\nrows = 10\ncols = 10\nt_max = 10000\nseed = 0\nlabel_column = -1\n"
)
run("synth", "genes.csv", "--seed", "0")
run("train", "genes.csv", "model.xim", "--config", "run.cfg")
run("embed", "model.xim", "genes.csv", "embedding.csv", "--config", "run.cfg")
run("evaluate", "genes.csv", "report", "--config", "run.cfg", "--methods", "som,c-xim,pca", "--runs", "2")
run("plot", "embedding.csv", "embedding.svg", "--title", "c-XIM")

# Typos in the config are rejected with exit code 2 and the key name.
(work / "typo.cfg").write_text("sigm_start = 3\n")
run("train", "genes.csv", "bad.xim", "--config", "typo.cfg")
print("outputs in", work)
