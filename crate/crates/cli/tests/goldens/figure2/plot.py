import csv
import sys
from collections import OrderedDict
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
rows = csv.DictReader(line for line in open(here / "signal.csv") if not line.startswith("#"))
curves = OrderedDict()
for r in rows:
    curves.setdefault(r["curve"], ([], []))
    curves[r["curve"]][0].append(float(r["x_shift"]))
    curves[r["curve"]][1].append(float(r["signal"]))

groups = OrderedDict()
for name in curves:
    groups.setdefault(name.split(" ")[0], []).append(name)

fig, axes = plt.subplots(len(groups), 1, figsize=(6, 3 * len(groups)), squeeze=False)
for ax, (g, names) in zip(axes[:, 0], groups.items()):
    for name in names:
        ax.plot(*curves[name], label=name)
    ax.set_title("stack " + g)
    ax.set_xlabel("x_s/d")
    ax.set_ylabel("transmitted fraction")
    ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig(here / (sys.argv[1] if len(sys.argv) > 1 else "figure.pdf"))
