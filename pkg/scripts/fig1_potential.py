"""Interaction potential versus kr along the three lattice directions, plus the
observability ratios for a near-UV lattice.

    python3 scripts/fig1_potential.py --out out/fig1 [--plot]
"""

import argparse
from pathlib import Path

import numpy as np

from quasimol.cli import read_csv, run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/fig1")
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    run("potential", "fig1", out)
    run("feasibility", "fig1", out / "feasibility")

    data = read_csv(out / "potential.csv")
    labels = [n for n in data.dtype.names if n.startswith("V_hz")]
    for name in labels:
        v = data[name]
        i = np.nanargmin(v)
        print(f"{name}: min V/h = {v[i]:.4g} Hz at kr = {data['kr'][i]:.3f}")
    print((out / "feasibility" / "feasibility.csv").read_text())

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 4))
        for name, lab in zip(labels, ["(0,1,-1) axis", "(0,1,1) axis", "cube axis"]):
            ax.plot(data["kr"], data[name] / 1e6, label=lab)
        ax.axhline(0, color="k", lw=0.5)
        ax.set_xlabel("kr")
        ax.set_ylabel("V / h  [MHz]")
        ax.set_ylim(-2, 2)
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / "fig1.png", dpi=150)


if __name__ == "__main__":
    main()
