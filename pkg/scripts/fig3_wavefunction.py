"""Scattered pair state for the incident pair (000, 111): separation weights,
relative-coordinate density and Schmidt entropy versus intensity.

    python3 scripts/fig3_wavefunction.py --out out/fig3 [--plot]
"""

import argparse
import json
from pathlib import Path

import numpy as np

from quasimol.cli import read_csv, run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/fig3")
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    run("wavefunction", "fig3", out)
    summary = json.loads((out / "wavefunction_summary.json").read_text())
    for s in summary["states"]:
        w = ", ".join(f"{k}: {v:.3g}" for k, v in s["class_weights"].items())
        print(f"I = {s['intensity_w_cm2']:g}  E' = {s['e_prime']:.4f} ({s['energy_source']})  S = {s['entropy']:.3f}  [{w}]")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 4))
        for s in summary["states"]:
            f = out / f"psi_I{s['intensity_w_cm2']:.6g}.csv"
            d = read_csv(f)
            ax.semilogy(d["r_over_a"], np.maximum(d["psi2_a3_spherical"], 1e-12), label=f"I = {s['intensity_w_cm2']:g}")
        ax.set_xlabel("r / a")
        ax.set_ylabel(r"$\langle|\Psi|^2\rangle a^3$")
        ax.set_ylim(1e-8, None)
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(out / "fig3.png", dpi=150)


if __name__ == "__main__":
    main()
