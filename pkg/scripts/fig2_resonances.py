"""Resonance and bound-state energies versus binding intensity, and the
density-of-states change at the reference intensity.

    python3 scripts/fig2_resonances.py --out out/fig2 [--threads N] [--plot]
"""

import argparse
from pathlib import Path

import numpy as np

from quasimol.cli import read_csv, run
from quasimol.spectral import linear_r2


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/fig2")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    run("resonance-sweep", "fig2", out, args.threads)
    run("dos", "fig2", out / "dos")

    tr = read_csv(out / "sweep_tracked.csv")
    ok = np.isfinite(tr["e_r"])
    print(f"tracked resonance at {ok.sum()} of {len(tr)} intensities; "
          f"linear R^2 = {linear_r2(tr['intensity_w_cm2'][ok], tr['e_r'][ok]):.3f}")
    for row in tr:
        print(f"I = {row['intensity_w_cm2']:.2e} W/cm^2  E'_r = {row['e_r']:.4f}  Gamma_r = {row['gamma_r_hz']:.3g} Hz  "
              f"E'_b = {row['e_b'] or '-'}")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        long = read_csv(out / "sweep.csv")
        dos = read_csv(out / "dos" / "dos.csv")
        fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))
        res = long[(long["kind"] == "resonance") & (long["valid"] == 1)]
        bnd = long[long["kind"] == "bound"]
        a.plot(res["intensity_w_cm2"] * 1e3, res["e_prime"], "o", ms=3, label="resonances")
        a.plot(bnd["intensity_w_cm2"] * 1e3, bnd["e_prime"], "*", label="bound states")
        a.axhline(3, color="k", lw=0.5)
        a.set_xlabel("I  [mW/cm$^2$]")
        a.set_ylabel("E'")
        a.legend()
        b.plot(dos["e_prime"], dos["delta_rho"], label=r"$\delta\rho$")
        b.plot(dos["e_prime"], dos["rho0"], "--", label=r"$\rho^{(0)}$")
        b.set_xlabel("E'")
        b.legend()
        fig.tight_layout()
        fig.savefig(out / "fig2.png", dpi=150)


if __name__ == "__main__":
    main()
