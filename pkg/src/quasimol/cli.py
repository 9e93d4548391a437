"""Command-line entry point: ``quasimol <subcommand> --config <path|preset>``.

Every run writes CSV files (header comments echo the parameters) and a
``manifest.json`` with the config hash, code version, output checksums and
timings. Exit codes: 0 success, 1 config error, 2 computation failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, figure_presets, load_config
from .constants import H_PLANCK
from .green import rho0
from .params import LaserField, feasibility_report
from .potential import COS_111, CutoffError, f_theta
from .spectral import delta_rho, find_resonances, intensity_sweep
from .validation import oracle_table, validate_all
from .wavefunction import entanglement_report, psi_squared, resolve_energy, solve_coefficients, unperturbed_state

log = logging.getLogger("quasimol")

SUBCOMMANDS = ("potential", "dos", "resonance-sweep", "wavefunction", "feasibility", "validate-green", "validate-all", "figures")


class ComputationError(RuntimeError):
    pass


@dataclass
class RunManifest:
    subcommand: str
    config_sha256: str
    version: str
    outputs: dict = field(default_factory=dict)  # relative path -> sha256
    timings: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def to_dict(self):
        return {
            "subcommand": self.subcommand,
            "config_sha256": self.config_sha256,
            "version": self.version,
            "outputs": dict(sorted(self.outputs.items())),
            "timings": self.timings,
            "failures": self.failures,
        }


# ---- output helpers -----------------------------------------------------------------------


def atomic_write(path: Path, text: str) -> str:
    """Write via a temp file and rename; returns the sha256 of the content."""
    path.parent.mkdir(parents=True, exist_ok=True)
    data = text.encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return hashlib.sha256(data).hexdigest()


def _fmt(x, precision):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), f".{precision}g")
    return str(x)


def csv_text(columns, rows, meta: dict, precision: int) -> str:
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(x, precision) for x in row])
    return buf.getvalue()


def read_csv(path) -> np.ndarray:
    """Load a CSV written by this module as a structured array (metadata lines skipped)."""
    with open(path) as f:
        lines = [ln for ln in f if not ln.startswith("#")]
    return np.genfromtxt(lines, delimiter=",", names=True, dtype=None, encoding=None)


class Writer:
    def __init__(self, out: Path, manifest: RunManifest, precision: int, meta: dict):
        self.out, self.manifest, self.precision, self.meta = out, manifest, precision, meta

    def csv(self, name, columns, rows, extra_meta=None):
        meta = dict(self.meta)
        meta.update(extra_meta or {})
        self.manifest.outputs[name] = atomic_write(self.out / name, csv_text(columns, rows, meta, self.precision))

    def json(self, name, obj):
        text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
        self.manifest.outputs[name] = atomic_write(self.out / name, text)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o))


def _meta(cfg: RunConfig, sub: str) -> dict:
    return {"tool": f"quasimol {__version__}", "subcommand": sub, "config": cfg.name, "config_sha256": cfg.sha256()}


# ---- pipelines ----------------------------------------------------------------------------


def run_potential(cfg: RunConfig, w: Writer, threads: int):
    atom = cfg.species()
    system = cfg.system()
    ctx = system.context(cfg.binding_laser.intensity)
    p = cfg.potential
    kr = np.geomspace(p.kr_min, p.kr_max, p.points)
    r = kr / ctx.k
    cols = ["kr", "r_nm"] + [f"V_hz_cos{c:.6f}" for c in p.cos_thetas]
    rows = []
    scale = 2 * math.pi * ctx.k**3 * ctx.alpha**2 * ctx.intensity / 2.99792458e10 / H_PLANCK
    for x, rr in zip(kr, r):
        vals = [(-scale * float(f_theta(x, c))) if rr >= ctx.cutoff else float("nan") for c in p.cos_thetas]
        rows.append([x, rr * 1e7] + vals)
    w.csv("potential.csv", cols, rows, {
        "intensity_w_cm2": cfg.binding_laser.intensity,
        "detuning_gamma": cfg.binding_laser.detuning_gamma,
        "alpha_cm3": ctx.alpha,
        "cutoff_nm": cfg.lattice.cutoff_nm,
        "note": "V/h in Hz; nan below the cutoff separation",
    })
    pm = system.potential(cfg.binding_laser.intensity)
    seps = system.basis.separations
    d = np.asarray(ctx.laser_direction)
    prow = []
    for s, val in zip(seps, pm.values):
        n = float(np.linalg.norm(s))
        prow.append([int(s[0]), int(s[1]), int(s[2]), n, float(s @ d) / n, val / H_PLANCK, val / system.pair_hopping])
    w.csv("pair_potential.csv", ["dx", "dy", "dz", "r_over_a", "cos_theta", "V_hz", "v_normalized"], prow,
          {"intensity_w_cm2": cfg.binding_laser.intensity, "pair_hopping_hz": system.pair_hopping / H_PLANCK})


def run_dos(cfg: RunConfig, w: Writer, threads: int):
    system = cfg.system()
    n = cfg.numerics
    I = cfg.binding_laser.intensity
    e = np.linspace(n.dos_range[0], n.dos_range[1], n.dos_points)
    r0 = rho0(system.basis, e, 0.0, system.engine)
    dr, masked = delta_rho(system, e, I, h=n.derivative_step)
    res = find_resonances(system, I, samples_per_unit=n.samples_per_unit, h=n.derivative_step) if I > 0 else []
    rows = [[x, a, b, int(m)] for x, a, b, m in zip(e, r0, dr, masked)]
    meta = {
        "intensity_w_cm2": I,
        "basis_size": len(system.basis),
        "rho0_norm": f"N = basis size ({len(system.basis)})",
        "delta_rho_norm": "N = 1",
        "resonances": "; ".join(f"E'={r.e_r:.6f} Gamma'={r.gamma_prime:.6f} Gamma_hz={r.gamma_r_hz:.6f} valid={r.valid}" for r in res) or "none",
    }
    w.csv("dos.csv", ["e_prime", "rho0", "delta_rho", "masked"], rows, meta)


def run_sweep(cfg: RunConfig, w: Writer, threads: int):
    system = cfg.system()
    grid = cfg.binding_laser.intensities or [cfg.binding_laser.intensity]
    n = cfg.numerics
    pts = intensity_sweep(system, grid, samples_per_unit=n.samples_per_unit, h=n.derivative_step, threads=threads)
    atom = system.atom
    lat_laser = LaserField(2 * system.lattice.spacing, 0.0, cfg.lattice.detuning_gamma * atom.natural_linewidth)
    heat = feasibility_report(atom, lat_laser, system.binding, system.lattice.spacing, math.acos(COS_111)).heating_energy
    heat_hz = heat / H_PLANCK  # independent of I; nearest neighbours on a cube axis
    long_rows, tracked = [], []
    failures = []
    for p in pts:
        if p.error:
            failures.append({"intensity": p.intensity, "error": p.error})
        for r in p.resonances:
            long_rows.append([p.intensity, "resonance", r.e_r, r.gamma_prime, r.gamma_r_hz, r.valid, r is p.tracked, 1])
        for b in p.bound_states:
            long_rows.append([p.intensity, "bound", b.e_b, 0.0, 0.0, True, False, b.multiplicity])
        t = p.tracked
        eb = ";".join(f"{b.e_b:.10g}" for b in p.bound_states)
        tracked.append([p.intensity, t.e_r if t else float("nan"), t.gamma_prime if t else float("nan"),
                        t.gamma_r_hz if t else float("nan"), heat_hz, eb])
    meta = {"pair_hopping_hz": system.pair_hopping / H_PLANCK, "basis_size": len(system.basis),
            "gamma_heat_hz": f"{heat_hz:.6g} (order-of-magnitude heating linewidth, nearest neighbours)"}
    w.csv("sweep.csv", ["intensity_w_cm2", "kind", "e_prime", "gamma_prime", "gamma_hz", "valid", "tracked", "multiplicity"],
          long_rows, meta)
    w.csv("sweep_tracked.csv", ["intensity_w_cm2", "e_r", "gamma_r_dimensionless", "gamma_r_hz", "gamma_heat_hz", "e_b"], tracked, meta)
    w.manifest.failures.extend(failures)
    if pts and len(failures) == len(pts):
        raise ComputationError("every sweep point failed")


def run_wavefunction(cfg: RunConfig, w: Writer, threads: int):
    system = cfg.system()
    wf = cfg.wavefunction
    sites = tuple(tuple(s) for s in wf.incident)
    inc = unperturbed_state(system.basis, wf.kind, sites if wf.kind == "localized" else None)
    r = np.linspace(0, wf.r_max_plot, wf.r_points)
    summary = {"incident": inc.description, "incident_residual": inc.residual, "states": []}
    weight_rows = []
    classes = sorted({tuple(sorted(abs(int(x)) for x in s)) for s in system.basis.separations}, key=lambda k: (sum(x * x for x in k), k))
    prev = None
    for I in wf.intensities:
        try:
            e, src = resolve_energy(system, I, wf.energy, near=prev)
            if src == "resonance":
                prev = e
            st = solve_coefficients(inc, system, e, I)
        except Exception as exc:
            w.manifest.failures.append({"intensity": I, "error": f"{type(exc).__name__}: {exc}"})
            continue
        rep = entanglement_report(st)
        prof = psi_squared(st, system.wannier, r)
        cw = st.class_weights()
        cols = ["r_over_a", "psi2_a3_spherical", "radial_a"] + [f"psi2_a3_{k}" for k in prof.cuts]
        rows = [[x, a, b] + [prof.cuts[k][i] for k in prof.cuts] for i, (x, a, b) in enumerate(zip(r, prof.spherical, prof.radial))]
        w.csv(f"psi_I{I:.6g}.csv", cols, rows, {"intensity_w_cm2": I, "e_prime": e, "energy_source": src})
        weight_rows.append([I, e, src] + [cw.get(k, 0.0) for k in classes] + [rep.entropy, rep.adjusted_entropy, rep.schmidt_rank])
        summary["states"].append({
            "intensity_w_cm2": I, "e_prime": e, "energy_source": src, "residual": st.residual,
            "class_weights": {"".join(map(str, k)): v for k, v in cw.items()},
            "schmidt_spectrum": rep.schmidt_spectrum, "entropy": rep.entropy,
            "adjusted_entropy": rep.adjusted_entropy, "schmidt_rank": rep.schmidt_rank,
            "peaks_r_over_a": prof.peaks(),
        })
    w.csv("weights.csv", ["intensity_w_cm2", "e_prime", "energy_source"] + ["C2_" + "".join(map(str, k)) for k in classes]
          + ["entropy", "adjusted_entropy", "schmidt_rank"], weight_rows, {"incident": inc.description})
    w.json("wavefunction_summary.json", summary)
    if wf.intensities and not summary["states"]:
        raise ComputationError("no intensity could be solved")


def run_feasibility(cfg: RunConfig, w: Writer, threads: int):
    atom = cfg.species()
    f = cfg.feasibility
    spec = cfg.lattice_spec(atom)
    lam_l = f.lattice_wavelength or 2 * spec.spacing
    lattice_laser = LaserField(lam_l, 0.0, cfg.lattice.detuning_gamma * atom.natural_linewidth)
    binding = cfg.binding(atom)
    sep = f.separation_a * lam_l / 2
    rep = feasibility_report(atom, lattice_laser, binding, sep, math.acos(f.cos_theta), f.threshold, f.saturation)
    rows = [
        ["v_ab_hz", rep.v_ab / H_PLANCK],
        ["absorption_linewidth_hz", rep.absorption_linewidth / H_PLANCK],
        ["heating_energy_hz", rep.heating_energy / H_PLANCK],
        ["ratio_absorption", rep.ratio_absorption],
        ["ratio_heating", rep.ratio_heating],
        ["observable", rep.observable],
        ["kr", rep.kr],
        ["k_lattice_r", rep.k_lattice_r],
        ["saturation", rep.derived.saturation],
        ["rabi_frequency_rad_s", rep.derived.rabi_frequency],
        ["recoil_energy_hz", rep.derived.recoil_energy / H_PLANCK],
        ["lamb_dicke", rep.derived.lamb_dicke],
        ["polarizability_cm3", rep.derived.polarizability],
    ]
    w.csv("feasibility.csv", ["quantity", "value"], rows,
          {"separation_m": sep, "threshold": f.threshold, "warnings": " | ".join(rep.warnings) or "none"})


def run_validate_green(cfg: RunConfig, w: Writer, threads: int):
    system = cfg.system()
    from .green_oracle import watson_value

    rows = []
    for e, eta, k, b, o, err in oracle_table(system.engine):
        rows.append([e, eta, "".join(map(str, k)), b.real, b.imag, o.real, o.imag, err])
    g3 = system.engine.values([3.0], [(0, 0, 0)], 0.0)[0, 0].real
    rows.append([3.0, 0.0, "000", g3, 0.0, watson_value(), 0.0, abs(g3 - watson_value()) / watson_value()])
    w.csv("validate_green.csv", ["e_prime", "eta", "key", "bessel_re", "bessel_im", "oracle_re", "oracle_im", "rel_err"], rows,
          {"oracle": "zone quadrature (last row: closed-form Watson value)"})


def run_validate_all(cfg: RunConfig, w: Writer, threads: int):
    res = validate_all(cfg)
    rows = [[c.name, c.status, c.measured, c.tolerance, c.detail] for c in res]
    w.csv("validate_all.csv", ["check", "status", "measured", "tolerance", "detail"], rows)
    w.manifest.timings.update({f"check: {c.name}": round(c.seconds, 3) for c in res})
    for c in res:
        print(f"{c.status.upper():4s}  {c.name}  measured={c.measured:.3g} tol={c.tolerance:.3g}  {c.detail}")


PIPELINES = {
    "potential": run_potential,
    "dos": run_dos,
    "resonance-sweep": run_sweep,
    "wavefunction": run_wavefunction,
    "feasibility": run_feasibility,
    "validate-green": run_validate_green,
    "validate-all": run_validate_all,
}

FIGURE_STEPS = {"fig1": ("potential", "feasibility"), "fig2": ("resonance-sweep", "dos"), "fig3": ("wavefunction",)}


def run(subcommand: str, config, out=None, threads: int = 1) -> RunManifest:
    """Run one subcommand and write its outputs plus manifest.json into ``out``."""
    if subcommand == "figures":
        return _run_figures(out, threads)
    if subcommand not in PIPELINES:
        raise ValueError(f"unknown subcommand {subcommand!r}")
    cfg = load_config(config)
    out = Path(out or cfg.output.directory)
    manifest = RunManifest(subcommand, cfg.sha256(), __version__)
    writer = Writer(out, manifest, cfg.output.precision, _meta(cfg, subcommand))
    t0 = time.perf_counter()
    PIPELINES[subcommand](cfg, writer, threads)
    manifest.timings["total_s"] = round(time.perf_counter() - t0, 3)
    atomic_write(out / "manifest.json", json.dumps(manifest.to_dict(), indent=2) + "\n")
    return manifest


def _run_figures(out, threads):
    base = Path(out or "out")
    manifest = RunManifest("figures", "", __version__)
    for cfg in figure_presets():
        for step in FIGURE_STEPS[cfg.name]:
            sub = run(step, cfg, base / cfg.name / step, threads)
            for k, v in sub.outputs.items():
                manifest.outputs[f"{cfg.name}/{step}/{k}"] = v
            manifest.timings[f"{cfg.name}/{step}"] = sub.timings.get("total_s")
            manifest.failures.extend(sub.failures)
    manifest.config_sha256 = hashlib.sha256("".join(c.sha256() for c in figure_presets()).encode()).hexdigest()
    atomic_write(base / "manifest.json", json.dumps(manifest.to_dict(), indent=2) + "\n")
    return manifest


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="quasimol", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", default="default", help="YAML file or preset name (default, fig1, fig2, fig3)")
    ap.add_argument("--out", default=None, help="output directory (overrides output.directory)")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("config error: --threads must be >= 1", file=sys.stderr)
        return 1
    try:
        manifest = run(args.subcommand, args.config, args.out, args.threads)
    except ConfigError as exc:
        print("config error:", file=sys.stderr)
        for p in exc.problems:
            print(f"  {p}", file=sys.stderr)
        return 1
    except (ComputationError, CutoffError, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    for name in sorted(manifest.outputs):
        print(name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
