"""Run configuration: YAML blocks mapped onto dataclasses, with validation
errors that name the offending field path."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Optional

import yaml

from .green import QuadratureSettings
from .lattice import BandParams, LatticeSpec, band_params
from .model import PairSystem
from .params import AtomSpecies, LaserField, get_species

PRESETS = ("default", "fig1", "fig2", "fig3", "figures")


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class AtomBlock:
    species: str = "Li-7"
    registry: Optional[str] = None  # path to an alternative species file


@dataclass
class BindingBlock:
    detuning_gamma: float = 300.0  # delta / Gamma
    intensity: float = 0.48e-3  # W/cm^2
    intensities: list = field(default_factory=list)  # sweep grid, W/cm^2
    direction: list = field(default_factory=lambda: [1.0, 1.0, 1.0])  # normalized on use
    wavelength: Optional[float] = None  # m; default: from the detuning


@dataclass
class LatticeBlock:
    detuning_gamma: float = 1e4
    saturation: float = 7.6e-5
    well_depth_hz: Optional[float] = None  # overrides detuning/saturation for V_0
    lambda0_hz: Optional[float] = None  # inject band parameters instead of computing them
    lambda1_hz: Optional[float] = None
    r_max: float = 2.0  # units of a
    statistics: str = "boson"
    smear: bool = False
    cutoff_nm: float = 100.0


@dataclass
class NumericsBlock:
    etas: list = field(default_factory=lambda: [1e-2, 5e-3, 2.5e-3])
    tol: float = 1e-8
    samples_per_unit: int = 400
    derivative_step: float = 1e-4
    dos_points: int = 1201
    dos_range: list = field(default_factory=lambda: [-2.999, 2.999])
    max_eta_warning: float = 0.05


@dataclass
class PotentialBlock:
    kr_min: float = 0.05
    kr_max: float = 20.0
    points: int = 1000
    cos_thetas: list = field(default_factory=lambda: [0.0, math.sqrt(2 / 3), math.sqrt(1 / 3)])


@dataclass
class WavefunctionBlock:
    incident: list = field(default_factory=lambda: [[0, 0, 0], [1, 1, 1]])
    kind: str = "localized"
    intensities: list = field(default_factory=lambda: [0.0, 0.48e-3, 5.0])
    energy: object = "resonance"  # "resonance", "band_center" or a number (E')
    r_max_plot: float = 3.0
    r_points: int = 3001


@dataclass
class FeasibilityBlock:
    separation_a: float = 1.0  # units of the lattice spacing
    cos_theta: float = 1 / math.sqrt(3)
    threshold: float = 10.0
    saturation: Optional[float] = None  # overrides the intensity-derived S
    lattice_wavelength: Optional[float] = None  # m; a short (near-UV) lattice gives k << k_L


@dataclass
class OutputBlock:
    directory: str = "out"
    precision: int = 17


@dataclass
class RunConfig:
    atom: AtomBlock = field(default_factory=AtomBlock)
    binding_laser: BindingBlock = field(default_factory=BindingBlock)
    lattice: LatticeBlock = field(default_factory=LatticeBlock)
    numerics: NumericsBlock = field(default_factory=NumericsBlock)
    output: OutputBlock = field(default_factory=OutputBlock)
    potential: PotentialBlock = field(default_factory=PotentialBlock)
    wavefunction: WavefunctionBlock = field(default_factory=WavefunctionBlock)
    feasibility: FeasibilityBlock = field(default_factory=FeasibilityBlock)
    name: str = "default"

    # ---- (de)serialization ------------------------------------------------------------
    REQUIRED = ("atom", "binding_laser", "lattice", "numerics", "output")

    @classmethod
    def from_dict(cls, data) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError(["<root>: expected a mapping"])
        problems = [f"{b}: missing block" for b in cls.REQUIRED if b not in data]
        blocks = {}
        for f in fields(cls):
            if f.name == "name":
                continue
            raw = data.get(f.name, {})
            if raw is None:
                raw = {}
            if not isinstance(raw, dict):
                problems.append(f"{f.name}: expected a mapping")
                continue
            btype = f.default_factory().__class__
            known = {bf.name for bf in fields(btype)}
            for key in raw:
                if key not in known:
                    problems.append(f"{f.name}.{key}: unknown field")
            blocks[f.name] = btype(**{k: v for k, v in raw.items() if k in known})
        unknown_top = set(data) - {f.name for f in fields(cls)}
        problems += [f"{k}: unknown block" for k in sorted(unknown_top)]
        if problems:
            raise ConfigError(problems)
        cfg = cls(**blocks, name=str(data.get("name", "custom")))
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def sha256(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    # ---- validation -------------------------------------------------------------------
    def validate(self):
        p = []

        def pos(path, x, allow_zero=False):
            try:
                ok = float(x) >= 0 if allow_zero else float(x) > 0
            except (TypeError, ValueError):
                ok = False
            if not ok:
                p.append(f"{path}: must be {'non-negative' if allow_zero else 'positive'} (got {x!r})")

        b, l, n = self.binding_laser, self.lattice, self.numerics
        pos("binding_laser.intensity", b.intensity, allow_zero=True)
        if b.detuning_gamma == 0:
            p.append("binding_laser.detuning_gamma: must be non-zero")
        grid = list(b.intensities)
        if any(not isinstance(x, (int, float)) or x < 0 for x in grid):
            p.append("binding_laser.intensities: entries must be non-negative numbers")
        elif any(y <= x for x, y in zip(grid, grid[1:])):
            p.append("binding_laser.intensities: must be strictly ascending")
        if len(b.direction) != 3 or not any(b.direction):
            p.append("binding_laser.direction: must be a non-zero 3-vector")
        pos("lattice.detuning_gamma", l.detuning_gamma)
        pos("lattice.saturation", l.saturation)
        pos("lattice.r_max", l.r_max)
        pos("lattice.cutoff_nm", l.cutoff_nm)
        if l.well_depth_hz is not None:
            pos("lattice.well_depth_hz", l.well_depth_hz)
        if (l.lambda0_hz is None) != (l.lambda1_hz is None):
            p.append("lattice.lambda0_hz/lambda1_hz: give both or neither")
        if l.lambda1_hz is not None and l.lambda1_hz == 0:
            p.append("lattice.lambda1_hz: must be non-zero")
        if l.statistics not in ("boson", "fermion"):
            p.append("lattice.statistics: must be 'boson' or 'fermion'")
        if not n.etas or any(not isinstance(e, (int, float)) or e <= 0 for e in n.etas):
            p.append("numerics.etas: must be a non-empty list of positive numbers")
        pos("numerics.tol", n.tol)
        pos("numerics.samples_per_unit", n.samples_per_unit)
        pos("numerics.derivative_step", n.derivative_step)
        pos("numerics.dos_points", n.dos_points)
        if len(n.dos_range) != 2 or not (-3 < n.dos_range[0] < n.dos_range[1] < 3):
            p.append("numerics.dos_range: must be [lo, hi] with -3 < lo < hi < 3")
        pos("output.precision", self.output.precision)
        w = self.wavefunction
        if w.kind not in ("localized", "band_bottom"):
            p.append("wavefunction.kind: must be 'localized' or 'band_bottom'")
        if not (isinstance(w.energy, (int, float)) or w.energy in ("resonance", "band_center")):
            p.append("wavefunction.energy: 'resonance', 'band_center' or a number")
        if any(y < x for x, y in zip(w.intensities, w.intensities[1:])):
            p.append("wavefunction.intensities: must be ascending")
        pt = self.potential
        pos("potential.kr_min", pt.kr_min)
        if pt.kr_max <= pt.kr_min:
            p.append("potential.kr_max: must exceed kr_min")
        pos("feasibility.separation_a", self.feasibility.separation_a)
        if p:
            raise ConfigError(p)

    # ---- physics objects ---------------------------------------------------------------
    def species(self) -> AtomSpecies:
        return get_species(self.atom.species, self.atom.registry)

    def direction(self) -> tuple:
        d = [float(x) for x in self.binding_laser.direction]
        n = math.sqrt(sum(x * x for x in d))
        return tuple(x / n for x in d)

    def binding(self, atom: Optional[AtomSpecies] = None, intensity: Optional[float] = None) -> LaserField:
        atom = atom or self.species()
        b = self.binding_laser
        det = b.detuning_gamma * atom.natural_linewidth
        inten = b.intensity if intensity is None else intensity
        if b.wavelength is not None:
            return LaserField(b.wavelength, inten, det, self.direction())
        return LaserField.from_detuning(atom, det, inten, self.direction())

    def lattice_spec(self, atom: Optional[AtomSpecies] = None) -> LatticeSpec:
        atom = atom or self.species()
        l = self.lattice
        spec = LatticeSpec.from_laser(atom, l.detuning_gamma * atom.natural_linewidth, l.saturation)
        if l.well_depth_hz is not None:
            from .constants import H_PLANCK

            spec = dataclasses.replace(spec, well_depth=l.well_depth_hz * H_PLANCK)
        return spec

    def band(self, spec: Optional[LatticeSpec] = None) -> tuple:
        """(BandParams, source) with source 'config' or 'computed'."""
        l = self.lattice
        if l.lambda0_hz is not None:
            return BandParams.from_hz(l.lambda0_hz, l.lambda1_hz), "config"
        return band_params(spec or self.lattice_spec()), "computed"

    def settings(self, etas=None) -> QuadratureSettings:
        return QuadratureSettings(tol=self.numerics.tol, etas=tuple(etas or self.numerics.etas))

    def system(self, r_max: Optional[float] = None, etas=None, engine=None) -> PairSystem:
        atom = self.species()
        spec = self.lattice_spec(atom)
        band, _ = self.band(spec)
        return PairSystem.build(
            atom, self.binding(atom), spec, band,
            r_max if r_max is not None else self.lattice.r_max,
            self.lattice.statistics, settings=self.settings(etas), engine=engine,
            cutoff=self.lattice.cutoff_nm * 1e-7, smear=self.lattice.smear,
        )


def _preset_text(name: str) -> str:
    return resources.files("quasimol").joinpath(f"data/presets/{name}.yaml").read_text()


def load_config(source) -> RunConfig:
    """Config from a preset name, a YAML path or a dict."""
    if isinstance(source, RunConfig):
        return source
    if isinstance(source, dict):
        return RunConfig.from_dict(source)
    text = None
    s = str(source)
    if s in PRESETS and s != "figures":
        text = _preset_text(s)
    else:
        path = Path(s)
        if not path.exists():
            raise ConfigError([f"<file>: {s} not found"])
        text = path.read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"<yaml>: {exc}"]) from None
    if data is None:
        data = {}
    return RunConfig.from_dict(data)


def figure_presets() -> list:
    """The three figure configurations bundled by the 'figures' preset."""
    return [load_config(n) for n in ("fig1", "fig2", "fig3")]
