"""Atomic and laser parameters, derived quantities and observability checks.

Storage follows SI conventions for user-facing fields (kg, m, rad/s, W/cm^2);
every derived quantity is returned in Gaussian-CGS (cm, g, erg, statC cm).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .constants import C_LIGHT, HBAR, intensity_to_cgs, kg_to_g, m_to_cm


class ResonanceError(ValueError):
    """Laser frequency sits on the atomic resonance; the dispersive formula breaks down."""


@dataclass(frozen=True)
class AtomSpecies:
    """Two-level description of the atomic transition addressed by the lasers.

    ``upper_degeneracy`` is 2J'+1 of the excited level. The dipole moment is
    the reduced matrix element obtained from the linewidth,
    ``Gamma = 4 omega^3 d^2 / (3 hbar c^3 (2J'+1))``, unless ``dipole_moment``
    (statC cm) is given explicitly.
    """

    name: str
    mass: float  # kg
    transition_wavelength: float  # m
    natural_linewidth: float  # rad/s
    upper_degeneracy: int = 1
    dipole_moment: Optional[float] = None  # statC cm

    def __post_init__(self):
        for attr in ("mass", "transition_wavelength", "natural_linewidth"):
            if not getattr(self, attr) > 0:
                raise ValueError(f"{attr} must be positive, got {getattr(self, attr)!r}")
        if self.upper_degeneracy < 1:
            raise ValueError("upper_degeneracy must be >= 1")
        if self.dipole_moment is not None and not self.dipole_moment > 0:
            raise ValueError("dipole_moment must be positive")

    @property
    def omega_a(self) -> float:
        return 2 * math.pi * C_LIGHT / m_to_cm(self.transition_wavelength)

    @property
    def k_a(self) -> float:
        return self.omega_a / C_LIGHT

    @property
    def mass_g(self) -> float:
        return kg_to_g(self.mass)

    @property
    def dipole(self) -> float:
        """Dipole moment in statC cm (override or linewidth-derived)."""
        if self.dipole_moment is not None:
            return self.dipole_moment
        d2 = 3 * HBAR * C_LIGHT**3 * self.natural_linewidth * self.upper_degeneracy / (4 * self.omega_a**3)
        return math.sqrt(d2)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out.pop("name")
        if out["dipole_moment"] is None:
            out.pop("dipole_moment")
        return out


@dataclass(frozen=True)
class LaserField:
    """Circularly polarized plane wave.

    ``wavelength`` fixes the wavenumber entering the interaction; ``detuning``
    (omega - omega_A, rad/s) fixes the polarizability. The two are kept
    independent so that long-wavelength geometries can be explored at a fixed
    detuning; :meth:`from_detuning` builds the physically consistent pair.
    """

    wavelength: float  # m
    intensity: float  # W/cm^2
    detuning: float  # rad/s
    direction: tuple = (1 / math.sqrt(3), 1 / math.sqrt(3), 1 / math.sqrt(3))
    polarization: str = "circular"

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        if self.intensity < 0:
            raise ValueError("intensity must be non-negative")
        direction = tuple(float(x) for x in self.direction)
        if len(direction) != 3 or abs(math.hypot(*direction) - 1.0) > 1e-12:
            raise ValueError(f"direction must be a unit 3-vector, got {self.direction!r}")
        object.__setattr__(self, "direction", direction)
        if self.polarization != "circular":
            raise ValueError("only circular polarization is supported")

    @classmethod
    def from_detuning(cls, atom: AtomSpecies, detuning: float, intensity: float, direction=None):
        omega = atom.omega_a + detuning
        wavelength = 2 * math.pi * C_LIGHT / omega / 1e2
        kwargs = {} if direction is None else {"direction": tuple(direction)}
        return cls(wavelength=wavelength, intensity=intensity, detuning=detuning, **kwargs)

    @property
    def k(self) -> float:
        """Wavenumber in 1/cm."""
        return 2 * math.pi / m_to_cm(self.wavelength)

    def omega(self, atom: AtomSpecies) -> float:
        return atom.omega_a + self.detuning

    @property
    def intensity_cgs(self) -> float:
        return intensity_to_cgs(self.intensity)

    def with_intensity(self, intensity: float) -> "LaserField":
        return dataclasses.replace(self, intensity=intensity)


@dataclass(frozen=True)
class DerivedParams:
    polarizability: float  # cm^3
    rabi_frequency: float  # rad/s
    saturation: float
    recoil_energy: float  # erg
    lamb_dicke: float
    heating_rate: float  # 1/s
    absorption_linewidth: float  # erg, hbar Gamma S


def polarizability(atom: AtomSpecies, laser_omega: float, rtol: float = 1e-12) -> float:
    """Dynamic polarizability ``2 w_A d^2 / (hbar (w_A^2 - w^2))`` in cm^3."""
    wa = atom.omega_a
    if abs(laser_omega - wa) <= rtol * wa:
        raise ResonanceError("laser is resonant with the atomic transition")
    return 2 * wa * atom.dipole**2 / (HBAR * (wa**2 - laser_omega**2))


def saturation(rabi, detuning, linewidth):
    if np.any(np.asarray(linewidth) <= 0):
        raise ValueError("linewidth must be positive")
    return 2 * np.square(rabi) / (4 * np.square(detuning) + np.square(linewidth))


def rabi_frequency(atom: AtomSpecies, intensity: float) -> float:
    """Rabi frequency d E0 / hbar for a field of the given intensity (W/cm^2)."""
    e0 = math.sqrt(8 * math.pi * intensity_to_cgs(intensity) / C_LIGHT)
    return atom.dipole * e0 / HBAR


def recoil_energy(k, mass):
    """``hbar^2 k^2 / 2m`` in erg for k in 1/cm and mass in g."""
    if np.any(np.asarray(k) <= 0) or np.any(np.asarray(mass) <= 0):
        raise ValueError("k and mass must be positive")
    return HBAR**2 * np.square(k) / (2 * mass)


@dataclass(frozen=True)
class FeasibilityReport:
    v_ab: float  # erg, signed
    absorption_linewidth: float  # erg
    heating_energy: float  # erg
    ratio_absorption: float
    ratio_heating: float
    threshold: float
    observable: bool
    kr: float
    k_lattice_r: float
    derived: DerivedParams
    warnings: tuple = field(default_factory=tuple)


def feasibility_report(
    atom: AtomSpecies,
    lattice_laser: LaserField,
    binding_laser: LaserField,
    separation: float,
    angle: float,
    threshold: float = 10.0,
    saturation_override: Optional[float] = None,
) -> FeasibilityReport:
    """Compare the binding depth with off-resonant absorption and heating.

    ``separation`` is in m and ``angle`` is the angle between the interatomic
    axis and the binding-laser wavevector. The order-one constants of the
    heating estimate are set to one: the ratios are order-of-magnitude figures.
    """
    from .potential import f_theta

    if not separation > 0:
        raise ValueError("separation must be positive")
    r = m_to_cm(separation)
    k = binding_laser.k
    kr = k * r
    cos_t = math.cos(angle)
    omega = binding_laser.omega(atom)
    alpha = polarizability(atom, omega)
    rabi = rabi_frequency(atom, binding_laser.intensity)
    gamma = atom.natural_linewidth
    s = float(saturation(rabi, binding_laser.detuning, gamma)) if saturation_override is None else saturation_override
    f = float(f_theta(kr, cos_t))
    v = -2 * math.pi * k**3 * alpha**2 * binding_laser.intensity_cgs / C_LIGHT * f
    e_r = float(recoil_energy(k, atom.mass_g))
    f_ld = kr**2
    absorption = HBAR * gamma * s
    # hbar G_Ray/|V| ~ f_LD/|F|  and  G_heat ~ E_R G_Ray/|V|
    heating = e_r * f_ld / abs(f)
    ratio_a = abs(v) / absorption if absorption > 0 else 0.0
    ratio_b = abs(v) / heating
    warnings = []
    if kr >= 1:
        warnings.append("kr >= 1: outside the near zone, estimates are order-of-magnitude only")
    if f_ld > 0.1:
        warnings.append("(kr)^2 > 0.1: Lamb-Dicke factor not small")
    if s > 0.1:
        warnings.append(f"saturation S = {s:.3g} is not << 1")
    derived = DerivedParams(
        polarizability=alpha,
        rabi_frequency=rabi,
        saturation=s,
        recoil_energy=e_r,
        lamb_dicke=f_ld,
        heating_rate=heating / HBAR,
        absorption_linewidth=absorption,
    )
    return FeasibilityReport(
        v_ab=v,
        absorption_linewidth=absorption,
        heating_energy=heating,
        ratio_absorption=ratio_a,
        ratio_heating=ratio_b,
        threshold=threshold,
        observable=bool(ratio_a > threshold and ratio_b > threshold),
        kr=kr,
        k_lattice_r=lattice_laser.k * r,
        derived=derived,
        warnings=tuple(warnings),
    )


def load_species(path=None) -> dict:
    """Read a species registry (YAML mapping name -> AtomSpecies fields)."""
    if path is None:
        text = resources.files("quasimol").joinpath("data/species.yaml").read_text()
    else:
        text = Path(path).read_text()
    raw = yaml.safe_load(text) or {}
    out = {}
    for name, entry in raw.items():
        entry = dict(entry)
        for key in ("mass", "transition_wavelength", "natural_linewidth", "dipole_moment"):
            if key in entry:
                entry[key] = float(entry[key])
        out[name] = AtomSpecies(name=name, **entry)
    return out


def get_species(name: str, path=None) -> AtomSpecies:
    registry = load_species(path)
    try:
        return registry[name]
    except KeyError:
        raise KeyError(f"unknown species {name!r}; known: {sorted(registry)}") from None
