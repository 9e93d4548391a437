import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quasimol.constants import BOHR, E_CHARGE, H_PLANCK
from quasimol.params import (
    AtomSpecies,
    LaserField,
    ResonanceError,
    feasibility_report,
    get_species,
    polarizability,
    rabi_frequency,
    recoil_energy,
    saturation,
)

LI = get_species("Li-7")


def test_li_dipole_and_polarizability():
    # reduced dipole from the 5.9 MHz linewidth with 2J'+1 = 4
    assert LI.dipole / (E_CHARGE * BOHR) == pytest.approx(4.70, abs=0.01)
    laser = LaserField.from_detuning(LI, 300 * LI.natural_linewidth, 1e-3)
    alpha = polarizability(LI, laser.omega(LI))
    assert alpha == pytest.approx(-1.2167e-17, rel=1e-3)  # blue detuning: alpha < 0


def test_on_resonance_raises():
    with pytest.raises(ResonanceError):
        polarizability(LI, LI.omega_a)


@given(st.floats(1e-3, 1e3), st.floats(1e6, 1e12), st.floats(1e5, 1e9), st.floats(1e-3, 1e3))
def test_saturation_scale_invariant(rabi, delta, gamma, s):
    a = saturation(rabi, delta, gamma)
    b = saturation(s * rabi, s * delta, s * gamma)
    assert b == pytest.approx(a, rel=1e-12)


@given(st.floats(1e2, 1e7), st.floats(1e-27, 1e-21), st.floats(1.01, 10))
def test_recoil_quadratic_in_k(k, m, s):
    assert recoil_energy(s * k, m) == pytest.approx(s**2 * recoil_energy(k, m), rel=1e-12)


def test_recoil_rejects_nonpositive():
    with pytest.raises(ValueError):
        recoil_energy(0.0, 1.0)


def test_rabi_scales_as_sqrt_intensity():
    assert rabi_frequency(LI, 4.0) == pytest.approx(2 * rabi_frequency(LI, 1.0), rel=1e-14)


def test_laser_direction_must_be_unit():
    with pytest.raises(ValueError):
        LaserField(1e-6, 1.0, 1e9, direction=(1.0, 1.0, 0.0))
    with pytest.raises(ValueError):
        LaserField(1e-6, -1.0, 1e9)


def test_species_validation():
    with pytest.raises(ValueError):
        AtomSpecies("x", -1.0, 1e-6, 1e7)
    with pytest.raises(KeyError):
        get_species("Unobtainium-1")


def _li_feasibility(lattice_wavelength, saturation_override=1e-4):
    lattice = LaserField(lattice_wavelength, 0.0, 1e4 * LI.natural_linewidth)
    binding = LaserField.from_detuning(LI, 300 * LI.natural_linewidth, 5.0)
    return feasibility_report(LI, lattice, binding, lattice_wavelength / 2, math.acos(1 / math.sqrt(3)),
                              saturation_override=saturation_override)


def test_absorption_ratio_independent_of_intensity():
    lattice = LaserField(1e-7, 0.0, 1e4 * LI.natural_linewidth)
    out = []
    for inten in (0.5, 5.0, 50.0):
        b = LaserField.from_detuning(LI, 300 * LI.natural_linewidth, inten)
        out.append(feasibility_report(LI, lattice, b, 5e-8, math.acos(1 / math.sqrt(3))))
    ra = [r.ratio_absorption for r in out]
    rb = [r.ratio_heating for r in out]
    assert ra[1] == pytest.approx(ra[0], rel=1e-9) and ra[2] == pytest.approx(ra[0], rel=1e-9)
    assert rb[1] / rb[0] == pytest.approx(10, rel=1e-9)


def test_near_uv_lattice_observable_but_optical_lattice_not():
    near_uv = _li_feasibility(1e-7)
    optical = _li_feasibility(670e-9)
    assert near_uv.observable and near_uv.ratio_absorption > 10 and near_uv.ratio_heating > 10
    assert not optical.observable
    assert optical.k_lattice_r == pytest.approx(math.pi)


def test_li_recoil_scale():
    # E_R of Li at 671 nm is ~ 74 kHz
    e_r = recoil_energy(LI.k_a, LI.mass_g) / H_PLANCK
    assert 60e3 < e_r < 90e3
    assert np.isfinite(e_r)
