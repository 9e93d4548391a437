"""Physical constants in Gaussian-CGS units plus SI <-> CGS helpers.

The interaction formulas are written in Gaussian units (polarizability is a
volume, intensity is an energy flux), so everything internal is CGS. User-facing
inputs are SI-ish: wavelengths in m, intensities in W/cm^2, frequencies in Hz.
"""

from scipy import constants as _si

C_LIGHT = _si.c * 1e2  # cm/s
HBAR = _si.hbar * 1e7  # erg s
H_PLANCK = _si.h * 1e7  # erg s
AMU = _si.atomic_mass * 1e3  # g
BOHR = _si.physical_constants["Bohr radius"][0] * 1e2  # cm
E_CHARGE = 4.803204712570263e-10  # statC
DEBYE = 1e-18  # statC cm

W_PER_CM2_TO_CGS = 1e7  # 1 W/cm^2 = 1e7 erg s^-1 cm^-2


def m_to_cm(x):
    return x * 1e2


def kg_to_g(x):
    return x * 1e3


def intensity_to_cgs(w_per_cm2):
    """W/cm^2 -> erg s^-1 cm^-2."""
    return w_per_cm2 * W_PER_CM2_TO_CGS


def erg_to_hz(energy):
    """Energy (erg) expressed as an ordinary frequency E/h in Hz."""
    return energy / H_PLANCK


def hz_to_erg(freq):
    return freq * H_PLANCK
