"""Laser-induced dipole-dipole interaction between two ground-state atoms.

For a circularly polarized plane wave of wavenumber k and intensity I the
retarded interaction of two atoms of polarizability alpha at separation r is

    V_AB = -(2 pi k^3 alpha^2 I / c) F_theta(kr)

with theta the angle between the interatomic axis and the wavevector. All
quantities are Gaussian-CGS (cm, erg, erg s^-1 cm^-2); the cutoff is in cm too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import C_LIGHT

COS_111 = 1 / math.sqrt(3)  # atoms along a cube axis, laser along (1,1,1)
COS_110 = math.sqrt(2 / 3)  # atoms along a face diagonal such as (0,1,1)
DEFAULT_CUTOFF = 1e-5  # cm (100 nm)


class CutoffError(ValueError):
    """Separation below r_c, where short-range physics dominates."""


@dataclass(frozen=True)
class PotentialContext:
    k: float  # 1/cm
    alpha: float  # cm^3
    intensity: float  # erg s^-1 cm^-2
    laser_direction: tuple = (COS_111, COS_111, COS_111)
    cutoff: float = DEFAULT_CUTOFF

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("k must be positive")
        if not self.cutoff > 0:
            raise ValueError("cutoff must be positive")
        if self.intensity < 0:
            raise ValueError("intensity must be non-negative")
        d = tuple(float(x) for x in self.laser_direction)
        if len(d) != 3 or abs(math.hypot(*d) - 1.0) > 1e-12:
            raise ValueError("laser_direction must be a unit 3-vector")
        object.__setattr__(self, "laser_direction", d)

    @property
    def prefactor(self) -> float:
        """2 pi alpha^2 I / c, the energy scale (times a length^-3)."""
        return 2 * math.pi * self.alpha**2 * self.intensity / C_LIGHT

    def with_intensity(self, intensity: float) -> "PotentialContext":
        return PotentialContext(self.k, self.alpha, intensity, self.laser_direction, self.cutoff)


@dataclass(frozen=True)
class AngularGeometry:
    r: float  # cm
    cos_theta: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("r must be positive")
        if abs(self.cos_theta) > 1 + 1e-15:
            raise ValueError("|cos_theta| must not exceed 1")

    @classmethod
    def from_vector(cls, vec, laser_direction) -> "AngularGeometry":
        vec = np.asarray(vec, dtype=float)
        r = float(np.linalg.norm(vec))
        if r == 0:
            raise ValueError("zero separation vector")
        ct = float(np.dot(vec, laser_direction) / r)
        return cls(r, max(-1.0, min(1.0, ct)))


def f_theta(kr, cos_theta):
    """Angular/radial shape function F_theta(kr); vectorized."""
    kr = np.asarray(kr, dtype=float)
    ct = np.asarray(cos_theta, dtype=float)
    if np.any(kr <= 0):
        raise ValueError("kr must be positive (F is singular at kr = 0)")
    c2 = ct * ct
    bracket = (np.cos(kr) + kr * np.sin(kr)) * (1 - 3 * c2) / kr**3 + (1 + c2) * np.cos(kr) / kr
    return np.cos(kr * ct) * bracket


def _check_cutoff(ctx: PotentialContext, r):
    if np.any(np.asarray(r) < ctx.cutoff):
        raise CutoffError(f"separation below cutoff r_c = {ctx.cutoff:g} cm")


def v_ab(ctx: PotentialContext, geom):
    """V_AB in erg. ``geom`` is an AngularGeometry or an (r, cos_theta) pair of arrays."""
    if isinstance(geom, AngularGeometry):
        r, ct = geom.r, geom.cos_theta
    else:
        r, ct = geom
    _check_cutoff(ctx, r)
    k = ctx.k
    return -(2 * math.pi * k**3 * ctx.alpha**2 * ctx.intensity / C_LIGHT) * f_theta(k * np.asarray(r, float), ct)


def v_axis_111(ctx: PotentialContext, r):
    """Closed form for atoms on a cube axis with the laser along (1,1,1)/sqrt(3)."""
    _check_cutoff(ctx, r)
    r = np.asarray(r, dtype=float)
    k = ctx.k
    return -(8 * math.pi * ctx.alpha**2 * ctx.intensity * k**2 / (3 * C_LIGHT)) * np.cos(k * r / math.sqrt(3)) * np.cos(k * r) / r


def v_axis_110(ctx: PotentialContext, r):
    """Closed form for atoms on a face diagonal with the laser along (1,1,1)/sqrt(3).

    The leading bracket term is -(5/3) k^2 cos(kr)/r. A widely quoted printed
    version reads "-(5/3) cos(kr)" without the k^2/r factor, which has the
    wrong dimensions; the form here follows from F_theta at cos^2 = 2/3.
    """
    _check_cutoff(ctx, r)
    r = np.asarray(r, dtype=float)
    k = ctx.k
    kr = k * r
    bracket = -(5 / 3) * k**2 * np.cos(kr) / r + k * np.sin(kr) / r**2 + np.cos(kr) / r**3
    return ctx.prefactor * np.cos(math.sqrt(2) * kr / math.sqrt(3)) * bracket


def near_zone_v(ctx: PotentialContext, r, cos_theta):
    """Leading small-kr form, keeping both the 1/r^3 and the 1/r terms."""
    r = np.asarray(r, dtype=float)
    if np.any(ctx.k * r >= 0.1):
        raise ValueError("near-zone expansion requires kr < 0.1")
    _check_cutoff(ctx, r)
    c2 = np.asarray(cos_theta, dtype=float) ** 2
    return -ctx.prefactor * ((1 - 3 * c2) / r**3 + (1 + c2) * ctx.k**2 / r)
