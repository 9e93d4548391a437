"""A two-atom system on the lattice: basis, band parameters, potential and
Green engine bundled together so solvers can vary only energy and intensity."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .green import GreenEngine, QuadratureSettings
from .lattice import (
    BandParams,
    LatticeSpec,
    PairBasis,
    PotentialMatrix,
    WannierFunction,
    build_pair_basis,
    harmonic_wannier,
    potential_matrix,
)
from .params import AtomSpecies, LaserField, polarizability
from .potential import DEFAULT_CUTOFF, PotentialContext


@dataclass
class PairSystem:
    atom: AtomSpecies
    binding: LaserField
    lattice: LatticeSpec
    band: BandParams
    basis: PairBasis
    engine: GreenEngine = field(default_factory=GreenEngine)
    cutoff: float = DEFAULT_CUTOFF  # cm
    smear: bool = False
    _unit: Optional[PotentialMatrix] = field(default=None, init=False, repr=False)

    @classmethod
    def build(
        cls,
        atom: AtomSpecies,
        binding: LaserField,
        lattice: LatticeSpec,
        band: BandParams,
        r_max_a: float,
        statistics: str = "boson",
        settings: Optional[QuadratureSettings] = None,
        engine: Optional[GreenEngine] = None,
        cutoff: float = DEFAULT_CUTOFF,
        smear: bool = False,
    ) -> "PairSystem":
        basis = build_pair_basis(lattice, r_max_a * lattice.spacing * (1 + 1e-12), statistics)
        engine = engine or GreenEngine(settings)
        return cls(atom, binding, lattice, band, basis, engine, cutoff, smear)

    @property
    def pair_hopping(self) -> float:
        return self.band.pair_hopping

    @property
    def wannier(self) -> WannierFunction:
        return harmonic_wannier(self.lattice)

    def context(self, intensity: float) -> PotentialContext:
        """Potential context at ``intensity`` (W/cm^2)."""
        alpha = polarizability(self.atom, self.binding.omega(self.atom))
        return PotentialContext(
            k=self.binding.k,
            alpha=alpha,
            intensity=intensity * 1e7,
            laser_direction=self.binding.direction,
            cutoff=self.cutoff,
        )

    def _unit_matrix(self) -> PotentialMatrix:
        if self._unit is None:
            wf = self.wannier if self.smear else None
            self._unit = potential_matrix(self.basis, self.context(1.0), smear=self.smear, wannier=wf)
        return self._unit

    def potential(self, intensity: float) -> PotentialMatrix:
        """V_AB is linear in I, so one unit-intensity evaluation serves every I."""
        u = self._unit_matrix()
        off = None if u.offdiag is None else u.offdiag * intensity
        return PotentialMatrix(
            values=u.values * intensity,
            point_values=u.point_values * intensity,
            smeared=u.smeared,
            offdiag=off,
            intensity=intensity * 1e7,
        )

    def v(self, intensity: float) -> np.ndarray:
        """Diagonal potential in units of lambda_nm(1)."""
        return self._unit_matrix().values * intensity / self.pair_hopping

    def green(self, e_primes, eta: float = 0.0) -> np.ndarray:
        return self.engine.matrices(self.basis, np.atleast_1d(e_primes), eta)

    def with_basis(self, r_max_a: float) -> "PairSystem":
        """Same physics on a different cluster, sharing the Green cache."""
        return PairSystem.build(
            self.atom, self.binding, self.lattice, self.band, r_max_a,
            self.basis.statistics, engine=self.engine, cutoff=self.cutoff, smear=self.smear,
        )

    def with_settings(self, settings: QuadratureSettings) -> "PairSystem":
        return PairSystem(self.atom, self.binding, self.lattice, self.band, self.basis,
                          GreenEngine(settings), self.cutoff, self.smear)

    def r_max_a(self) -> float:
        return float(math.sqrt(np.max(np.sum(self.basis.separations**2, axis=1))))
