"""Laser-bound atom pairs on a simple-cubic optical lattice.

Modules:
    params        atomic / laser data and observability estimates
    potential     induced dipole-dipole interaction
    lattice       Wannier states, band parameters, pair basis, potential matrix
    green         two-atom lattice Green function (Bessel-integral route)
    spectral      bound states, resonances, density-of-states change
    wavefunction  scattered pair state, pair density, Schmidt analysis
    config / cli  YAML run configuration and the ``quasimol`` command
"""

__version__ = "0.1.0"
