import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from quasimol.lattice import PairBasis
from quasimol.model import PairSystem
from quasimol.wavefunction import (
    IncidentState,
    NearResonanceError,
    SiteOutsideBasisError,
    entanglement_report,
    psi_squared,
    resolve_energy,
    schmidt,
    solve_coefficients,
    two_site_array,
    unperturbed_state,
)

SITES = ((0, 0, 0), (1, 1, 1))
I_REF = 4.8e-4


@pytest.fixture(scope="module")
def incident(system):
    return unperturbed_state(system.basis, "localized", SITES)


def test_zero_intensity_returns_incident(system, incident):
    st_ = solve_coefficients(incident, system, 0.3, 0.0)
    assert np.array_equal(st_.coefficients, incident.coefficients)
    assert np.count_nonzero(st_.coefficients) == 1
    rep = entanglement_report(st_)
    assert rep.entropy == pytest.approx(math.log(2), abs=1e-12)
    assert rep.schmidt_rank == 2
    assert abs(rep.adjusted_entropy) < 1e-12


def test_resonant_solve_residual(system, incident):
    e, src = resolve_energy(system, I_REF)
    assert src == "resonance"
    st_ = solve_coefficients(incident, system, e, I_REF)
    assert st_.residual < 1e-10
    w = st_.class_weights()
    assert sum(w.values()) == pytest.approx(1.0)
    for cls in ((0, 0, 1), (0, 1, 1), (0, 0, 2)):
        assert w[cls] > 0
    rep = entanglement_report(st_)
    assert rep.entropy > math.log(2)


def test_coefficients_continuous_in_intensity(system, incident):
    a = solve_coefficients(incident, system, 1.2, I_REF).coefficients
    b = solve_coefficients(incident, system, 1.2, I_REF * (1 + 1e-6)).coefficients
    assert np.linalg.norm(a - b) < 1e-4 * np.linalg.norm(a)


def test_near_resonance_guard(system, incident):
    with pytest.raises(NearResonanceError):
        solve_coefficients(incident, system, 1.2, I_REF, d_threshold=1e6)


def test_site_outside_basis(system):
    with pytest.raises(SiteOutsideBasisError):
        unperturbed_state(system.basis, "localized", ((0, 0, 0), (3, 0, 0)))


def test_incident_must_be_normalized():
    with pytest.raises(ValueError):
        IncidentState(np.array([1.0, 1.0]), "x")


def test_band_bottom_state(system):
    inc = unperturbed_state(system.basis, "band_bottom")
    assert inc.residual < 1e-12
    assert inc.energy == pytest.approx(-1.9106, abs=1e-3)
    assert np.linalg.norm(inc.coefficients) == pytest.approx(1.0)


def test_radial_profile_integrates_to_norm(system, incident):
    st_ = solve_coefficients(incident, system, 1.2, I_REF)
    r = np.linspace(0, 4, 8001)
    prof = psi_squared(st_, system.wannier, r)
    assert np.trapezoid(prof.radial, r) == pytest.approx(st_.norm**2, rel=1e-6)
    assert set(prof.cuts) == {"100", "010", "001", "110", "111"}


def test_cuts_peak_on_lattice_vectors(system, incident):
    st_ = solve_coefficients(incident, system, 1.2, I_REF)
    r = np.linspace(0, 3, 3001)
    prof = psi_squared(st_, system.wannier, r)
    for name, target in (("100", 1.0), ("110", math.sqrt(2)), ("111", math.sqrt(3))):
        y = prof.cuts[name]
        i = np.argmin(np.abs(r - target))
        assert y[i] == pytest.approx(y[i - 20 : i + 21].max())


def test_two_site_array_symmetry(system, incident):
    st_ = solve_coefficients(incident, system, 1.2, I_REF)
    arr, _ = two_site_array(st_)
    assert np.allclose(arr, arr.T)
    fermi = PairBasis(system.basis.separations, system.basis.spacing, "fermion")
    fsys = PairSystem(system.atom, system.binding, system.lattice, system.band, fermi, system.engine, system.cutoff)
    fst = solve_coefficients(unperturbed_state(fermi, "localized", SITES), fsys, 1.2, I_REF)
    farr, _ = two_site_array(fst)
    assert np.allclose(farr, -farr.T)
    assert np.linalg.norm(farr) == pytest.approx(fst.norm)


def test_schmidt_product_and_bell():
    prod = np.outer([1, 2, 0], [0, 1, 1])
    rep = schmidt(prod)
    assert rep.schmidt_rank == 1 and rep.entropy == pytest.approx(0, abs=1e-12)
    bell = np.array([[0, 1], [1, 0]]) / math.sqrt(2)
    assert schmidt(bell).entropy == pytest.approx(math.log(2))
    with pytest.raises(ValueError):
        schmidt(np.zeros((2, 2)))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (4, 5), elements=st.floats(-1, 1)))
def test_schmidt_bounds_and_local_invariance(a):
    if np.linalg.norm(a) < 1e-3:
        return
    rep = schmidt(a)
    assert -1e-12 <= rep.entropy <= math.log(4) + 1e-12
    assert np.sum(rep.schmidt_spectrum**2) == pytest.approx(1.0)
    rot = schmidt(np.linalg.qr(np.random.default_rng(0).normal(size=(4, 4)))[0] @ a[:, ::-1])
    assert rot.entropy == pytest.approx(rep.entropy, abs=1e-9)


def test_energy_policies(system):
    assert resolve_energy(system, I_REF, 0.7) == (0.7, "fixed")
    assert resolve_energy(system, I_REF, "band_center") == (0.0, "band_center")
    assert resolve_energy(system, 0.0)[1] == "fallback"
    with pytest.raises(ValueError):
        resolve_energy(system, I_REF, "bogus")
