import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasimol.green import rho0
from quasimol.lattice import PairBasis
from quasimol.model import PairSystem
from quasimol.spectral import (
    d_curve,
    delta_rho,
    det_normalized,
    find_bound_states,
    find_resonances,
    intensity_sweep,
    linear_r2,
    lorentzian,
    lorentzian_fit,
)

I_REF = 4.8e-4  # W/cm^2


@pytest.fixture(scope="module")
def ref_resonances(system):
    return find_resonances(system, I_REF)


def test_reference_resonance(ref_resonances):
    valid = [r for r in ref_resonances if r.valid]
    assert len(valid) == 1
    r = valid[0]
    # frozen regression values for the 16-state cluster
    assert r.e_r == pytest.approx(1.940761, abs=1e-5)
    assert r.gamma_prime == pytest.approx(1.895629, rel=1e-4)
    assert r.gamma_r_hz == pytest.approx(7.430866, rel=1e-4)


def test_invalid_roots_reported_not_dropped(ref_resonances):
    bad = [r for r in ref_resonances if not r.valid]
    assert bad and all(r.gamma_prime <= 0 for r in bad)


def test_weak_potential_first_order(system):
    e = np.array([-2.1, 0.4, 2.6, 3.4, 5.0])
    v = system.v(I_REF * 1e-3)
    G = system.green(e)
    d = det_normalized(G, v)
    first = 1 - np.einsum("nii,i->n", G, v)
    scale = np.abs(first - 1)
    assert np.all(np.abs(d - first) < 1e-2 * scale)


def test_reordering_basis_leaves_d_invariant(system):
    perm = np.random.default_rng(3).permutation(len(system.basis))
    basis = PairBasis(system.basis.separations[perm], system.basis.spacing, system.basis.statistics)
    other = PairSystem(system.atom, system.binding, system.lattice, system.band, basis, system.engine, system.cutoff)
    e = [-1.0, 0.5, 2.5, 3.7]
    a = det_normalized(system.green(e), system.v(I_REF))
    b = det_normalized(other.green(e), other.v(I_REF))
    assert np.allclose(a, b, rtol=1e-10, atol=1e-12)


def test_d_curve_finite(system):
    c = d_curve(system, np.linspace(-2.999, 2.999, 601), I_REF)
    assert np.all(np.isfinite(c.d)) and np.all(np.isfinite(c.derivative))


def test_bound_state_consistency(system):
    states = find_bound_states(system, 2e-3)
    assert states and all(s.e_b > 3 for s in states)
    v = system.v(2e-3)
    for s in states:
        assert s.im_d < 1e-8
        if s.sign_change:
            lo, hi = det_normalized(system.green([s.e_b - 1e-6, s.e_b + 1e-6]), v).real
            assert lo * hi < 0


def test_no_bound_states_at_low_intensity(system):
    assert find_bound_states(system, 3e-4) == []


def test_zero_intensity_is_empty(system):
    assert find_resonances(system, 0.0) == []
    assert find_bound_states(system, 0.0) == []


def test_resonance_continuous_in_intensity(system):
    a = max(r.e_r for r in find_resonances(system, I_REF) if r.valid)
    b = max(r.e_r for r in find_resonances(system, I_REF * (1 + 1e-4)) if r.valid)
    assert abs(a - b) < 1e-3


def test_scan_window_guard(system):
    with pytest.raises(ValueError):
        find_resonances(system, I_REF, scan=(-3.0, 2.0))
    with pytest.raises(ValueError):
        find_bound_states(system, I_REF, scan=(2.5, 4.0))


def test_narrow_resonance_peak_height(system):
    r = [x for x in find_resonances(system, 2.2e-3) if x.valid and x.gamma_prime < 0.01][0]
    dr, _ = delta_rho(system, [r.e_r], 2.2e-3)
    assert dr[0] == pytest.approx(2 / (math.pi * r.gamma_prime), rel=1e-3)


def test_narrow_resonance_matches_lorentzian_width(system):
    r = [x for x in find_resonances(system, 2.2e-3) if x.valid and x.gamma_prime < 0.01][0]
    e = np.linspace(r.e_r - 2 * r.gamma_prime, r.e_r + 2 * r.gamma_prime, 201)
    dr, _ = delta_rho(system, e, 2.2e-3)
    fit = lorentzian_fit(e, dr, r.e_r, r.gamma_prime)
    assert fit.gamma == pytest.approx(r.gamma_prime, rel=0.05)


def test_total_dos_non_negative(system):
    # delta rho >= -rho0 with both curves normalized per cluster (N = 1)
    e = np.linspace(-2.999, 2.999, 1201)
    dr, _ = delta_rho(system, e, I_REF)
    r0 = rho0(system.basis, e, 0.0, system.engine) * len(system.basis)
    assert np.min(dr + r0) > -1e-6


def test_delta_rho_masks_roots(system):
    v = system.v(2e-3)
    eb = find_bound_states(system, 2e-3)[0].e_b
    dr, mask = delta_rho(system, [eb, eb + 0.1], 2e-3, d_floor=1e-6)
    assert mask[0] and np.isnan(dr[0]) and not mask[1]
    assert np.isfinite(v).all()


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 2), st.floats(0.05, 1.0))
def test_lorentzian_fit_recovers_parameters(e_r, gamma):
    e = np.linspace(e_r - 3 * gamma, e_r + 3 * gamma, 301)
    fit = lorentzian_fit(e, lorentzian(e, e_r, gamma), e_r + 0.1 * gamma, 1.2 * gamma, window=3.0)
    assert fit.e_r == pytest.approx(e_r, abs=1e-6 * gamma)
    assert fit.gamma == pytest.approx(gamma, rel=1e-6)


def test_lorentzian_unit_area():
    e = np.linspace(-2000, 2000, 4_000_001)
    assert np.trapezoid(lorentzian(e, 0.0, 0.3), e) == pytest.approx(1.0, abs=1e-4)


def test_linear_r2():
    x = np.linspace(0, 1, 10)
    assert linear_r2(x, 3 * x + 1) == pytest.approx(1.0)
    assert linear_r2(x, x**4) < 0.9


def test_sweep_records_failures_and_continues(system, monkeypatch):
    import quasimol.spectral as sp

    real = sp.find_resonances

    def flaky(sys_, intensity, **kw):
        if intensity == 5e-4:
            raise RuntimeError("boom")
        return real(sys_, intensity, **kw)

    monkeypatch.setattr(sp, "find_resonances", flaky)
    pts = intensity_sweep(system, [4e-4, 5e-4, 6e-4], samples_per_unit=100)
    assert [bool(p.error) for p in pts] == [False, True, False]
    assert pts[0].tracked is not None and pts[2].tracked is not None


def test_sweep_grid_validation(system):
    with pytest.raises(ValueError):
        intensity_sweep(system, [2e-4, 1e-4])


def test_threaded_sweep_matches_serial(system):
    grid = [4e-4, 6e-4, 8e-4]
    a = intensity_sweep(system, grid, samples_per_unit=100)
    b = intensity_sweep(system, grid, samples_per_unit=100, threads=3)
    for p, q in zip(a, b):
        assert [r.e_r for r in p.resonances] == [r.e_r for r in q.resonances]
        assert [s.e_b for s in p.bound_states] == [s.e_b for s in q.bound_states]
