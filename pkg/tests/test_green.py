import itertools
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasimol.green import (
    BranchError,
    GreenEngine,
    NormalizedEnergy,
    QuadratureSettings,
    g_element_above,
    g_element_inband,
    lattice_g,
    pair_index,
    tail_bound,
    truncation_point,
)
from quasimol.green_oracle import bz_green, watson_value
from quasimol.lattice import PairBasis, enumerate_separations


@pytest.fixture(scope="module")
def engine(system):
    return system.engine


def test_watson(engine):
    assert watson_value() == pytest.approx(0.5054620197, abs=1e-10)
    assert lattice_g(3.0, (0, 0, 0), engine=engine).real == pytest.approx(watson_value(), abs=1e-6)


@pytest.mark.parametrize("e", [-4.5, -3.2, 3.2, 4.5])
@pytest.mark.parametrize("v", [(0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1), (0, 0, 2), (1, 2, 2)])
def test_outside_band_vs_zone_quadrature(engine, e, v):
    ref = bz_green(e, v, 0.0, 512)
    assert lattice_g(e, v, engine=engine).real == pytest.approx(ref.real, rel=1e-6, abs=1e-12)


@pytest.mark.parametrize("e", [-2.2, 0.3, 1.7])
@pytest.mark.parametrize("v", [(0, 0, 0), (0, 1, 1), (0, 0, 2)])
def test_damped_inband_vs_zone_quadrature(engine, e, v):
    eta = 0.05
    got = engine.inband([e], [v], eta)[0, 0]
    ref = bz_green(e, v, eta, 1024)
    assert abs(got - ref) / abs(ref) < 1e-5


@settings(max_examples=15, deadline=None)
@given(st.floats(3.05, 9.0))
def test_above_band_property(e):
    eng = GreenEngine()
    for v in ((0, 0, 0), (0, 1, 2)):
        assert lattice_g(e, v, engine=eng).real == pytest.approx(bz_green(e, v, 0.0, 256).real, rel=1e-6, abs=1e-12)


def test_large_energy_asymptote(engine):
    e = np.array([50.0, 100.0, 200.0])
    g = lattice_g(e, (0, 0, 0), engine=engine).real
    # g = 1/E' + (3/2)/E'^3 + ...
    assert np.all(np.abs(g * e - 1) < 2.0 / e**2)


def test_pair_diagonal_asymptote(system):
    e = 80.0
    G = system.green([e])[0].real
    assert np.allclose(np.diag(G), 1 / e, rtol=1e-3)


def test_monotone_decreasing_above_band(engine):
    e = np.linspace(3.0, 12.0, 200)
    g = lattice_g(e, (0, 0, 0), engine=engine).real
    assert np.all(np.diff(g) < 0)


def test_below_band_parity(engine):
    for v in ((0, 0, 1), (0, 1, 1), (1, 1, 1)):
        up = lattice_g(4.0, v, engine=engine).real
        down = lattice_g(-4.0, v, engine=engine).real
        assert down == pytest.approx(-((-1) ** sum(v)) * up, rel=1e-14)


def test_im_g_nonpositive_in_band(engine):
    e = np.linspace(-2.95, 2.95, 59)
    assert np.all(lattice_g(e, (0, 0, 0), engine=engine).imag < 0)


def test_pair_matrix_symmetric(system):
    for e in (-1.3, 0.7, 2.2, 3.6):
        G = system.green([e])[0]
        assert np.array_equal(G, G.T)


def test_element_helpers_agree_with_matrix(system):
    basis = system.basis
    G = system.green([0.7, 3.5])
    i, j = 2, 7
    d, dp = basis.separations[i], basis.separations[j]
    a = g_element_inband(NormalizedEnergy(0.7), d + dp, d - dp, basis.sign, system.engine)
    b = g_element_above(NormalizedEnergy(3.5), d + dp, d - dp, basis.sign, system.engine)
    assert a == G[0, i, j]
    assert b == G[1, i, j].real
    with pytest.raises(BranchError):
        g_element_inband(NormalizedEnergy(3.5), d + dp, d - dp)
    with pytest.raises(BranchError):
        g_element_above(NormalizedEnergy(0.7), d + dp, d - dp)


def test_cache_hit_rate():
    eng = GreenEngine()
    basis = PairBasis(enumerate_separations(2), 1.0)
    eng.matrices(basis, np.linspace(3.1, 4.0, 10))
    eng.matrices(basis, np.linspace(3.1, 4.0, 10))
    assert eng.stats.hit_rate > 0.5
    n_keys = len(pair_index(basis)[1])
    assert eng.cache_size == 10 * n_keys


def test_concurrent_evaluation_is_deterministic():
    basis = PairBasis(enumerate_separations(math.sqrt(2)), 1.0)
    energies = [0.4, 1.1, 3.3, -3.7]
    serial = GreenEngine().matrices(basis, energies)
    eng = GreenEngine()
    with ThreadPoolExecutor(4) as ex:
        out = list(ex.map(lambda e: eng.matrices(basis, [e])[0], energies * 2))
    for k, e in enumerate(energies * 2):
        assert np.array_equal(out[k], serial[k % 4])


def test_truncation_respects_tail_bound():
    for eta in (1e-2, 2.5e-3):
        T = truncation_point(eta, 1e-8)
        assert tail_bound(eta, T) <= 0.5e-8
        assert tail_bound(eta, 0.95 * T) > 0.5e-8


def test_settings_validation():
    with pytest.raises(ValueError):
        QuadratureSettings(etas=(1e-2, 1e-2))
    with pytest.raises(ValueError):
        QuadratureSettings(tol=0)
    with pytest.raises(ValueError):
        NormalizedEnergy(0.1, -1e-3)
    w = QuadratureSettings().richardson_weights()
    assert w.sum() == pytest.approx(1.0)


def test_key_symmetry(engine):
    vals = {complex(lattice_g(0.9, p, engine=engine)) for p in itertools.permutations((0, -1, 2))}
    assert len(vals) == 1
