import math
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quasimol.potential import (
    COS_110,
    COS_111,
    AngularGeometry,
    CutoffError,
    PotentialContext,
    f_theta,
    near_zone_v,
    v_ab,
    v_axis_110,
    v_axis_111,
)

K = 2 * math.pi / 6.7e-5  # 1/cm
CTX = PotentialContext(k=K, alpha=-1.2e-17, intensity=5e7, cutoff=1e-7)


@pytest.mark.parametrize("closed, ct", [(v_axis_111, COS_111), (v_axis_110, COS_110)])
def test_axis_closed_forms(closed, ct):
    t0 = time.perf_counter()
    ctx = PotentialContext(K, CTX.alpha, CTX.intensity)  # default 100 nm cutoff
    r = np.geomspace(ctx.cutoff * 1.000001, 10 / K, 1000)
    ref = v_ab(ctx, (r, np.full_like(r, ct)))
    rel = np.abs(closed(ctx, r) - ref) / np.abs(ref)
    assert rel.max() < 1e-12
    assert time.perf_counter() - t0 < 1.0


@given(st.floats(1e-3, 50), st.floats(-1, 1))
def test_f_theta_even_in_cos(kr, ct):
    assert f_theta(kr, -ct) == f_theta(kr, ct)


@given(st.floats(0.05, 20), st.floats(0, 1), st.floats(0.1, 10), st.floats(0.1, 10))
def test_v_scales_with_intensity_and_alpha_squared(kr, ct, si, sa):
    r = kr / K
    base = v_ab(CTX, (r, ct))
    ctx2 = PotentialContext(K, CTX.alpha * sa, CTX.intensity * si, cutoff=CTX.cutoff)
    assert v_ab(ctx2, (r, ct)) == pytest.approx(base * si * sa**2, rel=1e-12, abs=1e-300)


def test_far_zone_envelope_decays_as_inverse_r():
    # at cos = 0 the far-zone term is cos(kr)/kr: peaks of |F| kr approach 1
    kr = np.linspace(200, 400, 200001)
    env = np.abs(f_theta(kr, 0.0)) * kr
    assert env.max() == pytest.approx(1.0, abs=1e-4)
    slope = np.polyfit(np.log([200, 400]), np.log([1 / 200, 1 / 400]), 1)[0]
    assert slope == pytest.approx(-1)


def test_near_zone_matches_full_form():
    r = np.geomspace(CTX.cutoff * 1.0001, 0.05 / K, 50)
    for ct in (0.0, COS_111, 1.0):
        full = v_ab(CTX, (r, np.full_like(r, ct)))
        approx = near_zone_v(CTX, r, ct)
        assert np.max(np.abs(approx - full) / np.abs(full)) < 5e-3


def test_near_zone_guard():
    with pytest.raises(ValueError):
        near_zone_v(CTX, 1.0 / K, 0.5)


def test_cutoff_enforced():
    with pytest.raises(CutoffError):
        v_ab(CTX, (0.5 * CTX.cutoff, 0.3))
    with pytest.raises(ValueError):
        f_theta(0.0, 0.5)


def test_geometry_from_vector():
    g = AngularGeometry.from_vector([1, 0, 0], (COS_111,) * 3)
    assert g.cos_theta == pytest.approx(COS_111)
    with pytest.raises(ValueError):
        AngularGeometry.from_vector([0, 0, 0], (1, 0, 0))


def test_attractive_only_along_cube_axes_at_short_range():
    # kr << 1 with k r near pi/k_L: 1 - 3cos^2 = 0 on the axes leaves the attractive 1/r term
    kr = 0.4
    signs = {ct: np.sign(v_ab(CTX, (kr / K, ct))) for ct in (0.0, COS_111, COS_110)}
    assert signs[COS_111] < 0
    assert signs[0.0] < 0 or signs[COS_110] > 0
