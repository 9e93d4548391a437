"""Reference values for the lattice Green function, independent of the Bessel route.

``bz_green`` integrates 1/(z - sum cos q) over the Brillouin zone: the q_z
integral is done in closed form and the remaining (q_x, q_y) integral with
the periodic midpoint rule, which converges geometrically away from the
band edges. ``watson_value`` is the classic closed form at E' = 3.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gamma


def _qz_integral(z, n):
    """(1/2 pi) \\int dq cos(n q) / (z - cos q) for complex z off [-1, 1]."""
    s = np.sqrt(z - 1) * np.sqrt(z + 1)
    r = z - s
    flip = np.abs(r) > 1
    s = np.where(flip, -s, s)
    r = z - s
    return r**n / s


def bz_green(e_prime: float, v, eta: float = 0.0, n: int = 1024) -> complex:
    """g(E', v) = (2 pi)^-3 \\int exp(i q.v)/(E' + i eta - sum cos q) d^3q."""
    v = sorted(abs(int(x)) for x in v)
    q = 2 * math.pi * (np.arange(n) + 0.5) / n
    qx, qy = np.meshgrid(q, q, indexing="ij")
    z = e_prime + 1j * eta - np.cos(qx) - np.cos(qy)
    if eta == 0:
        z = z.astype(complex)
    # put the largest index on the analytic axis: sharper decay in q_x, q_y
    f = _qz_integral(z, v[2]) * np.cos(v[0] * qx) * np.cos(v[1] * qy)
    val = complex(np.mean(f))
    return val.real if (eta == 0 and abs(e_prime) > 3) else val


def watson_value() -> float:
    """g(3, 0) = W/3 with W the simple-cubic Watson integral."""
    w = math.sqrt(6) / (32 * math.pi**3) * gamma(1 / 24) * gamma(5 / 24) * gamma(7 / 24) * gamma(11 / 24)
    return w / 3


def bz_pair_element(e_prime, delta, delta_p, eta=0.0, sign=1, n=1024) -> complex:
    d, dp = np.asarray(delta), np.asarray(delta_p)
    return bz_green(e_prime, d - dp, eta, n) + sign * bz_green(e_prime, d + dp, eta, n)
