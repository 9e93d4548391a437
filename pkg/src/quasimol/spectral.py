"""Bound states, resonances and density-of-states changes from D = det(1 - G V).

Energies are in the normalized units E' of the pair band (band = [-3, 3]);
physical widths are recovered by multiplying with lambda_nm(1).
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize

from .constants import H_PLANCK
from .model import PairSystem

log = logging.getLogger(__name__)

BAND_EDGE = 3.0


class DegenerateRootError(ArithmeticError):
    """d Re D / dE' vanishes at a root, so Eq.-type width formula is undefined."""


@dataclass(frozen=True)
class DeterminantCurve:
    e_prime: np.ndarray
    d: np.ndarray
    h: float
    derivative: np.ndarray  # d Re D / dE'

    @property
    def re(self):
        return self.d.real

    @property
    def im(self):
        return self.d.imag


@dataclass(frozen=True)
class ResonanceRecord:
    e_r: float
    gamma_prime: float  # dimensionless width
    gamma_r: float  # erg
    valid: bool
    intensity: float  # W/cm^2
    derivative: float = float("nan")
    derivative_change: float = float("nan")  # relative change under h -> h/2
    note: str = ""

    @property
    def gamma_r_hz(self) -> float:
        return self.gamma_r / H_PLANCK


@dataclass(frozen=True)
class BoundStateRecord:
    e_b: float
    intensity: float
    im_d: float = 0.0
    multiplicity: int = 1
    sign_change: bool = True


# ---- determinant ---------------------------------------------------------------------


def det_normalized(G: np.ndarray, v: np.ndarray) -> np.ndarray:
    """det(1 - G diag(v)) for a stack of Green matrices (units of C)."""
    m = G.shape[-1]
    return np.linalg.det(np.eye(m) - G * v[None, None, :] if G.ndim == 3 else np.eye(m) - G * v[None, :])


def determinant(E: float, basis, params, potential, eta: float = 0.0, engine=None) -> complex:
    """D at physical energy E (erg) for a PotentialMatrix (diagonal part)."""
    from .green import default_engine

    engine = engine or default_engine()
    e_prime = float(params.to_normalized(E))
    G = engine.matrices(basis, [e_prime], eta)[0]
    v = potential.normalized(params.pair_hopping)
    return complex(np.linalg.det(np.eye(len(basis)) - G * v[None, :]))


def d_curve(system: PairSystem, e_primes, intensity: float, eta: float = 0.0, h: float = 1e-4) -> DeterminantCurve:
    e = np.asarray(e_primes, dtype=float)
    v = system.v(intensity)
    d = det_normalized(system.green(e, eta), v)
    dp = det_normalized(system.green(e + h, eta), v)
    dm = det_normalized(system.green(e - h, eta), v)
    return DeterminantCurve(e, d, h, (dp.real - dm.real) / (2 * h))


def _d_at(system, e, v, eta):
    return complex(det_normalized(system.green([e], eta), v)[0])


# ---- bound states ---------------------------------------------------------------------


def bound_scan_limit(system: PairSystem, intensity: float, margin: float = 0.5) -> float:
    """E' above which no bound state exists: the band edge plus max(v, 0)."""
    v = system.v(intensity)
    return BAND_EDGE + max(float(np.max(v)), 0.0) + margin


def find_bound_states(
    system: PairSystem,
    intensity: float,
    scan: Optional[tuple] = None,
    samples_per_unit: int = 400,
    xtol: float = 1e-10,
) -> list:
    """Roots of D above the band.

    There G is real symmetric and decreasing in E', so every eigenvalue of
    V^-1 - G grows monotonically and crosses zero at most once; counting
    crossings finds degenerate roots that leave det unchanged in sign.
    """
    v = system.v(intensity)
    active = np.abs(v) > 1e-300
    if not np.any(active):
        return []
    lo, hi = scan if scan is not None else (BAND_EDGE, bound_scan_limit(system, intensity))
    if lo < BAND_EDGE:
        raise ValueError("bound-state scan must lie at or above the band edge")
    n = max(8, int(math.ceil((hi - lo) * samples_per_unit)) + 1)
    grid = np.linspace(lo, hi, n)
    vinv = np.diag(1.0 / v[active])
    sub = np.ix_(active, active)

    def eig(e):
        G = system.green([e], 0.0)[0].real
        return np.linalg.eigvalsh(vinv - G[sub])

    G = system.green(grid, 0.0).real
    lam = np.array([np.linalg.eigvalsh(vinv - g[sub]) for g in G])
    roots = []
    for k in range(lam.shape[1]):
        idx = np.where((lam[:-1, k] < 0) & (lam[1:, k] >= 0))[0]
        for i in idx:
            if lam[i + 1, k] == 0:
                r = grid[i + 1]
            else:
                r = optimize.brentq(lambda e: eig(e)[k], grid[i], grid[i + 1], xtol=xtol)
            roots.append(r)
    roots.sort()
    out = []
    for r in roots:
        if out and abs(out[-1][0] - r) < 1e3 * xtol:
            out[-1][1] += 1
        else:
            out.append([r, 1])
    records = []
    for r, mult in out:
        d = _d_at(system, r, v, 0.0)
        records.append(BoundStateRecord(e_b=float(r), intensity=intensity, im_d=abs(d.imag),
                                        multiplicity=mult, sign_change=bool(mult % 2 == 1)))
    return records


# ---- resonances -----------------------------------------------------------------------


def _width(system, e, v, eta, h):
    d0 = _d_at(system, e, v, eta)
    der = (_d_at(system, e + h, v, eta).real - _d_at(system, e - h, v, eta).real) / (2 * h)
    der2 = (_d_at(system, e + h / 2, v, eta).real - _d_at(system, e - h / 2, v, eta).real) / h
    return d0, der, der2


def find_resonances(
    system: PairSystem,
    intensity: float,
    scan: tuple = (-2.999, 2.999),
    eta: float = 0.0,
    samples_per_unit: int = 400,
    h: float = 1e-4,
    xtol: float = 1e-10,
    flat_threshold: float = 1e-10,
) -> list:
    """Zeros of Re D inside the band, each with its width 2 Im D / (d Re D/dE')."""
    lo, hi = scan
    if lo <= -BAND_EDGE or hi >= BAND_EDGE:
        raise ValueError("resonance scan must lie strictly inside the band")
    v = system.v(intensity)
    if not np.any(v):
        return []
    n = max(8, int(math.ceil((hi - lo) * samples_per_unit)) + 1)
    grid = np.linspace(lo, hi, n)
    re = det_normalized(system.green(grid, eta), v).real
    records = []
    for i in np.where(np.sign(re[:-1]) * np.sign(re[1:]) < 0)[0]:
        r = optimize.brentq(lambda e: _d_at(system, e, v, eta).real, grid[i], grid[i + 1], xtol=xtol)
        d0, der, der2 = _width(system, r, v, eta, h)
        change = abs(der - der2) / abs(der2) if der2 else float("inf")
        if abs(der) < flat_threshold:
            records.append(ResonanceRecord(float(r), float("nan"), float("nan"), False, intensity,
                                           der, change, note="degenerate: flat Re D"))
            continue
        gp = 2 * d0.imag / der
        records.append(ResonanceRecord(
            e_r=float(r), gamma_prime=float(gp), gamma_r=float(gp * system.pair_hopping),
            valid=bool(gp > 0), intensity=intensity, derivative=float(der), derivative_change=float(change),
        ))
    return records


# ---- density of states ------------------------------------------------------------------


def delta_rho(system: PairSystem, e_grid, intensity: float, eta: float = 0.0, h: float = 1e-4,
              norm: float = 1.0, d_floor: float = 1e-12):
    """-(1/(pi N)) Im(D'/D) on the grid. Returns (values, mask of dropped points)."""
    e = np.asarray(e_grid, dtype=float)
    v = system.v(intensity)
    d = det_normalized(system.green(e, eta), v)
    dp = det_normalized(system.green(e + h, eta), v)
    dm = det_normalized(system.green(e - h, eta), v)
    masked = np.abs(d) < d_floor
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -((dp - dm) / (2 * h) / d).imag / (math.pi * norm)
    out = np.where(masked, np.nan, out)
    if np.any(masked):
        log.warning("delta_rho: %d grid points masked (|D| < %g)", int(masked.sum()), d_floor)
    return out, masked


def lorentzian(e, e_r, gamma, amp=1.0, offset=0.0):
    return amp * (gamma / 2) / math.pi / ((e - e_r) ** 2 + (gamma / 2) ** 2) + offset


@dataclass(frozen=True)
class LorentzianFit:
    e_r: float
    gamma: float
    amplitude: float
    offset: float
    window: tuple


def lorentzian_fit(e, rho, e_r0: float, gamma0: float, window: float = 2.0,
                   free_amplitude: bool = False, free_offset: bool = False) -> LorentzianFit:
    """Least-squares fit of the unit-area Lorentzian on e_r0 +/- window * gamma0.

    By default only (E_r, Gamma) are free, as in the normalized resonance
    form; amplitude and a constant background can be released.
    """
    e = np.asarray(e)
    rho = np.asarray(rho)
    half = window * gamma0
    sel = (np.abs(e - e_r0) <= half) & np.isfinite(rho)
    if sel.sum() < 5:
        raise ValueError("too few points in the fit window")
    names = ["e_r", "gamma"] + (["amp"] if free_amplitude else []) + (["offset"] if free_offset else [])
    p0 = [e_r0, gamma0] + ([1.0] if free_amplitude else []) + ([0.0] if free_offset else [])

    def model(x, *p):
        kw = dict(zip(names, p))
        return lorentzian(x, kw["e_r"], kw["gamma"], kw.get("amp", 1.0), kw.get("offset", 0.0))

    with warnings.catch_warnings():  # the covariance is not used
        warnings.simplefilter("ignore", optimize.OptimizeWarning)
        popt, _ = optimize.curve_fit(model, e[sel], rho[sel], p0=p0, maxfev=20000)
    kw = dict(zip(names, popt))
    return LorentzianFit(float(kw["e_r"]), float(abs(kw["gamma"])), float(kw.get("amp", 1.0)),
                         float(kw.get("offset", 0.0)), (float(e[sel][0]), float(e[sel][-1])))


# ---- intensity sweep ----------------------------------------------------------------------


@dataclass
class SweepPoint:
    intensity: float
    resonances: list = field(default_factory=list)
    bound_states: list = field(default_factory=list)
    tracked: Optional[ResonanceRecord] = None
    error: str = ""

    @property
    def valid_resonances(self):
        return [r for r in self.resonances if r.valid]


def _sweep_one(system, intensity, eta, samples_per_unit, h):
    pt = SweepPoint(intensity)
    try:
        if intensity > 0:
            pt.resonances = find_resonances(system, intensity, eta=eta, samples_per_unit=samples_per_unit, h=h)
            pt.bound_states = find_bound_states(system, intensity, samples_per_unit=samples_per_unit)
    except Exception as exc:  # recorded, the sweep goes on
        pt.error = f"{type(exc).__name__}: {exc}"
        log.warning("sweep point I=%g failed: %s", intensity, pt.error)
    return pt


def intensity_sweep(system: PairSystem, intensities, eta: float = 0.0, samples_per_unit: int = 400,
                    h: float = 1e-4, threads: int = 1, start: Optional[float] = None) -> list:
    """Resonances and bound states for each intensity (ascending).

    ``tracked`` follows one valid resonance branch: the first point takes the
    valid resonance nearest ``start`` (default: the highest), later points the
    one nearest the previous tracked energy.
    """
    grid = [float(i) for i in intensities]
    if any(i < 0 for i in grid) or any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("intensity grid must be non-negative and ascending")
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            points = list(ex.map(lambda i: _sweep_one(system, i, eta, samples_per_unit, h), grid))
    else:
        points = [_sweep_one(system, i, eta, samples_per_unit, h) for i in grid]
    prev = start
    for pt in points:
        cands = pt.valid_resonances
        if not cands:
            continue
        if prev is None:
            pt.tracked = max(cands, key=lambda r: r.e_r)
        else:
            pt.tracked = min(cands, key=lambda r: abs(r.e_r - prev))
        prev = pt.tracked.e_r
    return points


def linear_r2(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    if len(x) < 3:
        return float("nan")
    coef = np.polyfit(x, y, 1)
    res = y - np.polyval(coef, x)
    tot = y - y.mean()
    return float(1 - res @ res / (tot @ tot)) if tot @ tot > 0 else 1.0
