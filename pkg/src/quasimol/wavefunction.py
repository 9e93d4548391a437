"""Scattered two-atom state C = (1 - G V)^-1 C0, its relative-coordinate
density and a Schmidt analysis of the atom-atom correlations."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .green import key_of
from .lattice import PairBasis, WannierFunction, canonical
from .model import PairSystem
from .spectral import find_resonances


class NearResonanceError(ArithmeticError):
    """1 - G V is numerically singular at the requested energy."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class SiteOutsideBasisError(KeyError):
    pass


@dataclass(frozen=True)
class IncidentState:
    coefficients: np.ndarray
    description: str
    energy: float = float("nan")  # <H0> in E' units
    residual: float = float("nan")  # ||(H0 - E) C0||

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        n = np.linalg.norm(c)
        if not abs(n - 1) < 1e-10:
            raise ValueError("incident coefficients must have unit norm")
        object.__setattr__(self, "coefficients", c)


@dataclass(frozen=True)
class PairState:
    coefficients: np.ndarray
    e_prime: float
    intensity: float  # W/cm^2
    basis: PairBasis
    residual: float = 0.0
    determinant: complex = 1.0

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def weight(self, delta) -> float:
        return float(abs(self.coefficients[self.basis.index(delta)]) ** 2)

    def class_weights(self, normalized: bool = True) -> dict:
        """|C|^2 summed over separations sharing sorted |components|."""
        w = np.abs(self.coefficients) ** 2
        if normalized:
            w = w / w.sum()
        out: dict = {}
        for d, x in zip(self.basis.separations, w):
            k = key_of(d)
            out[k] = out.get(k, 0.0) + float(x)
        return out


@dataclass(frozen=True)
class EntanglementReport:
    schmidt_spectrum: np.ndarray
    entropy: float
    schmidt_rank: int
    adjusted_entropy: float = float("nan")  # minus the ln 2 of exchange symmetrization
    sites: tuple = ()


def hopping_matrix(basis: PairBasis) -> np.ndarray:
    """Relative-motion H0 in E' units on the symmetrized cluster basis."""
    seps = basis.separations
    diff = seps[:, None, :] - seps[None, :, :]
    summ = seps[:, None, :] + seps[None, :, :]
    nn = lambda x: (np.sum(np.abs(x), axis=-1) == 1).astype(float)
    return 0.5 * (nn(diff) + basis.sign * nn(summ))


def unperturbed_state(basis: PairBasis, kind: str = "localized", sites=None) -> IncidentState:
    """Localized pair at ``sites`` = (mu, nu), or the lowest cluster eigenvector of H0."""
    H = hopping_matrix(basis)
    if kind == "localized":
        if sites is None:
            raise ValueError("localized state needs sites (mu, nu)")
        mu, nu = (np.asarray(s, dtype=np.int64) for s in sites)
        try:
            i = basis.index(mu - nu)
        except (KeyError, ValueError):
            raise SiteOutsideBasisError(f"separation of {tuple(mu)}, {tuple(nu)} not in basis") from None
        c = np.zeros(len(basis), dtype=complex)
        c[i] = 1.0
        desc = f"localized {tuple(int(x) for x in mu)},{tuple(int(x) for x in nu)}"
    elif kind == "band_bottom":
        w, vecs = np.linalg.eigh(H)
        c = vecs[:, 0].astype(complex)
        c *= np.sign(c.real[np.argmax(np.abs(c))])
        desc = "band_bottom"
    else:
        raise ValueError(f"unknown incident kind {kind!r}")
    e = float((c.conj() @ H @ c).real)
    res = float(np.linalg.norm(H @ c - e * c))
    return IncidentState(c, desc, e, res)


def solve_coefficients(
    incident: IncidentState,
    system: PairSystem,
    e_prime: float,
    intensity: float,
    eta: float = 0.0,
    d_threshold: float = 1e-10,
) -> PairState:
    G = system.green([e_prime], eta)[0]
    v = system.v(intensity)
    A = np.eye(len(v)) - G * v[None, :]
    d = complex(np.linalg.det(A))
    if abs(d) < d_threshold:
        raise NearResonanceError(f"|D| = {abs(d):.3g} below {d_threshold:g} at E' = {e_prime}", np.linalg.cond(A))
    c = np.linalg.solve(A, incident.coefficients)
    res = float(np.linalg.norm(c - incident.coefficients - G @ (v * c)) / np.linalg.norm(c))
    return PairState(c, float(e_prime), float(intensity), system.basis, res, d)


def resolve_energy(system: PairSystem, intensity: float, policy="resonance", eta: float = 0.0,
                   near: Optional[float] = None, fallback: float = 0.0) -> tuple:
    """Energy for the scattering solve: (E', source)."""
    if isinstance(policy, (int, float)):
        return float(policy), "fixed"
    if policy == "band_center":
        return 0.0, "band_center"
    if policy != "resonance":
        raise ValueError(f"unknown energy policy {policy!r}")
    if intensity > 0:
        valid = [r for r in find_resonances(system, intensity, eta=eta) if r.valid]
        if valid:
            ref = near if near is not None else max(r.e_r for r in valid)
            r = min(valid, key=lambda r: abs(r.e_r - ref))
            return r.e_r, "resonance"
    return fallback, "fallback"


# ---- density profiles ---------------------------------------------------------------------

DIRECTIONS = {
    "100": (1.0, 0.0, 0.0),
    "010": (0.0, 1.0, 0.0),
    "001": (0.0, 0.0, 1.0),
    "110": (1 / math.sqrt(2), 1 / math.sqrt(2), 0.0),
    "111": (1 / math.sqrt(3), 1 / math.sqrt(3), 1 / math.sqrt(3)),
}


@dataclass(frozen=True)
class PsiProfile:
    r: np.ndarray  # units of a
    spherical: np.ndarray  # angle-averaged density times a^3
    radial: np.ndarray  # 4 pi r^2 <rho> times a; integrates to the norm over r/a
    cuts: dict = field(default_factory=dict)  # direction -> density times a^3

    def peaks(self, rel_height: float = 1e-3) -> np.ndarray:
        """r/a of local maxima of the spherical density above rel_height * max."""
        y = self.spherical
        idx = np.where((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]) & (y[1:-1] > rel_height * y.max()))[0] + 1
        return self.r[idx]


def _shell_average(r, d, s2):
    """Angle average of a normalized 3D Gaussian (variance s2 per axis) centred at distance d."""
    r = np.asarray(r, dtype=float)
    x = r * d / s2
    base = (2 * math.pi * s2) ** -1.5 * np.exp(-((r - d) ** 2) / (2 * s2))
    with np.errstate(invalid="ignore", divide="ignore"):
        shape = np.where(x > 1e-8, -np.expm1(-2 * x) / (2 * x), 1.0 - x)
    return base * shape


def psi_squared(state: PairState, wannier: WannierFunction, r_grid, directions=("100", "010", "001", "110", "111")) -> PsiProfile:
    """Relative-coordinate pair density, with cross terms between pair sites dropped.

    The two-atom product of n = 0 orbitals gives a relative Gaussian of
    variance sigma^2 per axis around each +/- Delta a.
    """
    a = state.basis.spacing
    s2 = (wannier.sigma / a) ** 2  # in units of a^2
    r = np.asarray(r_grid, dtype=float)
    w = np.abs(state.coefficients) ** 2
    lengths = np.linalg.norm(state.basis.separations, axis=1)
    sph = np.zeros_like(r)
    for wi, d in zip(w, lengths):
        if wi:
            sph += wi * _shell_average(r, d, s2)
    cuts = {}
    seps = state.basis.separations.astype(float)
    for name in directions:
        n = np.asarray(DIRECTIONS[name])
        pts = r[:, None] * n[None, :]
        val = np.zeros_like(r)
        for wi, d in zip(w, seps):
            if not wi:
                continue
            g1 = np.exp(-np.sum((pts - d) ** 2, axis=1) / (2 * s2))
            g2 = np.exp(-np.sum((pts + d) ** 2, axis=1) / (2 * s2))
            val += wi * 0.5 * (g1 + g2)
        cuts[name] = val * (2 * math.pi * s2) ** -1.5
    return PsiProfile(r, sph, 4 * math.pi * r**2 * sph, cuts)


# ---- entanglement -----------------------------------------------------------------------


def schmidt(array, threshold: float = 1e-8) -> EntanglementReport:
    """Schmidt spectrum of a bipartite amplitude array (rows: atom A, cols: atom B)."""
    a = np.asarray(array, dtype=complex)
    n = np.linalg.norm(a)
    if n == 0:
        raise ValueError("zero state")
    sv = np.linalg.svd(a / n, compute_uv=False)
    p = sv**2
    p = p[p > 0]
    ent = float(-np.sum(p * np.log(p)))
    rank = int(np.sum(sv > threshold))
    return EntanglementReport(sv, max(ent, 0.0), max(rank, 1))


def two_site_array(state: PairState, center=(0.5, 0.5, 0.5)):
    """Distinguishable-atom amplitudes A[mu, nu] for a symmetrized state.

    Each separation Delta is placed on the site pairs whose midpoint is
    nearest ``center`` (the incident pair's centre of mass), its amplitude
    shared equally between tied placements, with weight 1/sqrt(2) for each
    ordering of the two atoms.
    """
    c0 = np.asarray(center, dtype=float)
    entries = []
    for amp, d in zip(state.coefficients, state.basis.separations):
        if amp == 0:
            continue
        options = []
        for comp in c0 - d / 2.0:
            near = round(comp)
            if abs(comp - near) < 1e-9:
                options.append([int(near)])
            else:  # half-integer: two equally near sites
                options.append([math.floor(comp), math.floor(comp) + 1])
        placements = list(itertools.product(*options))
        share = amp / math.sqrt(2 * len(placements))
        for nu in placements:
            nu = np.array(nu, dtype=np.int64)
            mu = nu + d
            entries.append((tuple(mu), tuple(nu), share))
            entries.append((tuple(nu), tuple(mu), state.basis.sign * share))
    sites = sorted({e[0] for e in entries} | {e[1] for e in entries})
    pos = {s: i for i, s in enumerate(sites)}
    arr = np.zeros((len(sites), len(sites)), dtype=complex)
    for mu, nu, val in entries:
        arr[pos[mu], pos[nu]] += val
    return arr, tuple(sites)


def entanglement_report(state: PairState, threshold: float = 1e-8, center=(0.5, 0.5, 0.5)) -> EntanglementReport:
    arr, sites = two_site_array(state, center)
    rep = schmidt(arr, threshold)
    return EntanglementReport(rep.schmidt_spectrum, rep.entropy, rep.schmidt_rank, rep.entropy - math.log(2), sites)
