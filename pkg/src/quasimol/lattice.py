"""Simple-cubic lattice: harmonic Wannier states, tight-binding parameters,
the exchange-symmetrized pair basis and pair matrix elements of V_AB.

Energies are erg, lengths handed in by users are m (converted to cm inside).
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .constants import C_LIGHT, HBAR, H_PLANCK, m_to_cm
from .params import AtomSpecies, recoil_energy
from .potential import CutoffError, PotentialContext, f_theta


class TightBindingError(ValueError):
    """Lattice too shallow for the harmonic / tight-binding description."""


class EmptyBasisError(ValueError):
    """No pair separation fits inside the requested radius."""


@dataclass(frozen=True)
class LatticeSpec:
    """Standing-wave lattice V_0 sin^2(k_L x) summed over the three axes.

    ``spacing`` in m, ``lattice_wavenumber`` in 1/m (optional, defaults to
    pi/spacing), ``well_depth`` in erg.
    """

    spacing: float
    well_depth: float
    atom: AtomSpecies
    lattice_wavenumber: Optional[float] = None

    def __post_init__(self):
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        if not self.well_depth > 0:
            raise ValueError("well_depth must be positive")
        if self.lattice_wavenumber is None:
            object.__setattr__(self, "lattice_wavenumber", math.pi / self.spacing)
        elif abs(self.spacing * self.lattice_wavenumber - math.pi) > 1e-9 * math.pi:
            raise ValueError("spacing and lattice_wavenumber violate a = pi/k_L")

    @classmethod
    def from_laser(cls, atom: AtomSpecies, detuning: float, saturation: float) -> "LatticeSpec":
        """Lattice from its laser: k_L = (omega_A + delta)/c and V_0 = hbar delta S / 2."""
        k_l = (atom.omega_a + detuning) / C_LIGHT * 1e2  # 1/m
        v0 = HBAR * abs(detuning) * saturation / 2
        return cls(spacing=math.pi / k_l, well_depth=v0, atom=atom, lattice_wavenumber=k_l)

    @property
    def a(self) -> float:
        """Spacing in cm."""
        return m_to_cm(self.spacing)

    @property
    def k_l(self) -> float:
        """Lattice wavenumber in 1/cm."""
        return self.lattice_wavenumber / 1e2

    @property
    def recoil(self) -> float:
        return float(recoil_energy(self.k_l, self.atom.mass_g))


@dataclass(frozen=True)
class WannierFunction:
    """Harmonic-oscillator orbital of one well (Gaussian for n = 0).

    ``sigma`` is the oscillator length sqrt(hbar/(m omega_t)) in cm, so the
    one-atom density has variance sigma^2/2 per axis.
    """

    band_index: int
    omega_t: float  # rad/s
    sigma: float  # cm

    def amplitude(self, x):
        """n = 0 amplitude at points x (..., 3) in cm."""
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1)
        return (math.pi * self.sigma**2) ** -0.75 * np.exp(-r2 / (2 * self.sigma**2))

    def overlap(self, distance: float) -> float:
        """<chi(r)|chi(r - d)> for a displacement of length ``distance`` (cm)."""
        return math.exp(-(distance**2) / (4 * self.sigma**2))


def harmonic_wannier(spec: LatticeSpec, n: int = 0) -> WannierFunction:
    if n < 0:
        raise ValueError("band index must be non-negative")
    if spec.well_depth <= spec.recoil:
        raise TightBindingError("V_0 <= E_R: tight-binding description invalid")
    m = spec.atom.mass_g
    omega_t = spec.k_l * math.sqrt(2 * spec.well_depth / m)
    return WannierFunction(band_index=n, omega_t=omega_t, sigma=math.sqrt(HBAR / (m * omega_t)))


@dataclass(frozen=True)
class BandParams:
    lambda0: float  # erg
    lambda1: float  # erg
    band_index: int = 0

    @classmethod
    def from_hz(cls, lambda0_hz: float, lambda1_hz: float, band_index: int = 0) -> "BandParams":
        return cls(lambda0_hz * H_PLANCK, lambda1_hz * H_PLANCK, band_index)

    @property
    def lambda0_hz(self) -> float:
        return self.lambda0 / H_PLANCK

    @property
    def lambda1_hz(self) -> float:
        return self.lambda1 / H_PLANCK

    @property
    def pair_hopping(self) -> float:
        """lambda_nm(1) = 2(lambda_n(1) + lambda_m(1)) for n = m."""
        return 4 * self.lambda1

    @property
    def pair_onsite(self) -> float:
        return 2 * self.lambda0

    def to_normalized(self, energy):
        """Physical pair energy (erg) -> E' = (E - 2 lambda(0)) / lambda_nm(1)."""
        return (np.asarray(energy) - self.pair_onsite) / self.pair_hopping

    def to_physical(self, e_prime):
        return self.pair_onsite + self.pair_hopping * np.asarray(e_prime)


def _band_1d_closed(spec: LatticeSpec, w: WannierFunction):
    m, s2, v0, kl, a = spec.atom.mass_g, w.sigma**2, spec.well_depth, spec.k_l, spec.a
    kin = HBAR**2 / (4 * m * s2)
    onsite = kin + v0 / 2 * (1 - math.exp(-kl**2 * s2))
    ov = math.exp(-(a**2) / (4 * s2))
    hop = ov * (kin * (1 - a**2 / (2 * s2)) + v0 / 2 * (1 - math.exp(-kl**2 * s2) * math.cos(kl * a)))
    return onsite, hop, ov


def _band_1d_quad(spec: LatticeSpec, w: WannierFunction):
    m, s, v0, kl, a = spec.atom.mass_g, w.sigma, spec.well_depth, spec.k_l, spec.a
    norm = (math.pi * s**2) ** -0.5

    def phi(x, c=0.0):
        return math.exp(-((x - c) ** 2) / (2 * s**2))

    def dphi(x, c=0.0):
        return -(x - c) / s**2 * phi(x, c)

    def h_elem(c):
        # (hbar^2/2m) phi0' phic' + V phi0 phic, integrated by parts for T
        f = lambda x: norm * (HBAR**2 / (2 * m) * dphi(x) * dphi(x, c) + v0 * math.sin(kl * x) ** 2 * phi(x) * phi(x, c))
        lo, hi = min(0.0, c) - 12 * s, max(0.0, c) + 12 * s
        val, _ = integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-12, limit=400, points=[c / 2])
        return val

    ov, _ = integrate.quad(lambda x: norm * phi(x) * phi(x, a), -12 * s, a + 12 * s, epsabs=0, epsrel=1e-13, points=[a / 2])
    return h_elem(0.0), h_elem(a), ov


def band_params(spec: LatticeSpec, n: int = 0, method: str = "closed", offset: float = 0.0) -> BandParams:
    """On-site energy and nearest-neighbour hopping of band n.

    Both are the Hamiltonian matrix elements between Gaussian orbitals of the
    same and of adjacent wells. ``offset`` adds a uniform potential (erg).
    """
    if n != 0:
        raise NotImplementedError("only the lowest band is implemented")
    w = harmonic_wannier(spec, n)
    if method == "closed":
        onsite, hop, ov = _band_1d_closed(spec, w)
    elif method == "quad":
        onsite, hop, ov = _band_1d_quad(spec, w)
    else:
        raise ValueError(f"unknown method {method!r}")
    lam0 = 3 * onsite + offset
    lam1 = hop + 2 * ov * onsite + offset * ov
    return BandParams(lambda0=lam0, lambda1=lam1, band_index=n)


def dispersion(params: BandParams, qa):
    """Single-atom tight-binding energy for phases qa (..., 3)."""
    qa = np.asarray(qa, dtype=float)
    return params.lambda0 + 2 * params.lambda1 * np.sum(np.cos(qa), axis=-1)


@dataclass(frozen=True)
class PairBasis:
    """Canonical relative separations of a two-atom cluster.

    Each row of ``separations`` is a representative Delta of the pair
    {Delta, -Delta} (first non-zero component positive). States are
    (|Delta> +/- |-Delta>) sqrt(1/2), so ``normalization`` is 1/sqrt(2).
    """

    separations: np.ndarray
    spacing: float  # cm
    statistics: str = "boson"
    band_pair: tuple = (0, 0)
    normalization: float = 1 / math.sqrt(2)

    def __post_init__(self):
        seps = np.asarray(self.separations, dtype=np.int64).reshape(-1, 3)
        seps.setflags(write=False)
        object.__setattr__(self, "separations", seps)
        if self.statistics not in ("boson", "fermion"):
            raise ValueError("statistics must be 'boson' or 'fermion'")

    def __len__(self):
        return len(self.separations)

    @property
    def sign(self) -> int:
        return 1 if self.statistics == "boson" else -1

    @property
    def lengths(self) -> np.ndarray:
        """|Delta| a in cm."""
        return np.linalg.norm(self.separations, axis=1) * self.spacing

    def index(self, delta) -> int:
        """Row of the canonical representative of +/-delta."""
        d = canonical(delta)
        hits = np.where(np.all(self.separations == d, axis=1))[0]
        if len(hits) == 0:
            raise KeyError(f"separation {tuple(delta)} not in basis")
        return int(hits[0])

    def fingerprint(self) -> str:
        h = hashlib.sha256(self.separations.tobytes())
        h.update(f"{self.spacing!r}{self.statistics}{self.band_pair}".encode())
        return h.hexdigest()


def canonical(delta) -> np.ndarray:
    d = np.asarray(delta, dtype=np.int64)
    nz = np.nonzero(d)[0]
    if len(nz) == 0:
        raise ValueError("zero separation has no pair state")
    return d if d[nz[0]] > 0 else -d


def enumerate_separations(r_max_a: float) -> np.ndarray:
    """Canonical integer Delta with 0 < |Delta| <= r_max_a, ordered by (|Delta|^2, Delta)."""
    n = int(math.floor(r_max_a + 1e-9))
    lim = r_max_a**2 * (1 + 1e-9)
    out = []
    for d in itertools.product(range(-n, n + 1), repeat=3):
        r2 = d[0] ** 2 + d[1] ** 2 + d[2] ** 2
        if r2 == 0 or r2 > lim:
            continue
        first = next(x for x in d if x != 0)
        if first < 0:
            continue
        out.append((r2, d))
    out.sort()
    return np.array([d for _, d in out], dtype=np.int64).reshape(-1, 3)


def build_pair_basis(spec: LatticeSpec, r_max: float, statistics: str = "boson", band_pair=(0, 0)) -> PairBasis:
    """Pair basis for all separations within ``r_max`` (m)."""
    if tuple(band_pair) != (0, 0):
        raise NotImplementedError("only the lowest band pair (0, 0) is implemented")
    ratio = r_max / spec.spacing
    if ratio < 1 - 1e-12:
        raise EmptyBasisError(f"R_max = {r_max:g} m is below the lattice spacing")
    seps = enumerate_separations(ratio)
    return PairBasis(separations=seps, spacing=spec.a, statistics=statistics, band_pair=tuple(band_pair))


@dataclass(frozen=True)
class PotentialMatrix:
    """V_AB in the pair basis. ``values`` is the diagonal (erg).

    With smearing, ``values`` holds the Wannier-averaged diagonal,
    ``point_values`` the bare ones and ``offdiag`` the site-changing elements.
    """

    values: np.ndarray
    point_values: np.ndarray
    smeared: bool = False
    offdiag: Optional[np.ndarray] = None
    intensity: float = 0.0
    extras: dict = field(default_factory=dict)

    def matrix(self, include_offdiag: bool = False) -> np.ndarray:
        m = np.diag(self.values)
        if include_offdiag and self.offdiag is not None:
            m = m + self.offdiag
        return m

    def normalized(self, pair_hopping: float) -> np.ndarray:
        """Diagonal in units of lambda_nm(1)."""
        return self.values / pair_hopping

    def max_offdiag_ratio(self) -> float:
        if self.offdiag is None:
            return 0.0
        diag = np.abs(self.values)
        ratios = np.abs(self.offdiag) / np.minimum.outer(diag, diag)
        np.fill_diagonal(ratios, 0.0)
        return float(np.max(ratios))


def _raw_v(ctx: PotentialContext, vec):
    """V_AB at cm-vectors (..., 3) without the cutoff check."""
    r = np.linalg.norm(vec, axis=-1)
    ct = np.clip(vec @ np.asarray(ctx.laser_direction) / r, -1, 1)
    return -(2 * math.pi * ctx.k**3 * ctx.alpha**2 * ctx.intensity / C_LIGHT) * f_theta(ctx.k * r, ct)


def _gh_grid(sigma: float, order: int):
    """Nodes/weights for averaging over a relative Gaussian of variance sigma^2 per axis."""
    x, w = np.polynomial.hermite.hermgauss(order)
    x = x * math.sqrt(2) * sigma
    w = w / math.sqrt(math.pi)
    X = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1).reshape(-1, 3)
    W = np.einsum("i,j,k->ijk", w, w, w).ravel()
    return X, W


def potential_matrix(
    basis: PairBasis,
    ctx: PotentialContext,
    smear: bool = False,
    wannier: Optional[WannierFunction] = None,
    order: int = 24,
) -> PotentialMatrix:
    """Pair matrix elements of V_AB.

    The point form evaluates V at Delta a. The smeared form averages V over
    the relative-coordinate density of two n = 0 orbitals (variance sigma^2
    per axis) and also fills the site-changing elements, which carry the
    one-atom overlap exp(-|Delta - Delta'|^2 a^2 / (4 sigma^2)).
    """
    seps = basis.separations.astype(float) * basis.spacing
    lengths = np.linalg.norm(seps, axis=1)
    if np.any(lengths < ctx.cutoff):
        raise CutoffError(f"basis contains separations below r_c = {ctx.cutoff:g} cm")
    point = _raw_v(ctx, seps)
    if not smear:
        return PotentialMatrix(values=point, point_values=point, intensity=ctx.intensity)
    if wannier is None:
        raise ValueError("smeared matrix elements need a WannierFunction")
    X, W = _gh_grid(wannier.sigma, order)

    def smeared_at(center):
        return float(W @ _raw_v(ctx, center[None, :] + X))

    diag = np.array([smeared_at(c) for c in seps])
    m = len(basis)
    off = np.zeros((m, m))
    s2 = wannier.sigma**2
    for i in range(m):
        for j in range(i + 1, m):
            best = 0.0
            # both exchange partners of Delta' contribute; the nearer one dominates
            for sgn in (1, -1):
                dd = seps[i] - sgn * seps[j]
                ov = math.exp(-float(dd @ dd) / (4 * s2))
                if ov < 1e-300:
                    continue
                mid = 0.5 * (seps[i] + sgn * seps[j])
                if np.linalg.norm(mid) == 0:
                    continue
                val = basis.sign ** (sgn < 0) * ov * smeared_at(mid)
                best = val if abs(val) > abs(best) else best
            off[i, j] = off[j, i] = best
    return PotentialMatrix(values=diag, point_values=point, smeared=True, offdiag=off, intensity=ctx.intensity)
