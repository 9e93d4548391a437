r"""Two-atom lattice Green function on the simple-cubic lattice.

Working in the relative coordinate at zero total quasi-momentum, the
unperturbed pair Green function is C g(E', v) with C = 1/lambda_nm(1) and

    g(E', v) = (2 pi)^-3 \int d^3q  exp(i q.v) / (E' + i eta - sum_i cos q_i).

Two integral representations are used:

* inside the band (|E'| < 3)
      g = -i (-i)^{|v1|+|v2|+|v3|} \int_0^inf exp((i E' - eta) t) prod_i J_{|v_i|}(t) dt
* above the band (E' >= 3)
      g = \int_0^inf exp(-(E' - 3) t) prod_i [exp(-t) I_{|v_i|}(t)] dt
  and below it g(E', v) = -(-1)^{sum|v_i|} g(-E', v).

The (-i)^{sum|v|} phase follows from J_n(t) = (i^-n / 2 pi) \int exp(i t cos q + i n q) dq;
without it off-site elements come out with the wrong sign pattern. The
exchange-symmetrized element between canonical states Delta, Delta' is
g(Delta - Delta') + s g(Delta + Delta'), s = +1 (bosons) or -1 (fermions).

eta -> 0 is reached by polynomial (Richardson) extrapolation from a short
sequence of finite eta values; passing ``eta=0`` selects it.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy import special

# Landau: |J_n(x)| <= b x^(-1/3) for all n >= 0, x > 0
_LANDAU_B = 0.7857468705


class QuadratureError(RuntimeError):
    """Truncated integral did not meet the tolerance within the panel budget."""

    def __init__(self, message, partial=None, bound=None):
        super().__init__(message)
        self.partial = partial
        self.bound = bound


class BranchError(ValueError):
    """Requested integral representation does not cover the given E'."""


@dataclass(frozen=True)
class NormalizedEnergy:
    e_prime: float
    eta: float = 0.0

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        if not math.isfinite(self.e_prime):
            raise ValueError("E' must be finite")


@dataclass(frozen=True)
class QuadratureSettings:
    tol: float = 1e-8
    etas: tuple = (1e-2, 5e-3, 2.5e-3)
    panel: float = 1.0  # in-band panel length
    nodes: int = 16
    max_panels: int = 200_000
    above_panel: float = 2.0
    asymptotic_terms: int = 8

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        etas = tuple(float(e) for e in self.etas)
        if not etas or any(e <= 0 for e in etas) or len(set(etas)) != len(etas):
            raise ValueError("etas must be distinct positive numbers")
        object.__setattr__(self, "etas", etas)

    def richardson_weights(self) -> np.ndarray:
        """Lagrange weights extrapolating samples at ``etas`` to eta = 0."""
        e = np.array(self.etas)
        w = np.ones(len(e))
        for j in range(len(e)):
            for i in range(len(e)):
                if i != j:
                    w[j] *= e[i] / (e[i] - e[j])
        return w


def key_of(v) -> tuple:
    """Sorted absolute components: g depends on nothing else."""
    return tuple(sorted(abs(int(x)) for x in v))


def _gl_panels(edges, nodes):
    x, w = np.polynomial.legendre.leggauss(nodes)
    a, b = edges[:-1, None], edges[1:, None]
    t = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    wt = (0.5 * (b - a) * w).ravel()
    return t, wt


def _dots(rows, vec) -> np.ndarray:
    """Row-wise dot products, each independent of how many rows are passed."""
    return np.array([np.dot(r, vec) for r in rows])


def tail_bound(eta: float, T: float) -> float:
    """|\\int_T^inf e^{-eta t} J J J dt| <= b^3 E1(eta T)."""
    return _LANDAU_B**3 * float(special.exp1(eta * T))


def truncation_point(eta: float, tol: float) -> float:
    """Smallest T (to 1%) with the tail bound below tol/2."""
    target = tol / 2 / _LANDAU_B**3
    lo, hi = 1e-12, 1.0
    while special.exp1(hi) > target:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if special.exp1(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-3 * hi:
            break
    return hi / eta


def _scaled_expint(x: float, pmax_terms: int) -> np.ndarray:
    """F_p(x) = e^x E_p(x) for p = 3/2, 5/2, ... (``pmax_terms`` values)."""
    out = np.empty(pmax_terms)
    if x == 0:
        for k in range(pmax_terms):
            out[k] = 1.0 / (0.5 + k)
        return out
    sx = math.sqrt(x)
    out[0] = 2.0 * (1.0 - math.sqrt(math.pi) * sx * special.erfcx(sx))
    for k in range(1, pmax_terms):
        p = 0.5 + k  # p of the previous entry
        out[k] = (1.0 - x * out[k - 1]) / p
    return out


def _ive_asymptotic_coeffs(key, terms: int) -> np.ndarray:
    """c_k with prod_i e^{-t} I_{n_i}(t) ~ (2 pi t)^{-3/2} sum_k c_k t^{-k}."""
    poly = np.array([1.0])
    for n in key:
        a = np.empty(terms)
        a[0] = 1.0
        for k in range(1, terms):
            a[k] = -a[k - 1] * (4 * n * n - (2 * k - 1) ** 2) / (k * 8)
        poly = np.convolve(poly, a)[:terms]
    return poly


@dataclass
class CacheStats:
    lookups: int = 0
    evaluations: int = 0

    @property
    def hits(self) -> int:
        return self.lookups - self.evaluations

    @property
    def hit_rate(self) -> float:
        return self.hits / self.lookups if self.lookups else 0.0


class GreenEngine:
    """Evaluates g(E', v) for many index triples, with a shared value cache.

    Values are cached per (E', eta, key); eta = 0 means the extrapolated limit
    inside the band and the exact real value outside it. The cache lock makes
    concurrent insert-or-read safe; a value depends only on its own key, so
    racing writers store identical numbers.
    """

    def __init__(self, settings: QuadratureSettings | None = None):
        self.settings = settings or QuadratureSettings()
        self._cache: dict = {}
        self._rows: dict = {}
        self._grids: dict = {}
        self._lock = threading.RLock()
        self.stats = CacheStats()

    # ---- grids and product tables -------------------------------------------------
    def _inband_grid(self, eta_mode: float):
        with self._lock:
            if eta_mode in self._grids:
                return self._grids[eta_mode]
            s = self.settings
            eta_min = min(s.etas) if eta_mode == 0 else eta_mode
            T = truncation_point(eta_min, s.tol)
            npan = int(math.ceil(T / s.panel))
            truncated = npan > s.max_panels
            npan = min(npan, s.max_panels)
            T = npan * s.panel
            t, w = _gl_panels(np.linspace(0.0, T, npan + 1), s.nodes)
            if eta_mode == 0:
                rw = s.richardson_weights()
                damp = sum(c * np.exp(-e * t) for c, e in zip(rw, s.etas))
                bound = float(np.sum(np.abs(rw) * [tail_bound(e, T) for e in s.etas]))
            else:
                damp = np.exp(-eta_mode * t)
                bound = tail_bound(eta_mode, T)
            grid = {"t": t, "w": w * damp, "T": T, "bound": bound, "truncated": truncated, "J": np.empty((0, t.size))}
            self._grids[eta_mode] = grid
            return grid

    def _bessel_rows(self, grid, nmax: int, fn):
        have = grid["J"].shape[0]
        if nmax >= have:
            extra = np.array([fn(n, grid["t"]) for n in range(have, nmax + 1)])
            grid["J"] = np.vstack([grid["J"], extra]) if have else extra
        return grid["J"]

    def _inband_rows(self, keys, eta_mode):
        grid = self._inband_grid(eta_mode)
        with self._lock:
            missing = [k for k in keys if (eta_mode, k) not in self._rows]
            if missing:
                J = self._bessel_rows(grid, max(max(k) for k in missing), special.jv)
                for k in missing:
                    self._rows[(eta_mode, k)] = grid["w"] * J[k[0]] * J[k[1]] * J[k[2]]
            return np.array([self._rows[(eta_mode, k)] for k in keys]), grid

    def _above_T(self, key) -> float:
        return 400.0 + 40.0 * max(key) ** 2

    def _above_grid(self, T: float):
        with self._lock:
            gk = ("above", T)
            if gk not in self._grids:
                s = self.settings
                fine = np.concatenate([[0.0], 2.0 ** np.arange(-12, 1)])  # graded near 0
                coarse = np.arange(1.0 + s.above_panel, T + 0.5 * s.above_panel, s.above_panel)
                edges = np.concatenate([fine, coarse])
                edges[-1] = T
                t, w = _gl_panels(edges, s.nodes)
                self._grids[gk] = {"t": t, "w": w, "T": T, "J": np.empty((0, t.size))}
            return self._grids[gk]

    def _above_rows(self, keys, T):
        grid = self._above_grid(T)
        with self._lock:
            missing = [k for k in keys if (("above", T), k) not in self._rows]
            if missing:
                I = self._bessel_rows(grid, max(max(k) for k in missing), special.ive)
                for k in missing:
                    self._rows[(("above", T), k)] = grid["w"] * I[k[0]] * I[k[1]] * I[k[2]]
            return np.array([self._rows[(("above", T), k)] for k in keys]), grid

    # ---- raw evaluation -----------------------------------------------------------
    def _eval_inband(self, energies, keys, eta_mode):
        P, grid = self._inband_rows(keys, eta_mode)
        t = grid["t"]
        out = np.empty((len(energies), len(keys)), dtype=complex)
        # one energy at a time: a value must not depend on which batch computed it
        for i, e in enumerate(energies):
            ph = float(e) * t
            out[i] = _dots(P, np.cos(ph)) + 1j * _dots(P, np.sin(ph))
        phase = np.array([(-1j) ** ((sum(k) + 1) % 4) for k in keys])
        out *= phase[None, :]
        if grid["truncated"]:
            raise QuadratureError(
                f"in-band integral truncated at T = {grid['T']:g}; tail bound {grid['bound']:.3g}",
                partial=out,
                bound=grid["bound"],
            )
        return out

    def _eval_above(self, energies, keys):
        s = self.settings
        out = np.empty((len(energies), len(keys)))
        groups: dict = {}
        for j, k in enumerate(keys):
            groups.setdefault(self._above_T(k), []).append(j)
        for T, cols in groups.items():
            ks = [keys[j] for j in cols]
            P, grid = self._above_rows(ks, T)
            t = grid["t"]
            eps = np.asarray(energies) - 3.0
            body = np.array([_dots(P, np.exp(-ep * t)) for ep in eps])
            coeffs = np.array([_ive_asymptotic_coeffs(k, s.asymptotic_terms) for k in ks])
            powers = T ** (-0.5 - np.arange(s.asymptotic_terms))
            tail = np.zeros_like(body)
            for i, ep in enumerate(eps):
                x = ep * T
                if x > 700:
                    continue
                F = _scaled_expint(x, s.asymptotic_terms)
                tail[i] = math.exp(-x) * (2 * math.pi) ** -1.5 * (coeffs @ (powers * F))
            out[:, cols] = body + tail
        return out

    def inband(self, energies, keys, eta: float) -> np.ndarray:
        """Damped Bessel-J integral at any real E' (valid everywhere for eta > 0)."""
        energies = np.atleast_1d(np.asarray(energies, dtype=float))
        return self._eval_inband(energies, [tuple(k) for k in keys], float(eta))

    def raw(self, energies, keys, eta: float) -> np.ndarray:
        """Uncached g for each energy (rows) and key (columns)."""
        energies = np.atleast_1d(np.asarray(energies, dtype=float))
        keys = [tuple(k) for k in keys]
        out = np.empty((len(energies), len(keys)), dtype=complex)
        inside = np.abs(energies) < 3.0
        if np.any(inside):
            out[inside] = self._eval_inband(energies[inside], keys, float(eta))
        above = energies >= 3.0
        if np.any(above):
            out[above] = self._eval_above(energies[above], keys)
        below = energies <= -3.0
        if np.any(below):
            sgn = np.array([-((-1) ** (sum(k) % 2)) for k in keys], dtype=float)
            out[below] = self._eval_above(-energies[below], keys) * sgn[None, :]
        return out

    # ---- cached interface ---------------------------------------------------------
    def values(self, energies, keys, eta: float) -> np.ndarray:
        energies = np.atleast_1d(np.asarray(energies, dtype=float))
        keys = [tuple(k) for k in keys]
        eta = self._eta_key(eta)
        out = np.empty((len(energies), len(keys)), dtype=complex)
        todo: dict = {}
        with self._lock:
            for i, e in enumerate(energies):
                ek = self._e_key(e, eta)
                miss = tuple(j for j, k in enumerate(keys) if (ek, k) not in self._cache)
                for j, k in enumerate(keys):
                    if j not in miss:
                        out[i, j] = self._cache[(ek, k)]
                if miss:
                    todo.setdefault(miss, []).append(i)
        for miss, rows in todo.items():
            ks = [keys[j] for j in miss]
            vals = self.raw(energies[rows], ks, eta)
            with self._lock:
                for r_i, i in enumerate(rows):
                    ek = self._e_key(energies[i], eta)
                    for c_j, j in enumerate(miss):
                        self._cache.setdefault((ek, ks[c_j]), vals[r_i, c_j])
                        out[i, j] = self._cache[(ek, ks[c_j])]
        return out

    @staticmethod
    def _eta_key(eta):
        eta = float(eta)
        if eta < 0:
            raise ValueError("eta must be non-negative")
        return eta

    @staticmethod
    def _e_key(e, eta):
        # outside the band eta plays no role
        return (float(e), eta if abs(e) < 3.0 else 0.0)

    def matrices(self, basis, energies, eta: float = 0.0) -> np.ndarray:
        """Symmetrized pair Green matrices (units of C) for each energy."""
        idx, keys = pair_index(basis)
        g = self.values(energies, keys, eta)
        with self._lock:
            self.stats.lookups += 2 * len(basis) ** 2 * g.shape[0]
            self.stats.evaluations += g.shape[0] * len(keys)
        return g[:, idx[0]] + basis.sign * g[:, idx[1]]

    def clear(self):
        with self._lock:
            self._cache.clear()
            self.stats = CacheStats()

    @property
    def cache_size(self) -> int:
        return len(self._cache)


_PAIR_INDEX: dict = {}
_PAIR_LOCK = threading.Lock()


def pair_index(basis):
    """(2, M, M) integer map to the distinct keys of Delta -/+ Delta'."""
    fp = basis.separations.tobytes()
    with _PAIR_LOCK:
        if fp in _PAIR_INDEX:
            return _PAIR_INDEX[fp]
    seps = basis.separations
    keys: dict = {}
    m = len(seps)
    idx = np.zeros((2, m, m), dtype=np.int64)
    for i in range(m):
        for j in range(m):
            for q, v in enumerate((seps[i] - seps[j], seps[i] + seps[j])):
                idx[q, i, j] = keys.setdefault(key_of(v), len(keys))
    res = (idx, list(keys))
    with _PAIR_LOCK:
        _PAIR_INDEX[fp] = res
    return res


_DEFAULT_ENGINE = GreenEngine()


def default_engine() -> GreenEngine:
    return _DEFAULT_ENGINE


def g_element_inband(e: NormalizedEnergy, mu_plus, mu_minus, sign: int = 1, engine: GreenEngine | None = None) -> complex:
    """g(mu_minus) + sign g(mu_plus) inside the band, in units of C.

    ``e.eta > 0`` evaluates at that damping; ``e.eta == 0`` returns the
    extrapolated eta -> 0 value.
    """
    if not abs(e.e_prime) < 3:
        raise BranchError("in-band representation needs |E'| < 3")
    engine = engine or _DEFAULT_ENGINE
    vals = engine.values([e.e_prime], [key_of(mu_minus), key_of(mu_plus)], e.eta)[0]
    return complex(vals[0] + sign * vals[1])


def g_element_above(e: NormalizedEnergy, mu_plus, mu_minus, sign: int = 1, engine: GreenEngine | None = None) -> float:
    """Real element for E' >= 3, in units of C."""
    if not e.e_prime >= 3:
        raise BranchError("above-band representation needs E' >= 3")
    engine = engine or _DEFAULT_ENGINE
    vals = engine.values([e.e_prime], [key_of(mu_minus), key_of(mu_plus)], 0.0)[0]
    return float((vals[0] + sign * vals[1]).real)


def lattice_g(e_prime, v, eta: float = 0.0, engine: GreenEngine | None = None):
    """Single-term g(E', v) (no exchange partner); vectorized over E'."""
    engine = engine or _DEFAULT_ENGINE
    out = engine.values(np.atleast_1d(e_prime), [key_of(v)], eta)[:, 0]
    return out if np.ndim(e_prime) else complex(out[0])


@dataclass(frozen=True)
class GreenMatrix:
    energy: NormalizedEnergy
    entries: np.ndarray  # units of C
    prefactor: float  # C = 2 N^2 / lambda_nm(1) in 1/erg

    def physical(self) -> np.ndarray:
        return self.entries * self.prefactor

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.entries, self.entries.T))


def green_matrix(basis, params, E: float, eta: float = 0.0, engine: GreenEngine | None = None) -> GreenMatrix:
    """Pair Green matrix at physical energy ``E`` (erg)."""
    if len(basis) == 0:
        raise ValueError("empty basis")
    engine = engine or _DEFAULT_ENGINE
    e_prime = float(params.to_normalized(E))
    ent = engine.matrices(basis, [e_prime], eta)[0]
    pref = 2 * basis.normalization**2 / params.pair_hopping
    return GreenMatrix(NormalizedEnergy(e_prime, eta), ent, pref)


def rho0(basis, e_grid, eta: float = 0.0, engine: GreenEngine | None = None) -> np.ndarray:
    """-(1/(pi N)) Im Tr G on a grid of E' with N = basis size.

    With that N the curve integrates to one over the band, because the
    exchange partners g(2 Delta) average to zero across it.
    """
    engine = engine or _DEFAULT_ENGINE
    G = engine.matrices(basis, e_grid, eta)
    tr = np.trace(G, axis1=1, axis2=2)
    return -tr.imag / (math.pi * len(basis))
