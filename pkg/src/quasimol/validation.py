"""Self-checks run by ``validate-all`` and ``validate-green``.

Each check reports pass / warn / fail together with the measured deviation
and the tolerance it was held to; nothing here raises on a failed check.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .green import GreenEngine, QuadratureSettings, key_of, rho0
from .green_oracle import bz_green, watson_value
from .lattice import enumerate_separations
from .potential import COS_110, COS_111, v_ab, v_axis_110, v_axis_111
from .spectral import delta_rho, find_bound_states, find_resonances, lorentzian_fit, det_normalized
from .wavefunction import solve_coefficients, unperturbed_state


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str  # pass | warn | fail
    measured: float
    tolerance: float
    detail: str = ""
    seconds: float = 0.0


def _status(ok: bool, warn: bool = False) -> str:
    return "pass" if ok and not warn else ("warn" if ok else "fail")


def check_identities(system, n: int = 1000) -> CheckResult:
    t0 = time.perf_counter()
    ctx = system.context(1.0)
    r = np.geomspace(ctx.cutoff * 1.000001, 10 / ctx.k, n)
    worst = 0.0
    for closed, ct in ((v_axis_111, COS_111), (v_axis_110, COS_110)):
        ref = v_ab(ctx, (r, np.full_like(r, ct)))
        worst = max(worst, float(np.max(np.abs(closed(ctx, r) - ref) / np.abs(ref))))
    return CheckResult("closed-form axis potentials", _status(worst < 1e-12), worst, 1e-12,
                       f"{n} log-spaced r in [r_c, 10/k]", time.perf_counter() - t0)


def check_watson(engine: GreenEngine) -> CheckResult:
    t0 = time.perf_counter()
    got = engine.values([3.0], [(0, 0, 0)], 0.0)[0, 0].real
    err = abs(got - watson_value())
    return CheckResult("Watson value g(3,0)", _status(err < 1e-6), err, 1e-6, f"{got:.10f}", time.perf_counter() - t0)


def oracle_table(engine: GreenEngine, energies=None, eta_inband: float = 0.05, n_bz: int = 2048, r_max: float = 2.0):
    """Rows (E', eta, Delta, Delta', bessel, oracle, rel_err) over pairs with |Delta|, |Delta'| <= r_max."""
    if energies is None:
        energies = [-3.6, -2.5, -1.2, -0.4, 0.3, 1.7, 2.8, 3.2, 4.0, 6.0]
    seps = enumerate_separations(r_max)
    rows = []
    vs = {}
    for i, d in enumerate(seps):
        for dp in seps[i:]:
            for v in (d - dp, d + dp):
                vs.setdefault(key_of(v), v)
    keys = list(vs)
    for e in energies:
        eta = eta_inband if abs(e) < 3 else 0.0
        bes = (engine.inband([e], keys, eta)[0] if eta > 0 else engine.values([e], keys, 0.0)[0])
        for k, b in zip(keys, bes):
            o = bz_green(e, k, eta, n_bz)
            rows.append((e, eta, k, complex(b), complex(o), abs(b - o) / abs(o)))
    return rows


def check_oracle(engine: GreenEngine, quick: bool = True) -> CheckResult:
    t0 = time.perf_counter()
    energies = [-3.6, 0.3, 2.8, 4.0] if quick else None
    rows = oracle_table(engine, energies, n_bz=1024 if quick else 2048, r_max=1.5 if quick else 2.0)
    worst = max(r[-1] for r in rows)
    return CheckResult("Bessel integrals vs zone quadrature", _status(worst < 1e-5), worst, 1e-5,
                       f"{len(rows)} elements", time.perf_counter() - t0)


def check_branch_continuity(engine: GreenEngine) -> CheckResult:
    """Damped in-band integral at E' = 3, extrapolated in sqrt(eta), against the E' >= 3 branch."""
    t0 = time.perf_counter()
    etas = np.array([4e-3, 2e-3, 1e-3, 5e-4])
    vals = np.array([engine.inband([3.0], [(0, 0, 0)], e)[0, 0] for e in etas])
    x = np.sqrt(etas)
    w = np.array([np.prod([x[i] / (x[i] - x[j]) for i in range(len(x)) if i != j]) for j in range(len(x))])
    lim = complex(w @ vals)
    err = abs(lim.real - engine.values([3.0], [(0, 0, 0)], 0.0)[0, 0].real)
    return CheckResult("band-edge branch continuity", _status(err < 1e-5), err, 1e-5,
                       "sqrt(eta) extrapolation at E'=3", time.perf_counter() - t0)


def check_rho0(system, points: int = 2401) -> CheckResult:
    t0 = time.perf_counter()
    full = np.linspace(-3, 3, points)
    r = rho0(system.basis, full[1:-1], 0.0, system.engine)
    integral = float(np.trapezoid(np.concatenate([[0], r, [0]]), full))
    asym = float(np.max(np.abs(r - r[::-1])))
    err = abs(integral - 1)
    return CheckResult("rho0 normalization and symmetry", _status(err < 1e-3 and asym < 1e-4), max(err, asym), 1e-3,
                       f"integral={integral:.6f} asym={asym:.2e}", time.perf_counter() - t0)


def check_eta(system, warn_above: float = 0.05, points=(0.5, 1.94, 2.5)) -> CheckResult:
    """Extrapolated g must not move when the eta sequence is halved."""
    t0 = time.perf_counter()
    s = system.engine.settings
    halved = GreenEngine(QuadratureSettings(tol=s.tol, etas=tuple(e / 2 for e in s.etas)))
    keys = [(0, 0, 0), (0, 0, 1), (1, 1, 1)]
    a = system.engine.values(list(points), keys, 0.0)
    b = halved.values(list(points), keys, 0.0)
    diff = float(np.max(np.abs(a - b)))
    big = max(s.etas) > warn_above
    detail = f"max eta {max(s.etas):g}" + (" exceeds the recommended bound" if big else "")
    st = "fail" if diff >= 1e-6 else ("warn" if big else "pass")
    return CheckResult("eta extrapolation stability", st, diff, 1e-6, detail, time.perf_counter() - t0)


def check_lorentzian(system, intensity: float, tol: float = 0.05) -> CheckResult:
    t0 = time.perf_counter()
    res = [r for r in find_resonances(system, intensity) if r.valid]
    if not res:
        return CheckResult("width vs Lorentzian fit", "warn", float("nan"), tol, "no valid resonance", time.perf_counter() - t0)
    worst = 0.0
    for r in res:
        fit = lorentzian_fit_for(system, intensity, r)
        worst = max(worst, abs(fit.gamma - r.gamma_prime) / r.gamma_prime)
    return CheckResult("width vs Lorentzian fit", _status(worst < tol), worst, tol,
                       f"{len(res)} valid resonance(s)", time.perf_counter() - t0)


def lorentzian_fit_for(system, intensity, record, window: float = 2.0, points: int = 401):
    """Fit delta-rho around one resonance over E_r +/- window*Gamma', clipped to the band."""
    half = window * record.gamma_prime
    lo, hi = max(record.e_r - half, -2.999), min(record.e_r + half, 2.999)
    e = np.linspace(lo, hi, points)
    dr, _ = delta_rho(system, e, intensity)
    return lorentzian_fit(e, dr, record.e_r, record.gamma_prime, window=window)


def check_trivial(system) -> CheckResult:
    t0 = time.perf_counter()
    problems = []
    v = system.v(0.0)
    if np.any(v != 0):
        problems.append("V != 0")
    e = np.array([-2.5, 0.3, 2.2, 3.5])
    d = det_normalized(system.green(e), v)
    if np.any(d != 1):
        problems.append("D != 1")
    dr, _ = delta_rho(system, e[:3], 0.0)
    if np.any(dr != 0):
        problems.append("delta rho != 0")
    inc = unperturbed_state(system.basis, "localized", ((0, 0, 0), tuple(system.basis.separations[0])))
    st = solve_coefficients(inc, system, 0.3, 0.0)
    if not np.array_equal(st.coefficients, inc.coefficients):
        problems.append("C != C0")
    if find_resonances(system, 0.0) or find_bound_states(system, 0.0):
        problems.append("roots at I = 0")
    return CheckResult("I = 0 limits", _status(not problems), float(len(problems)), 0.0,
                       ", ".join(problems) or "V=0, D=1, delta rho=0, C=C0, no roots", time.perf_counter() - t0)


def validate_all(config, quick: bool = True) -> list:
    system = config.system()
    eng = system.engine
    checks = [
        lambda: check_identities(system),
        lambda: check_watson(eng),
        lambda: check_branch_continuity(eng),
        lambda: check_oracle(eng, quick=quick),
        lambda: check_rho0(system),
        lambda: check_eta(system, config.numerics.max_eta_warning),
        lambda: check_trivial(system),
        lambda: check_lorentzian(system, config.binding_laser.intensity),
    ]
    out = []
    for c in checks:
        try:
            out.append(c())
        except Exception as exc:  # a crashing check is a failed check
            out.append(CheckResult(getattr(c, "__name__", "check"), "fail", float("nan"), float("nan"), repr(exc)))
    return out
