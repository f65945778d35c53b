"""Entanglement of formation, log-negativity, entanglement rate and regime maps."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import gaussian
from .params import SystemParams, build_dynamics, derive_couplings, is_stable
from .spectra import FrequencyGrid, StandardForm, covariance_grid, standard_form_arrays


class UnphysicalInputError(ValueError):
    pass


class StabilityError(RuntimeError):
    """Requested quantity needs a stable steady state."""


@dataclass(frozen=True)
class EntanglementPoint:
    omega: float
    r0: float
    ef: float
    log_neg: float
    stable: bool


def ef_from_r0(r0: np.ndarray | float) -> np.ndarray | float:
    """cosh^2 r log2 cosh^2 r - sinh^2 r log2 sinh^2 r (0 at r = 0)."""
    r0 = np.asarray(r0, dtype=float)
    c2 = np.cosh(r0) ** 2
    s2 = np.sinh(r0) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = c2 * np.log2(c2) - np.where(s2 > 0, s2 * np.log2(np.where(s2 > 0, s2, 1.0)), 0.0)
    out = np.where(r0 > 0, out, 0.0)
    return float(out) if out.ndim == 0 else out


def r0_arrays(u, v, w, tol: float = 1e-9) -> np.ndarray:
    """Minimal disentangling anti-squeezing from standard-form scalars (vectorized)."""
    u, v, w = (np.asarray(x, dtype=float) for x in (u, v, w))
    d = u * v - w**2
    gamma = 2.0 * (d**2 + 1.0) - (u - v) ** 2
    # factored forms of beta_+- = u^2 + v^2 + 4w^2 + 2uv +- 4w(u + v) and of
    # gamma^2 - beta_+ beta_-; the expanded versions cancel badly for nearly pure states
    beta_p = (u + v + 2.0 * w) ** 2
    beta_m = (u + v - 2.0 * w) ** 2
    disc = 4.0 * (d + 1.0) ** 2 * (d - 1.0 - (u - v)) * (d - 1.0 + (u - v))
    scale = np.maximum(gamma**2, 1.0)
    if np.any(beta_m <= 0) or np.any(disc < -tol * scale):
        raise UnphysicalInputError("standard form violates beta_- > 0 or gamma^2 >= beta_+ beta_-")
    # (gamma - sqrt(disc)) / beta_- rewritten as beta_+ / (gamma + sqrt(disc)) to avoid cancellation
    root = np.sqrt(np.maximum(disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(gamma > 0, beta_p / (gamma + root), (gamma - root) / beta_m)
        r0 = 0.25 * np.log(ratio)
    # no separable branch in the formula: zero anti-squeezing needed
    return np.where(np.isfinite(r0) & (r0 > 0), r0, 0.0)


def entanglement_of_formation(sf: StandardForm) -> tuple[float, float]:
    """Return ``(r0, E_F)`` in ebits for a standard-form two-mode state."""
    r0 = float(r0_arrays(sf.u, sf.v, sf.w))
    return r0, float(ef_from_r0(r0))


def r0_low_noise(C_om: float, C_em: float) -> float:
    """Zero-frequency, zero-temperature squeezing from the two cooperativities."""
    if C_om < 0 or C_em < 0:
        raise ValueError("cooperativities must be >= 0")
    sp = (math.sqrt(C_om) + math.sqrt(C_em)) ** 2
    sm = (math.sqrt(C_om) - math.sqrt(C_em)) ** 2
    return 0.5 * math.log((1.0 + sp) / (1.0 + sm))


def log_negativity_arrays(u, v, w) -> np.ndarray:
    """Log-negativity (ebits) of standard-form states; a separability oracle independent of r0."""
    u, v, w = (np.asarray(x, dtype=float) for x in (u, v, w))
    delta = u**2 + v**2 + 2.0 * w**2
    det_v = (u * v - w**2) ** 2
    # delta^2 - 4 det V factors exactly, which keeps nu accurate at the threshold
    root = (u + v) * np.sqrt((u - v) ** 2 + 4.0 * w**2)
    nu2 = 2.0 * det_v / (delta + root)
    nu = np.sqrt(np.maximum(nu2, 0.0))
    with np.errstate(divide="ignore"):
        return np.maximum(0.0, -np.log2(nu))


def ef_grid(sys, omegas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(r0, E_F) on a frequency grid."""
    u, v, w = standard_form_arrays(covariance_grid(sys, omegas))
    r0 = r0_arrays(u, v, w)
    return r0, np.asarray(ef_from_r0(r0))


def entanglement_point(params: SystemParams, omega: float) -> EntanglementPoint:
    sys = build_dynamics(params)
    if not is_stable(sys):
        return EntanglementPoint(omega, math.nan, math.nan, math.nan, False)
    V = covariance_grid(sys, [omega])
    u, v, w = standard_form_arrays(V)
    r0 = float(r0_arrays(u, v, w)[0])
    return EntanglementPoint(omega, r0, float(ef_from_r0(r0)), gaussian.log_negativity(V[0]), True)


@dataclass(frozen=True)
class RateResult:
    value: float
    converged: bool
    refined_value: float
    flanks_ok: bool


def _ef_integral(sys, omegas: np.ndarray) -> tuple[float, np.ndarray]:
    _, ef = ef_grid(sys, omegas)
    return float(np.trapezoid(ef, omegas) / (2 * math.pi)), ef


def entanglement_rate(
    sys, grid: FrequencyGrid | None = None, check_convergence: bool = True, max_widenings: int = 3
) -> RateResult:
    """E_R = (1/2pi) int E_F(omega) d omega in ebits/s.

    The span is doubled (same step) up to ``max_widenings`` times until E_F on
    both grid edges is below 1e-6 of its maximum. Converged means that flank
    test passes and halving the step moves the integral by < 0.1 %.
    """
    if not is_stable(sys):
        raise StabilityError("entanglement rate is undefined for an unstable system")
    grid = grid or FrequencyGrid()
    g_em = sys.params.g_em
    for attempt in range(max_widenings + 1):
        value, ef = _ef_integral(sys, grid.omegas(g_em))
        peak = ef.max()
        flanks_ok = bool(peak == 0 or (ef[0] < 1e-6 * peak and ef[-1] < 1e-6 * peak))
        if flanks_ok or attempt == max_widenings:
            break
        grid = grid.widened()
    if not check_convergence:
        return RateResult(value, flanks_ok, value, flanks_ok)
    refined, _ = _ef_integral(sys, grid.refined().omegas(g_em))
    close = abs(refined - value) <= 1e-3 * max(abs(refined), 1e-300) or refined == value
    return RateResult(value, bool(close and flanks_ok), refined, flanks_ok)


def _map_rows(fn, rows, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, rows))
    return [fn(r) for r in rows]


@dataclass(frozen=True)
class RegimeMap:
    """E_F and stability over (C_om, R); rows index C_om, columns index R."""

    C_om: np.ndarray
    ratio_R: np.ndarray
    omega: float
    ef: np.ndarray
    r0: np.ndarray
    log_neg: np.ndarray
    stable: np.ndarray

    def point(self, i: int, j: int) -> EntanglementPoint:
        return EntanglementPoint(self.omega, self.r0[i, j], self.ef[i, j], self.log_neg[i, j], bool(self.stable[i, j]))


def regime_map(
    template: SystemParams,
    C_values,
    R_values,
    omega: float | None = None,
    threads: int | None = None,
) -> RegimeMap:
    """E_F heat map at fixed frequency; unstable cells hold NaN."""
    C_values = np.asarray(C_values, dtype=float)
    R_values = np.asarray(R_values, dtype=float)
    omega = template.g_em if omega is None else omega

    def row(C):
        out = np.full((4, len(R_values)), np.nan)
        for j, R in enumerate(R_values):
            pt = entanglement_point(template.with_(C_om=float(C)).with_ratio(float(R)), omega)
            out[:, j] = (pt.r0, pt.ef, pt.log_neg, 1.0 if pt.stable else 0.0)
        return out

    rows = _map_rows(row, C_values, threads)
    stack = np.stack(rows)
    return RegimeMap(
        C_om=C_values,
        ratio_R=R_values,
        omega=omega,
        r0=stack[:, 0],
        ef=stack[:, 1],
        log_neg=stack[:, 2],
        stable=stack[:, 3].astype(bool),
    )


def critical_C_om(template: SystemParams, ratio_R: float, C_max: float = 1e4, rtol: float = 1e-6) -> float:
    """Smallest C_om making the system unstable at the given R (inf if none below C_max)."""
    base = template.with_ratio(ratio_R)

    def stable(C):
        return is_stable(build_dynamics(base.with_(C_om=C)))

    if stable(C_max):
        return math.inf
    lo, hi = 0.0, C_max
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if stable(mid):
            lo = mid
        else:
            hi = mid
    return hi


@dataclass(frozen=True)
class RateScan:
    ratio_R: np.ndarray
    er: np.ndarray
    converged: np.ndarray


def entanglement_rate_scan(
    template: SystemParams,
    R_values,
    grid: FrequencyGrid | None = None,
    check_convergence: bool = True,
    threads: int | None = None,
) -> RateScan:
    """E_R over a list of R; unstable configurations give NaN."""
    R_values = np.asarray(R_values, dtype=float)

    def one(R):
        sys = build_dynamics(derive_couplings(template.with_ratio(float(R))))
        if not is_stable(sys):
            return math.nan, False
        res = entanglement_rate(sys, grid, check_convergence=check_convergence)
        return res.value, res.converged

    out = _map_rows(one, R_values, threads)
    return RateScan(R_values, np.array([o[0] for o in out]), np.array([o[1] for o in out], dtype=bool))
