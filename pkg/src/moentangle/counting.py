"""Photon generation rates, optical/microwave cross-correlation g2 and the
dark-count verification criterion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .detection import DetectorModel
from .entanglement import StabilityError
from .params import is_stable
from .spectra import (
    ROW_A,
    ROW_A_DAG,
    ROW_C,
    ROW_C_DAG,
    FrequencyGrid,
    correlator,
    flux_grid,
    input_gram,
    scatter_grid,
)

# sign s in exp(-i s omega t) for each output row
_ROW_SIGN = {ROW_A_DAG: 1, ROW_A: -1, ROW_C: 1, ROW_C_DAG: -1}


class UndefinedG2Error(ArithmeticError):
    pass


class ResolutionError(ValueError):
    pass


def trapezoid_weights(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    w = np.zeros_like(x)
    dx = np.diff(x)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


def default_tau_grid(tau_b: float = 0.5e-6, half_span: float = 4e-6) -> np.ndarray:
    step = min(tau_b / 50.0, 1e-9)
    n = int(round(half_span / step))
    return np.arange(-n, n + 1) * step


@dataclass(frozen=True)
class PhotonRates:
    R_o: float
    R_e: float
    converged: bool


def rate_integral(s: np.ndarray, omegas: np.ndarray, weights: np.ndarray | None = None) -> float:
    """(1/2pi) int s d omega with the Lorentzian tails beyond the grid added.

    Far from resonance the thermal flux falls as 1/omega^2, so the missing
    tail past |omega| = W is s(W) W on each side.
    """
    weights = trapezoid_weights(omegas) if weights is None else weights
    tails = s[0] * abs(omegas[0]) + s[-1] * abs(omegas[-1])
    return float((weights @ s + tails) / (2 * math.pi))


def _rates_on(sys, omegas):
    f = flux_grid(sys, omegas)
    return rate_integral(f.s_o, omegas), rate_integral(f.s_e, omegas)


def photon_rates(sys, grid: FrequencyGrid | None = None) -> PhotonRates:
    """R = (1/2pi) int s(omega) d omega (tail-corrected), flagged converged when step halving moves both by < 0.1 %."""
    if not is_stable(sys):
        raise StabilityError("photon rates need a stable steady state")
    grid = grid or FrequencyGrid()
    g_em = sys.params.g_em
    R_o, R_e = _rates_on(sys, grid.omegas(g_em))
    R_o2, R_e2 = _rates_on(sys, grid.refined().omegas(g_em))
    ok = all(abs(a - b) <= 1e-3 * abs(b) for a, b in ((R_o, R_o2), (R_e, R_e2)) if b != 0)
    return PhotonRates(R_o, R_e, bool(ok))


def _fourier(values: np.ndarray, weights: np.ndarray, omegas: np.ndarray, taus: np.ndarray, sign: int, chunk: int = 512) -> np.ndarray:
    """(1/2pi) sum_k w_k f_k exp(sign * i omega_k tau) by direct quadrature."""
    wf = weights * values / (2 * math.pi)
    out = np.empty(len(taus), dtype=complex)
    for start in range(0, len(taus), chunk):
        t = taus[start : start + chunk]
        out[start : start + chunk] = np.exp(sign * 1j * np.outer(t, omegas)) @ wf
    return out


@dataclass(frozen=True)
class CorrelationTrace:
    """Correlation rates and unbinned g2 on a delay grid (seconds)."""

    tau: np.ndarray
    r_oe: np.ndarray
    r_eo: np.ndarray
    R_o: float
    R_e: float
    g2: np.ndarray = field(repr=False)

    @property
    def cross_power(self) -> np.ndarray:
        """R_oe R_eo = |R_oe|^2."""
        return (self.r_oe * self.r_eo).real


def correlation_trace(sys, taus: np.ndarray | None = None, grid: FrequencyGrid | None = None) -> CorrelationTrace:
    """Direct-quadrature inverse transforms of the cross spectra and g2(tau).

    R_oe(tau) = (1/2pi) int <a^dag c^dag>(omega) e^{-i omega tau},
    R_eo(tau) = (1/2pi) int <c a>(omega) e^{+i omega tau}.
    """
    if not is_stable(sys):
        raise StabilityError("correlation functions need a stable steady state")
    grid = grid or FrequencyGrid()
    taus = default_tau_grid() if taus is None else np.asarray(taus, dtype=float)
    omegas = grid.omegas(sys.params.g_em)
    w = trapezoid_weights(omegas)
    f = flux_grid(sys, omegas)
    R_o = rate_integral(f.s_o, omegas, w)
    R_e = rate_integral(f.s_e, omegas, w)
    if not R_o * R_e > 0:
        raise UndefinedG2Error("g2 is undefined when a photon rate vanishes")
    r_oe = _fourier(f.s_oe_dag, w, omegas, taus, -1)
    r_eo = _fourier(f.s_oe, w, omegas, taus, +1)
    g2 = 1.0 + (r_oe * r_eo).real / (R_o * R_e)
    return CorrelationTrace(taus, r_oe, r_eo, R_o, R_e, g2)


def two_point_function(sys, row_x: int, row_y: int, taus: np.ndarray, grid: FrequencyGrid | None = None) -> np.ndarray:
    """<X(tau) Y(0)> for output rows X, Y from the full input Gram matrix."""
    grid = grid or FrequencyGrid()
    omegas = grid.omegas(sys.params.g_em)
    coeffs = scatter_grid(sys, omegas)
    g = correlator(coeffs, input_gram(sys.port_occupations), row_x, row_y)
    return _fourier(g, trapezoid_weights(omegas), omegas, np.asarray(taus, float), -_ROW_SIGN[row_x])


def g2_wick(sys, taus: np.ndarray, grid: FrequencyGrid | None = None) -> np.ndarray:
    """g2 from all three Gaussian pairings of <a^dag(tau) c^dag c a(tau)>, no factoring shortcut."""
    taus = np.asarray(taus, dtype=float)
    tp = lambda x, y, t: two_point_function(sys, x, y, t, grid)  # noqa: E731
    grid = grid or FrequencyGrid()
    omegas = grid.omegas(sys.params.g_em)
    coeffs = scatter_grid(sys, omegas)
    gram = input_gram(sys.port_occupations)
    # occupations with the same tail treatment as the photon rates
    n_o = rate_integral(correlator(coeffs, gram, ROW_A_DAG, ROW_A).real, omegas)
    n_e = rate_integral(correlator(coeffs, gram, ROW_C_DAG, ROW_C).real, omegas)
    # <X(tau) Y(0)> with Y at the earlier time; <Y(0) X(tau)> = <X(tau) Y(0)> for commuting pairs
    ad_cd = tp(ROW_A_DAG, ROW_C_DAG, taus)
    a_c = tp(ROW_A, ROW_C, taus)
    ad_c = tp(ROW_A_DAG, ROW_C, taus)
    a_cd = tp(ROW_A, ROW_C_DAG, taus)
    numerator = ad_cd * a_c + ad_c * a_cd + n_o * n_e
    return (numerator / (n_o * n_e)).real


@dataclass(frozen=True)
class BinnedG2:
    """Piecewise g2 over windows [start_i, start_i + tau_b)."""

    starts: np.ndarray
    values: np.ndarray
    tau_b: float
    correlated: np.ndarray = field(repr=False)

    def index_of(self, tau: np.ndarray) -> np.ndarray:
        # small slack so grid points that sit on a boundary up to rounding land inside
        idx = np.floor((np.asarray(tau) - self.starts[0]) / self.tau_b + 1e-9).astype(int)
        return np.where((idx >= 0) & (idx < len(self.starts)), idx, -1)

    def at(self, tau: np.ndarray) -> np.ndarray:
        idx = self.index_of(tau)
        return np.where(idx >= 0, self.values[np.clip(idx, 0, None)], np.nan)

    @property
    def peak_index(self) -> int:
        return int(np.argmax(self.values))

    @property
    def peak(self) -> float:
        return float(self.values[self.peak_index])


def g2_binned(trace: CorrelationTrace, tau_b: float, anchor: float = 0.0, min_samples: int = 50) -> BinnedG2:
    """g2(tau_i) = 1 + int_{tau_i}^{tau_i + tau_b} R_oe R_eo / (R_o R_e tau_b).

    Windows tile the delay grid with a boundary at ``anchor``.
    """
    if not tau_b > 0:
        raise ValueError("tau_b must be > 0")
    tau = trace.tau
    step = float(np.min(np.diff(tau)))
    if tau_b / step < min_samples - 1e-9:
        raise ResolutionError(f"tau_b={tau_b:g}s holds only {tau_b / step:.1f} grid steps (< {min_samples})")
    cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(tau) * (trace.cross_power[1:] + trace.cross_power[:-1]))])
    i_lo = math.ceil((tau[0] - anchor) / tau_b - 1e-9)
    i_hi = math.floor((tau[-1] - anchor) / tau_b + 1e-9) - 1
    if i_hi < i_lo:
        raise ResolutionError("delay grid shorter than one window")
    starts = anchor + tau_b * np.arange(i_lo, i_hi + 1)
    integral = np.interp(starts + tau_b, tau, cum) - np.interp(starts, tau, cum)
    values = 1.0 + integral / (trace.R_o * trace.R_e * tau_b)
    return BinnedG2(starts, values, tau_b, integral / tau_b)


def oscillation_period(trace: CorrelationTrace) -> float:
    """Mean spacing of the g2 local maxima (seconds)."""
    from .spectra import local_maxima

    peaks = local_maxima(trace.g2)
    # ignore ripples below 1 % of the modulation depth
    depth = trace.g2.max() - 1.0
    peaks = peaks[trace.g2[peaks] - 1.0 > 0.01 * depth]
    if len(peaks) < 2:
        return math.nan
    return float(np.mean(np.diff(trace.tau[peaks])))


@dataclass(frozen=True)
class CriterionReport:
    R_o: float
    R_e: float
    xi_o: float
    xi_e: float
    threshold: float
    windows_passing: np.ndarray
    R_ac: float
    R_cc: float
    R_cc_detected: float
    g2_peak: float

    def as_dict(self) -> dict:
        return {
            "R_o": self.R_o,
            "R_e": self.R_e,
            "R_cc": self.R_cc,
            "R_ac": self.R_ac,
            "R_cc_detected": self.R_cc_detected,
            "xi_o": self.xi_o,
            "xi_e": self.xi_e,
            "threshold": self.threshold,
            "g2_binned_peak": self.g2_peak,
            "windows_passing": [int(i) for i in self.windows_passing],
        }


def criterion_threshold(xi_o: float, xi_e: float) -> float:
    return 2.0 + xi_o + xi_e + xi_o * xi_e


def verification_criterion(trace: CorrelationTrace, detector: DetectorModel, binned: BinnedG2 | None = None) -> CriterionReport:
    """Dark-count/loss criterion g2(tau_i) > 2 + xi_o + xi_e + xi_o xi_e.

    R_cc is the coincidence rate R_ac * g2 of the strongest window; the detected
    figure scales it by eta_o eta_e T_o T_e.
    """
    if trace.R_o <= 0 or trace.R_e <= 0:
        raise UndefinedG2Error("xi is undefined for vanishing photon rates")
    binned = binned or g2_binned(trace, detector.tau_b)
    xi_o = detector.D_o / (detector.eta_o * detector.T_o * trace.R_o)
    xi_e = detector.D_e / (detector.eta_e * detector.T_e * trace.R_e)
    threshold = criterion_threshold(xi_o, xi_e)
    R_ac = trace.R_o * trace.R_e * binned.tau_b
    R_cc = R_ac * binned.peak
    loss = detector.eta_o * detector.eta_e * detector.T_o * detector.T_e
    return CriterionReport(
        R_o=trace.R_o,
        R_e=trace.R_e,
        xi_o=xi_o,
        xi_e=xi_e,
        threshold=threshold,
        windows_passing=np.flatnonzero(binned.values > threshold),
        R_ac=R_ac,
        R_cc=R_cc,
        R_cc_detected=R_cc * loss,
        g2_peak=binned.peak,
    )
