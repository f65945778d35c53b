"""Frequency-bin Bell measurement with on/off detectors.

Mode order of the four-mode bin state is (a1, B, a2, C): the optical partner of
the upper microwave bin, the upper microwave bin, the optical partner of the
lower microwave bin, the lower microwave bin. The optical interferometer
projects on ``(a1^dag +- a2^dag e^{i phi_o})|0>``, the microwave side on
``(B^dag +- C^dag e^{-i phi_e})|0>``. With these conventions the fringe
variable is ``phi_e - phi_o``.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import gaussian
from .params import TWO_PI, SystemParams, build_dynamics, is_stable
from .spectra import covariance_grid, pair_correlation

PORT_PAIRS = ((1, 1), (-1, -1), (1, -1), (-1, 1))


class UnphysicalCovarianceError(ValueError):
    pass


class NoSignalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class DetectorModel:
    eta_o: float = 1.0
    eta_e: float = 1.0
    T_o: float = 1.0
    T_e: float = 1.0
    D_o: float = 0.0
    D_e: float = 0.0
    tau_b: float = 0.5e-6

    def __post_init__(self) -> None:
        for name in ("eta_o", "eta_e", "T_o", "T_e"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {value!r}")
        if self.D_o < 0 or self.D_e < 0:
            raise ValueError("dark-count rates must be >= 0")
        if not self.tau_b > 0:
            raise ValueError("tau_b must be > 0")

    @classmethod
    def table2(cls, tau_b: float = 0.5e-6) -> "DetectorModel":
        return cls(eta_o=0.8, eta_e=0.9, T_o=1e-3, T_e=0.5, D_o=20.0, D_e=1e3, tau_b=tau_b)


@dataclass(frozen=True)
class MeasurementSetting:
    """Interferometer phases, output ports and bin filter.

    ``bin_center`` defaults to g_em of the device. ``filter_halfwidth`` of 0
    evaluates the bins at their centres only.
    """

    phi_o: float = 0.0
    phi_e: float = 0.0
    port_o: int = 1
    port_e: int = 1
    bin_center: float | None = None
    filter_halfwidth: float = TWO_PI * 200e3
    filter_points: int = 21
    calibrate_phase: bool = True

    def __post_init__(self) -> None:
        if self.port_o not in (1, -1) or self.port_e not in (1, -1):
            raise ValueError("ports must be +1 or -1")
        if self.filter_halfwidth < 0:
            raise ValueError("filter_halfwidth must be >= 0")
        if self.filter_points < 1:
            raise ValueError("filter_points must be >= 1")

    def check_bins(self, g_em: float) -> None:
        if self.filter_halfwidth >= g_em:
            raise ValueError("filter_halfwidth must stay below g_em so the bins do not overlap")


@dataclass(frozen=True)
class FourModeState:
    """8x8 covariance over (a1, B, a2, C) plus the bin bookkeeping."""

    V4: np.ndarray = field(repr=False)
    phase_reference: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_blocks(cls, V_upper: np.ndarray, V_lower: np.ndarray, meta: dict | None = None) -> "FourModeState":
        V4 = np.zeros((8, 8))
        V4[:4, :4] = V_upper
        V4[4:, 4:] = V_lower
        return cls(V4=V4, phase_reference=bin_phase_offset(V_upper, V_lower), meta=dict(meta or {}))


def bin_phase_offset(V_upper: np.ndarray, V_lower: np.ndarray) -> float:
    """arg<a2 C> - arg<a1 B>: the fringe offset the interferometer reference absorbs."""
    c_up = complex(pair_correlation(V_upper))
    c_lo = complex(pair_correlation(V_lower))
    if abs(c_up) == 0 or abs(c_lo) == 0:
        return 0.0
    return float(np.angle(c_lo) - np.angle(c_up))


def _band_average(sys, centre: float, setting: MeasurementSetting) -> np.ndarray:
    if setting.filter_halfwidth == 0 or setting.filter_points == 1:
        return covariance_grid(sys, [centre])[0]
    omegas = np.linspace(centre - setting.filter_halfwidth, centre + setting.filter_halfwidth, setting.filter_points)
    return covariance_grid(sys, omegas).mean(axis=0)


def assemble_bins(sys, setting: MeasurementSetting | None = None) -> FourModeState:
    """Four-mode state: V(+bin) for (a1, B), V(-bin) for (a2, C), no cross-bin terms."""
    setting = setting or MeasurementSetting()
    g_em = sys.params.g_em
    centre = g_em if setting.bin_center is None else setting.bin_center
    setting.check_bins(g_em)
    V_up = _band_average(sys, centre, setting)
    V_lo = _band_average(sys, -centre, setting)
    w_bin = abs(pair_correlation(V_up))
    w_zero = abs(pair_correlation(covariance_grid(sys, [0.0])[0]))
    meta = {
        "bin_center_hz": centre / TWO_PI,
        "filter_halfwidth_hz": setting.filter_halfwidth / TWO_PI,
        "filter_points": setting.filter_points,
        "band_integration": "filter-band average of V(omega)",
        "bin_pairing_ok": bool(w_bin >= w_zero),
    }
    state = FourModeState.from_blocks(V_up, V_lo, meta)
    if not setting.calibrate_phase:
        state = FourModeState(state.V4, 0.0, state.meta)
    return state


def _interferometer_unitaries(phi_o: np.ndarray, phi_e: np.ndarray) -> np.ndarray:
    """Batch of 4x4 mode maps from (a1, B, a2, C) to (d_o+, d_o-, d_e+, d_e-)."""
    phi_o, phi_e = np.broadcast_arrays(np.asarray(phi_o, float), np.asarray(phi_e, float))
    h = 1.0 / math.sqrt(2.0)
    U = np.zeros(phi_o.shape + (4, 4), dtype=complex)
    eo = np.exp(-1j * phi_o)
    ee = np.exp(1j * phi_e)
    U[..., 0, 0] = h
    U[..., 0, 2] = h * eo
    U[..., 1, 0] = h
    U[..., 1, 2] = -h * eo
    U[..., 2, 1] = h
    U[..., 2, 3] = h * ee
    U[..., 3, 1] = h
    U[..., 3, 3] = -h * ee
    return U


def interferometer_symplectic(phi_o: float, phi_e: float) -> np.ndarray:
    return gaussian.passive_symplectic(_interferometer_unitaries(phi_o, phi_e))


def _batch_passive(U: np.ndarray) -> np.ndarray:
    n = U.shape[-1]
    S = np.empty(U.shape[:-2] + (2 * n, 2 * n))
    S[..., 0::2, 0::2] = U.real
    S[..., 0::2, 1::2] = -U.imag
    S[..., 1::2, 0::2] = U.imag
    S[..., 1::2, 1::2] = U.real
    return S


def _output_index(port_o: int, port_e: int) -> list[int]:
    o = 0 if port_o == 1 else 1
    e = 2 if port_e == 1 else 3
    return [2 * o, 2 * o + 1, 2 * e, 2 * e + 1]


def measured_covariance(state: FourModeState, setting: MeasurementSetting) -> np.ndarray:
    """Reduced covariance of the selected (optical, microwave) detector modes."""
    S = interferometer_symplectic(setting.phi_o, setting.phi_e - state.phase_reference)
    W = S @ state.V4 @ S.T
    idx = _output_index(setting.port_o, setting.port_e)
    return W[np.ix_(idx, idx)]


def _no_click(V: np.ndarray, etas: np.ndarray) -> np.ndarray:
    """P(no detector in the block fires) for a (batched) covariance over len(etas) modes."""
    d = np.repeat(etas / (2.0 - etas), 2)
    root = np.sqrt(d)
    sigma = np.eye(len(d)) + root[:, None] * V * root[None, :]
    det = np.linalg.det(sigma)
    if np.any(det <= 0):
        raise UnphysicalCovarianceError("det(Sigma) <= 0: covariance is not a physical state")
    return np.prod(2.0 / (2.0 - etas)) / np.sqrt(det)


def click_probability(V: np.ndarray, etas, subset=None) -> np.ndarray | float:
    """Probability that every detector in ``subset`` fires (others ignored).

    Inclusion-exclusion over no-click probabilities
    P_off(T) = prod_T 2/(2 - eta) / sqrt(det(I + D^1/2 V_T D^1/2)),
    D = eta/(2 - eta) per quadrature pair. Works on stacks of covariances.
    """
    V = np.asarray(V, dtype=float)
    etas = np.asarray(etas, dtype=float)
    n_modes = V.shape[-1] // 2
    if len(etas) != n_modes:
        raise ValueError("one efficiency per mode required")
    if np.any(etas <= 0) or np.any(etas > 1):
        raise ValueError("efficiencies must lie in (0, 1]")
    subset = list(range(n_modes)) if subset is None else list(subset)
    total = np.zeros(V.shape[:-2])
    for k in range(len(subset) + 1):
        for T in itertools.combinations(subset, k):
            if not T:
                total = total + 1.0
                continue
            idx = [2 * m + q for m in T for q in (0, 1)]
            total = total + (-1) ** k * _no_click(V[..., idx, :][..., :, idx], etas[list(T)])
    return float(total) if total.ndim == 0 else total


def joint_click_probabilities(state: FourModeState, detector: DetectorModel, phi_o, phi_e) -> dict:
    """Unnormalized P^{s_o, s_e} for all four port pairs; phases may be arrays."""
    phi_o, phi_e = np.broadcast_arrays(np.asarray(phi_o, float), np.asarray(phi_e, float))
    S = _batch_passive(_interferometer_unitaries(phi_o, phi_e - state.phase_reference))
    W = S @ state.V4 @ np.swapaxes(S, -1, -2)
    etas = np.array([detector.eta_o, detector.eta_e])
    out = {}
    for so, se in PORT_PAIRS:
        idx = _output_index(so, se)
        out[(so, se)] = click_probability(W[..., idx, :][..., :, idx], etas)
    return out


def normalized_probabilities(P: dict, underflow: float = 64 * np.finfo(float).eps) -> dict:
    # click probabilities come from 1 - P_off differences, so totals at the
    # rounding level carry no information
    total = sum(P.values())
    if np.any(np.asarray(total) <= underflow):
        raise NoSignalError("all coincidence probabilities vanish")
    return {k: v / total for k, v in P.items()}


def correlation_from_probs(p: dict):
    return p[(1, 1)] + p[(-1, -1)] - p[(1, -1)] - p[(-1, 1)]


def state_correlation(state: FourModeState, detector: DetectorModel, phi_o, phi_e):
    return correlation_from_probs(normalized_probabilities(joint_click_probabilities(state, detector, phi_o, phi_e)))


def state_chsh(state: FourModeState, detector: DetectorModel, phi_o, phi_e):
    q = math.pi / 2
    E = lambda a, b: state_correlation(state, detector, a, b)  # noqa: E731
    phi_o = np.asarray(phi_o, float)
    phi_e = np.asarray(phi_e, float)
    return E(phi_o, phi_e) + E(phi_o + q, phi_e + q) + E(phi_o + q, phi_e) - E(phi_o, phi_e + q)


def max_abs_chsh(state: FourModeState, detector: DetectorModel, phi_o: float = 0.0, n_phases: int = 721) -> tuple[float, float]:
    """max over phi_e of |S| at fixed phi_o; returns (|S|max, argmax phi_e)."""
    phis = np.linspace(0.0, TWO_PI, n_phases, endpoint=False)
    S = np.abs(state_chsh(state, detector, phi_o, phis))
    i = int(np.argmax(S))
    # parabolic refinement on the periodic grid
    y0, y1, y2 = S[i - 1], S[i], S[(i + 1) % n_phases]
    step = phis[1] - phis[0]
    denom = y0 - 2 * y1 + y2
    shift = 0.5 * (y0 - y2) / denom if denom < 0 else 0.0
    best = float(phis[i] + shift * step)
    value = float(abs(state_chsh(state, detector, phi_o, best)))
    if value < y1:
        return float(y1), float(phis[i])
    return value, best


def state_fidelity_lower_bound(state: FourModeState, detector: DetectorModel) -> float:
    p0 = normalized_probabilities(joint_click_probabilities(state, detector, 0.0, 0.0))
    h = math.pi / 2
    p1 = normalized_probabilities(joint_click_probabilities(state, detector, h, h))
    return float(
        0.5
        * (
            p0[(1, 1)]
            + p0[(-1, -1)]
            + p1[(1, 1)]
            + p1[(-1, -1)]
            - p1[(1, -1)]
            - p1[(-1, 1)]
            - 2.0 * np.sqrt(p0[(1, -1)] * p0[(-1, 1)])
        )
    )


def _stable_state(sys, setting):
    if not is_stable(sys):
        from .entanglement import StabilityError

        raise StabilityError("Bell statistics need a stable steady state")
    return assemble_bins(sys, setting)


def correlation_E(sys, detector: DetectorModel, phi_o: float, phi_e: float, setting: MeasurementSetting | None = None) -> float:
    return float(state_correlation(_stable_state(sys, setting), detector, phi_o, phi_e))


def chsh_S(sys, detector: DetectorModel, phi_o: float, phi_e: float, setting: MeasurementSetting | None = None) -> float:
    return float(state_chsh(_stable_state(sys, setting), detector, phi_o, phi_e))


def fidelity_lower_bound(sys, detector: DetectorModel, setting: MeasurementSetting | None = None) -> float:
    return state_fidelity_lower_bound(_stable_state(sys, setting), detector)


@dataclass(frozen=True)
class Fringe:
    phi_e: np.ndarray
    S: np.ndarray
    E_00: np.ndarray
    E_01: np.ndarray
    E_10: np.ndarray
    E_11: np.ndarray


def chsh_fringe(sys, detector: DetectorModel, phi_o: float = 0.0, phi_e=None, setting: MeasurementSetting | None = None) -> Fringe:
    """S(phi_e) and its four correlators; index 1 means the primed (+pi/2) angle."""
    state = _stable_state(sys, setting)
    phi_e = np.linspace(0.0, TWO_PI, 361) if phi_e is None else np.asarray(phi_e, float)
    q = math.pi / 2
    e00 = state_correlation(state, detector, phi_o, phi_e)
    e11 = state_correlation(state, detector, phi_o + q, phi_e + q)
    e10 = state_correlation(state, detector, phi_o + q, phi_e)
    e01 = state_correlation(state, detector, phi_o, phi_e + q)
    return Fringe(phi_e, e00 + e11 + e10 - e01, e00, e01, e10, e11)


@dataclass(frozen=True)
class DetectionMap:
    C_om: np.ndarray
    ratio_R: np.ndarray
    s_max: np.ndarray
    f_lb: np.ndarray
    stable: np.ndarray

    @property
    def chsh_violation(self) -> np.ndarray:
        return np.nan_to_num(self.s_max, nan=0.0) > 2.0

    @property
    def fidelity_pass(self) -> np.ndarray:
        return np.nan_to_num(self.f_lb, nan=0.0) > 0.5


def detection_cell(params: SystemParams, detector: DetectorModel, setting: MeasurementSetting | None = None, n_phases: int = 361) -> tuple[float, float, bool]:
    sys = build_dynamics(params)
    if not is_stable(sys):
        return math.nan, math.nan, False
    state = assemble_bins(sys, setting)
    try:
        s_max, _ = max_abs_chsh(state, detector, 0.0, n_phases)
        return s_max, state_fidelity_lower_bound(state, detector), True
    except NoSignalError:
        return math.nan, math.nan, True


def detection_regime_map(
    template: SystemParams,
    C_values,
    R_values,
    detector: DetectorModel,
    setting: MeasurementSetting | None = None,
    n_phases: int = 361,
    threads: int | None = None,
) -> DetectionMap:
    """max_phi_e |S| (phi_o = 0) and F_lb over (C_om, R); rows index C_om."""
    C_values = np.asarray(C_values, dtype=float)
    R_values = np.asarray(R_values, dtype=float)

    def row(C):
        out = np.full((3, len(R_values)), np.nan)
        for j, R in enumerate(R_values):
            p = template.with_(C_om=float(C)).with_ratio(float(R))
            s, f, ok = detection_cell(p, detector, setting, n_phases)
            out[:, j] = (s, f, 1.0 if ok else 0.0)
        return out

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, C_values))
    else:
        rows = [row(C) for C in C_values]
    stack = np.stack(rows)
    return DetectionMap(C_values, R_values, stack[:, 0], stack[:, 1], stack[:, 2].astype(bool))
