"""Device parameters and the linearized three-mode dynamics.

Mode basis is ``(a^dagger, b, c)``: optical (conjugated), mechanical, microwave,
in the microwave rotating frame with the optical pump on the blue sideband
(``Delta_o = omega_e = omega_m``). Every rate is an angular rate in rad/s.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np

TWO_PI = 2.0 * math.pi

# input port order used everywhere in the package
PORTS = ("optical_coupling", "optical_internal", "mechanical", "microwave_coupling", "microwave_internal")


class ConfigError(ValueError):
    """Invalid or inconsistent device configuration."""


@dataclass(frozen=True)
class SystemParams:
    """One device configuration.

    Exactly one of ``g_om`` / ``C_om`` is normally supplied; :func:`derive_couplings`
    fills in the other. A params object carrying both is accepted only when the
    two agree.
    """

    g_em: float
    kappa_e_i: float
    kappa_e_c: float
    kappa_o_i: float
    kappa_o_c: float
    kappa_m: float
    n_ba: float = 0.0
    g_om: float | None = None
    C_om: float | None = None

    def __post_init__(self) -> None:
        for name in ("g_em", "kappa_e_i", "kappa_e_c", "kappa_o_i", "kappa_o_c", "kappa_m"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be a positive finite rate, got {value!r}")
        if not (math.isfinite(self.n_ba) and self.n_ba >= 0):
            raise ConfigError(f"n_ba must be >= 0, got {self.n_ba!r}")
        for name in ("g_om", "C_om"):
            value = getattr(self, name)
            if value is not None and not (math.isfinite(value) and value >= 0):
                raise ConfigError(f"{name} must be >= 0, got {value!r}")

    @property
    def kappa_o(self) -> float:
        return self.kappa_o_i + self.kappa_o_c

    @property
    def kappa_e(self) -> float:
        return self.kappa_e_i + self.kappa_e_c

    @property
    def C_em(self) -> float:
        return 4.0 * self.g_em**2 / (self.kappa_e * self.kappa_m)

    @property
    def ratio_R(self) -> float:
        # kappa_m deliberately left out of the coupling ratio
        return self.kappa_e / (4.0 * self.g_em)

    def with_(self, **changes: Any) -> "SystemParams":
        """Copy with fields replaced; changing one coupling drops the other."""
        if "g_om" in changes and "C_om" not in changes:
            changes["C_om"] = None
        if "C_om" in changes and "g_om" not in changes:
            changes["g_om"] = None
        return replace(self, **changes)

    def with_ratio(self, ratio_R: float) -> "SystemParams":
        """Retune the microwave coupling port so that ``kappa_e = 4 g_em R``."""
        return self.with_(kappa_e_c=kappa_e_c_for_ratio(self.g_em, self.kappa_e_i, ratio_R))

    def as_dict(self) -> dict[str, Any]:
        full = derive_couplings(self)
        return {
            "g_em": full.g_em,
            "kappa_e_i": full.kappa_e_i,
            "kappa_e_c": full.kappa_e_c,
            "kappa_o_i": full.kappa_o_i,
            "kappa_o_c": full.kappa_o_c,
            "kappa_m": full.kappa_m,
            "n_ba": full.n_ba,
            "g_om": full.g_om,
            "C_om": full.C_om,
            "C_em": full.C_em,
            "ratio_R": full.ratio_R,
        }


def table1(C_om: float = 1.0, ratio_R: float = 0.2, n_ba: float = 1.0) -> SystemParams:
    """Default device: g_em = 2pi*2 MHz, kappa_e,i = 2pi*100 kHz,
    kappa_o,i = kappa_o,c = 2pi*0.24 GHz, kappa_m = 2pi*20 kHz."""
    g_em = TWO_PI * 2.0e6
    kappa_e_i = TWO_PI * 100e3
    return SystemParams(
        g_em=g_em,
        kappa_e_i=kappa_e_i,
        kappa_e_c=kappa_e_c_for_ratio(g_em, kappa_e_i, ratio_R),
        kappa_o_i=TWO_PI * 0.24e9,
        kappa_o_c=TWO_PI * 0.24e9,
        kappa_m=TWO_PI * 20e3,
        n_ba=n_ba,
        C_om=C_om,
    )


def kappa_e_c_for_ratio(g_em: float, kappa_e_i: float, ratio_R: float) -> float:
    kappa_e_c = 4.0 * g_em * ratio_R - kappa_e_i
    if kappa_e_c <= 0:
        raise ConfigError(
            f"ratio_R={ratio_R} needs kappa_e={4 * g_em * ratio_R:.6g} rad/s, "
            f"below the internal loss kappa_e_i={kappa_e_i:.6g} rad/s"
        )
    return kappa_e_c


def derive_couplings(params: SystemParams) -> SystemParams:
    """Return params with both ``g_om`` and ``C_om`` populated.

    Uses C_om = 4 g_om^2 / (kappa_o kappa_m).
    """
    denom = params.kappa_o * params.kappa_m
    if params.g_om is None and params.C_om is None:
        raise ConfigError("one of g_om / C_om must be given")
    if params.g_om is not None and params.C_om is not None:
        expected = 4.0 * params.g_om**2 / denom
        if not math.isclose(expected, params.C_om, rel_tol=1e-12, abs_tol=1e-300):
            raise ConfigError(f"g_om and C_om both given and inconsistent: 4 g_om^2/(kappa_o kappa_m)={expected!r} vs C_om={params.C_om!r}")
        return params
    if params.g_om is not None:
        return replace(params, C_om=4.0 * params.g_om**2 / denom)
    return replace(params, g_om=0.5 * math.sqrt(params.C_om * denom))


@dataclass(frozen=True)
class DynamicalSystem:
    """Drift matrix M, input coupling N and bath occupation per input port."""

    params: SystemParams
    M: np.ndarray = field(repr=False)
    N: np.ndarray = field(repr=False)
    port_occupations: tuple[float, ...]

    @property
    def kappa_o_c(self) -> float:
        return self.params.kappa_o_c

    @property
    def kappa_e_c(self) -> float:
        return self.params.kappa_e_c

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.M)


def build_dynamics(params: SystemParams) -> DynamicalSystem:
    p = derive_couplings(params)
    g_om, g_em = p.g_om, p.g_em
    M = np.array(
        [
            [-p.kappa_o / 2, -1j * g_om, 0.0],
            [1j * g_om, -p.kappa_m / 2, 1j * g_em],
            [0.0, 1j * g_em, -p.kappa_e / 2],
        ],
        dtype=complex,
    )
    N = np.zeros((3, 5))
    N[0, 0] = math.sqrt(p.kappa_o_c)
    N[0, 1] = math.sqrt(p.kappa_o_i)
    N[1, 2] = math.sqrt(p.kappa_m)
    N[2, 3] = math.sqrt(p.kappa_e_c)
    N[2, 4] = math.sqrt(p.kappa_e_i)
    M.setflags(write=False)
    N.setflags(write=False)
    # optics and microwave coupling line see vacuum; mechanics and microwave loss see the bath
    occupations = (0.0, 0.0, p.n_ba, 0.0, p.n_ba)
    return DynamicalSystem(params=p, M=M, N=N, port_occupations=occupations)


def hybrid_eigenvalues(params: SystemParams) -> tuple[complex, complex]:
    """Closed-form eigenvalues of the mechanical/microwave hybrid modes (B, C).

    Valid when the optical mode is eliminated (kappa_o >> g_om); exact for g_om = 0.
    """
    ke, km, g = params.kappa_e, params.kappa_m, params.g_em
    root = np.sqrt(complex(-(g**2) + ((ke - km) / 4.0) ** 2))
    centre = -(ke + km) / 4.0
    return complex(centre - root), complex(centre + root)


def mode_splitting(params: SystemParams) -> float:
    """2 sqrt(g_em^2 - ((kappa_e - kappa_m)/4)^2), or 0 below the exceptional point."""
    disc = params.g_em**2 - ((params.kappa_e - params.kappa_m) / 4.0) ** 2
    return 2.0 * math.sqrt(disc) if disc > 0 else 0.0


def exceptional_point_g_em(params: SystemParams) -> float:
    return abs(params.kappa_e - params.kappa_m) / 4.0


def default_margin(params: SystemParams) -> float:
    return 1e-6 * max(params.kappa_o, params.kappa_e, params.kappa_m)


def is_stable(sys: DynamicalSystem, margin: float | None = None) -> bool:
    """True iff every eigenvalue of M has real part below ``-margin``.

    The conjugate equations have conjugate eigenvalues, so M alone decides.
    """
    if margin is None:
        margin = default_margin(sys.params)
    if margin < 0:
        raise ValueError("margin must be >= 0")
    return bool(np.max(sys.eigenvalues().real) < -margin)


# ---------------------------------------------------------------------------
# JSON parameter files (ordinary frequencies in Hz; 2pi applied here)

_HZ_KEYS = {
    "g_em_hz": "g_em",
    "kappa_e_i_hz": "kappa_e_i",
    "kappa_e_c_hz": "kappa_e_c",
    "kappa_o_i_hz": "kappa_o_i",
    "kappa_o_c_hz": "kappa_o_c",
    "kappa_m_hz": "kappa_m",
    "g_om_hz": "g_om",
}
_PLAIN_KEYS = {"n_ba", "C_om", "ratio_R"}


def params_from_mapping(data: Mapping[str, Any]) -> SystemParams:
    """Build params from the JSON schema (``*_hz`` keys are ordinary frequencies)."""
    unknown = set(data) - set(_HZ_KEYS) - _PLAIN_KEYS
    if unknown:
        raise ConfigError(f"unknown parameter keys: {sorted(unknown)}")
    values: dict[str, Any] = {}
    for key, value in data.items():
        if value is None:
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number, got {value!r}")
        if key in _HZ_KEYS:
            values[_HZ_KEYS[key]] = TWO_PI * float(value)
        else:
            values[key] = float(value)
    ratio = values.pop("ratio_R", None)
    if ratio is not None:
        if "kappa_e_c" in values:
            raise ConfigError("give either kappa_e_c_hz or ratio_R, not both")
        if "g_em" not in values or "kappa_e_i" not in values:
            raise ConfigError("ratio_R needs g_em_hz and kappa_e_i_hz")
        values["kappa_e_c"] = kappa_e_c_for_ratio(values["g_em"], values["kappa_e_i"], ratio)
    missing = {"g_em", "kappa_e_i", "kappa_e_c", "kappa_o_i", "kappa_o_c", "kappa_m"} - set(values)
    if missing:
        raise ConfigError(f"missing parameter keys: {sorted(missing)}")
    if ("g_om" in values) == ("C_om" in values):
        raise ConfigError("exactly one of g_om_hz / C_om must be given")
    return derive_couplings(SystemParams(**values))


def params_to_mapping(params: SystemParams) -> dict[str, float]:
    """Inverse of :func:`params_from_mapping` (always writes ``C_om``)."""
    p = derive_couplings(params)
    out = {hz: getattr(p, attr) / TWO_PI for hz, attr in _HZ_KEYS.items() if attr != "g_om"}
    out["n_ba"] = p.n_ba
    out["C_om"] = p.C_om
    return out


def load_params(path: str | Path) -> SystemParams:
    with open(path) as fh:
        return params_from_mapping(json.load(fh))
