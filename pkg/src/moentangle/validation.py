"""Fast property and oracle checks behind ``moentangle validate``.

Each check returns a :class:`Check`; the pytest suite covers the same ground
in more depth, this module is the self-test a fresh install can run.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from . import detection, fock, gaussian
from .counting import _fourier, correlation_trace, g2_wick
from .entanglement import log_negativity_arrays, r0_arrays
from .params import SystemParams, build_dynamics, hybrid_eigenvalues, table1
from .spectra import FrequencyGrid, commutator_sums, covariance_grid, scatter_grid, standard_form_arrays

TSIRELSON = 2.0 * math.sqrt(2.0)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def check_symplectic(rng) -> tuple[bool, str]:
    worst = 0.0
    mats = [gaussian.passive_symplectic(_random_unitary(rng, k)) for k in (1, 2, 4)]
    mats += [gaussian.two_mode_squeezer(r) for r in (0.0, 0.3, 1.5)]
    mats += [detection.interferometer_symplectic(*rng.uniform(0, 2 * math.pi, 2)) for _ in range(5)]
    for S in mats:
        Om = gaussian.symplectic_form(S.shape[0] // 2)
        worst = max(worst, float(np.abs(S @ Om @ S.T - Om).max()))
    return worst <= 1e-12, f"max |S Om S^T - Om| = {worst:.2e}"


def _sample_systems():
    for C, R, n in ((1.0, 0.2, 1.0), (1.0, 0.26, 0.0), (5.0, 1.0, 2.0), (0.1, 2.0, 0.5)):
        yield build_dynamics(table1(C, R, n))


def check_physical() -> tuple[bool, str]:
    worst = 0.0
    for sys in _sample_systems():
        V = covariance_grid(sys, np.linspace(-5, 5, 41) * sys.params.g_em)
        for Vi in V:
            worst = min(worst, gaussian.min_uncertainty_eigenvalue(Vi) / np.abs(Vi).max())
    return worst >= -1e-9, f"min eig(V + i Om)/max|V| = {worst:.2e}"


def check_commutators() -> tuple[bool, str]:
    worst = 0.0
    for sys in _sample_systems():
        sums = commutator_sums(scatter_grid(sys, np.linspace(-5, 5, 41) * sys.params.g_em))
        expected = np.array([-1.0, 1.0, 1.0, -1.0])
        worst = max(worst, float(np.abs(sums - expected).max()))
    return worst <= 1e-9, f"max commutator deviation = {worst:.2e}"


def check_ef_vs_log_negativity() -> tuple[bool, str]:
    mismatches = 0
    total = 0
    for sys in _sample_systems():
        u, v, w = standard_form_arrays(covariance_grid(sys, np.linspace(-20, 20, 201) * sys.params.g_em))
        ef_pos = r0_arrays(u, v, w) > 1e-9
        ln_pos = log_negativity_arrays(u, v, w) > 1e-9
        mismatches += int(np.sum(ef_pos != ln_pos))
        total += len(u)
    return mismatches == 0, f"{mismatches}/{total} frequencies disagree"


def check_tsirelson() -> tuple[bool, str]:
    worst = 0.0
    for n_ba in (0.0, 1.0):
        state = detection.assemble_bins(build_dynamics(table1(1.0, 0.26, n_ba)))
        s, _ = detection.max_abs_chsh(state, detection.DetectorModel(), n_phases=181)
        worst = max(worst, s)
    V = gaussian.two_mode_squeezed_thermal_covariance(0.05)
    s, _ = detection.max_abs_chsh(detection.FourModeState.from_blocks(V, V), detection.DetectorModel(), n_phases=181)
    worst = max(worst, s)
    return worst <= TSIRELSON + 1e-9, f"max |S| = {worst:.6f}"


def check_port_flip() -> tuple[bool, str]:
    state = detection.assemble_bins(build_dynamics(table1(1.0, 0.26, 1.0)))
    det = detection.DetectorModel.table2()
    phis = np.linspace(0, 2 * math.pi, 25)
    E = detection.state_correlation(state, det, 0.4, phis)
    E_flip = detection.state_correlation(state, det, 0.4 + math.pi, phis)
    err = float(np.abs(E + E_flip).max())
    return err <= 1e-9, f"max |E(phi_o) + E(phi_o + pi)| = {err:.2e}"


def fock_oracle_matrix() -> float:
    """Worst |Gaussian - Fock| click probability over r x n x eta (36 cases)."""
    worst = 0.0
    for r, n, eta in itertools.product((0.0, 0.1, 0.3, 0.6), (0.0, 0.5, 1.0), (0.3, 0.8, 1.0)):
        table = fock.onoff_click_probs(fock.two_mode_squeezed_thermal(r, n, n), (eta, eta))
        V = gaussian.two_mode_squeezed_thermal_covariance(r, n, n)
        both = detection.click_probability(V, [eta, eta])
        first = detection.click_probability(V, [eta, eta], [0])
        second = detection.click_probability(V, [eta, eta], [1])
        worst = max(
            worst,
            abs(table[(True, True)] - both),
            abs(table[(True, True)] + table[(True, False)] - first),
            abs(table[(True, True)] + table[(False, True)] - second),
        )
    return worst


def check_fock_oracle() -> tuple[bool, str]:
    worst = fock_oracle_matrix()
    return worst <= 1e-6, f"max |P_gauss - P_fock| = {worst:.2e} over 36 cases"


def check_wick() -> tuple[bool, str]:
    sys = build_dynamics(table1(1.0, 0.2625, 1.0))
    grid = FrequencyGrid(25.0, 2001)
    taus = np.linspace(-1e-6, 1e-6, 81)
    trace = correlation_trace(sys, taus, grid)
    err = float(np.abs(trace.g2 - g2_wick(sys, taus, grid)).max())
    return err <= 1e-8, f"max |g2_factored - g2_wick| = {err:.2e}"


def parseval_discrete(sys: SystemParams | None = None, points: int = 2001) -> tuple[float, float]:
    """Both sides of the Riemann-sum Parseval identity for R_eo.

    With omega_j uniform (step d omega) and tau_k = 2 pi k / (N d omega) the
    discrete transform is unitary up to scale, so
    sum_k |R(tau_k)|^2 d tau = (d omega / 2 pi) sum_j |s_j|^2 holds exactly.
    """
    from .spectra import flux_grid

    dyn = build_dynamics(sys or table1(1.0, 0.2625, 1.0))
    omegas = FrequencyGrid(25.0, points).omegas(dyn.params.g_em)
    d_omega = omegas[1] - omegas[0]
    s = flux_grid(dyn, omegas).s_oe
    taus = 2 * math.pi * np.arange(points) / (points * d_omega)
    R = _fourier(s, np.full(points, d_omega), omegas, taus, +1)
    lhs = float(np.sum(np.abs(R) ** 2) * (taus[1] - taus[0]))
    rhs = float(d_omega / (2 * math.pi) * np.sum(np.abs(s) ** 2))
    return lhs, rhs


def check_parseval() -> tuple[bool, str]:
    lhs, rhs = parseval_discrete()
    rel = abs(lhs - rhs) / rhs
    return rel <= 1e-8, f"relative Parseval mismatch = {rel:.2e}"


def check_eigenvalues(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(100):
        p = SystemParams(
            g_em=2 * math.pi * rng.uniform(1e4, 1e7),
            kappa_e_i=2 * math.pi * rng.uniform(1e3, 1e6),
            kappa_e_c=2 * math.pi * rng.uniform(1e3, 1e8),
            kappa_o_i=2 * math.pi * 1e8,
            kappa_o_c=2 * math.pi * 1e8,
            kappa_m=2 * math.pi * rng.uniform(1e2, 1e6),
            g_om=0.0,
        )
        num = np.linalg.eigvals(build_dynamics(p).M[1:, 1:])
        ref = np.array(hybrid_eigenvalues(p))
        # pair by distance: sort order is ambiguous when real parts coincide
        err = min(np.abs(num - ref).max(), np.abs(num[::-1] - ref).max())
        worst = max(worst, float(err / np.abs(ref).max()))
    return worst <= 1e-10, f"max relative eigenvalue error = {worst:.2e}"


def run_all(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = [
        ("symplectic", lambda: check_symplectic(rng)),
        ("physical_covariance", check_physical),
        ("commutators", check_commutators),
        ("ef_iff_log_negativity", check_ef_vs_log_negativity),
        ("tsirelson", check_tsirelson),
        ("port_flip", check_port_flip),
        ("fock_oracle", check_fock_oracle),
        ("wick_g2", check_wick),
        ("parseval", check_parseval),
        ("eigenvalue_formula", lambda: check_eigenvalues(rng)),
    ]
    out = []
    for name, fn in checks:
        t0 = time.perf_counter()
        ok, detail = fn()
        out.append(Check(name, bool(ok), detail, time.perf_counter() - t0))
    return out
