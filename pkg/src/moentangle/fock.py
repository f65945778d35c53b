"""Truncated Fock-space oracle for on/off detection and ideal Bell statistics.

Nothing here touches covariance matrices: states are built from number-basis
amplitudes and detector POVMs are applied as (1 - eta)^n weights, so the
Gaussian formulas in :mod:`moentangle.detection` can be checked against it.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize_scalar


class CutoffError(ValueError):
    pass


@dataclass(frozen=True)
class FockState:
    """Mixture sum_k weights[k] |psi_k><psi_k| over a two-mode truncated basis.

    ``kets[k]`` is an (cutoff+1, cutoff+1) amplitude array.
    """

    cutoff: int
    weights: np.ndarray
    kets: np.ndarray = field(repr=False)
    tail_bound: float = 0.0

    def trace(self) -> float:
        return float(np.sum(self.weights * np.sum(np.abs(self.kets) ** 2, axis=(1, 2))))

    def number_distribution(self) -> np.ndarray:
        """P(n1, n2) on the truncated grid."""
        return np.einsum("k,kij->ij", self.weights, np.abs(self.kets) ** 2)

    def density_matrix(self) -> np.ndarray:
        d = (self.cutoff + 1) ** 2
        flat = self.kets.reshape(len(self.weights), d)
        return (flat.T * self.weights) @ flat.conj()


def thermal_tail(n_bar: float, cutoff: int) -> float:
    """P(n > cutoff) for a thermal state."""
    if n_bar == 0:
        return 0.0
    return (n_bar / (n_bar + 1.0)) ** (cutoff + 1)


def squeezed_thermal_marginals(r: float, n1: float, n2: float) -> tuple[float, float]:
    """Mean photon numbers of the two modes after two-mode squeezing thermal inputs."""
    c2, s2 = math.cosh(r) ** 2, math.sinh(r) ** 2
    return n1 * c2 + (n2 + 1.0) * s2, n2 * c2 + (n1 + 1.0) * s2


def default_cutoff(r: float, n1: float = 0.0, n2: float = 0.0, tail: float = 1e-10) -> int:
    """Smallest cutoff whose analytic truncation tail is below ``tail``.

    Each reduced mode of a squeezed thermal state is thermal, so the tail of
    the joint distribution is bounded by the sum of the two marginal tails.
    """
    m1, m2 = squeezed_thermal_marginals(r, n1, n2)
    N = 0
    while thermal_tail(m1, N) + thermal_tail(m2, N) >= tail:
        N += 1
    return N


def _squeeze_sector(d: int, length: int, r: float) -> np.ndarray:
    """exp(r (a^dag b^dag - a b)) on the chain |d + k, k>, k < length (d >= 0)."""
    k = np.arange(length - 1)
    up = np.sqrt((d + k + 1.0) * (k + 1.0))
    G = np.zeros((length, length))
    G[k + 1, k] = up
    G[k, k + 1] = -up
    return expm(r * G)


def two_mode_squeezed_thermal(r: float, n1: float = 0.0, n2: float = 0.0, cutoff: int | None = None, tail: float = 1e-10) -> FockState:
    """S(r) (rho_th(n1) x rho_th(n2)) S(r)^dag with S(r) = exp(r (a^dag b^dag - a b)).

    Photon-number difference is conserved by S, so each input |m, n> is
    propagated along its own one-dimensional chain.
    """
    if cutoff is None:
        cutoff = default_cutoff(r, n1, n2, tail)
    m1, m2 = squeezed_thermal_marginals(r, n1, n2)
    # inputs above the cutoff still feed the window (n1 - n2 is conserved), so
    # they are propagated until their own thermal tail is negligible
    n_in = cutoff
    while thermal_tail(n1, n_in) + thermal_tail(n2, n_in) > 1e-3 * tail:
        n_in += 1
    bound = thermal_tail(m1, cutoff) + thermal_tail(m2, cutoff) + thermal_tail(n1, n_in) + thermal_tail(n2, n_in)
    if bound > tail:
        raise CutoffError(f"cutoff {cutoff} leaves truncation tail {bound:.2e} > {tail:.0e}")
    dim = cutoff + 1
    margin = 40 + 2 * n_in
    k = np.arange(n_in + 1)
    p1 = (n1**k) / (n1 + 1.0) ** (k + 1) if n1 > 0 else np.eye(1, n_in + 1)[0]
    p2 = (n2**k) / (n2 + 1.0) ** (k + 1) if n2 > 0 else np.eye(1, n_in + 1)[0]
    weights, kets = [], []
    cache: dict[int, np.ndarray] = {}
    for m in range(n_in + 1):
        for n in range(n_in + 1):
            w = p1[m] * p2[n]
            d = abs(m - n)
            if w < 1e-300 or d > cutoff:
                continue
            if d not in cache:
                cache[d] = _squeeze_sector(d, n_in + 1 + margin, r)
            column = cache[d][:, min(m, n)]
            ket = np.zeros((dim, dim))
            for j in range(dim - d):
                i1, i2 = (d + j, j) if m >= n else (j, d + j)
                ket[i1, i2] = column[j]
            weights.append(w)
            kets.append(ket)
    return FockState(cutoff, np.array(weights), np.array(kets, dtype=complex), bound)


def onoff_click_probs(state: FockState, etas: tuple[float, float]) -> dict[tuple[bool, bool], float]:
    """Probability of each (detector 1 fires, detector 2 fires) pattern."""
    P = state.number_distribution()
    n = np.arange(state.cutoff + 1)
    off1 = (1.0 - etas[0]) ** n
    off2 = (1.0 - etas[1]) ** n
    table = {}
    for c1, c2 in itertools.product((False, True), repeat=2):
        f1 = 1.0 - off1 if c1 else off1
        f2 = 1.0 - off2 if c2 else off2
        table[(c1, c2)] = float(f1 @ P @ f2)
    return table


# ---------------------------------------------------------------------------
# four-mode pure states as polynomials in creation operators


def _apply_creation_map(state: dict, U: np.ndarray) -> dict:
    """Transform a Fock-basis state under a_out = U a_in (creation ops map via U^T)."""
    n_modes = U.shape[0]
    out: dict = defaultdict(complex)
    for occ, amp in state.items():
        # amplitude * prod_j (a_j^dag)^{n_j} / sqrt(n_j!) |0>
        poly = {tuple([0] * n_modes): amp / math.sqrt(math.prod(math.factorial(k) for k in occ))}
        for j, nj in enumerate(occ):
            for _ in range(nj):
                nxt: dict = defaultdict(complex)
                for mono, c in poly.items():
                    for k in range(n_modes):
                        coef = U[k, j]
                        if coef == 0:
                            continue
                        m = list(mono)
                        m[k] += 1
                        nxt[tuple(m)] += c * coef
                poly = nxt
        for mono, c in poly.items():
            out[mono] += c * math.sqrt(math.prod(math.factorial(k) for k in mono))
    return dict(out)


def two_pair_tmsv(r: float, tail: float = 1e-12) -> dict:
    """|TMSV(r)>_{a1,B} x |TMSV(r)>_{a2,C} in mode order (a1, B, a2, C), truncated by pair number."""
    t = math.tanh(r)
    K = 0
    while t ** (2 * (K + 1)) >= tail and K < 60:
        K += 1
    norm = 1.0 / math.cosh(r) ** 2
    return {(n, n, m, m): norm * t ** (n + m) for n in range(K + 1) for m in range(K + 1)}


def bell_interferometer(phi_o: float, phi_e: float) -> np.ndarray:
    """(a1, B, a2, C) -> (d_o+, d_o-, d_e+, d_e-), same projections as the Gaussian model."""
    h = 1.0 / math.sqrt(2.0)
    eo, ee = np.exp(-1j * phi_o), np.exp(1j * phi_e)
    return np.array(
        [[h, 0, h * eo, 0], [h, 0, -h * eo, 0], [0, h, 0, h * ee], [0, h, 0, -h * ee]],
        dtype=complex,
    )


def coincidence_probabilities(state: dict, etas: tuple[float, float], phi_o: float, phi_e: float) -> dict:
    """P(optical port s fires and microwave port t fires) for s, t in {+1, -1}."""
    out_state = _apply_creation_map(state, bell_interferometer(phi_o, phi_e))
    eta_o, eta_e = etas
    P = {(1, 1): 0.0, (-1, -1): 0.0, (1, -1): 0.0, (-1, 1): 0.0}
    for occ, amp in out_state.items():
        p = abs(amp) ** 2
        if p == 0:
            continue
        on_o = {1: 1 - (1 - eta_o) ** occ[0], -1: 1 - (1 - eta_o) ** occ[1]}
        on_e = {1: 1 - (1 - eta_e) ** occ[2], -1: 1 - (1 - eta_e) ** occ[3]}
        for so, se in P:
            P[(so, se)] += p * on_o[so] * on_e[se]
    return P


def _correlation(P: dict) -> float:
    total = sum(P.values())
    return (P[(1, 1)] + P[(-1, -1)] - P[(1, -1)] - P[(-1, 1)]) / total


@dataclass(frozen=True)
class BellStatistics:
    E: float
    S: float
    phi_e_best: float
    F_lb: float


def ideal_bell_statistics(r: float, etas: tuple[float, float] = (1.0, 1.0), phases: tuple[float, float] = (0.0, 0.0), n_phases: int = 48) -> BellStatistics:
    """Post-selected Bell statistics of two weak pair sources in Fock space.

    E is evaluated at ``phases``; |S| is maximized over phi_e at phi_o = phases[0]
    by a coarse grid followed by a bounded scalar refinement.
    """
    if r > 0.1:
        raise ValueError("ideal Bell statistics assume r <= 0.1")
    state = two_pair_tmsv(r)
    E = lambda a, b: _correlation(coincidence_probabilities(state, etas, a, b))  # noqa: E731
    q = math.pi / 2
    phi_o = phases[0]

    def S_of(phi_e):
        return E(phi_o, phi_e) + E(phi_o + q, phi_e + q) + E(phi_o + q, phi_e) - E(phi_o, phi_e + q)

    grid = np.linspace(0, 2 * math.pi, n_phases, endpoint=False)
    values = np.array([abs(S_of(p)) for p in grid])
    i = int(np.argmax(values))
    step = grid[1] - grid[0]
    res = minimize_scalar(lambda p: -abs(S_of(p)), bounds=(grid[i] - step, grid[i] + step), method="bounded", options={"xatol": 1e-9})
    best_phi = float(res.x) if -res.fun >= values[i] else float(grid[i])
    best_S = S_of(best_phi)
    P0 = coincidence_probabilities(state, etas, 0.0, 0.0)
    P1 = coincidence_probabilities(state, etas, q, q)
    t0, t1 = sum(P0.values()), sum(P1.values())
    p0 = {k: v / t0 for k, v in P0.items()}
    p1 = {k: v / t1 for k, v in P1.items()}
    F_lb = 0.5 * (
        p0[(1, 1)] + p0[(-1, -1)] + p1[(1, 1)] + p1[(-1, -1)] - p1[(1, -1)] - p1[(-1, 1)] - 2 * math.sqrt(p0[(1, -1)] * p0[(-1, 1)])
    )
    return BellStatistics(E(*phases), best_S, best_phi, F_lb)
