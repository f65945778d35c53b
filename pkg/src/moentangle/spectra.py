"""Frequency-domain input/output solution of the linearized dynamics.

The optical output is read at ``-omega`` and the microwave output at ``+omega``
(energy conservation of the down-conversion). All spectral quantities are
densities against ``2 pi delta(omega - omega')``; the ``1/2pi`` of rate
integrals lives in the callers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import DynamicalSystem

# rows of ScatteringSolution.coeffs
ROW_A_DAG, ROW_A, ROW_C, ROW_C_DAG = range(4)
N_PORTS = 5

# the optical inputs enter the (a^dag, b, c) equations as creation operators
_PORT_IS_CREATION = np.array([True, True, False, False, False])


class NumericalSingularityError(ArithmeticError):
    def __init__(self, omega: float) -> None:
        super().__init__(f"(-i omega I - M) is singular at omega={omega!r} rad/s")
        self.omega = omega


class NotStandardFormError(ValueError):
    def __init__(self, residual: float, tol: float) -> None:
        super().__init__(f"covariance departs from the standard pattern by {residual:.3e} (tol {tol:.1e})")
        self.residual = residual


@dataclass(frozen=True)
class ScatteringSolution:
    """Output operators as linear combinations of the ten input operators.

    ``coeffs`` is 4 x 10. Rows: a_out^dag(-w), a_out(-w), c_out(w), c_out^dag(w).
    Columns 0-4 are port annihilation operators, 5-9 the creation operators,
    ports ordered as :data:`moentangle.params.PORTS`.
    """

    omega: float
    coeffs: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class TwoModeCovariance:
    """4x4 covariance of (x_o, p_o, x_e, p_e) at one frequency."""

    omega: float
    V: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class StandardForm:
    u: float
    v: float
    w: float

    def matrix(self) -> np.ndarray:
        u, v, w = self.u, self.v, self.w
        return np.array([[u, 0, -w, 0], [0, u, 0, w], [-w, 0, v, 0], [0, w, 0, v]], dtype=float)


def _conjugate_rows(rows: np.ndarray) -> np.ndarray:
    """Hermitian conjugate of operator rows: conj and swap annihilation/creation halves."""
    return np.conj(np.concatenate([rows[..., N_PORTS:], rows[..., :N_PORTS]], axis=-1))


def scatter_grid(sys: DynamicalSystem, omegas: np.ndarray) -> np.ndarray:
    """Scattering coefficients on a grid, shape ``(len(omegas), 4, 10)``."""
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    lhs = -1j * omegas[:, None, None] * np.eye(3) - sys.M
    cond = np.linalg.cond(lhs)
    bad = ~np.isfinite(cond) | (cond > 1e14)
    if np.any(bad):
        raise NumericalSingularityError(float(omegas[np.argmax(bad)]))
    chi_n = np.linalg.solve(lhs, np.broadcast_to(sys.N.astype(complex), lhs.shape[:1] + sys.N.shape))

    # only coupling ports are read out: out = sqrt(kappa_c) * mode - in
    a_dag_out = np.sqrt(sys.kappa_o_c) * chi_n[:, 0, :]
    a_dag_out[:, 0] -= 1.0
    c_out = np.sqrt(sys.kappa_e_c) * chi_n[:, 2, :]
    c_out[:, 3] -= 1.0

    n = len(omegas)
    coeffs = np.zeros((n, 4, 2 * N_PORTS), dtype=complex)
    for row, xi in ((ROW_A_DAG, a_dag_out), (ROW_C, c_out)):
        coeffs[:, row, N_PORTS:][:, _PORT_IS_CREATION] = xi[:, _PORT_IS_CREATION]
        coeffs[:, row, :N_PORTS][:, ~_PORT_IS_CREATION] = xi[:, ~_PORT_IS_CREATION]
    coeffs[:, ROW_A] = _conjugate_rows(coeffs[:, ROW_A_DAG])
    coeffs[:, ROW_C_DAG] = _conjugate_rows(coeffs[:, ROW_C])
    return coeffs


def scatter(sys: DynamicalSystem, omega: float) -> ScatteringSolution:
    return ScatteringSolution(omega=float(omega), coeffs=scatter_grid(sys, [omega])[0])


def input_gram(port_occupations) -> np.ndarray:
    """G[j, k] = <e_j e_k> for the ten input operators (delta stripped)."""
    G = np.zeros((2 * N_PORTS, 2 * N_PORTS))
    for p, n_bar in enumerate(port_occupations):
        G[p, N_PORTS + p] = n_bar + 1.0
        G[N_PORTS + p, p] = n_bar
    return G


def correlator(coeffs: np.ndarray, G: np.ndarray, i: int, j: int) -> np.ndarray:
    """<O_i O_j> density for output rows i, j over a grid of coefficient matrices."""
    return np.einsum("nk,kl,nl->n", coeffs[:, i], G, coeffs[:, j])


def commutator_sums(coeffs: np.ndarray) -> np.ndarray:
    """sum |annihilation coeff|^2 - |creation coeff|^2 per row (+1 for a, c; -1 for daggers)."""
    c2 = np.abs(coeffs) ** 2
    return c2[..., :N_PORTS].sum(-1) - c2[..., N_PORTS:].sum(-1)


def _quadrature_rows(coeffs: np.ndarray) -> np.ndarray:
    a, a_dag = coeffs[:, ROW_A], coeffs[:, ROW_A_DAG]
    c, c_dag = coeffs[:, ROW_C], coeffs[:, ROW_C_DAG]
    return np.stack([a + a_dag, -1j * (a - a_dag), c + c_dag, -1j * (c - c_dag)], axis=1)


def covariance_grid(sys: DynamicalSystem, omegas: np.ndarray) -> np.ndarray:
    """Output covariance on a grid, shape ``(len(omegas), 4, 4)``."""
    coeffs = scatter_grid(sys, omegas)
    q = _quadrature_rows(coeffs)
    G = input_gram(sys.port_occupations)
    K = np.einsum("nik,kl,njl->nij", q, G, q)
    return 0.5 * (K + np.swapaxes(K, 1, 2)).real


def output_covariance(sys: DynamicalSystem, omega: float) -> TwoModeCovariance:
    return TwoModeCovariance(omega=float(omega), V=covariance_grid(sys, [omega])[0])


def standard_form_arrays(V: np.ndarray, tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized (u, v, w) extraction for a stack of 4x4 covariances.

    The correlation block of a phase-insensitive state is a reflection-like
    matrix ``[[c1, c2], [c2, -c1]]``; w = hypot(c1, c2) is the value after the
    local phase rotation that puts it in ``diag(-w, w)``.
    """
    V = np.asarray(V, dtype=float)
    if V.ndim == 2:
        V = V[None]
    A, B, C = V[:, :2, :2], V[:, 2:, 2:], V[:, :2, 2:]
    u = 0.5 * (A[:, 0, 0] + A[:, 1, 1])
    v = 0.5 * (B[:, 0, 0] + B[:, 1, 1])
    c1 = 0.5 * (C[:, 0, 0] - C[:, 1, 1])
    c2 = 0.5 * (C[:, 0, 1] + C[:, 1, 0])
    w = np.hypot(c1, c2)
    residual = np.max(
        np.abs(
            np.stack(
                [
                    A[:, 0, 0] - A[:, 1, 1],
                    A[:, 0, 1],
                    A[:, 1, 0],
                    B[:, 0, 0] - B[:, 1, 1],
                    B[:, 0, 1],
                    B[:, 1, 0],
                    C[:, 0, 0] + C[:, 1, 1],
                    C[:, 0, 1] - C[:, 1, 0],
                    np.abs(V - np.swapaxes(V, 1, 2)).reshape(len(V), -1).max(-1),
                ]
            )
        ),
        axis=0,
    )
    scale = np.abs(V).reshape(len(V), -1).max(-1)
    rel = residual / np.where(scale > 0, scale, 1.0)
    if np.any(rel > tol):
        raise NotStandardFormError(float(rel.max()), tol)
    return u, v, w


def to_standard_form(cov: TwoModeCovariance | np.ndarray, tol: float = 1e-8) -> StandardForm:
    V = cov.V if isinstance(cov, TwoModeCovariance) else cov
    u, v, w = standard_form_arrays(V, tol)
    return StandardForm(float(u[0]), float(v[0]), float(w[0]))


def pair_correlation(V: np.ndarray) -> np.ndarray:
    """<a c> recovered from the quadrature covariance (works on stacks)."""
    V = np.asarray(V)
    re = (V[..., 0, 2] - V[..., 1, 3]) / 4.0
    im = (V[..., 0, 3] + V[..., 1, 2]) / 4.0
    return re + 1j * im


@dataclass(frozen=True)
class FluxSpectra:
    """Normally ordered densities on a grid.

    s_o = <a_out^dag a_out>, s_e = <c_out^dag c_out>, s_oe = <c_out a_out>,
    s_oe_dag = <a_out^dag c_out^dag> (the conjugate channel, kept separately).
    """

    omega: np.ndarray
    s_o: np.ndarray
    s_e: np.ndarray
    s_oe: np.ndarray
    s_oe_dag: np.ndarray


def flux_grid(sys: DynamicalSystem, omegas: np.ndarray) -> FluxSpectra:
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    coeffs = scatter_grid(sys, omegas)
    G = input_gram(sys.port_occupations)
    s_o = correlator(coeffs, G, ROW_A_DAG, ROW_A).real
    s_e = correlator(coeffs, G, ROW_C_DAG, ROW_C).real
    s_oe = correlator(coeffs, G, ROW_C, ROW_A)
    s_oe_dag = correlator(coeffs, G, ROW_A_DAG, ROW_C_DAG)
    return FluxSpectra(omegas, s_o, s_e, s_oe, s_oe_dag)


def flux_spectra(sys: DynamicalSystem, omega: float) -> tuple[float, float, complex]:
    f = flux_grid(sys, [omega])
    return float(f.s_o[0]), float(f.s_e[0]), complex(f.s_oe[0])


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform grid spanning ``+-span_factor * g_em``."""

    span_factor: float = 25.0
    points: int = 4001

    def omegas(self, g_em: float) -> np.ndarray:
        half = self.span_factor * g_em
        return np.linspace(-half, half, self.points)

    def refined(self) -> "FrequencyGrid":
        """Same span, half the step."""
        return FrequencyGrid(self.span_factor, 2 * self.points - 1)

    def widened(self) -> "FrequencyGrid":
        """Double span at the same step."""
        return FrequencyGrid(2 * self.span_factor, 2 * self.points - 1)


def spectrum_table(sys: DynamicalSystem, omegas: np.ndarray) -> dict[str, np.ndarray]:
    """Columns of the spectrum CSV export."""
    omegas = np.asarray(omegas, dtype=float)
    V = covariance_grid(sys, omegas)
    u, v, w = standard_form_arrays(V)
    f = flux_grid(sys, omegas)
    return {
        "omega_hz": omegas / (2 * np.pi),
        "u": u,
        "v": v,
        "w": w,
        "s_o": f.s_o,
        "s_e": f.s_e,
        "re_s_oe": f.s_oe.real,
        "im_s_oe": f.s_oe.imag,
    }


def local_maxima(y: np.ndarray) -> np.ndarray:
    """Indices of strict interior local maxima (plateaus counted once)."""
    y = np.asarray(y)
    d = np.diff(y)
    idx = []
    i = 1
    while i < len(y) - 1:
        if d[i - 1] > 0:
            j = i
            while j < len(y) - 1 and d[j] == 0:
                j += 1
            if j < len(y) - 1 and d[j] < 0:
                idx.append(i)
            i = j + 1
        else:
            i += 1
    return np.array(idx, dtype=int)
