import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import stable_params
from moentangle import gaussian
from moentangle.params import SystemParams, build_dynamics, table1
from moentangle.spectra import (
    ROW_A,
    ROW_A_DAG,
    ROW_C,
    ROW_C_DAG,
    FrequencyGrid,
    NotStandardFormError,
    NumericalSingularityError,
    StandardForm,
    commutator_sums,
    covariance_grid,
    flux_grid,
    flux_spectra,
    local_maxima,
    output_covariance,
    pair_correlation,
    scatter,
    scatter_grid,
    spectrum_table,
    standard_form_arrays,
    to_standard_form,
)

TWO_PI = 2 * math.pi
EXPECTED_COMMUTATORS = np.array([-1.0, 1.0, 1.0, -1.0])


def decoupled(n_ba=0.0):
    # g_em must stay positive; a tiny value leaves the optics exactly decoupled via g_om = 0
    return table1(0.0, 0.2, n_ba)


def test_resonant_reflection_coefficients():
    p = decoupled()
    sol = scatter(build_dynamics(p), 0.0)
    row = sol.coeffs[ROW_A_DAG]
    # optical inputs enter a^dag as creation operators (columns 5, 6)
    assert np.isclose(row[5], 2 * p.kappa_o_c / p.kappa_o - 1)
    assert np.isclose(row[6], 2 * math.sqrt(p.kappa_o_c * p.kappa_o_i) / p.kappa_o)
    assert np.allclose(row[[0, 1, 2, 3, 4, 7, 8, 9]], 0)


def test_conjugate_pairing():
    c = scatter_grid(build_dynamics(table1()), np.linspace(-1e7, 1e7, 11))
    assert np.allclose(c[:, ROW_A], np.conj(np.concatenate([c[:, ROW_A_DAG, 5:], c[:, ROW_A_DAG, :5]], -1)))
    assert np.allclose(c[:, ROW_C_DAG], np.conj(np.concatenate([c[:, ROW_C, 5:], c[:, ROW_C, :5]], -1)))


def _cramer_column(A, b, k):
    # independent 3x3 solve by explicit determinants
    Ak = A.copy()
    Ak[:, k] = b
    return np.linalg.det(Ak) / np.linalg.det(A)


def test_gain_channel_against_explicit_inversion():
    sys = build_dynamics(table1(1.0, 0.2))
    omega = TWO_PI * 2e6
    row = scatter(sys, omega).coeffs[ROW_C]
    # c_out couples to a^dag_in,c (creation column 5): parametric gain
    assert abs(row[5]) > 1e-3
    A = -1j * omega * np.eye(3) - sys.M
    ref = math.sqrt(sys.kappa_e_c) * _cramer_column(A, sys.N[:, 0].astype(complex), 2)
    assert np.isclose(row[5], ref, rtol=1e-10)


@given(stable_params())
def test_commutators_preserved(p):
    sys = build_dynamics(p)
    sums = commutator_sums(scatter_grid(sys, np.linspace(-10, 10, 21) * p.g_em))
    assert np.abs(sums - EXPECTED_COMMUTATORS).max() <= 1e-9


@given(stable_params())
def test_outputs_are_physical(p):
    V = covariance_grid(build_dynamics(p), np.linspace(-10, 10, 21) * p.g_em)
    assert np.allclose(V, np.swapaxes(V, 1, 2), rtol=1e-10, atol=0)
    for Vi in V:
        assert gaussian.min_uncertainty_eigenvalue(Vi) >= -1e-9 * np.abs(Vi).max()
    assert np.diagonal(V, axis1=1, axis2=2).min() >= 1 - 1e-9


@given(stable_params())
def test_standard_form_and_flux_consistency(p):
    sys = build_dynamics(p)
    omegas = np.linspace(-10, 10, 41) * p.g_em
    u, v, w = standard_form_arrays(covariance_grid(sys, omegas))
    f = flux_grid(sys, omegas)
    assert np.allclose(u, 2 * f.s_o + 1, atol=1e-9 * u.max())
    assert np.allclose(v, 2 * f.s_e + 1, atol=1e-9 * v.max())
    assert f.s_o.min() >= -1e-12 and f.s_e.min() >= -1e-12
    assert np.allclose(np.abs(f.s_oe_dag), np.abs(f.s_oe))
    # symmetric line shapes at the resonance condition
    for x in (u, v, w):
        assert np.allclose(x, x[::-1], atol=1e-9 * max(1.0, np.abs(x).max()))


def test_vacuum_limits():
    V = output_covariance(build_dynamics(decoupled()), 1e6).V
    assert np.allclose(V, np.eye(4), atol=1e-12)
    V = output_covariance(build_dynamics(decoupled(1.0)), 1e6).V
    assert np.allclose(V[:2, :2], np.eye(2), atol=1e-12)
    assert np.allclose(V[:2, 2:], 0, atol=1e-12)


def test_flux_examples():
    s_o, s_e, s_oe = flux_spectra(build_dynamics(decoupled()), TWO_PI * 1e6)
    assert s_o == pytest.approx(0, abs=1e-14) and s_e == pytest.approx(0, abs=1e-14) and abs(s_oe) < 1e-14
    s_o, s_e, _ = flux_spectra(build_dynamics(decoupled(1.0)), TWO_PI * 2e6)
    assert s_o == pytest.approx(0, abs=1e-14)
    assert s_e > 0


def test_standard_form_examples():
    assert to_standard_form(np.eye(4)) == StandardForm(1.0, 1.0, 0.0)
    r = 0.4
    sf = to_standard_form(gaussian.two_mode_squeezed_thermal_covariance(r))
    assert sf.u == pytest.approx(math.cosh(2 * r))
    assert sf.v == pytest.approx(math.cosh(2 * r))
    assert sf.w == pytest.approx(math.sinh(2 * r))
    # the diag(-w, w) pattern is the same state up to a local phase, i.e. squeezing -r
    assert np.allclose(sf.matrix(), gaussian.two_mode_squeezed_thermal_covariance(-r))


@given(st.floats(0.0, 1.0), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_standard_form_invariant_under_local_rotations(r, a, b):
    V = gaussian.two_mode_squeezed_thermal_covariance(r, 0.5, 0.2)
    R = np.zeros((4, 4))
    R[:2, :2] = gaussian.phase_rotation(a)
    R[2:, 2:] = gaussian.phase_rotation(b)
    u0, v0, w0 = standard_form_arrays(V)
    u1, v1, w1 = standard_form_arrays(R @ V @ R.T)
    assert np.allclose([u0, v0, w0], [u1, v1, w1], atol=1e-12)


def test_not_standard_form_detected():
    V = np.eye(4)
    V[0, 0] = 3.0
    with pytest.raises(NotStandardFormError) as info:
        to_standard_form(V)
    assert info.value.residual > 0.1


def test_pair_correlation_of_tmsv():
    r = 0.3
    V = gaussian.two_mode_squeezed_thermal_covariance(r)
    # <a b> = cosh r sinh r for exp(r(a^dag b^dag - a b))
    assert np.isclose(pair_correlation(V), math.cosh(r) * math.sinh(r))


def test_singular_system_reports_frequency():
    p = table1(0.0, 0.2)
    sys = build_dynamics(p)
    # purely lossless resonance: make M singular at omega = 0 by hand
    object.__setattr__(sys, "M", np.zeros((3, 3), dtype=complex))
    with pytest.raises(NumericalSingularityError) as info:
        scatter(sys, 0.0)
    assert info.value.omega == 0.0


def _peak_separation(y, omegas):
    idx = local_maxima(y)
    idx = idx[y[idx] > 0.05 * y.max()]
    return idx, (omegas[idx[-1]] - omegas[idx[0]]) if len(idx) >= 2 else 0.0


def test_mode_splitting_in_output_spectra():
    p = table1(1.0, 0.2, 1.0)
    omegas = np.linspace(-4, 4, 4001) * p.g_em
    f = flux_grid(build_dynamics(p), omegas)
    for s in (f.s_o, f.s_e):
        idx, sep = _peak_separation(s, omegas)
        assert len(idx) == 2
        assert 3.6e6 <= sep / TWO_PI <= 4.4e6
    f = flux_grid(build_dynamics(table1(1.0, 2.0, 1.0)), omegas)
    for s in (f.s_o, f.s_e):
        assert len(_peak_separation(s, omegas)[0]) == 1


def test_local_maxima_plateau():
    assert list(local_maxima(np.array([0, 1, 1, 0, 2, 0]))) == [1, 4]
    assert list(local_maxima(np.array([0, 1, 2]))) == []


def test_grid_helpers():
    g = FrequencyGrid(10, 101)
    assert len(g.refined().omegas(1.0)) == 201
    assert g.refined().omegas(1.0)[-1] == g.omegas(1.0)[-1]
    assert g.widened().omegas(1.0)[-1] == 2 * g.omegas(1.0)[-1]
    assert np.isclose(np.diff(g.widened().omegas(1.0))[0], np.diff(g.omegas(1.0))[0])


def test_spectrum_table_columns():
    cols = spectrum_table(build_dynamics(table1()), np.linspace(-1e7, 1e7, 5))
    assert list(cols) == ["omega_hz", "u", "v", "w", "s_o", "s_e", "re_s_oe", "im_s_oe"]
