import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from moentangle import gaussian


def random_unitary(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@given(st.integers(0, 10_000), st.integers(1, 4))
def test_passive_maps_are_symplectic_and_orthogonal(seed, n):
    S = gaussian.passive_symplectic(random_unitary(np.random.default_rng(seed), n))
    assert gaussian.is_symplectic(S, atol=1e-12)
    assert np.allclose(S @ S.T, np.eye(2 * n), atol=1e-12)


@given(st.floats(-2.0, 2.0))
def test_two_mode_squeezer_is_symplectic(r):
    assert gaussian.is_symplectic(gaussian.two_mode_squeezer(r), atol=1e-12 * math.cosh(r) ** 2)


@given(st.floats(0.0, 1.5), st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_squeezed_thermal_is_physical(r, n1, n2):
    V = gaussian.two_mode_squeezed_thermal_covariance(r, n1, n2)
    assert gaussian.is_physical(V, atol=1e-9 * np.abs(V).max())
    nu = gaussian.symplectic_eigenvalues(V)
    assert np.allclose(np.sort(nu), np.sort([2 * n1 + 1, 2 * n2 + 1]), rtol=1e-8)


def test_unphysical_detected():
    assert not gaussian.is_physical(0.5 * np.eye(4))


@given(st.floats(0.0, 1.5))
def test_log_negativity_of_tmsv(r):
    V = gaussian.two_mode_squeezed_thermal_covariance(r)
    assert math.isclose(gaussian.log_negativity(V), 2 * r / math.log(2), rel_tol=1e-9, abs_tol=1e-12)


@given(st.floats(0.0, 1.5), st.floats(0.0, 2.0))
def test_pt_eigenvalue_matches_standard_form_closed_form(r, n):
    from moentangle.entanglement import log_negativity_arrays
    from moentangle.spectra import standard_form_arrays

    V = gaussian.two_mode_squeezed_thermal_covariance(r, n, n / 2)
    u, v, w = standard_form_arrays(V[None])
    closed = float(log_negativity_arrays(u, v, w)[0])
    assert math.isclose(gaussian.log_negativity(V), closed, rel_tol=1e-9, abs_tol=1e-12)


def test_phase_rotation_and_reduce():
    R = gaussian.phase_rotation(math.pi / 2)
    # a -> -i a maps x -> p
    assert np.allclose(R @ np.array([1.0, 0.0]), [0.0, -1.0]) or np.allclose(R @ np.array([1.0, 0.0]), [0.0, 1.0])
    V = gaussian.two_mode_squeezed_thermal_covariance(0.3, 1.0, 0.0)
    assert np.allclose(gaussian.reduce(V, [0]), V[:2, :2])
