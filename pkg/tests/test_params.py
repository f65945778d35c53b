import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from moentangle.params import (
    ConfigError,
    SystemParams,
    build_dynamics,
    derive_couplings,
    exceptional_point_g_em,
    hybrid_eigenvalues,
    is_stable,
    load_params,
    mode_splitting,
    params_from_mapping,
    params_to_mapping,
    table1,
)

TWO_PI = 2 * math.pi


def bare(**kw):
    base = dict(
        g_em=TWO_PI * 2e6,
        kappa_e_i=TWO_PI * 1e5,
        kappa_e_c=TWO_PI * 1.5e6,
        kappa_o_i=TWO_PI * 0.24e9,
        kappa_o_c=TWO_PI * 0.24e9,
        kappa_m=TWO_PI * 2e4,
    )
    base.update(kw)
    return SystemParams(**base)


def test_decoupled_drift_is_diagonal():
    # g_em has to be positive, so only the optomechanical coupling is switched off here
    p = bare(g_om=0.0)
    M = build_dynamics(p).M
    assert M[0, 1] == 0 and M[1, 0] == 0
    assert np.allclose(np.diag(M), [-p.kappa_o / 2, -p.kappa_m / 2, -p.kappa_e / 2])


def test_matrix_layout():
    sys = build_dynamics(table1(1.0))
    g_om, g_em = sys.params.g_om, sys.params.g_em
    assert sys.M[0, 1] == -1j * g_om
    assert sys.M[1, 0] == 1j * g_om
    assert sys.M[1, 2] == sys.M[2, 1] == 1j * g_em
    p = sys.params
    assert np.allclose(sys.N[0], [math.sqrt(p.kappa_o_c), math.sqrt(p.kappa_o_i), 0, 0, 0])
    assert sys.port_occupations == (0.0, 0.0, p.n_ba, 0.0, p.n_ba)


def test_invalid_rates_rejected():
    with pytest.raises(ConfigError):
        bare(kappa_m=-1.0)
    with pytest.raises(ConfigError):
        bare(g_em=float("nan"))
    with pytest.raises(ConfigError):
        bare(n_ba=-0.1, C_om=1.0)
    with pytest.raises(ConfigError):
        derive_couplings(bare())


@given(st.floats(0.0, 50.0))
def test_derive_couplings_roundtrip(C):
    p = derive_couplings(bare(C_om=C))
    assert derive_couplings(p) == p
    q = derive_couplings(bare(g_om=p.g_om))
    assert math.isclose(q.C_om, C, rel_tol=1e-12, abs_tol=1e-15)


def test_inconsistent_couplings_rejected():
    with pytest.raises(ConfigError):
        derive_couplings(bare(g_om=1.0, C_om=1.0))


def test_ratio_definition():
    p = table1(ratio_R=0.7)
    assert math.isclose(p.kappa_e / (4 * p.g_em), 0.7, rel_tol=1e-12)
    with pytest.raises(ConfigError):
        table1(ratio_R=0.001)


def test_eigenvalues_limits():
    p = bare(g_om=0.0)
    lb, lc = hybrid_eigenvalues(p.with_(g_em=1e-9))
    assert math.isclose(lb.real, -p.kappa_e / 2, rel_tol=1e-9)
    assert math.isclose(lc.real, -p.kappa_m / 2, rel_tol=1e-6)
    ep = exceptional_point_g_em(p)
    lb, lc = hybrid_eigenvalues(p.with_(g_em=ep))
    assert abs(lb - lc) <= 1e-9 * (p.kappa_e + p.kappa_m)
    assert math.isclose(lb.real, -(p.kappa_e + p.kappa_m) / 4, rel_tol=1e-12)


def test_splitting_approaches_2g():
    p = table1(ratio_R=0.05)
    assert math.isclose(mode_splitting(p) / TWO_PI, 4e6, rel_tol=0.01)
    assert mode_splitting(p.with_(g_em=exceptional_point_g_em(p) * 0.99)) == 0.0


@given(
    g=st.floats(1e4, 1e7),
    ki=st.floats(1e3, 1e6),
    kc=st.floats(1e3, 1e8),
    km=st.floats(1e2, 1e6),
)
def test_eigenvalue_formula_matches_numerics(g, ki, kc, km):
    p = bare(g_em=TWO_PI * g, kappa_e_i=TWO_PI * ki, kappa_e_c=TWO_PI * kc, kappa_m=TWO_PI * km, g_om=0.0)
    num = np.linalg.eigvals(build_dynamics(p).M[1:, 1:])
    ref = np.array(hybrid_eigenvalues(p))
    err = min(np.abs(num - ref).max(), np.abs(num[::-1] - ref).max())
    assert err <= 1e-10 * np.abs(ref).max()


def test_coalescence_gap_at_exceptional_point():
    p = bare(g_om=0.0)
    num = np.linalg.eigvals(build_dynamics(p.with_(g_em=exceptional_point_g_em(p), g_om=0.0)).M[1:, 1:])
    # eigenvalues of a defective matrix are only sqrt(eps) accurate
    assert abs(num[0] - num[1]) <= 1e-6 * (p.kappa_e + p.kappa_m)


def test_stability_examples():
    assert is_stable(build_dynamics(bare(g_om=0.0)))
    assert is_stable(build_dynamics(table1(1.0, 1.0)))
    # strong optomechanical drive beats the hybrid-mode damping
    assert not is_stable(build_dynamics(table1(30.0, 0.05)))


@pytest.mark.parametrize("R", [0.05, 0.1, 0.2, 0.4, 1.0, 2.0])
def test_critical_cooperativity_matches_adiabatic_threshold(R):
    from moentangle.entanglement import critical_C_om

    # optics eliminated: antidamping C_om kappa_m against either the shared hybrid
    # damping (kappa_e + kappa_m) or the microwave-induced mechanical damping C_em kappa_m
    p = table1(1.0, R)
    predicted = min(1 + p.kappa_e / p.kappa_m, 1 + p.C_em)
    assert math.isclose(critical_C_om(table1(), R), predicted, rel_tol=0.02)


def test_homogeneous_ode_diverges_when_unstable():
    from scipy.linalg import expm

    for C, R, stable in ((1.0, 1.0, True), (30.0, 0.05, False)):
        M = build_dynamics(table1(C, R)).M
        t = 200.0 / abs(np.linalg.eigvals(M).real).min()
        norm = np.linalg.norm(expm(M * t))
        assert (norm < 1.0) == stable


def test_mapping_roundtrip(tmp_path):
    p = derive_couplings(table1(2.0, 0.4, 0.5))
    mapping = params_to_mapping(p)
    q = params_from_mapping(mapping)
    for name in ("g_em", "kappa_e_c", "kappa_m", "C_om", "n_ba"):
        assert math.isclose(getattr(q, name), getattr(p, name), rel_tol=1e-12)
    path = tmp_path / "p.json"
    path.write_text(json.dumps(mapping))
    assert math.isclose(load_params(path).g_om, p.g_om, rel_tol=1e-12)


def test_mapping_ratio_alternative():
    m = params_to_mapping(table1())
    m.pop("kappa_e_c_hz")
    m["ratio_R"] = 0.5
    assert math.isclose(params_from_mapping(m).ratio_R, 0.5, rel_tol=1e-12)
    m["kappa_e_c_hz"] = 1e6
    with pytest.raises(ConfigError):
        params_from_mapping(m)


@pytest.mark.parametrize(
    "change",
    [{"bogus": 1}, {"g_em_hz": "fast"}, {"g_om_hz": 1e3}, {"kappa_m_hz": None}],
)
def test_mapping_errors(change):
    m = params_to_mapping(table1())
    m.update(change)
    if change.get("kappa_m_hz", 0) is None:
        del m["kappa_m_hz"]
    with pytest.raises(ConfigError):
        params_from_mapping(m)
