"""CHSH fringes for several thermal occupations and the CHSH / fidelity regime map."""

import numpy as np

from _common import out_dir, save
from moentangle.detection import DetectorModel, chsh_fringe, detection_regime_map
from moentangle.params import build_dynamics, table1

if __name__ == "__main__":
    out = out_dir(__doc__)
    det = DetectorModel.table2()
    phis = np.linspace(0, 2 * np.pi, 361)
    cols = {"phi_e": phis}
    for n_ba in (0.0, 0.5, 1.0, 2.0, 4.0):
        fr = chsh_fringe(build_dynamics(table1(1.0, 0.26, n_ba)), det, 0.0, phis)
        cols[f"S_n{n_ba:g}"] = fr.S
        print(f"n_ba={n_ba:<4g} max|S| = {np.abs(fr.S).max():.4f}")
    save(out / "chsh_fringes.csv", cols, {"C_om": 1.0, "ratio_R": 0.26, "phi_o": 0.0})

    C = np.linspace(0.25, 20, 40)
    R = np.linspace(0.05, 1.0, 40)
    m = detection_regime_map(table1(1.0, 0.2, 1.0), C, R, det, n_phases=181, threads=4)
    CC, RR = np.meshgrid(C, R, indexing="ij")
    save(
        out / "bell_regimes.csv",
        {"c_om": CC, "ratio_R": RR, "s_max": m.s_max, "f_lb": m.f_lb, "chsh_violation": m.chsh_violation, "fidelity_pass": m.fidelity_pass},
        {"n_ba": 1.0},
    )
