"""Optical and microwave output spectra across the coupling regimes (mode splitting)."""

import numpy as np

from _common import out_dir, save
from moentangle.params import build_dynamics, mode_splitting, table1
from moentangle.spectra import flux_grid, local_maxima

if __name__ == "__main__":
    out = out_dir(__doc__)
    ratios = (0.1, 0.2, 0.5, 1.0, 2.0)
    g_em = table1().g_em
    omegas = np.linspace(-4, 4, 2001) * g_em
    cols = {"omega_mhz": omegas / (2 * np.pi * 1e6)}
    for R in ratios:
        f = flux_grid(build_dynamics(table1(1.0, R, 1.0)), omegas)
        cols[f"s_o_R{R:g}"] = f.s_o
        cols[f"s_e_R{R:g}"] = f.s_e
        for name, s in (("optical", f.s_o), ("microwave", f.s_e)):
            peaks = omegas[local_maxima(s)] / (2 * np.pi * 1e6)
            print(f"R={R:<4g} {name:9s} maxima at {np.round(peaks, 3)} MHz")
        print(f"R={R:<4g} eigenvalue splitting {mode_splitting(table1(1.0, R, 1.0)) / (2 * np.pi * 1e6):.3f} MHz")
    save(out / "output_spectra.csv", cols, {"C_om": 1.0, "n_ba": 1.0, "ratios": list(ratios)})
