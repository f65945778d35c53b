"""E_F heat map over (C_om, R), stability boundary and entanglement rate vs R."""

import numpy as np

from _common import out_dir, save
from moentangle.entanglement import critical_C_om, entanglement_rate_scan, regime_map
from moentangle.params import table1

if __name__ == "__main__":
    out = out_dir(__doc__)
    template = table1(1.0, 0.2, 1.0)
    C = np.linspace(0.25, 20, 40)
    R = np.linspace(0.05, 2, 40)
    m = regime_map(template, C, R, threads=4)
    CC, RR = np.meshgrid(C, R, indexing="ij")
    save(out / "ef_map.csv", {"c_om": CC, "ratio_R": RR, "ef_ebits": m.ef, "stable": m.stable}, {"omega": "g_em", "n_ba": 1.0})

    R_line = np.linspace(0.05, 2, 40)
    crit = np.array([critical_C_om(template, r) for r in R_line])
    save(out / "critical_c_om.csv", {"ratio_R": R_line, "critical_c_om": crit}, {"n_ba": 1.0})

    R_scan = np.geomspace(0.05, 4, 41)
    cols = {"ratio_R": R_scan}
    for c in (1.0, 5.0, 10.0):
        scan = entanglement_rate_scan(template.with_(C_om=c), R_scan, threads=4)
        cols[f"er_C{c:g}"] = scan.er
        i = int(np.nanargmax(scan.er))
        print(f"C_om={c:<4g} peak E_R {scan.er[i]:.4g} ebit/s at R={R_scan[i]:.3f}")
    save(out / "entanglement_rate.csv", cols, {"n_ba": 1.0})
