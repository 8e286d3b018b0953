#!/usr/bin/env python3
"""Regenerates the synthetic fixtures under data/.

None of these farms exist; parameters were picked as round per-unit values
and converted to engineering units here so the JSON stays readable.
"""
import json
import math
import os
import sys

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")
F_HZ = 50.0
W_B = 2 * math.pi * F_HZ


def z_base(kv, s_mva):
    return (2.0 / 3.0) * kv * kv / s_mva


def dru_block(bus, s_mva, n_bridge, v_ll, lc_pu, rdc_pu, von_pu):
    v_dc_b = n_bridge * 3 * math.sqrt(2) / math.pi * v_ll
    i_dc_b = s_mva / v_dc_b
    return {
        "bus": bus,
        "n_bridge": n_bridge,
        "v_ac_bridge": v_ll,
        "l_c": round(lc_pu * math.sqrt(2) * v_ll / (W_B * i_dc_b) * 1e3, 4),
        "r_dc": round(rdc_pu * v_dc_b * v_dc_b / s_mva, 4),
        "v_dc_onshore": round(von_pu * v_dc_b, 3),
    }


def turbine(bus, s_mva, kv_lv, kv_hv, p_mw, s_mva_rated, cf_pu, ltf_pu):
    zb = z_base(kv_lv, s_mva)
    return {
        "bus": bus,
        "c_f": round(cf_pu / (W_B * zb) * 1e6, 2),
        "l_tf": round(ltf_pu * zb / W_B * 1e3, 7),
        "n_tf": kv_hv / kv_lv,
        "p_max": p_mw,
        "s_rating": s_mva_rated,
    }


def cable(frm, to, km, r_km=0.1, l_km=0.4, c_km=0.15, s_max=60.0):
    return {
        "from": frm,
        "to": to,
        "r": round(r_km * km, 6),
        "l": round(l_km * km, 6),
        "c_half": round(c_km * km / 2, 6),
        "s_max": s_max,
    }


def transformer(lv, hv, s_mva, kv_lv, r_pu, l_pu, s_max):
    zb = z_base(kv_lv, s_mva)
    return {
        "from": lv,
        "to": hv,
        "level": "lv",
        "r": round(r_pu * zb, 9),
        "l": round(l_pu * zb / W_B * 1e3, 7),
        "s_max": s_max,
    }


def bus(bid, kind, level, shunt_c=None):
    b = {"id": bid, "kind": kind, "level": level, "v_min": 0.9, "v_max": 1.1}
    if shunt_c:
        b["shunt_c"] = shunt_c
    return b


def farm12():
    s, lv, mv = 100.0, 0.69, 66.0
    # 8 %/0.8 % transformers on a 9 MVA rating are 0.89/0.089 p.u. on 100 MVA;
    # the leakage is deliberately on the high side.
    l_tf, r_tf, c_f = 1.2, 0.0889, 0.0027
    buses = [bus("pcc", "pcc", "mv"), bus("dru", "dru-ac", "mv", shunt_c=0.5)]
    branches = [cable("pcc", "dru", 0.5, s_max=150.0)]
    turbines = []
    for f, feeder in enumerate("ab"):
        prev = "pcc"
        for k in range(6):
            n = f * 6 + k + 1
            wt, hv = f"wt{n:02d}", f"hv{n:02d}"
            buses += [bus(wt, "turbine-lv", "lv"), bus(hv, "turbine-hv", "mv")]
            branches.append(transformer(wt, hv, s, lv, r_tf, l_tf, 9.0))
            branches.append(cable(prev, hv, 10.0 if k == 0 else 2.0))
            turbines.append(turbine(wt, s, lv, mv, 8.0, 9.0, c_f, l_tf))
            prev = hv
    return {
        "description": "synthetic 12-turbine farm, two radial feeders of six (not a real site)",
        "base": {"s_mva": s, "f_hz": F_HZ, "v_kv": {"lv": lv, "mv": mv}},
        "buses": buses,
        "branches": branches,
        "turbines": turbines,
        "dru": dru_block("dru", s, 2, 100.0, 0.08, 0.00274, 0.92),
    }


def farm1():
    s, lv, mv = 10.0, 0.69, 33.0
    buses = [bus("wt01", "turbine-lv", "lv"), bus("dru", "dru-ac", "mv")]
    branches = [transformer("wt01", "dru", s, lv, 0.01, 0.08, 12.0)]
    return {
        "description": "synthetic single turbine on a direct link to the rectifier (not a real site)",
        "base": {"s_mva": s, "f_hz": F_HZ, "v_kv": {"lv": lv, "mv": mv}},
        "buses": buses,
        "branches": branches,
        "turbines": [turbine("wt01", s, lv, mv, 8.0, 9.0, 0.0003, 0.0)],
        "dru": dru_block("dru", s, 1, 10.0, 0.08, 0.003, 0.92),
    }


def farm2():
    s, lv, mv = 20.0, 0.69, 33.0
    l_tf, r_tf = 0.18, 0.018
    buses = [bus("pcc", "pcc", "mv"), bus("dru", "dru-ac", "mv")]
    branches = [cable("pcc", "dru", 0.3, s_max=30.0)]
    turbines = []
    for n, km in ((1, 3.0), (2, 8.0)):
        wt, hv = f"wt{n:02d}", f"hv{n:02d}"
        buses += [bus(wt, "turbine-lv", "lv"), bus(hv, "turbine-hv", "mv")]
        branches.append(transformer(wt, hv, s, lv, r_tf, l_tf, 9.0))
        branches.append(cable(hv, "pcc", km, s_max=30.0))
        turbines.append(turbine(wt, s, lv, mv, 8.0, 9.0, 0.0006, l_tf))
    return {
        "description": "synthetic two-turbine farm with unequal feeders (not a real site)",
        "base": {"s_mva": s, "f_hz": F_HZ, "v_kv": {"lv": lv, "mv": mv}},
        "buses": buses,
        "branches": branches,
        "turbines": turbines,
        "dru": dru_block("dru", s, 1, 20.0, 0.08, 0.003, 0.92),
    }


# Farm loading per hour: 50-70 % for hours 1-14, then a sweep through light
# and heavy load, including one interval with no generation.
LOADING = [0.50, 0.52, 0.55, 0.58, 0.60, 0.62, 0.65, 0.67, 0.70, 0.68, 0.64, 0.60, 0.56, 0.53,
           0.80, 0.75, 0.40, 0.30, 0.20, 0.10, 0.05, 0.00, 0.25, 0.45]


def profile24(path):
    lines = ["hour,turbine_id,p_mw"]
    for h, load in enumerate(LOADING, start=1):
        for n in range(1, 13):
            # turbine-to-turbine spread that averages out over each feeder
            spread = 0.04 * math.sin(2.0 * math.pi * (n - 1) / 6.0 + 0.7 * h)
            p = max(0.0, min(8.0, 8.0 * (load + spread * (load > 0) * min(1.0, load / 0.1))))
            lines.append(f"{h},wt{n:02d},{p:.4f}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def main():
    os.makedirs(OUT, exist_ok=True)
    for name, doc in (("farm12.json", farm12()), ("farm1.json", farm1()), ("farm2.json", farm2())):
        with open(os.path.join(OUT, name), "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    profile24(os.path.join(OUT, "profile24.csv"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
