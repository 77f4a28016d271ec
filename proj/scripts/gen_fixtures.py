#!/usr/bin/env python3
"""Deterministic generator for the repo's data fixtures.

Writes, under data/:
  feeder13.json   - IEEE-13-scale unbalanced feeder with mixed load models
  feeder123.json  - 123-bus-scale synthetic feeder (3.5 MW, mixed phasing)
  profiles_day.csv- 24-hour load multiplier and normalized solar forecast
  solar_year.csv  - 8760-row synthetic forecast/actual history

Re-running reproduces the committed files byte-for-byte.
"""

import json
import math
import random
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent / "data"


def zmat(self_r, self_x, mut_r, mut_x, phases):
    """3x3 r/x matrices with entries only on the given phases."""
    r = [[0.0] * 3 for _ in range(3)]
    x = [[0.0] * 3 for _ in range(3)]
    idx = {"a": 0, "b": 1, "c": 2}
    ph = [idx[p] for p in phases]
    for i in ph:
        for j in ph:
            if i == j:
                r[i][j] = round(self_r, 6)
                x[i][j] = round(self_x, 6)
            else:
                r[i][j] = round(mut_r, 6)
                x[i][j] = round(mut_x, 6)
    return r, x


def line(from_bus, to_bus, self_r, self_x, mut_r, mut_x, phases):
    r, x = zmat(self_r, self_x, mut_r, mut_x, phases)
    return {"from": from_bus, "to": to_bus, "r_ohm": r, "x_ohm": x}


def feeder13():
    # 2.4018 kV line-neutral (4.16 kV class), 5 MVA three-phase base.
    buses = [{"id": "sub", "phases": "abc"}]
    lines = []

    def bus(bid, phases, kw=None, kvar=None, a0=None):
        b = {"id": bid, "phases": phases}
        if kw:
            b["load_kw"] = kw
            b["load_kvar"] = kvar
            if a0 is not None:
                b["a0"] = [a0] * len(phases)
                b["a1"] = [round(1 - a0, 6)] * len(phases)
        buses.append(b)

    # Trunk (601-flavor, ~0.12 mi per segment)
    seg = dict(self_r=0.0416, self_x=0.1221, mut_r=0.0187, mut_x=0.0550)
    bus("b1", "abc")
    lines.append(line("sub", "b1", phases="abc", **seg))
    bus("b2", "abc", [120.0, 110.0, 130.0], [55.0, 50.0, 60.0], a0=0.7)
    lines.append(line("b1", "b2", phases="abc", **seg))
    bus("b3", "abc", [100.0, 90.0, 110.0], [45.0, 40.0, 50.0])
    lines.append(line("b2", "b3", phases="abc", **seg))

    lat3 = dict(self_r=0.0520, self_x=0.1100, mut_r=0.0170, mut_x=0.0500)
    lat2 = dict(self_r=0.0650, self_x=0.0900, mut_r=0.0200, mut_x=0.0420)
    lat1 = dict(self_r=0.0800, self_x=0.0850, mut_r=0.0, mut_x=0.0)

    bus("b4", "abc", [70.0, 60.0, 65.0], [32.0, 27.0, 30.0])
    lines.append(line("b1", "b4", phases="abc", **lat3))
    bus("b5", "b", [85.0], [38.0])
    lines.append(line("b4", "b5", phases="b", **lat1))
    bus("b12", "b", [60.0], [28.0])
    lines.append(line("b1", "b12", phases="b", **lat1))

    bus("b6", "ac", [75.0, 70.0], [34.0, 32.0])
    lines.append(line("b2", "b6", phases="ac", **lat2))
    bus("b7", "a", [55.0], [25.0])
    lines.append(line("b6", "b7", phases="a", **lat1))

    bus("b8", "abc", [65.0, 75.0, 60.0], [30.0, 34.0, 27.0], a0=0.7)
    lines.append(line("b3", "b8", phases="abc", **lat3))
    bus("b9", "c", [90.0], [40.0])
    lines.append(line("b8", "b9", phases="c", **lat1))

    bus("b10", "abc", [60.0, 55.0, 70.0], [27.0, 25.0, 32.0], a0=0.5)
    lines.append(line("b3", "b10", phases="abc", **lat3))
    bus("b11", "ab", [50.0, 45.0], [23.0, 20.0])
    lines.append(line("b10", "b11", phases="ab", **lat2))

    return {
        "s_base_kva": 5000.0,
        "v_base_kv": 2.4018,
        "slack": "sub",
        "v0_pu": [1.0, 1.0, 1.0],
        "buses": buses,
        "lines": lines,
    }


def feeder123():
    # 7.1996 kV line-neutral (12.47 kV class), 5 MVA three-phase base.
    buses = [{"id": "sub", "phases": "abc"}]
    lines = []
    load_phases = []  # (bus_id, n_phases_str) for load assignment

    trunk = dict(self_r=0.060, self_x=0.160, mut_r=0.024, mut_x=0.076)
    lat3 = dict(self_r=0.120, self_x=0.240, mut_r=0.044, mut_x=0.110)
    lat2 = dict(self_r=0.150, self_x=0.220, mut_r=0.050, mut_x=0.100)
    lat1 = dict(self_r=0.180, self_x=0.200, mut_r=0.0, mut_x=0.0)

    pairs = ["ab", "bc", "ac"]
    singles = ["a", "b", "c"]

    prev = "sub"
    for t in range(1, 13):
        tid = f"t{t}"
        buses.append({"id": tid, "phases": "abc"})
        lines.append(line(prev, tid, phases="abc", **trunk))
        prev = tid

        # three-phase lateral chain
        n3 = 4 + (2 if t == 12 else 0)
        lat_prev = tid
        for k in range(1, n3 + 1):
            bid = f"t{t}a{k}"
            buses.append({"id": bid, "phases": "abc"})
            lines.append(line(lat_prev, bid, phases="abc", **lat3))
            load_phases.append((bid, "abc"))
            lat_prev = bid

        # two-phase lateral chain
        ph2 = pairs[t % 3]
        lat_prev = tid
        for k in range(1, 4):
            bid = f"t{t}b{k}"
            buses.append({"id": bid, "phases": ph2})
            lines.append(line(lat_prev, bid, phases=ph2, **lat2))
            load_phases.append((bid, ph2))
            lat_prev = bid

        # single-phase lateral chain
        ph1 = singles[(t + 1) % 3]
        lat_prev = tid
        for k in range(1, 3):
            bid = f"t{t}c{k}"
            buses.append({"id": bid, "phases": ph1})
            lines.append(line(lat_prev, bid, phases=ph1, **lat1))
            load_phases.append((bid, ph1))
            lat_prev = bid

    assert len(buses) == 123, len(buses)
    assert len(lines) == 122, len(lines)

    # 3.5 MW total at 0.92 power factor, deterministically unbalanced.
    n_node_phases = sum(len(p) for _, p in load_phases)
    base_kw = 3500.0 / n_node_phases
    by_id = {b["id"]: b for b in buses}
    k = 0
    total = 0.0
    for bid, phases in load_phases:
        kws, kvars = [], []
        for _ in phases:
            w = 1.0 + 0.3 * math.sin(2.399963229728653 * k)  # golden-angle spread
            kw = round(base_kw * w, 3)
            kws.append(kw)
            kvars.append(round(kw * 0.4260, 3))  # tan(acos(0.92))
            total += kw
            k += 1
        by_id[bid]["load_kw"] = kws
        by_id[bid]["load_kvar"] = kvars

    return {
        "s_base_kva": 5000.0,
        "v_base_kv": 7.1996,
        "slack": "sub",
        "v0_pu": [1.0, 1.0, 1.0],
        "buses": buses,
        "lines": lines,
    }


def profiles_day():
    load = [0.62, 0.58, 0.55, 0.54, 0.55, 0.60, 0.68, 0.76, 0.82, 0.86, 0.88, 0.90,
            0.92, 0.94, 0.95, 0.96, 1.00, 0.98, 0.94, 0.90, 0.84, 0.76, 0.70, 0.65]
    rows = ["hour,load_mult,solar_forecast_norm"]
    for h in range(24):
        if 6 < h < 18:
            solar = 0.62 * math.sin(math.pi * (h - 6) / 12.0)
        else:
            solar = 0.0
        rows.append(f"{h},{load[h]:.2f},{solar:.4f}")
    return "\n".join(rows) + "\n"


def solar_year():
    rng = random.Random(20240607)
    cap = 1000.0
    rows = ["timestamp,forecast_kw,actual_kw,capacity_kw"]
    for d in range(365):
        season = 0.62 + 0.33 * math.sin(2 * math.pi * (d - 80) / 365.0)
        cloud_day = 0.75 + 0.25 * rng.random()
        for h in range(24):
            if 6 <= h <= 18:
                shape = math.sin(math.pi * (h - 6) / 12.0)
            else:
                shape = 0.0
            f_norm = max(0.0, min(0.98, season * cloud_day * shape))
            if f_norm < 0.005:
                f_norm = 0.0
            forecast = cap * f_norm
            if forecast == 0.0:
                actual = 0.0
            else:
                mu = 0.25 * math.exp(-6.0 * f_norm) - 0.02
                sigma = 0.08 + 0.62 * math.exp(-4.5 * f_norm)
                err = rng.gauss(mu, sigma)
                actual = max(0.0, min(cap, forecast * (1.0 + err)))
            rows.append(f"{d:03d}-{h:02d},{forecast:.3f},{actual:.3f},{cap:.1f}")
    return "\n".join(rows) + "\n"


def main():
    DATA.mkdir(exist_ok=True)
    (DATA / "feeder13.json").write_text(json.dumps(feeder13(), indent=2) + "\n")
    (DATA / "feeder123.json").write_text(json.dumps(feeder123(), indent=2) + "\n")
    (DATA / "profiles_day.csv").write_text(profiles_day())
    (DATA / "solar_year.csv").write_text(solar_year())
    print("fixtures written to", DATA)


if __name__ == "__main__":
    main()
