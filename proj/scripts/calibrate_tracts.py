#!/usr/bin/env python3
"""Generate the synthetic 100-tract equity dataset and its brute-force oracle.

Median incomes are drawn log-normally and then warped (monotone, piecewise
linear in log space) so that exactly 19 tracts can carry a new-EV loan and 44
tracts a used EV after a $4,000 incentive under the default loan terms. The
other indicators are income-correlated with noise.

equity_oracle.csv is an independent straight-line evaluation of the equity
index (min-max normalize, invert barrier-decreasing columns, equal weights,
50/50 groups) used to check the library bit for bit.

    python3 scripts/calibrate_tracts.py
"""
import json
import math
import os

import numpy as np

ROOT = os.path.join(os.path.dirname(__file__), "..")
OUT = os.path.join(ROOT, "data", "tracts")

N = 100
SEED = 20220419
NEW_EV_PRICE = 48_000.0
USED_EV_PRICE = 28_000.0
USED_EV_INCENTIVE = 4_000.0
APR, TERM, BUDGET = 0.07, 60, 0.10
NEW_PASS, USED_PASS = 19, 44


def annual_payment(principal):
    r = APR / 12.0
    return 12.0 * (principal * r / (1.0 - (1.0 + r) ** (-TERM)))


def calibrated_incomes(rng):
    raw = np.sort(rng.lognormal(mean=math.log(62_000), sigma=0.55, size=N))
    t_new = annual_payment(NEW_EV_PRICE) / BUDGET
    t_used = annual_payment(USED_EV_PRICE - USED_EV_INCENTIVE) / BUDGET
    logs = np.log(raw)
    k_used = 0.5 * (logs[N - USED_PASS - 1] + logs[N - USED_PASS])
    k_new = 0.5 * (logs[N - NEW_PASS - 1] + logs[N - NEW_PASS])
    lo = min(logs[0], math.log(t_used) - 0.8)
    hi = max(logs[-1], math.log(t_new) + 0.5)
    xs = [logs[0], k_used, k_new, logs[-1]]
    ys = [lo, math.log(t_used), math.log(t_new), hi]
    warped = np.exp(np.interp(logs, xs, ys))
    incomes = np.round(warped)
    # Keep rounded incomes off the thresholds.
    incomes[N - NEW_PASS] = max(incomes[N - NEW_PASS], math.ceil(t_new) + 250)
    incomes[N - NEW_PASS - 1] = min(incomes[N - NEW_PASS - 1], math.floor(t_new) - 250)
    incomes[N - USED_PASS] = max(incomes[N - USED_PASS], math.ceil(t_used) + 250)
    incomes[N - USED_PASS - 1] = min(incomes[N - USED_PASS - 1], math.floor(t_used) - 250)
    return incomes, t_new, t_used


def clip(v, lo=0.0, hi=1.0):
    return min(max(v, lo), hi)


def normalize(col, decreasing):
    lo, hi = min(col), max(col)
    if not hi > lo:
        return [0.5] * len(col)
    rng = hi - lo
    out = []
    for v in col:
        n = (v - lo) / rng
        out.append(1.0 - n if decreasing else n)
    return out


def oracle(tracts):
    internal_cols = [("edu", True), ("poverty", False), ("renter", False), ("sub_two_car", False)]
    external_cols = [("charger_access", True), ("ev_cost", False), ("incentive", True)]
    ni = [normalize([t[c] for t in tracts], d) for c, d in internal_cols]
    ne = [normalize([t[c] for t in tracts], d) for c, d in external_cols]
    rows = []
    for i, t in enumerate(tracts):
        acc = 0.0
        for col in ni:
            acc += 1.0 * col[i]
        internal = clip(acc / 4.0)
        acc = 0.0
        for col in ne:
            acc += 1.0 * col[i]
        external = clip(acc / 3.0)
        index = clip((0.5 * internal + 0.5 * external) / 1.0)
        rows.append((t["tract_id"], internal, external, index))
    return rows


def main():
    rng = np.random.default_rng(SEED)
    incomes, t_new, t_used = calibrated_incomes(rng)
    order = rng.permutation(N)

    tracts = []
    for slot in range(N):
        income = float(incomes[order[slot]])
        z = (math.log(income) - math.log(60_000)) / 0.6
        tracts.append({
            "tract_id": f"48201{310100 + 100 * slot:06d}",
            "median_income": income,
            "edu": round(clip(0.30 + 0.14 * z + rng.normal(0, 0.05), 0.02, 0.95), 4),
            "poverty": round(clip(0.16 - 0.07 * z + rng.normal(0, 0.03), 0.01, 0.60), 4),
            "renter": round(clip(0.55 - 0.12 * z + rng.normal(0, 0.08), 0.05, 0.95), 4),
            "sub_two_car": round(clip(0.45 - 0.13 * z + rng.normal(0, 0.06), 0.05, 0.95), 4),
            "charger_access": round(max(0.0, 1.6 + 0.9 * z + rng.normal(0, 0.5)), 3),
            "ev_cost": round(52_000 + 2_500 * rng.normal(), 0),
            "incentive": float(rng.choice([0.0, 0.0, 500.0, 1_000.0, 2_500.0])),
        })

    new_pass = sum(annual_payment(NEW_EV_PRICE) <= BUDGET * t["median_income"] for t in tracts)
    used_pass = sum(annual_payment(USED_EV_PRICE - USED_EV_INCENTIVE) <= BUDGET * t["median_income"] for t in tracts)
    assert new_pass == NEW_PASS and used_pass == USED_PASS, (new_pass, used_pass)

    os.makedirs(OUT, exist_ok=True)
    cols = ["tract_id", "median_income", "edu", "poverty", "renter", "sub_two_car", "charger_access", "ev_cost",
            "incentive"]
    with open(os.path.join(OUT, "houston-tracts.csv"), "w") as fh:
        fh.write(",".join(cols) + "\n")
        for t in tracts:
            fh.write(",".join(t[c] if c == "tract_id" else repr(float(t[c])) for c in cols) + "\n")

    # Re-read what was written so the oracle sees exactly the parsed values.
    parsed = []
    with open(os.path.join(OUT, "houston-tracts.csv")) as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            vals = line.strip().split(",")
            parsed.append({k: (v if k == "tract_id" else float(v)) for k, v in zip(header, vals)})
    with open(os.path.join(OUT, "equity_oracle.csv"), "w") as fh:
        fh.write("tract_id,internal,external,index\n")
        for tid, a, b, c in oracle(parsed):
            fh.write(f"{tid},{a!r},{b!r},{c!r}\n")

    features = []
    for slot, t in enumerate(tracts):
        r, c = divmod(slot, 10)
        x0, y0, d = -95.65 + c * 0.05, 29.55 + r * 0.04, 0.05
        ring = [[x0, y0], [x0 + d, y0], [x0 + d, y0 + 0.04], [x0, y0 + 0.04], [x0, y0]]
        features.append({"type": "Feature",
                          "geometry": {"type": "Polygon", "coordinates": [[[round(x, 5), round(y, 5)] for x, y in ring]]},
                          "properties": {"tract_id": t["tract_id"]}})
    with open(os.path.join(OUT, "tracts.geojson"), "w") as fh:
        json.dump({"type": "FeatureCollection", "features": features}, fh)
        fh.write("\n")

    print(f"thresholds new={t_new:.0f} used={t_used:.0f}; pass new={new_pass} used={used_pass}")


if __name__ == "__main__":
    main()
