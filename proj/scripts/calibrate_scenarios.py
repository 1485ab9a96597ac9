#!/usr/bin/env python3
"""Write the BAU and policy scenario specs, the milestone goal set and the
offset plan.

The "technical limits" efficiency trajectory is not published as numbers. It is
solved here: one common multiplier per milestone year (heavy classes improve
15% less) such that the scenario-4 reduction lands just above each milestone.
Scenario 3 reuses those multipliers with a deeper VMT cut. Scenarios 1 and 2
carry illustrative fuel-economy-standard multipliers.

    python3 scripts/calibrate_scenarios.py
"""
import csv
import json
import os
import re
from collections import defaultdict

ROOT = os.path.join(os.path.dirname(__file__), "..")
DATASET = os.path.join(ROOT, "data", "inventory", "houston-2014")
OUT = os.path.join(ROOT, "data", "scenarios")

LIGHT_DUTY = {"PassengerCar", "LightTruck", "FleetVehicle"}
HEAVY = {"ShortHaulTruck", "LongHaulTruck", "TransitBus"}
CLASSES = ["PassengerCar", "LightTruck", "ShortHaulTruck", "LongHaulTruck", "FleetVehicle", "MotorcycleRV",
           "TransitBus"]

POPULATION = [[2020, 2520000.0], [2050, 3300000.0]]
MILESTONES = {2030: 0.33, 2040: 0.58, 2050: 0.70}
MARGIN = 0.001
HEAVY_RATIO = 1.15

S4_VMT = [[2014, 1.0], [2050, 0.8]]
S3_VMT = [[2014, 1.0], [2050, 0.6]]
S2_VMT = [[2014, 1.0], [2050, 0.7]]


def interp(anchors, year):
    if year <= anchors[0][0]:
        return anchors[0][1]
    if year >= anchors[-1][0]:
        return anchors[-1][1]
    for (y0, v0), (y1, v1) in zip(anchors, anchors[1:]):
        if y0 <= year <= y1:
            if year == y0:
                return v0
            return v0 + (year - y0) / (y1 - y0) * (v1 - v0)
    raise ValueError(year)


def load_baseline():
    with open(os.path.join(DATASET, "dataset.json")) as fh:
        meta = json.load(fh)
    rates = {}
    with open(os.path.join(DATASET, "factors.csv")) as fh:
        for row in csv.DictReader(fh):
            if int(row["year"]) == meta["year"]:
                rates[(row["class"], row["fuel"])] = float(row["g_per_mile"])
    emissions = defaultdict(float)
    vmt = defaultdict(float)
    ev = defaultdict(float)
    with open(os.path.join(DATASET, "activity.csv")) as fh:
        for row in csv.DictReader(fh):
            v = float(row["vmt"])
            emissions[row["class"]] += v * rates[(row["class"], row["fuel"])] / 1e6
            vmt[row["class"]] += v
            if row["fuel"] == "Electric":
                ev[row["class"]] += v
    ld_vmt = sum(vmt[c] for c in LIGHT_DUTY)
    base_ev = sum(ev[c] for c in LIGHT_DUTY) / ld_vmt
    return meta, emissions, base_ev


def dump(obj, path):
    text = json.dumps(obj, indent=2)
    text = re.sub(r"\[\s+([-\d.e]+),\s+([-\d.e]+)\s+\]", r"[\1, \2]", text)
    with open(path, "w") as fh:
        fh.write(text + "\n")


def main():
    meta, emissions, base_ev = load_baseline()
    base_pop = meta["base_population"]
    total = sum(emissions.values())
    s4_ev = [[2014, base_ev], [2025, 0.10], [2035, 0.32], [2050, 0.60]]

    factors = {}
    for year, target in MILESTONES.items():
        growth = interp(POPULATION, year) / base_pop
        vmt_mult = interp(S4_VMT, year)
        disp = (1.0 - interp(s4_ev, year)) / (1.0 - base_ev)
        weighted = sum(emissions[c] * (HEAVY_RATIO if c in HEAVY else 1.0) * (disp if c in LIGHT_DUTY else 1.0)
                       for c in CLASSES)
        factors[year] = (1.0 - target - MARGIN) * total / (growth * vmt_mult * weighted)

    def technical_limits():
        out = {}
        for c in CLASSES:
            ratio = HEAVY_RATIO if c in HEAVY else 1.0
            out[c] = [[2014, 1.0]] + [[y, round(f * ratio, 12)] for y, f in factors.items()]
        return out

    standards = {"default": [[2014, 1.0], [2025, 0.72]],
                 "ShortHaulTruck": [[2014, 1.0], [2027, 0.82]],
                 "LongHaulTruck": [[2014, 1.0], [2027, 0.82]],
                 "TransitBus": [[2014, 1.0], [2027, 0.82]]}
    modest_ev = [[2014, base_ev], [2030, 0.08], [2050, 0.15]]

    specs = {
        "bau": {"name": "bau",
                "description": "Business as usual: VMT tracks population, baseline fuel efficiency and EV share.",
                "population": POPULATION, "ev_fleet_share": "baseline"},
        "scenario1": {"name": "scenario1",
                      "description": "2025 car/small-truck and 2027 truck fuel economy standards.",
                      "illustrative": True,
                      "population": POPULATION, "efficiency_multiplier": standards, "ev_fleet_share": modest_ev},
        "scenario2": {"name": "scenario2",
                      "description": "Scenario 1 standards plus a 30% per-capita VMT reduction by 2050.",
                      "illustrative": True,
                      "population": POPULATION, "vmt_per_capita_multiplier": S2_VMT,
                      "efficiency_multiplier": standards, "ev_fleet_share": modest_ev},
        "scenario3": {"name": "scenario3",
                      "description": "Technical-limits efficiency plus a 40% per-capita VMT reduction by 2050.",
                      "population": POPULATION, "vmt_per_capita_multiplier": S3_VMT,
                      "efficiency_multiplier": technical_limits(), "ev_fleet_share": s4_ev},
        "scenario4": {"name": "scenario4",
                      "description": "Preferred: technical-limits efficiency plus a 20% per-capita VMT reduction by 2050.",
                      "population": POPULATION, "vmt_per_capita_multiplier": S4_VMT,
                      "efficiency_multiplier": technical_limits(), "ev_fleet_share": s4_ev},
    }
    os.makedirs(OUT, exist_ok=True)
    for key, spec in specs.items():
        spec.setdefault("illustrative", False)
        spec["end_year"] = 2050
        dump(spec, os.path.join(OUT, f"{key}.json"))

    goals = {"reduction": {str(y): v for y, v in MILESTONES.items()},
             "zev_share": {"2035": 0.30},
             "vmt_per_capita_reduction": {"2050": 0.20}}
    dump(goals, os.path.join(OUT, "goals.json"))

    # Back-solved from 15,490 gWh for a 30% residual and 67 square miles of solar.
    residual = 0.30 * total
    plan = {"grid_intensity_mtco2e_per_gwh": residual / 15490.0,
            "solar_yield_gwh_per_acre": 15490.0 / (67.0 * 640.0)}
    dump(plan, os.path.join(OUT, "offset_plan.json"))

    print("base EV share", base_ev)
    print("technical-limits multipliers", factors)
    print("offset plan", plan)


if __name__ == "__main__":
    main()
