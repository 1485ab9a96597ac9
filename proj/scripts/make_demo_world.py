#!/usr/bin/env python3
"""Write the bundled demo world under data/worlds/demo.

Twelve zones on a 4 x 3 grid around a two-zone downtown, arterial grid plus
freeway spines, seven GTFS-lite routes and four park-and-ride hubs at the
corners. Tract profiles are copied from the bundled tract set (sorted by
income, every eighth tract) so zones span the income range.

The "reference" block and data/worlds/demo/presets/ are filled in by
tools/calibrate_preset (see README).

    python3 scripts/make_demo_world.py
"""
import csv
import json
import os

ROOT = os.path.join(os.path.dirname(__file__), "..")
OUT = os.path.join(ROOT, "data", "worlds", "demo")

LAT0, LON0, CELL = 29.70, -95.48, 0.06
COLS, ROWS = 4, 3
MILES = 4.0

POP = [90, 70, 70, 90, 80, 40, 40, 80, 90, 70, 70, 90]
EMP = [20, 30, 30, 20, 40, 180, 140, 40, 20, 30, 30, 20]


def zid(r, c):
    return f"Z{r * COLS + c + 1:02d}"


def hhmmss(minutes):
    s = round(minutes * 60)
    return f"{s // 3600:02d}:{s % 3600 // 60:02d}:{s % 60:02d}"


def main():
    os.makedirs(os.path.join(OUT, "gtfs-lite"), exist_ok=True)

    with open(os.path.join(ROOT, "data", "tracts", "houston-tracts.csv")) as f:
        rows = list(csv.DictReader(f))
    header = list(rows[0].keys())
    rows.sort(key=lambda r: float(r["median_income"]))
    picked = [rows[4 + 8 * i] for i in range(12)]
    # richer tracts toward the west/north edge, poorer near downtown east
    order = [9, 6, 3, 7, 10, 1, 0, 4, 11, 8, 2, 5]
    zone_tract = {}
    with open(os.path.join(OUT, "tracts.csv"), "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=header, lineterminator="\n")
        w.writeheader()
        for i, k in enumerate(order):
            w.writerow(picked[k])
            zone_tract[i] = picked[k]["tract_id"]

    features = []
    for r in range(ROWS):
        for c in range(COLS):
            i = r * COLS + c
            x0, y0 = LON0 + c * CELL, LAT0 + r * CELL
            ring = [[x0, y0], [x0 + CELL, y0], [x0 + CELL, y0 + CELL], [x0, y0 + CELL], [x0, y0]]
            features.append({
                "type": "Feature",
                "properties": {
                    "zone_id": zid(r, c),
                    "population": POP[i] * 1000,
                    "employment": EMP[i] * 1000,
                    "tract_id": zone_tract[i],
                    "centroid_lat": round(y0 + CELL / 2, 6),
                    "centroid_lon": round(x0 + CELL / 2, 6),
                },
                "geometry": {"type": "Polygon", "coordinates": [[[round(a, 6), round(b, 6)] for a, b in ring]]},
            })
    with open(os.path.join(OUT, "zones.geojson"), "w") as f:
        json.dump({"type": "FeatureCollection", "features": features}, f, indent=1)
        f.write("\n")

    freeway = {("Z05", "Z06"), ("Z06", "Z07"), ("Z07", "Z08"), ("Z02", "Z06"), ("Z06", "Z10"),
               ("Z03", "Z07"), ("Z07", "Z11")}
    edges = []
    for r in range(ROWS):
        for c in range(COLS):
            for dr, dc in ((0, 1), (1, 0)):
                r2, c2 = r + dr, c + dc
                if r2 >= ROWS or c2 >= COLS:
                    continue
                a, b = zid(r, c), zid(r2, c2)
                fast = (a, b) in freeway or (b, a) in freeway
                mph, cap = (55.0, 5200.0) if fast else (30.0, 1900.0)
                ff = round(MILES / mph * 60.0, 4)
                edges.append((a, b, MILES, ff, cap))
                edges.append((b, a, MILES, ff, cap))
    with open(os.path.join(OUT, "edges.csv"), "w") as f:
        f.write("from,to,distance_miles,free_flow_minutes,capacity_vph\n")
        for e in edges:
            f.write(f"{e[0]},{e[1]},{e[2]},{e[3]},{e[4]:.0f}\n")

    routes = [
        ("X1", "Westchase Xpress", ["Z01", "Z02", "Z06", "Z07"], [0, 10, 20, 27], 15),
        ("X2", "Eastside Xpress", ["Z04", "Z03", "Z07", "Z06"], [0, 10, 20, 27], 15),
        ("X3", "Northwest Xpress", ["Z09", "Z10", "Z06", "Z07"], [0, 10, 20, 27], 15),
        ("X4", "Northeast Xpress", ["Z12", "Z11", "Z07", "Z06"], [0, 10, 20, 27], 15),
        ("L5", "Crosstown Local", ["Z05", "Z06", "Z07", "Z08"], [0, 11, 20, 31], 12),
        ("L6", "West Local", ["Z02", "Z06", "Z10"], [0, 13, 26], 20),
        ("L7", "East Local", ["Z03", "Z07", "Z11"], [0, 13, 26], 20),
    ]
    first, last = 5 * 60, 23 * 60
    with open(os.path.join(OUT, "gtfs-lite", "stops.txt"), "w") as f:
        f.write("stop_id,stop_name,stop_lat,stop_lon,zone_id\n")
        for ft in features:
            p = ft["properties"]
            f.write(f"S{p['zone_id'][1:]},{p['zone_id']} Transit Center,{p['centroid_lat']},{p['centroid_lon']},{p['zone_id']}\n")
    with open(os.path.join(OUT, "gtfs-lite", "routes.txt"), "w") as f:
        f.write("route_id,route_short_name,route_long_name,route_type\n")
        for rid, name, *_ in routes:
            f.write(f"{rid},{rid},{name},3\n")
    with open(os.path.join(OUT, "gtfs-lite", "trips.txt"), "w") as tf, \
            open(os.path.join(OUT, "gtfs-lite", "stop_times.txt"), "w") as sf:
        tf.write("route_id,service_id,trip_id,direction_id\n")
        sf.write("trip_id,arrival_time,departure_time,stop_id,stop_sequence\n")
        for rid, _, stops, offsets, headway in routes:
            for direction in (0, 1):
                seq = stops if direction == 0 else stops[::-1]
                offs = offsets if direction == 0 else [offsets[-1] - o for o in offsets[::-1]]
                k = 0
                t = first
                while t <= last:
                    trip = f"{rid}-{direction}-{k:03d}"
                    tf.write(f"{rid},WKDY,{trip},{direction}\n")
                    for n, (s, o) in enumerate(zip(seq, offs), start=1):
                        clock = hhmmss(t + o)
                        sf.write(f"{trip},{clock},{clock},S{s[1:]},{n}\n")
                    k += 1
                    t += headway

    with open(os.path.join(OUT, "hubs.csv"), "w") as f:
        f.write("hub_id,zone,parking_spaces,charger_ports,routes\n")
        f.write("H-WEST,Z01,150,3,X1\n")
        f.write("H-EAST,Z04,150,3,X2\n")
        f.write("H-NORTHWEST,Z09,150,3,X3\n")
        f.write("H-NORTHEAST,Z12,150,3,X4\n")

    path = os.path.join(OUT, "agents.json")
    existing = {}
    if os.path.exists(path):
        with open(path) as f:
            existing = json.load(f)
    config = {
        "name": "demo",
        "n_agents": 10000,
        "seed": 7,
        "employment_rate": 0.92,
        "am_window": [6, 9],
        "pm_window": [16, 19],
        "income_sigma": 0.5,
        "income_bands": {"low_below": 40000, "high_from": 100000},
        "vot_wage_fraction": 0.5,
        "work_hours_per_year": 2080,
        "no_vehicle_propensity": {"low": 0.45, "middle": 0.15, "high": 0.05},
        "ev_base_share": 0.05,
        "ev_band_multiplier": {"low": 0.4, "middle": 1.0, "high": 2.2},
        "costs": {
            "logit_scale_usd": 3.0,
            "gas_per_mile": 0.16,
            "ev_per_mile": 0.05,
            "parking": 3.0,
            "hub_parking": 0.0,
            "transit_fare": 1.25,
            "incentive_amortization_trips": 2500,
        },
        "transit_access_minutes": 8,
        "hub_transfer_minutes": 4,
        "active_speed_mph": 6,
        "parking_search_minutes": 6,
        "demand_scale": 10,
        "priced_zones": ["Z06", "Z07"],
        "charger": {"service": "exponential", "mean_minutes": 90, "charge_probability": 0.9},
        "factor_year": 2014,
    }
    if "reference" in existing:
        config["reference"] = existing["reference"]
    with open(path, "w") as f:
        json.dump(config, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
