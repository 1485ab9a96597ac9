#!/usr/bin/env python3
"""Generate the synthetic houston-2014 on-road dataset.

Emission factors are fixed MOVES-like rates. Per-class VMT is solved by
proportional scaling so that the class totals hit the target on-road total and
fleet-group breakdown, then spread over zones and hours with fixed profiles.

    python3 scripts/calibrate_inventory.py [--out data/inventory/houston-2014]
"""
import argparse
import json
import os

ON_ROAD_TOTAL = 15_932_882.0  # MTCO2e, 2014
STATIONARY = 16_454_686.0
TRANSPORT = 16_140_987.0
WASTE = 818_344.0
BASE_POPULATION = 2_520_000.0
YEAR = 2014

# Fraction of on-road MTCO2e per class. Groups: personal = PC+LT+MRV (0.888),
# short-haul/commercial (0.080), long-haul (0.027), fleet = fleet+bus (0.005).
CLASS_SHARE = {
    "PassengerCar": 0.560,
    "LightTruck": 0.323,
    "MotorcycleRV": 0.005,
    "ShortHaulTruck": 0.080,
    "LongHaulTruck": 0.027,
    "FleetVehicle": 0.004,
    "TransitBus": 0.001,
}

# VMT split by fuel within a class.
FUEL_SPLIT = {
    "PassengerCar": {"Gasoline": 0.988, "Diesel": 0.010, "Electric": 0.002},
    "LightTruck": {"Gasoline": 0.950, "Diesel": 0.050},
    "MotorcycleRV": {"Gasoline": 1.0},
    "ShortHaulTruck": {"Gasoline": 0.300, "Diesel": 0.700},
    "LongHaulTruck": {"Diesel": 1.0},
    "FleetVehicle": {"Gasoline": 0.600, "Diesel": 0.400},
    "TransitBus": {"Diesel": 1.0},
}

# g CO2e / mile and PM2.5 proxy g / mile by (class, fuel) for 2014; later
# years scale by FLEET_TURNOVER.
RATES = {
    ("PassengerCar", "Gasoline"): (368.0, 0.0080),
    ("PassengerCar", "Diesel"): (340.0, 0.0150),
    ("PassengerCar", "Electric"): (0.0, 0.0030),
    ("LightTruck", "Gasoline"): (493.0, 0.0095),
    ("LightTruck", "Diesel"): (560.0, 0.0210),
    ("MotorcycleRV", "Gasoline"): (390.0, 0.0120),
    ("ShortHaulTruck", "Gasoline"): (960.0, 0.0300),
    ("ShortHaulTruck", "Diesel"): (1280.0, 0.0850),
    ("LongHaulTruck", "Diesel"): (1720.0, 0.1100),
    ("FleetVehicle", "Gasoline"): (450.0, 0.0090),
    ("FleetVehicle", "Diesel"): (620.0, 0.0250),
    ("TransitBus", "Diesel"): (2680.0, 0.1500),
}
FLEET_TURNOVER = {2014: 1.0, 2020: 0.94, 2030: 0.82}

# Relative daily activity per zone (12 zones on a 4x3 grid) and hour.
ZONE_WEIGHT = [0.62, 0.88, 1.35, 0.71, 0.94, 1.80, 1.42, 0.83, 0.58, 1.05, 0.97, 0.85]
HOUR_WEIGHT = [0.9, 0.6, 0.5, 0.5, 0.8, 2.2, 5.0, 7.6, 7.1, 5.4, 4.9, 5.2,
               5.5, 5.4, 5.6, 6.3, 7.4, 7.9, 6.5, 4.6, 3.6, 3.0, 2.2, 1.4]

LON0, LON1, LAT0, LAT1 = -95.65, -95.15, 29.55, 29.95
COLS, ROWS = 4, 3


def zone_ids():
    return [f"HOU-{i + 1:02d}" for i in range(COLS * ROWS)]


def zone_polygon(i):
    r, c = divmod(i, COLS)
    dx = (LON1 - LON0) / COLS
    dy = (LAT1 - LAT0) / ROWS
    x0, y0 = LON0 + c * dx, LAT0 + r * dy
    ring = [[x0, y0], [x0 + dx, y0], [x0 + dx, y0 + dy], [x0, y0 + dy], [x0, y0]]
    return {"type": "Polygon", "coordinates": [[[round(x, 6), round(y, 6)] for x, y in ring]]}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data", "inventory", "houston-2014"))
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    assert abs(sum(CLASS_SHARE.values()) - 1.0) < 1e-12
    zones = zone_ids()
    zsum = sum(ZONE_WEIGHT)
    hsum = sum(HOUR_WEIGHT)

    rows = []
    total = 0.0
    for cls, share in CLASS_SHARE.items():
        split = FUEL_SPLIT[cls]
        grams_per_mile = sum(f * RATES[(cls, fuel)][0] for fuel, f in split.items())
        class_vmt = share * ON_ROAD_TOTAL * 1e6 / grams_per_mile
        for fuel, f in split.items():
            for zi, z in enumerate(zones):
                for h in range(24):
                    vmt = class_vmt * f * ZONE_WEIGHT[zi] / zsum * HOUR_WEIGHT[h] / hsum
                    rows.append((cls, fuel, z, h, round(vmt, 6)))
                    total += round(vmt, 6) * RATES[(cls, fuel)][0] / 1e6

    with open(os.path.join(args.out, "activity.csv"), "w") as fh:
        fh.write("class,fuel,zone,hour,vmt\n")
        for cls, fuel, z, h, vmt in rows:
            fh.write(f"{cls},{fuel},{z},{h},{vmt:.6f}\n")

    with open(os.path.join(args.out, "factors.csv"), "w") as fh:
        fh.write("class,fuel,year,g_per_mile,pm25_proxy\n")
        for year, mult in FLEET_TURNOVER.items():
            for (cls, fuel), (rate, pm) in RATES.items():
                fh.write(f"{cls},{fuel},{year},{rate * mult:.4f},{pm * mult:.6f}\n")

    meta = {
        "name": "houston-2014",
        "description": "Synthetic on-road activity calibrated to the 2014 community inventory totals.",
        "year": YEAR,
        "base_population": BASE_POPULATION,
        "other_sectors": {
            "stationary_energy": STATIONARY,
            "waste": WASTE,
            "offroad_rail_remainder": TRANSPORT - ON_ROAD_TOTAL,
        },
    }
    with open(os.path.join(args.out, "dataset.json"), "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")

    features = [{"type": "Feature", "geometry": zone_polygon(i), "properties": {"zone_id": z}}
                for i, z in enumerate(zones)]
    with open(os.path.join(args.out, "zones.geojson"), "w") as fh:
        json.dump({"type": "FeatureCollection", "features": features}, fh, indent=1)
        fh.write("\n")

    print(f"on-road total {total:.3f} MTCO2e over {len(rows)} activity rows")


if __name__ == "__main__":
    main()
