#!/usr/bin/env python3
"""Generate the 25-zone desk fixture under tests/fixtures/desk25.

5x5 zones over an 8x10 node grid (0.8 km spacing), 220 directed links,
2,000 households, ~2,500 jobs and default utility specs. Output is fully
determined by SEED. Besides the main scenario it writes three variants:

  static.cfg   zero growth, no relocation, every person stays home
  roomy.cfg    ample residential units and job spaces, flat control totals
  doubled.cfg  as roomy.cfg with control totals doubled
"""

import argparse
import csv
import math
import random
from pathlib import Path

SEED = 20240611
ROWS, COLS = 8, 10
SPACING_KM = 0.8
ARTERIAL_ROWS = {0, 4, 7}
ARTERIAL_COLS = {0, 4, 9}
# Vertical links are missing in these columns (all rows) ...
NO_VERTICAL_COLS = {1, 3, 5, 7}
# ... and in column 8 between rows 0 and 4.
PARTIAL_COL, PARTIAL_ROWS = 8, range(0, 4)

HOUSEHOLDS = 2000
JOBS = 2500
YEARS = (2020, 2021, 2022)


def zone_of(r, c):
    return (r * 5 // ROWS) * 5 + c // 2 + 1


def node_id(r, c):
    return r * COLS + c + 1


def write(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def network():
    nodes = [(node_id(r, c), round(c * SPACING_KM, 3), round(r * SPACING_KM, 3), zone_of(r, c))
             for r in range(ROWS) for c in range(COLS)]
    edges = []
    for r in range(ROWS):
        for c in range(COLS - 1):
            edges.append(((r, c), (r, c + 1), r in ARTERIAL_ROWS))
    for c in range(COLS):
        if c in NO_VERTICAL_COLS:
            continue
        for r in range(ROWS - 1):
            if c == PARTIAL_COL and r in PARTIAL_ROWS:
                continue
            edges.append(((r, c), (r + 1, c), c in ARTERIAL_COLS))
    links = []
    for a, b, arterial in edges:
        speed = 50.0 if arterial else 30.0
        capacity = 40.0 if arterial else 20.0
        t0 = round(SPACING_KM / speed * 60.0, 4)
        for u, v in ((a, b), (b, a)):
            links.append([len(links) + 1, node_id(*u), node_id(*v), SPACING_KM, capacity, t0, 0.15, 4.0])
    return nodes, links


def centrality(z):
    zr, zc = divmod(z - 1, 5)
    return math.exp(-((zr - 2) ** 2 + (zc - 2) ** 2) / 4.0)


def draw_zone(rng, weights):
    return rng.choices(range(1, 26), weights=weights)[0]


def population(rng):
    hh_w = [0.4 + centrality(z) for z in range(1, 26)]
    job_w = [0.15 + 2.0 * centrality(z) ** 2 for z in range(1, 26)]
    households, persons = [], []
    pid = 0
    for h in range(1, HOUSEHOLDS + 1):
        zone = draw_zone(rng, hh_w)
        income = round(rng.lognormvariate(math.log(60.0), 0.5), 1)
        size = rng.choices([1, 2, 3, 4, 5, 6], weights=[28, 33, 16, 14, 6, 3])[0]
        autos = min(2, rng.choices([0, 1, 2], weights=[12, 40, 48])[0] + (1 if income > 120 else 0))
        households.append([h, zone, income, size, autos, rng.randint(0, 15)])
        for k in range(size):
            pid += 1
            if k < 2:
                age = rng.randint(22, 75)
            else:
                age = rng.randint(3, 21)
            worker = 1 if 18 <= age <= 66 and rng.random() < 0.72 else 0
            student = 1 if age <= 17 or (18 <= age <= 24 and rng.random() < 0.4) else 0
            persons.append([pid, h, age, worker, student, ""])
    sectors = ["retail", "office", "industrial"]
    jobs = []
    for j in range(1, JOBS + 1):
        zone = draw_zone(rng, job_w)
        zr, zc = divmod(zone - 1, 5)
        edge = zr in (0, 4) or zc in (0, 4)
        sector = rng.choices(sectors, weights=[3, 2, 3] if edge else [3, 5, 1])[0]
        jobs.append([j, zone, sector])
    return households, persons, jobs


def zones(households, jobs, unit_factor=1.1, space_factor=1.1):
    hh = {z: 0 for z in range(1, 26)}
    jb = {z: 0 for z in range(1, 26)}
    for h in households:
        hh[h[1]] += 1
    for j in jobs:
        jb[j[1]] += 1
    out = []
    for z in range(1, 26):
        zr, _ = divmod(z - 1, 5)
        rows = 1 if zr in (2, 4) else 2
        area = round(rows * 2 * SPACING_KM * SPACING_KM * 100.0, 1)
        units = math.ceil(hh[z] * unit_factor) + 5
        spaces = math.ceil(jb[z] * space_factor) + 5
        price = round(300.0 + 350.0 * centrality(z), 1)
        out.append([z, area, math.ceil(units * 1.3), math.ceil(spaces * 1.5), price, units, spaces])
    return out


def specs(all_home=False):
    s = {
        "hlc": {"price": -0.004, "income*price": 0.00002, "log_access": 0.3, "logsum_access": 0.2,
                "log_units": 1.0, "autos*logsum_access": -0.1},
        "elc": {"log_access": 0.4, "log_job_spaces": 1.0, "log_households": 0.1,
                "is_retail*log_households": 0.3},
        "workplace": {"time": -0.08, "log_size": 1.0},
        "destination_school": {"time": -0.15, "log_size": 1.0},
        "destination_other": {"time": -0.1, "log_size": 1.0},
        "auto_ownership": {"is_1": 0.8, "is_2": -0.6, "income*autos": 0.012, "size*is_2": 0.25,
                           "workers*autos": 0.2, "accessibility*autos": 0.1},
        "cdap": {"is_worker*is_M": 2.2, "is_student*is_M": 2.0, "is_N": 0.1, "is_worker*is_N": -0.4,
                 "age*is_H": 0.01, "autos*is_N": 0.15},
        "nm_frequency": {"is_1": 0.4, "is_2": -0.9, "autos*is_1": 0.1, "is_worker*is_2": -0.5},
        "tour_mode": {"time": -0.04, "is_shared": -0.9, "is_transit": -1.2, "is_walk": -0.6,
                      "autos*is_drive_alone": 0.6, "income*is_transit": -0.004},
        "trip_mode": {"time": -0.05, "is_shared": 0.5, "is_transit": 0.5, "is_walk": -1.0},
        "departure_work": {},
        "departure_school": {},
        "departure_other": {},
        "duration_other": {"is_4h": -0.3},
        "accessibility_logsum": {"time": -0.04, "is_shared": -0.9, "is_transit": -1.2, "is_walk": -0.6},
    }
    work = {6: 0.8, 7: 2.0, 8: 2.3, 9: 1.0, 10: -0.5}
    school = {7: 2.5, 8: 2.0}
    other = {h: 0.6 for h in range(9, 20)}
    other.update({12: 1.1, 17: 1.0})
    for name, peaks in (("departure_work", work), ("departure_school", school), ("departure_other", other)):
        for h in range(24):
            s[name][f"hour_{h}"] = peaks.get(h, -2.0 if h < 6 or h > 20 else -1.0)
    if all_home:
        s["cdap"] = {"is_M": -1000.0, "is_N": -1000.0}
    rows = []
    for name, coeffs in s.items():
        for var, b in coeffs.items():
            rows.append([name, var, b])
    return rows


def config(name, start, end, zones_file, specs_file, controls_file, move_rate=0.15):
    return f"""# desk fixture: {name}
[scenario]
name = {name}
global_seed = 42
start_year = {start}
end_year = {end}
threads = 1

[periods]
AM = 6-9
MD = 10-14
PM = 15-18

[assignment]
gap_tol = 1e-4
max_iters = 200

[landuse]
annual_move_rate = {move_rate}

[inputs]
zones = {zones_file}
nodes = nodes.csv
links = links.csv
households = households.csv
persons = persons.csv
jobs = jobs.csv
specs = {specs_file}
control_totals = {controls_file}
"""


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    root = Path(__file__).resolve().parent.parent
    ap.add_argument("--out", type=Path, default=root / "tests" / "fixtures" / "desk25")
    args = ap.parse_args()
    out = args.out
    out.mkdir(parents=True, exist_ok=True)

    rng = random.Random(SEED)
    nodes, links = network()
    households, persons, jobs = population(rng)
    zone_header = ["zone_id", "area", "max_residential_units", "max_job_spaces", "avg_price",
                   "residential_units", "job_spaces"]

    write(out / "nodes.csv", ["node_id", "x", "y", "zone_id"], nodes)
    write(out / "links.csv", ["link_id", "from_node", "to_node", "length", "capacity", "free_flow_time",
                              "alpha", "beta"], links)
    write(out / "households.csv", ["household_id", "zone_id", "income", "size", "autos", "tenure_years"],
          households)
    write(out / "persons.csv", ["person_id", "household_id", "age", "is_worker", "is_student", "workplace_zone"],
          persons)
    write(out / "jobs.csv", ["job_id", "zone_id", "sector"], jobs)
    write(out / "zones.csv", zone_header, zones(households, jobs))
    write(out / "zones_roomy.csv", zone_header, zones(households, jobs, unit_factor=2.6, space_factor=2.6))
    write(out / "specs.csv", ["spec_name", "variable", "coefficient"], specs())
    write(out / "specs_all_home.csv", ["spec_name", "variable", "coefficient"], specs(all_home=True))

    n_hh, n_jobs = len(households), len(jobs)
    write(out / "control_totals.csv", ["year", "households", "jobs"],
          [[y, n_hh + 40 * k, n_jobs + 50 * k] for k, y in enumerate(YEARS)])
    write(out / "control_totals_flat.csv", ["year", "households", "jobs"], [[y, n_hh, n_jobs] for y in YEARS])
    write(out / "control_totals_doubled.csv", ["year", "households", "jobs"],
          [[y, 2 * n_hh, 2 * n_jobs] for y in YEARS])

    (out / "scenario.cfg").write_text(config("desk25", 2020, 2022, "zones.csv", "specs.csv", "control_totals.csv"))
    (out / "static.cfg").write_text(
        config("static", 2020, 2022, "zones.csv", "specs_all_home.csv", "control_totals_flat.csv", move_rate=0))
    (out / "roomy.cfg").write_text(config("roomy", 2020, 2020, "zones_roomy.csv", "specs.csv",
                                          "control_totals_flat.csv"))
    (out / "doubled.cfg").write_text(config("doubled", 2020, 2020, "zones_roomy.csv", "specs.csv",
                                            "control_totals_doubled.csv"))
    print(f"wrote {out}: {len(nodes)} nodes, {len(links)} links, {n_hh} households, {len(persons)} persons, "
          f"{n_jobs} jobs")


if __name__ == "__main__":
    main()
