#!/usr/bin/env python3
# Copyright 2026 The Gridweave Authors
# SPDX-License-Identifier: Apache-2.0
"""Regenerates the scenario fixtures under tests/fixtures.

Output is deterministic; rerunning must not change any file.
"""
import json
import math
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"
MINUTE_US = 60_000_000
DAY_US = 24 * 60 * MINUTE_US


def port(name, direction, quantity, unit):
    return {"name": name, "direction": direction, "quantity": quantity, "unit": unit}


def link(src, src_port, dst, dst_port, **channel):
    doc = {"from": {"component": src, "port": src_port}, "to": {"component": dst, "port": dst_port}}
    if channel:
        doc["channel"] = channel
    return doc


def load_points(base_w, peak_w, peak_hour, pf_q):
    points = []
    for m in range(24 * 60 + 1):
        hour = m / 60.0
        shape = math.exp(-((hour - peak_hour) ** 2) / 8.0)
        p = round(base_w + (peak_w - base_w) * shape, 1)
        points.append([m * MINUTE_US, p, round(p * pf_q, 1)])
    return points


def irradiance_points():
    points = []
    for m in range(24 * 60 + 1):
        hour = m / 60.0
        g = 0.0
        if 6.0 < hour < 20.0:
            g = round(950.0 * math.sin(math.pi * (hour - 6.0) / 14.0) ** 2, 2)
        points.append([m * MINUTE_US, g, 0.0])
    return points


def player(cid, lab, points, ports):
    return {
        "id": cid,
        "lab": lab,
        "kind": "DiscreteEvent",
        "model": {"name": "profile-player", "params": {"points": points, "ports": [p["name"] for p in ports]}},
        "ports": ports,
    }


GRID = {
    "buses": [1, 2, 3, 4, 5],
    "lines": [
        {"from": 1, "to": 2, "r": 0.05, "x": 0.03},
        {"from": 2, "to": 3, "r": 0.05, "x": 0.03},
        {"from": 3, "to": 4, "r": 0.05, "x": 0.03},
        {"from": 4, "to": 5, "r": 0.05, "x": 0.03},
    ],
    "v_slack": 230.0,
    "base_kv": 0.23,
}

LOAD_PORTS = [port("P", "Out", "active-power", "W"), port("Q", "Out", "reactive-power", "var")]


def reference():
    loads = [("load1", 2, 400.0, 1800.0, 8.0), ("load2", 3, 300.0, 2200.0, 19.0), ("load3", 5, 500.0, 1500.0, 13.0)]
    components = []
    pf_inputs = {}
    pf_ports = []
    links = []
    for cid, bus, base, peak, hour in loads:
        components.append(player(cid, "sesa", load_points(base, peak, hour, 0.3), LOAD_PORTS))
        for kind, quantity, unit in (("P", "active-power", "W"), ("Q", "reactive-power", "var")):
            name = f"{cid}_{kind}"
            pf_inputs[name] = {"bus": bus, "kind": kind}
            pf_ports.append(port(name, "In", quantity, unit))
            links.append(link(cid, kind, "grid", name))
    components.append(player("sun", "sesa", irradiance_points(), [port("G", "Out", "irradiance", "W/m2")]))
    for kind, quantity, unit in (("P", "active-power", "W"), ("Q", "reactive-power", "var")):
        name = f"pv_{kind}"
        pf_inputs[name] = {"bus": 5, "kind": kind}
        pf_ports.append(port(name, "In", quantity, unit))
    pf_ports.append(port("v_pv", "Out", "voltage-magnitude", "pu"))
    components.append({
        "id": "grid",
        "lab": "sesa",
        "kind": "DiscreteEvent",
        "model": {"name": "powerflow", "params": {
            "grid": GRID,
            "interval_us": MINUTE_US,
            "inputs": pf_inputs,
            "outputs": {"v_pv": {"bus": 5, "measure": "v_pu"}},
        }},
        "ports": pf_ports,
        "sgam_layer": "Component",
    })
    components.append({
        "id": "pv",
        "lab": "smartest",
        "kind": "Continuous",
        "step_us": 1_000_000,
        "model": {"name": "pv-inverter", "params": {
            "p_peak": 4000.0,
            "p_rated": 3600.0,
            "voltvar": [[0.95, 1500.0], [0.98, 0.0], [1.02, 0.0], [1.05, -1500.0]],
            "interval_us": 1_000_000,
        }},
        "ports": [
            port("irradiance", "In", "irradiance", "W/m2"),
            port("v_pu", "In", "voltage-magnitude", "pu"),
            port("P", "Out", "active-power", "W"),
            port("Q", "Out", "reactive-power", "var"),
        ],
    })
    links += [
        link("sun", "G", "pv", "irradiance"),
        link("grid", "v_pv", "pv", "v_pu"),
        link("pv", "P", "grid", "pv_P"),
        link("pv", "Q", "grid", "pv_Q"),
    ]
    return {
        "id": "reference",
        "labs": [
            {"id": "sesa", "endpoint": "127.0.0.1:7841", "description": "grid and load simulation"},
            {"id": "smartest", "endpoint": "127.0.0.1:7842", "description": "PV inverter"},
        ],
        "components": components,
        "links": links,
        "run": {"duration_us": DAY_US, "seed": 7, "experiment_id": "reference-day"},
    }


def two_lab_single_link():
    """Smallest two-lab layout: the PV feeds the grid model across the labs."""
    return {
        "id": "pv-to-grid",
        "labs": [
            {"id": "sesa", "endpoint": "127.0.0.1:7841"},
            {"id": "smartest", "endpoint": "127.0.0.1:7842"},
        ],
        "components": [
            player("house", "sesa", [[0, 800.0, 200.0], [MINUTE_US, 1200.0, 300.0]], LOAD_PORTS),
            {
                "id": "grid",
                "lab": "sesa",
                "kind": "DiscreteEvent",
                "model": {"name": "powerflow", "params": {
                    "grid": {"buses": [1, 2], "lines": [{"from": 1, "to": 2, "r": 0.5, "x": 0.25}], "v_slack": 230.0},
                    "inputs": {"house_P": {"bus": 2, "kind": "P"}, "pv_P": {"bus": 2, "kind": "P"}},
                }},
                "ports": [port("house_P", "In", "active-power", "W"), port("pv_P", "In", "active-power", "W")],
            },
            {
                "id": "pv",
                "lab": "smartest",
                "kind": "Continuous",
                "step_us": 1_000_000,
                "model": {"name": "pv-inverter", "params": {"p_peak": 3000.0}},
                "ports": [
                    port("irradiance", "In", "irradiance", "W/m2"),
                    port("v_pu", "In", "voltage-magnitude", "pu"),
                    port("P", "Out", "active-power", "W"),
                    port("Q", "Out", "reactive-power", "var"),
                ],
                "protocol": "iec61850-toy",
            },
        ],
        "links": [
            link("house", "P", "grid", "house_P"),
            link("pv", "P", "grid", "pv_P", latency_us=5000),
        ],
        "run": {"duration_us": 2 * MINUTE_US, "seed": 1},
    }


def single_lab():
    return {
        "id": "single",
        "labs": [{"id": "lab1", "endpoint": "127.0.0.1:7841"}],
        "components": [
            player("meter", "lab1", [[0, 1.0, 0.5], [10_000_000, 2.0, 1.0]], LOAD_PORTS),
        ],
        "links": [],
        "run": {"duration_us": 20_000_000, "seed": 0},
    }


def empty():
    return {
        "id": "empty",
        "labs": [{"id": "lab1", "endpoint": "127.0.0.1:7841"}],
        "components": [],
        "links": [],
        "run": {"duration_us": 1_000_000, "seed": 0},
    }


def duplicate_id():
    doc = single_lab()
    doc["components"].append(json.loads(json.dumps(doc["components"][0])))
    return doc


def no_adapter():
    doc = two_lab_single_link()
    doc["components"][2]["ports"][2]["unit"] = "W/m2"
    return doc


def write(name, doc):
    (OUT / name).write_text(json.dumps(doc, indent=1) + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    write("reference.json", reference())
    write("pv_to_grid.json", two_lab_single_link())
    write("single_lab.json", single_lab())
    write("empty.json", empty())
    write("duplicate_id.json", duplicate_id())
    write("no_adapter.json", no_adapter())
    (OUT / "not_json.txt").write_text("{ this is not json\n")


if __name__ == "__main__":
    main()
