#!/usr/bin/env python3
"""Regenerates the JSON configs under configs/ (edge lists are 1-based)."""
import json
import re
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "configs"

TRAIN = {"K": 600, "T_e": 10, "T_c": 10, "eta": 0.01, "delta": 2.0, "seeds": 10}
ALL4 = ["centralized:one-point", "centralized:two-point",
        "distributed-lvf:one-point", "distributed-lvf:two-point"]


def base(n, state, obs, reward, **extra):
    cfg = {
        "schema": "netmarl/1",
        "n": n,
        "graphs": {"state": state, "obs": obs, "reward": reward, "comm_from": "so_symmetric"},
        "env": {"env": "warehouse", "gamma": 0.9, "init_stock": 1.0,
                "signal": {"mode": "fixed_sin", "amplitude": 0.5}},
        "policy": {"n_c": 8, "seed": 7, "init_scale": 0.0},
        "trainer": dict(TRAIN, variants=ALL4),
        "seed": 20240601,
    }
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(cfg.get(k), dict):
            cfg[k].update(v)
        else:
            cfg[k] = v
    return cfg


def write(name, cfg):
    text = json.dumps(cfg, indent=2)
    # keep short integer lists on one line
    text = re.sub(r"\[\s*(-?\d+(?:,\s*-?\d+)*)\s*\]",
                  lambda m: "[" + ", ".join(x.strip() for x in m.group(1).split(",")) + "]", text)
    (OUT / name).write_text(text + "\n")


def main():
    OUT.mkdir(exist_ok=True)

    # 9 warehouses in four clusters {1,2},{3,4},{5,6},{7,8,9}
    s9 = [[2, 1], [2, 3], [3, 4], [5, 6], [5, 3], [7, 5], [7, 8], [8, 9], [9, 7], [9, 2]]
    o9 = [[1, 2], [4, 3], [6, 5]]
    r9 = o9 + [[8, 7]]
    write("warehouse9.json", base(9, s9, o9, r9, verify={"agents": [1], "samples": 100000, "draws": 10000}))

    write("reward_shortcut.json", base(4, [[1, 2], [2, 1], [3, 1], [4, 3]], [], [[2, 4]]))

    write("chain3.json", base(3, [[1, 2], [2, 3]], [], [], verify={"agents": [3]}))

    path6 = [[i, i + 1] for i in range(1, 6)]
    write("path6.json", base(6, path6, [], [], trainer={"variants": ["distributed-tlvf"], "kappa": [0, 1, 2, 3, 4, 5]},
                             verify={"agents": [1], "samples": 100000}))

    write("empty.json", base(5, [], [], [], trainer={"variants": ["distributed-lvf"]}))

    n = 100
    # odd agents feed both chain neighbours, plus (1, N)
    line = [[i, j] for i in range(1, n + 1, 2) for j in (i - 1, i + 1) if 1 <= j <= n] + [[1, n]]
    line_r = [[b, a] for a, b in line]
    write("line100.json", base(n, line, line, line_r))

    ring = [[i, i % n + 1] for i in range(1, n + 1)] + [[i % n + 1, i] for i in range(1, n + 1)]
    ring.sort()
    cfg = base(n, ring, ring, [], clusters=[[i] for i in range(1, n + 1)],
               trainer={"variants": ["centralized:one-point", "centralized:two-point",
                                     "distributed-tlvf:one-point", "distributed-tlvf:two-point"],
                        "kappa": [1, 4]})
    cfg["graphs"]["comm_from"] = "state"
    write("ring100.json", cfg)


if __name__ == "__main__":
    main()
