#!/usr/bin/env python3
"""Search a 6x3 means table with a large gap J1 - J2 for K = 10 users.

Every mean is kept inside [h, 1 - h] with h = sqrt(3 * 0.01), so uniform
rewards of variance 0.01 fit in [0, 1]. A seeded hill-climb perturbs one cell
at a time and keeps non-worsening moves. The committed table in
configs/six_channel_model.yaml is this result rounded to three decimals, with cells
nudged so no two configurations share the top value; --check verifies it.
"""

import argparse
import itertools
import math
import random

import yaml

M, N, K = 6, 3, 10
H = math.sqrt(3 * 0.01)
LO, HI = H + 1e-9, 1 - H - 1e-9
CONFIGS = [c for c in itertools.product(range(N + 1), repeat=M) if sum(c) == K]


def values(mu):
    return sorted({round(sum(c[m] * mu[m][c[m] - 1] for m in range(M) if c[m]), 12) for c in CONFIGS},
                  reverse=True)


def gap(mu):
    v = values(mu)
    return v[0] - v[1]


def search(seed, restarts, iterations):
    rng = random.Random(seed)
    best = None
    for _ in range(restarts):
        mu = [[rng.uniform(LO, HI) for _ in range(N)] for _ in range(M)]
        g, step = gap(mu), 0.3
        for _ in range(iterations):
            m, n = rng.randrange(M), rng.randrange(N)
            old = mu[m][n]
            mu[m][n] = min(HI, max(LO, old + rng.gauss(0, step)))
            g2 = gap(mu)
            if g2 >= g:
                g = g2
            else:
                mu[m][n] = old
            step = max(0.01, step * 0.998)
        if best is None or g > best[0]:
            best = (g, [row[:] for row in mu])
    return best


def report(mu):
    v = values(mu)
    best = [c for c in CONFIGS if abs(sum(c[m] * mu[m][c[m] - 1] for m in range(M) if c[m]) - v[0]) < 1e-12]
    delta = (v[0] - v[1]) / (2 * M * N)
    print(f"k*={best} J1={v[0]:.6f} J2={v[1]:.6f} gap={v[0] - v[1]:.6f} delta={delta:.6f} "
          f"T0={math.ceil(1 / (2 * delta * delta))}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--restarts", type=int, default=30)
    ap.add_argument("--iterations", type=int, default=1500)
    ap.add_argument("--check", metavar="MODEL_YAML", help="report the gap of a committed model file instead")
    args = ap.parse_args()
    if args.check:
        with open(args.check) as f:
            mu = yaml.safe_load(f)["means"]
        assert all(LO <= x <= HI for row in mu for x in row), "mean outside the uniform support limits"
        report(mu)
        return
    g, mu = search(args.seed, args.restarts, args.iterations)
    for row in mu:
        print([round(x, 4) for x in row])
    report(mu)


if __name__ == "__main__":
    main()
