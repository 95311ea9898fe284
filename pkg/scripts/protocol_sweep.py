#!/usr/bin/env python3
"""Concrete EPR protocol over a finer sigma_c ladder, plus the envelope-growth study."""

import argparse

from nlamp.generators import GeneratorSpec
from nlamp.grid import GridSpec
from nlamp.signaling import concrete_protocol_sweep, default_observable, envelope_convergence


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--D", type=float, default=0.1)
    ap.add_argument("--points", type=int, default=512)
    ap.add_argument("--extent", type=float, default=16.0)
    args = ap.parse_args()

    grid = GridSpec(1, args.points, args.extent)
    spec = GeneratorSpec.dg(args.D)
    sig = [0.8, 0.566, 0.4, 0.283, 0.2, 0.141, 0.1]
    rep = concrete_protocol_sweep(sig, grid, default_observable(grid), spec)
    print(f"{'sigma_c':>8} {'r':>10} {'delta1':>14} {'eps spread':>11}")
    for p in rep.points:
        print(f"{p.sigma_c:8.3f} {p.r:10.4f} {p.delta1:14.8f} {p.epsilon_spread:11.2e}")
    print(rep.summary())

    big = GridSpec(1, 2048, 64.0)
    ec = envelope_convergence(0.2, big, default_observable(big), spec, (4.0, 8.0, 16.0))
    print("\nenvelope study at sigma_c = 0.2 (signal per unit <1 x B>)")
    for m, d, q in zip(ec["multiples"], ec["delta1"], ec["normalized"]):
        print(f"  envelope {m:5.1f} sigma_c: delta1 = {d:.8f}, per unit <B> = {q:.8f}")
    print(f"  periodic limit: {ec['periodic_limit']:.8f}; last change {ec['relative_change']:.3%}")


if __name__ == "__main__":
    main()
