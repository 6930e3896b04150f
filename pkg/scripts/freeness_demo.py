#!/usr/bin/env python3
"""Freeness witnesses Σ q_i F(b_i) = 1⊗a on the quantum Hopf fibration, optionally at a fixed q."""

import argparse

from qpb.bundle import check_witness, freeness_witness, hopf_fibration
from qpb.scalar import ONE, parse_scalar


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--window", type=int, default=2)
    ap.add_argument("--q", help="specialize the deformation parameter first")
    args = ap.parse_args()
    hor = hopf_fibration()
    for w in hor.A.window(args.window):
        a = hor.A.element({w: ONE})
        pairs = freeness_witness(hor, a)
        assert check_witness(hor, a, pairs)
        if args.q is not None:
            v = parse_scalar(args.q)
            pairs = [(x.specialize(v), y.specialize(v)) for x, y in pairs]
        shown = " + ".join(f"({x})·F({y})" for x, y in pairs)
        print(f"1⊗{a}  =  {shown}")


if __name__ == "__main__":
    main()
