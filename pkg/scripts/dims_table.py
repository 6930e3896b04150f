#!/usr/bin/env python3
"""Print Ψ_inv, S^∨ and S^∧ dimensions for the shipped calculi as a text table."""

import argparse

from qpb.braided import BraidOperator, EnvelopeSpace
from qpb.fodc import IdealSpec, InvariantFormSpace, classical_ideal, group_calculus
from qpb.hopf import preset


def calculi(window: int):
    u1 = preset("u1")
    yield "u1 classical", InvariantFormSpace(u1, classical_ideal(u1, None, window), window)
    for n in (2, 3):
        h = preset(f"cyclic{n}")
        yield f"cyclic{n} universal", InvariantFormSpace(h, IdealSpec([]), window)
    s3 = preset("s3")
    yield "s3 transpositions", InvariantFormSpace(s3, group_calculus(s3, ["132", "213", "321"]), window)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--window", type=int, default=2)
    ap.add_argument("--n-max", type=int, default=4)
    args = ap.parse_args()
    print(f"{'calculus':<22}{'dim':>4}  {'vee':<20}{'wedge':<20}")
    for label, sp in calculi(args.window):
        b = BraidOperator.from_space(sp)
        vee = [b.exterior_dim(n) for n in range(args.n_max + 1)]
        wedge = EnvelopeSpace(sp, "wedge", args.n_max, b).dims()
        print(f"{label:<22}{sp.dim:>4}  {str(vee):<20}{str(wedge):<20}")


if __name__ == "__main__":
    main()
