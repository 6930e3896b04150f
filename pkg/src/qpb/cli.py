"""Command line front end: ``qpb suite|dims|witness|table``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .braided import BraidOperator, EnvelopeSpace, matrix_dump
from .bundle import BundleError, bundle_preset, d_lambda, element_from_wire, freeness_witness, regular_multiplets, rho_chi_natural
from .fodc import InvariantFormSpace
from .scalar import format_scalar
from .report import ENGINE_ERRORS, SuiteConfig, build_hopf, build_ideal, run_suite


def _ideal_arg(text: str):
    if text.startswith("subset:"):
        return {"subset": text[len("subset:") :].split(",")}
    if text.endswith(".json"):
        return json.loads(Path(text).read_text())
    return text


def _element(pres, text: str):
    """JSON wire form, or a word with generators joined by '.'."""
    text = text.strip()
    if text.startswith("["):
        return element_from_wire(pres, json.loads(text))
    if text == "1":
        return pres.one()
    return pres.word(*text.split("."))


def _words(a) -> list:
    return [[str(c), list(w)] for w, c in sorted(a.terms.items(), key=lambda t: (len(t[0]), t[0]))]


def cmd_suite(args) -> int:
    cfg = SuiteConfig.load(args.config)
    if args.window is not None:
        cfg.window = args.window
    if args.q is not None:
        cfg.q = args.q
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.validate()
    report = run_suite(cfg)
    text = report.dumps(timing=not args.no_timing)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return report.exit_code


def cmd_dims(args) -> int:
    h = build_hopf(args.group, args.q)
    space = InvariantFormSpace(h, build_ideal(h, _ideal_arg(args.ideal), args.window), args.window)
    out = {"group": args.group, "window": args.window, "psi_inv": space.dim, "stabilization": space.stabilization()}
    if space.dim:
        b = BraidOperator.from_space(space)
        out["exterior"] = [b.exterior_dim(n) for n in range(args.n_max + 1)]
        out["wedge"] = EnvelopeSpace(space, "wedge", args.n_max).dims()
        out["vee"] = EnvelopeSpace(space, "vee", args.n_max, b).dims()
    else:
        out["exterior"] = [1] + [0] * args.n_max
    print(json.dumps(out, indent=2))
    return 0


def cmd_witness(args) -> int:
    hor = bundle_preset(args.bundle)
    a = _element(hor.A, args.element)
    pairs = freeness_witness(hor, a, args.max_length)
    print(json.dumps({"bundle": args.bundle, "element": _words(a),
                      "pairs": [{"q": _words(x), "b": _words(y)} for x, y in pairs]}, indent=2))
    return 0


def cmd_table(args) -> int:
    kind = args.kind
    if kind in ("sigma", "A", "Akl"):
        if args.flip is not None:
            b = BraidOperator.flip(args.flip)
        else:
            h = build_hopf(args.group, args.q)
            b = BraidOperator.from_space(InvariantFormSpace(h, build_ideal(h, _ideal_arg(args.ideal), args.window), args.window))
        if kind == "sigma":
            m = b.sigma
        elif kind == "A":
            m = b.antisymmetrizer(args.n)
        else:
            m = b.shuffle_antisymmetrizer(args.k, args.n - args.k)
        keys = sorted(m.domain)
        dense = [[format_scalar(m.column(c).get(r, 0)) for c in keys] for r in keys]
        print(json.dumps({"table": kind, "dim": b.dim, "n": args.n, "basis": [list(k) for k in keys],
                          "matrix": dense, **matrix_dump(m)}, indent=2))
        return 0
    hor = bundle_preset(args.bundle)
    mt = regular_multiplets(hor, 2 * args.window)
    D = d_lambda(hor, args.params, "D")
    if kind == "rho":
        nat = rho_chi_natural(D, mt)
    else:
        nat = rho_chi_natural(D - d_lambda(hor, args.minus or [0] * len(args.params), "D'"), mt)
    rows = {"·".join(w) or "1": _words(nat.word(w)) for w in hor.A.window(args.window)}
    print(json.dumps({"table": kind, "bundle": args.bundle, "params": args.params, "values": rows}, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qpb", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("suite", help="run a verification suite from a JSON config")
    s.add_argument("config")
    s.add_argument("--window", type=int)
    s.add_argument("--q")
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.add_argument("--no-timing", action="store_true", help="drop timing fields for byte-stable reports")
    s.set_defaults(fn=cmd_suite)

    d = sub.add_parser("dims", help="quotient and exterior dimensions")
    d.add_argument("--group", default="u1")
    d.add_argument("--ideal", default="classical", help="classical | universal | counit_kernel | subset:g,h | file.json")
    d.add_argument("--window", type=int, default=3)
    d.add_argument("--n-max", type=int, default=4)
    d.add_argument("--q")
    d.set_defaults(fn=cmd_dims)

    w = sub.add_parser("witness", help="freeness witness for an element of the structure group")
    w.add_argument("--bundle", default="hopf_fibration")
    w.add_argument("--element", default="z")
    w.add_argument("--max-length", type=int, default=4)
    w.set_defaults(fn=cmd_witness)

    t = sub.add_parser("table", help="dump σ, A_n, A_kl, ρ♮ or χ♮")
    t.add_argument("kind", choices=["sigma", "A", "Akl", "rho", "chi"])
    t.add_argument("--n", type=int, default=2)
    t.add_argument("--k", type=int, default=1)
    t.add_argument("--flip", type=int, help="use the trivial braiding on this many generators")
    t.add_argument("--group", default="u1")
    t.add_argument("--ideal", default="classical")
    t.add_argument("--window", type=int, default=2)
    t.add_argument("--q")
    t.add_argument("--bundle", default="trivial_u1")
    t.add_argument("--params", type=str, nargs="*", default=["1", "0"])
    t.add_argument("--minus", type=str, nargs="*")
    t.set_defaults(fn=cmd_table)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"qpb: {exc}", file=sys.stderr)
        return 2
    except ENGINE_ERRORS as exc:
        print(f"qpb: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
