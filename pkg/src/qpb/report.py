"""Suite configuration, check execution and JSON reports."""

from __future__ import annotations

import json
import random
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable

from . import __version__
from .algebra import AlgebraError, RewriteBudgetError
from .braided import BraidOperator, BudgetError, EnvelopeSpace, surjection_witness
from .bundle import (
    BundleError,
    BundleSpec,
    base_invariants,
    bundle_preset,
    check_witness,
    d_lambda,
    element_from_wire,
    freeness_witness,
    hat_R,
    lambda_family,
    regular_multiplets,
    trivial_witness,
    verify_preconnection_lemmas,
)
from .fodc import (
    CalculusError,
    IdealSpec,
    InvariantFormSpace,
    WindowOverflow,
    classical_ideal,
    full_ideal,
    group_calculus,
)
from .hopf import preset
from .linalg import bareiss_rank
from .scalar import parse_scalar
from .vh import Atlas, FHat, VHAlgebra, connection_of, exterior_variant_suite, gauge_suite

ENGINE_ERRORS = (
    AlgebraError,
    RewriteBudgetError,
    BudgetError,
    BundleError,
    CalculusError,
    WindowOverflow,
    ValueError,
    KeyError,
)

ALL_SUITES = ("hopf", "calculus", "braid", "freeness", "preconnection", "vh", "gluing", "exterior", "oracle")


@dataclass
class SuiteConfig:
    name: str = "suite"
    suites: list = field(default_factory=list)
    window: int = 3
    n_max: int = 3
    seed: int = 0
    q: str | None = None
    hopf_presets: list = field(default_factory=lambda: ["u1"])
    hopf_window: int = 4
    hopf_overrides: dict = field(default_factory=dict)
    group: str = "u1"
    ideal: Any = "classical"
    bundle: Any = "trivial_u1"
    charts: list = field(default_factory=list)
    variants: list = field(default_factory=lambda: ["wedge", "vee"])

    @classmethod
    def from_json(cls, data: dict, base_dir: Path | None = None) -> "SuiteConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        cfg = cls(**data)
        if isinstance(cfg.bundle, str) and cfg.bundle.endswith(".json"):
            path = Path(cfg.bundle)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            cfg.bundle = json.loads(path.read_text())
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "SuiteConfig":
        path = Path(path)
        return cls.from_json(json.loads(path.read_text()), path.parent)

    def validate(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        bad = [s for s in self.suites if s not in ALL_SUITES]
        if bad:
            raise ValueError(f"unknown suites: {bad}")
        for v in self.variants:
            if v not in ("wedge", "vee"):
                raise ValueError(f"unknown variant {v!r}")


@dataclass
class Check:
    name: str
    status: str
    witness: Any = None
    seconds: float = 0.0


@dataclass
class Report:
    suite: str
    config: dict
    checks: list = field(default_factory=list)
    version: str = __version__

    @property
    def failed(self) -> list:
        return [c for c in self.checks if c.status == "fail"]

    @property
    def exit_code(self) -> int:
        return 1 if self.failed else 0

    def to_json(self, timing: bool = True) -> dict:
        checks = []
        for c in sorted(self.checks, key=lambda c: c.name):
            d = asdict(c)
            if not timing:
                d.pop("seconds")
            checks.append(d)
        return {"suite": self.suite, "engine_version": self.version, "config": self.config, "checks": checks,
                "passed": sum(c.status == "pass" for c in self.checks), "failed": len(self.failed),
                "skipped": sum(c.status == "skipped" for c in self.checks)}

    def dumps(self, timing: bool = True) -> str:
        return json.dumps(self.to_json(timing), indent=2, sort_keys=True, default=str)


def _jsonable(x):
    """Witnesses can hold engine objects; reports carry their text form."""
    if x is None or isinstance(x, (bool, int, float, str)):
        return x
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return str(x)


class Runner:
    def __init__(self, report: Report):
        self.report = report

    def run(self, name: str, fn: Callable[[], Any]):
        """``fn`` returns None/True on success, a witness (or False) on failure."""
        t = time.perf_counter()
        try:
            out = fn()
            if out is None or out is True:
                status, witness = "pass", None
            elif isinstance(out, dict) and "ok" in out:
                status = "pass" if out["ok"] else "fail"
                witness = None if out["ok"] else out
            else:
                status, witness = "fail", out
        except ENGINE_ERRORS as exc:
            status, witness = "fail", {"error": type(exc).__name__, "message": str(exc), "witness": getattr(exc, "witness", None)}
        self.report.checks.append(Check(name, status, _jsonable(witness), round(time.perf_counter() - t, 4)))
        return status == "pass"

    def skip(self, name: str, reason: str):
        self.report.checks.append(Check(name, "skipped", {"reason": reason}))


# -- building blocks ----------------------------------------------------------------------

def build_hopf(name: str, q=None, overrides: dict | None = None):
    h = preset(name)
    if overrides:
        anti = {g: element_from_wire(h.pres, v) for g, v in overrides.get("antipode", {}).items()}
        eps = {g: parse_scalar(v) for g, v in overrides.get("counit", {}).items()}
        h = h.replace(antipode=anti, counit=eps)
    if q is not None:
        h = h.specialized(parse_scalar(q))
    return h


def build_bundle(spec) -> BundleSpec:
    if isinstance(spec, str):
        return BundleSpec(bundle_preset(spec))
    return BundleSpec.from_json(spec)


def build_ideal(h, ideal, window: int, family=None, multiplets=None) -> IdealSpec:
    if ideal == "classical":
        return classical_ideal(h, None, window)
    if ideal == "universal":
        return IdealSpec([])
    if ideal == "counit_kernel":
        return full_ideal(h, window)
    if ideal == "hatR":
        if not family:
            raise ValueError("hatR needs a preconnection family")
        return hat_R(family, multiplets, window).hat
    if isinstance(ideal, dict) and "subset" in ideal:
        return group_calculus(h, ideal["subset"])
    if isinstance(ideal, dict) and "generators" in ideal:
        return IdealSpec.from_json(h.pres, ideal)
    raise ValueError(f"unknown ideal description {ideal!r}")


def chart_family(cfg: SuiteConfig, bs: BundleSpec):
    if bs.preconnections:
        return list(bs.preconnections)
    if cfg.charts:
        return [d_lambda(bs.hor, p, f"D{list(map(str, p))}") for p in cfg.charts]
    return lambda_family(bs.hor)


# -- the suite ----------------------------------------------------------------------------------

def run_suite(cfg: SuiteConfig) -> Report:
    rng = random.Random(cfg.seed)
    report = Report(cfg.name, _jsonable(asdict(cfg)))
    r = Runner(report)
    sel = [s for s in ALL_SUITES if s in cfg.suites]
    if not sel:
        return report

    if "hopf" in sel:
        for name in cfg.hopf_presets:
            ov = cfg.hopf_overrides.get(name)
            r.run(f"hopf.{name}.axioms", lambda name=name, ov=ov: build_hopf(name, cfg.q, ov).verify_axioms(cfg.hopf_window))

    needs_bundle = any(s in sel for s in ("freeness", "preconnection", "vh", "gluing", "exterior"))
    bs = family = mt = None
    if needs_bundle:
        try:
            bs = build_bundle(cfg.bundle)
            if bs.hor.embed_map is not None:
                family = chart_family(cfg, bs)
                mt = regular_multiplets(bs.hor, 2 * cfg.window)
        except ENGINE_ERRORS as exc:
            r.run("bundle.load", lambda: {"ok": False, "error": str(exc)})
            return report

    space = None
    if any(s in sel for s in ("calculus", "braid", "vh", "gluing", "exterior", "oracle")):
        try:
            h = bs.hor.hopf if bs is not None else build_hopf(cfg.group, cfg.q)
            ideal = build_ideal(h, cfg.ideal, cfg.window, family, mt)
            space = InvariantFormSpace(h, ideal, cfg.window)
        except ENGINE_ERRORS as exc:
            r.run("calculus.build", lambda: {"ok": False, "error": type(exc).__name__, "message": str(exc)})
            space = None

    if "calculus" in sel and space is not None:
        r.run("calculus.verify", space.verify)
        r.run("calculus.stabilization", lambda: {"ok": space.stabilization()["stable"], **space.stabilization()})

    if "braid" in sel and space is not None:
        def braid_check():
            b = BraidOperator.from_space(space)
            return b.verify(cfg.n_max, rng)

        r.run("braid.identities", braid_check)

        def envelopes():
            w = EnvelopeSpace(space, "wedge", cfg.n_max)
            v = EnvelopeSpace(space, "vee", cfg.n_max)
            res = {"wedge": w.verify(), "vee": v.verify(), "surjection": surjection_witness(w, v)}
            ok = res["wedge"]["ok"] and res["vee"]["ok"] and res["surjection"] is None
            return {"ok": ok, "dims": {"wedge": w.dims(), "vee": v.dims()}, **({} if ok else res)}

        r.run("braid.envelopes", envelopes)

    if "freeness" in sel and bs is not None:
        def freeness():
            hor = bs.hor
            for w in hor.A.window(cfg.window):
                a = hor.A.element({w: 1})
                pairs = freeness_witness(hor, a)
                if not check_witness(hor, a, pairs):
                    return {"ok": False, "word": list(w)}
                if hor.embed_map is not None and not check_witness(hor, a, trivial_witness(hor, a)):
                    return {"ok": False, "word": list(w), "route": "antipode formula"}
            return {"ok": True}

        r.run(f"freeness.{bs.name}", freeness)

    if bs is not None and mt is None:
        for s in ("preconnection", "vh", "gluing", "exterior"):
            if s in sel:
                r.skip(s, f"bundle {bs.name!r} ships no horizontal forms in positive degree")

    if "preconnection" in sel and bs is not None and mt is not None:
        base = base_invariants(bs.hor, cfg.window)
        r.run("bundle.coaction", lambda: bs.hor.verify(cfg.window))
        r.run("bundle.base_forms", base.verify)
        r.run("bundle.multiplets", mt.verify)
        D = family[0]
        for x in family:
            r.run(f"preconnection.{x.label}.axioms", lambda x=x: x.verify(base, cfg.window))
        pairs = [(D, D - D)] + [(D, x - D) for x in family[1:]] + [(x, D - x) for x in family[1:2]]
        for P, E in pairs:
            r.run(f"lemmas.{P.label}.{E.label}", lambda P=P, E=E: verify_preconnection_lemmas(P, E, mt, cfg.window))
        fam = hat_R(family, mt, cfg.window)
        r.run("ideal.hatR.laws", lambda: {"ok": fam.ok, "checks": fam.checks})

    for variant in cfg.variants if space is not None and bs is not None and mt is not None else []:
        if not any(s in sel for s in ("vh", "gluing", "exterior")):
            break
        try:
            env = EnvelopeSpace(space, variant, cfg.n_max)
            alg = VHAlgebra(bs.hor, space, env)
            atlas = Atlas(alg, family, mt)
        except ENGINE_ERRORS as exc:
            r.run(f"vh.{variant}.build", lambda exc=exc: {"ok": False, "error": str(exc)})
            continue
        if "vh" in sel:
            r.run(f"vh.{variant}.associativity", lambda: alg.associativity_witness(1, 1))
            r.run(f"vh.{variant}.star", lambda: alg.star_witness(1, 1))
            r.run(f"vh.{variant}.commutation", lambda: alg.commutation_witness(2))
            for label, ch in atlas.charts.items():
                r.run(f"vh.{variant}.partial.{label}", lambda ch=ch: ch.verify(1, 1))
            D = family[0]
            if len(family) >= 3:
                E, W = family[1] - D, family[2] - D
                r.run(f"vh.{variant}.gauge", lambda E=E, W=W: gauge_suite(alg, D, E, W, mt))
        if "gluing" in sel:
            r.run(f"gluing.{variant}.independence", atlas.independence_suite)
            r.run(f"gluing.{variant}.fhat", lambda: FHat(atlas).verify())
            for label in atlas.labels:
                r.run(f"gluing.{variant}.connection.{label}", lambda label=label: connection_of(atlas, label).verify())
        if "exterior" in sel and variant == "vee":
            r.run("exterior.truncation", lambda: exterior_variant_suite(alg, family, mt, cfg.n_max))

    if "oracle" in sel and space is not None:
        def oracle():
            b = BraidOperator.from_space(space)
            for n in range(cfg.n_max + 1):
                if b.exterior_dim(n) != b.exterior_dim_oracle(n):
                    return {"ok": False, "degree": n}
            ideal_rows = [g.terms for g in space.ideal_basis()]
            if bareiss_rank(ideal_rows) != len(ideal_rows):
                return {"ok": False, "ideal": "rank"}
            return {"ok": True}

        r.run("oracle.ranks", oracle)
    return report
