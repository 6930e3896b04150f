"""Hopf *-algebra structure maps on presented algebras, plus built-in presets.

Coproduct and counit are extended multiplicatively from generator tables,
the antipode anti-multiplicatively.  Nothing is assumed about consistency
with the relations: :meth:`HopfStructure.verify_axioms` checks it, together
with the Hopf axioms, on every word of a window.
"""

from __future__ import annotations

from itertools import product as iproduct
from typing import Callable, Mapping, Sequence

from .algebra import AlgElement, Generator, Presentation, Rule, TensorElement, Word
from .linalg import vaxpy, vscale
from .scalar import ONE, ZERO, parse_scalar, q, scalar_to_wire, specialize_scalar


class HopfStructure:
    """A presented *-algebra with coproduct, counit and antipode tables."""

    def __init__(
        self,
        name: str,
        pres: Presentation,
        coproduct: Mapping[str, TensorElement],
        counit: Mapping[str, object],
        antipode: Mapping[str, AlgElement],
        lie_functionals: Sequence[Mapping[str, object]] = (),
    ):
        self.name = name
        self.pres = pres
        self.pair = (pres, pres)
        self.cop_table = dict(coproduct)
        self.eps_table = {k: parse_scalar(v) for k, v in counit.items()}
        self.kappa_table = dict(antipode)
        self.lie_functionals = [dict(x) for x in lie_functionals]
        for g in pres.generators:
            for tab, label in ((self.cop_table, "coproduct"), (self.eps_table, "counit"), (self.kappa_table, "antipode")):
                if g.name not in tab:
                    raise ValueError(f"{label} table misses generator {g.name!r}")
        self._cop_cache: dict = {}
        self._kappa_cache: dict = {}
        self._eps_cache: dict = {}

    def __repr__(self):
        return f"HopfStructure({self.name!r})"

    def replace(self, *, coproduct=None, counit=None, antipode=None, name=None) -> "HopfStructure":
        """Copy with some table entries overridden (used to build counterexamples)."""
        cop = dict(self.cop_table)
        cop.update(coproduct or {})
        eps = dict(self.eps_table)
        eps.update(counit or {})
        kap = dict(self.kappa_table)
        kap.update(antipode or {})
        return HopfStructure(name or self.name + "~", self.pres, cop, eps, kap, self.lie_functionals)

    def specialized(self, value) -> "HopfStructure":
        """All tables evaluated at q = value (finite groups carry no q)."""
        if hasattr(self, "group"):
            return self
        p2 = self.pres.specialized(value)
        cop = {
            g: TensorElement((p2, p2), {k: specialize_scalar(c, value) for k, c in t.terms.items()})
            for g, t in self.cop_table.items()
        }
        eps = {g: specialize_scalar(c, value) for g, c in self.eps_table.items()}
        kap = {g: a.specialize(value) for g, a in self.kappa_table.items()}
        return HopfStructure(f"{self.name}@q={value}", p2, cop, eps, kap, self.lie_functionals)

    # -- counit -------------------------------------------------------------
    def counit_word(self, w: Word):
        hit = self._eps_cache.get(w)
        if hit is not None:
            return hit
        x = ONE
        for s in w:
            x = x * self.eps_table[s]
            if not x:
                break
        self._eps_cache[w] = x
        return x

    def counit(self, a: AlgElement):
        tot = ZERO
        for w, c in a.terms.items():
            tot = tot + c * self.counit_word(w)
        return tot

    # -- coproduct ------------------------------------------------------------
    def coproduct_word(self, w: Word) -> TensorElement:
        hit = self._cop_cache.get(w)
        if hit is not None:
            return hit
        if not w:
            res = TensorElement(self.pair, {((), ()): ONE}, _normal=True)
        elif len(w) == 1:
            res = self.cop_table[w[0]]
        else:
            res = self.coproduct_word(w[:-1]) * self.cop_table[w[-1]]
        self._cop_cache[w] = res
        return res

    def coproduct(self, a: AlgElement) -> TensorElement:
        out: dict = {}
        for w, c in a.terms.items():
            vaxpy(out, self.coproduct_word(w).terms, c)
        return TensorElement(self.pair, out, _normal=True)

    def coproduct_iterate(self, a: AlgElement, n: int = 1) -> TensorElement:
        """``a^(1) ⊗ ... ⊗ a^(n+1)``, expanding the last leg each time."""
        if n < 1:
            raise ValueError("n must be >= 1")
        t = self.coproduct(a)
        for _ in range(n - 1):
            t = expand_leg(t, len(t.legs) - 1, self.coproduct_word)
        return t

    # -- antipode -------------------------------------------------------------
    def antipode_word(self, w: Word) -> AlgElement:
        hit = self._kappa_cache.get(w)
        if hit is not None:
            return hit
        if not w:
            res = self.pres.one()
        elif len(w) == 1:
            res = self.kappa_table[w[0]]
        else:
            res = self.kappa_table[w[-1]] * self.antipode_word(w[:-1])
        self._kappa_cache[w] = res
        return res

    def antipode(self, a: AlgElement) -> AlgElement:
        out: dict = {}
        for w, c in a.terms.items():
            vaxpy(out, self.antipode_word(w).terms, c)
        return AlgElement(self.pres, out, _normal=True)

    # -- adjoint coaction ---------------------------------------------------------
    def adjoint_word(self, w: Word) -> TensorElement:
        t3 = expand_leg(self.coproduct_word(w), 1, self.coproduct_word)
        p = self.pres
        out: dict = {}
        for (w1, w2, w3), c in t3.terms.items():
            k1 = self.antipode_word(w1)
            for u, x in k1.terms.items():
                for v, y in p.nf_word(u + w3).items():
                    key = (w2, v)
                    out[key] = out.get(key, ZERO) + c * x * y
        return TensorElement(self.pair, {k: v for k, v in out.items() if v}, _normal=True)

    def adjoint(self, a: AlgElement) -> TensorElement:
        """``ad(a) = a^(2) ⊗ κ(a^(1)) a^(3)``."""
        out: dict = {}
        for w, c in a.terms.items():
            vaxpy(out, self.adjoint_word(w).terms, c)
        return TensorElement(self.pair, out, _normal=True)

    # -- Lie functionals ------------------------------------------------------------
    def eps_derivation(self, table: Mapping[str, object]) -> Callable[[Word], object]:
        """Extend generator values to X(ab) = ε(a)X(b) + X(a)ε(b) on words."""
        vals = {k: parse_scalar(v) for k, v in table.items()}

        def X(w: Word):
            tot = ZERO
            for i, s in enumerate(w):
                x = vals.get(s, ZERO)
                if x:
                    tot = tot + self.counit_word(w[:i]) * x * self.counit_word(w[i + 1 :])
            return tot

        return X

    # -- verification -------------------------------------------------------------
    def verify_axioms(self, window_degree: int = 4) -> dict:
        """Check Hopf and *-axioms on every window word and every relation."""
        p = self.pres
        failures: dict = {
            "relations": [],
            "coassociativity": [],
            "counit_law": [],
            "antipode_law": [],
            "star_coproduct": [],
            "star_antipode": [],
            "star_counit": [],
        }
        for r in p.rules:
            rhs = p.element(r.rhs_dict())
            lhs_cop = self.coproduct_word(r.lhs)
            if lhs_cop != self.coproduct(rhs):
                failures["relations"].append({"map": "coproduct", "rule": list(r.lhs)})
            if self.counit_word(r.lhs) != self.counit(rhs):
                failures["relations"].append({"map": "counit", "rule": list(r.lhs)})
            if self.antipode_word(r.lhs) != self.antipode(rhs):
                failures["relations"].append({"map": "antipode", "rule": list(r.lhs)})
        star_ok = p.has_involution()
        for w in p.window(window_degree):
            a = p.element({w: ONE})
            cop = self.coproduct_word(w)
            left = expand_leg(cop, 0, self.coproduct_word)
            right = expand_leg(cop, 1, self.coproduct_word)
            if left != right:
                failures["coassociativity"].append(list(w))
            e1 = cop.contract_scalar_leg(0, self.counit_word).to_element()
            e2 = cop.contract_scalar_leg(1, self.counit_word).to_element()
            if e1 != a or e2 != a:
                failures["counit_law"].append(list(w))
            unit = p.scalar(self.counit_word(w))
            s1 = cop.map_leg(0, lambda u: self.antipode_word(u).terms).multiply_legs()
            s2 = cop.map_leg(1, lambda u: self.antipode_word(u).terms).multiply_legs()
            if s1 != unit or s2 != unit:
                failures["antipode_law"].append(list(w))
            if star_ok:
                ws = a.star()
                if self.coproduct(ws) != cop.star():
                    failures["star_coproduct"].append(list(w))
                if self.antipode(self.antipode(a).star()).star() != a:
                    failures["star_antipode"].append(list(w))
                if self.counit(ws) != self.counit_word(w):
                    failures["star_counit"].append(list(w))
        return {
            "window": window_degree,
            "words": len(p.window(window_degree)),
            "failures": failures,
            "ok": not any(failures.values()),
        }

    # -- serialization ---------------------------------------------------------------
    def to_json(self) -> dict:
        def tens(t):
            return [[scalar_to_wire(c), [list(w) for w in key]] for key, c in sorted(t.terms.items())]

        def elem(a):
            return [[scalar_to_wire(c), list(w)] for w, c in sorted(a.terms.items())]

        data = self.pres.to_json()
        data["hopf_name"] = self.name
        data["coproduct"] = {g: tens(t) for g, t in self.cop_table.items()}
        data["counit"] = {g: scalar_to_wire(v) for g, v in self.eps_table.items()}
        data["antipode"] = {g: elem(a) for g, a in self.kappa_table.items()}
        data["lie_functionals"] = [{g: scalar_to_wire(parse_scalar(v)) for g, v in x.items()} for x in self.lie_functionals]
        return data

    @classmethod
    def from_json(cls, data: Mapping) -> "HopfStructure":
        pres = Presentation.from_json(data)
        cop = {
            g: TensorElement((pres, pres), {tuple(tuple(w) for w in ws): parse_scalar(c) for c, ws in _merge(items)})
            for g, items in data["coproduct"].items()
        }
        eps = {g: parse_scalar(v) for g, v in data["counit"].items()}
        kap = {g: pres.element({tuple(w): parse_scalar(c) for c, w in items}) for g, items in data["antipode"].items()}
        lie = data.get("lie_functionals", [])
        return cls(data.get("hopf_name", pres.name), pres, cop, eps, kap, lie)


def _merge(items):
    # identical keys in JSON input are summed rather than overwritten
    acc: dict = {}
    for c, ws in items:
        key = tuple(tuple(w) for w in ws)
        acc[key] = acc.get(key, ZERO) + parse_scalar(c)
    return [(c, k) for k, c in acc.items()]


def expand_leg(t: TensorElement, i: int, cop_word: Callable[[Word], TensorElement]) -> TensorElement:
    """Replace leg ``i`` by its coproduct, producing one more leg."""
    legs = t.legs[:i] + (t.legs[i], t.legs[i]) + t.legs[i + 1 :]
    out: dict = {}
    for key, c in t.terms.items():
        for (u, v), x in cop_word(key[i]).terms.items():
            k = key[:i] + (u, v) + key[i + 1 :]
            out[k] = out.get(k, ZERO) + c * x
    return TensorElement(legs, {k: v for k, v in out.items() if v}, _normal=True)


# -- presets -----------------------------------------------------------------------

def _t(pres, *items):
    return TensorElement((pres, pres), {tuple(tuple(w) for w in ws): c for c, *ws in items})


def u1() -> HopfStructure:
    """Laurent polynomials in one grouplike unitary z (functions on the circle)."""
    gens = [Generator("z", 0, "zi"), Generator("zi", 0, "z")]
    rules = [Rule(("z", "zi"), ((ONE, ()),)), Rule(("zi", "z"), ((ONE, ()),))]
    p = Presentation("u1", gens, rules)
    cop = {"z": _t(p, (ONE, ("z",), ("z",))), "zi": _t(p, (ONE, ("zi",), ("zi",)))}
    return HopfStructure("u1", p, cop, {"z": 1, "zi": 1}, {"z": p.gen("zi"), "zi": p.gen("z")}, [{"z": 1, "zi": -1}])


def torus(n: int) -> HopfStructure:
    """Functions on the n-torus: n commuting grouplike unitaries."""
    if n < 1:
        raise ValueError("torus needs n >= 1")
    gens = []
    for k in range(1, n + 1):
        gens += [Generator(f"z{k}", 0, f"zi{k}"), Generator(f"zi{k}", 0, f"z{k}")]
    rules = []
    for k in range(1, n + 1):
        rules.append(Rule((f"z{k}", f"zi{k}"), ((ONE, ()),)))
        rules.append(Rule((f"zi{k}", f"z{k}"), ((ONE, ()),)))
    names = [g.name for g in gens]
    # letters of different circles commute; the smaller one moves left
    for i, x in enumerate(names):
        for y in names[:i]:
            if _circle(x) != _circle(y):
                rules.append(Rule((x, y), ((ONE, (y, x)),)))
    p = Presentation(f"torus{n}", gens, rules)
    cop = {g: _t(p, (ONE, (g,), (g,))) for g in names}
    kap = {}
    for k in range(1, n + 1):
        kap[f"z{k}"] = p.gen(f"zi{k}")
        kap[f"zi{k}"] = p.gen(f"z{k}")
    lie = [{f"z{k}": 1, f"zi{k}": -1} for k in range(1, n + 1)]
    return HopfStructure(f"torus{n}", p, cop, {g: 1 for g in names}, kap, lie)


def _circle(name: str) -> str:
    return name.lstrip("zi")


def finite_group(name: str, elements: Sequence[str], mul: Callable[[str, str], str], identity: str) -> HopfStructure:
    """Function algebra on a finite group in the delta basis.

    Generators are the deltas of non-identity elements; the identity delta is
    ``1 - sum(others)``.
    """
    others = [g for g in elements if g != identity]
    gen_name = {g: f"d_{g}" for g in others}
    gens = [Generator(gen_name[g], 0, gen_name[g]) for g in others]
    rules = []
    for g in others:
        for h in others:
            rhs = ((ONE, (gen_name[g],)),) if g == h else ()
            rules.append(Rule((gen_name[g], gen_name[h]), rhs))
    p = Presentation(name, gens, rules)
    inv = {}
    for g in elements:
        for h in elements:
            if mul(g, h) == identity:
                inv[g] = h

    def delta(g) -> AlgElement:
        if g == identity:
            out = p.one()
            for o in others:
                out = out - p.gen(gen_name[o])
            return out
        return p.gen(gen_name[g])

    cop = {}
    for g in others:
        t = TensorElement.zero((p, p))
        for h in elements:
            k = mul(inv[h], g)
            t = t + TensorElement.pure(delta(h), delta(k))
        cop[gen_name[g]] = t
    eps = {gen_name[g]: 0 for g in others}
    kap = {gen_name[g]: delta(inv[g]) for g in others}
    hs = HopfStructure(name, p, cop, eps, kap, [])
    hs.group = {"elements": list(elements), "identity": identity, "mul": mul, "inv": inv}
    hs.delta = delta
    return hs


def cyclic(n: int) -> HopfStructure:
    if n < 2:
        raise ValueError("cyclic(n) needs n >= 2")
    els = [str(k) for k in range(n)]
    return finite_group(f"cyclic{n}", els, lambda a, b: str((int(a) + int(b)) % n), "0")


def s3() -> HopfStructure:
    """Functions on the symmetric group of three letters (one-line notation)."""
    from itertools import permutations

    els = ["".join(p) for p in permutations("123")]

    def mul(a, b):
        # (ab)(i) = a(b(i))
        return "".join(a[int(b[i]) - 1] for i in range(3))

    return finite_group("s3", els, mul, "123")


def su_q_2() -> HopfStructure:
    """Polynomial functions on quantum SU(2) with u = [[α, -qγ*], [γ, α*]]."""
    A, As, C, Cs = "alpha", "alpha*", "gamma", "gamma*"
    gens = [Generator(C, 0, Cs), Generator(Cs, 0, C), Generator(A, 0, As), Generator(As, 0, A)]
    qi = ONE / q
    rules = [
        Rule((Cs, C), ((ONE, (C, Cs)),)),
        Rule((A, C), ((q, (C, A)),)),
        Rule((A, Cs), ((q, (Cs, A)),)),
        Rule((As, C), ((qi, (C, As)),)),
        Rule((As, Cs), ((qi, (Cs, As)),)),
        Rule((As, A), ((ONE, ()), (-ONE, (C, Cs)))),
        Rule((A, As), ((ONE, ()), (-q * q, (C, Cs)))),
    ]
    p = Presentation("su_q_2", gens, rules)
    cop = {
        A: _t(p, (ONE, (A,), (A,)), (-q, (Cs,), (C,))),
        C: _t(p, (ONE, (C,), (A,)), (ONE, (As,), (C,))),
        As: _t(p, (ONE, (As,), (As,)), (-q, (C,), (Cs,))),
        Cs: _t(p, (ONE, (A,), (Cs,)), (ONE, (Cs,), (As,))),
    }
    eps = {A: 1, As: 1, C: 0, Cs: 0}
    kap = {A: p.gen(As), As: p.gen(A), C: -q * p.gen(C), Cs: -qi * p.gen(Cs)}
    hs = HopfStructure("su_q_2", p, cop, eps, kap, [])
    hs.fundamental = [[p.gen(A), -q * p.gen(Cs)], [p.gen(C), p.gen(As)]]
    return hs


PRESETS: dict[str, Callable[[], HopfStructure]] = {
    "u1": u1,
    "torus2": lambda: torus(2),
    "torus3": lambda: torus(3),
    "cyclic2": lambda: cyclic(2),
    "cyclic3": lambda: cyclic(3),
    "s3": s3,
    "su_q_2": su_q_2,
}


def preset(name: str) -> HopfStructure:
    """Look up a preset by name; ``cyclicN`` and ``torusN`` accept any N."""
    if name in PRESETS:
        return PRESETS[name]()
    if name.startswith("cyclic") and name[6:].isdigit():
        return cyclic(int(name[6:]))
    if name.startswith("torus") and name[5:].isdigit():
        return torus(int(name[5:]))
    raise KeyError(f"unknown preset {name!r}")


# free-function aliases for the operation names used in reports
def coproduct_iterate(h: HopfStructure, a: AlgElement, n: int = 1) -> TensorElement:
    return h.coproduct_iterate(a, n)


def counit(h: HopfStructure, a: AlgElement):
    return h.counit(a)


def antipode(h: HopfStructure, a: AlgElement) -> AlgElement:
    return h.antipode(a)


def adjoint_action(h: HopfStructure, a: AlgElement) -> TensorElement:
    return h.adjoint(a)


def verify_hopf_axioms(h: HopfStructure, window_degree: int = 4) -> dict:
    return h.verify_axioms(window_degree)
