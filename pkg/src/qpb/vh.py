"""The vertical-horizontal algebra hor ⊗ Ψ^env, its differentials and charts.

Elements are sparse dicts keyed by ``(hor word, envelope key)`` where the
envelope key is a reduced index tuple of the chosen :class:`EnvelopeSpace`.
The product moves envelope legs past horizontal ones with the coaction:

    (ψ⊗η)(φ⊗ϑ) = (-1)^{|η||φ|} Σ ψ φ_k ⊗ (η∘c_k) ϑ,   F⋆(φ) = Σ φ_k ⊗ c_k.

Each preconnection D gives a chart with differential ∂_D; a difference E
moves between charts through the gauge map h_E(ϑ) = ϑ - χ_E(ϑ).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Mapping, Sequence

from .algebra import AlgElement, Generator, Presentation, Rule, TensorElement, Word
from .braided import BraidOperator, EnvelopeSpace, basis_keys
from .bundle import (
    BundleError,
    Delta,
    GradedHorizontal,
    MultipletTable,
    NaturalMaps,
    Preconnection,
    rho_chi_natural,
)
from .fodc import CalculusError, InvariantFormSpace
from .linalg import Echelon, kernel, vaxpy, vscale
from .scalar import ONE, ZERO, as_scalar


class ChartError(ValueError):
    pass


def _show(terms: Mapping) -> list:
    return [[list(k[0]), list(k[1]), str(c)] for k, c in sorted(terms.items(), key=lambda t: (len(t[0][0]), t[0][0], t[0][1]))]


# -- the algebra ---------------------------------------------------------------------------

class VHAlgebra:
    def __init__(self, hor: GradedHorizontal, space: InvariantFormSpace, env: EnvelopeSpace):
        if space.h is not hor.hopf and space.pres is not hor.A:
            raise ChartError("calculus and bundle use different structure groups")
        self.hor = hor
        self.space = space
        self.env = env
        self.variant = env.variant
        self.pres = hor.pres
        self._move: dict = {}
        self._kmul: dict = {}

    def __repr__(self):
        return f"VHAlgebra({self.hor.name}, {self.variant}, dims={self.env.dims()})"

    # -- elements ------------------------------------------------------------------------
    def element(self, terms: Mapping, chart=None) -> "VHElement":
        return VHElement(self, {k: c for k, c in terms.items() if c}, chart)

    def zero(self, chart=None) -> "VHElement":
        return VHElement(self, {}, chart)

    def one(self, chart=None) -> "VHElement":
        return VHElement(self, {((), ()): ONE}, chart)

    def hor_part(self, x: AlgElement, chart=None) -> "VHElement":
        return VHElement(self, {(w, ()): c for w, c in x.terms.items()}, chart)

    def env_part(self, vec: Mapping, chart=None) -> "VHElement":
        return VHElement(self, {((), k): c for k, c in self.env.reduce(vec).items()}, chart)

    def gen(self, i: int, chart=None) -> "VHElement":
        return self.env_part({(i,): ONE}, chart)

    def grade_of(self, key) -> int:
        return self.pres.word_grade(key[0]) + len(key[1])

    def basis(self, hor_degree: int, env_degree: int | None = None) -> list[tuple]:
        top = self.env.n_max if env_degree is None else env_degree
        keys = [k for n in range(top + 1) for k in self.env.basis(n)]
        return [(w, k) for w in self.hor.window(hor_degree) for k in keys]

    def generators(self) -> list["VHElement"]:
        out = [self.hor_part(self.pres.gen(g.name)) for g in self.pres.generators]
        out += [self.gen(i) for i in range(self.space.dim)]
        return out

    # -- product ---------------------------------------------------------------------------
    def move(self, key: tuple, hw: Word) -> dict:
        """(1⊗key)(hw⊗1) as ``{(hor word, env key): coeff}`` (env keys unreduced)."""
        hit = self._move.get((key, hw))
        if hit is not None:
            return hit
        out: dict = {}
        if not key:
            out = {(hw, ()): ONE}
        else:
            sg = -ONE if (len(key) * self.pres.word_grade(hw)) % 2 else ONE
            for (u, c), x in self.hor.coact_word(hw).terms.items():
                for k2, y in self.env.circ_word({key: ONE}, c).items():
                    vaxpy(out, {(u, k2): sg * x * y})
        self._move[(key, hw)] = out
        return out

    def kmul(self, a: tuple, b: tuple) -> dict:
        hit = self._kmul.get((a, b))
        if hit is None:
            hit = self.env.reduce({a + b: ONE})
            self._kmul[(a, b)] = hit
        return hit

    def mul_terms(self, a: Mapping, b: Mapping) -> dict:
        out: dict = {}
        nf = self.pres.nf_word
        for (h1, k1), x in a.items():
            for (h2, k2), y in b.items():
                for (u, k3), z in self.move(k1, h2).items():
                    xyz = x * y * z
                    words = nf(h1 + u)
                    keys = self.kmul(k3, k2)
                    for w, s in words.items():
                        for k4, t in keys.items():
                            vaxpy(out, {(w, k4): xyz * s * t})
        return out

    def star_terms(self, a: Mapping) -> dict:
        """(φ⊗ϑ)* = Σ φ_k* ⊗ (ϑ*∘c_k*)."""
        out: dict = {}
        A = self.hor.A
        for (hw, key), x in a.items():
            tstar = self.env.star({key: ONE})
            for (u, c), y in self.hor.coact_word(hw).terms.items():
                us = self.pres.star_word(u)
                cs = A.element(A.star_word(c))
                right = self.env.circ(tstar, cs)
                for w, s in us.items():
                    for k2, t in right.items():
                        vaxpy(out, {(w, k2): x * y * s * t})
        return out

    # -- structural checks -------------------------------------------------------------------
    def associativity_witness(self, hor_degree: int = 1, env_degree: int = 1):
        basis = self.basis(hor_degree, env_degree)
        for a in basis:
            for b in basis:
                ab = self.mul_terms({a: ONE}, {b: ONE})
                for c in basis:
                    if self._too_big(a, b, c):
                        continue
                    lhs = self.mul_terms(ab, {c: ONE})
                    rhs = self.mul_terms({a: ONE}, self.mul_terms({b: ONE}, {c: ONE}))
                    if lhs != rhs:
                        return [_show({a: ONE}), _show({b: ONE}), _show({c: ONE})]
        return None

    def _too_big(self, *keys) -> bool:
        return sum(len(k[1]) for k in keys) > self.env.n_max

    def star_witness(self, hor_degree: int = 1, env_degree: int = 1):
        """Involution and graded antimultiplicativity on basis pairs."""
        basis = self.basis(hor_degree, env_degree)
        for a in basis:
            if self.star_terms(self.star_terms({a: ONE})) != {a: ONE}:
                return {"law": "involution", "element": _show({a: ONE})}
        for a in basis:
            for b in basis:
                if self._too_big(a, b):
                    continue
                sg = -ONE if (self.grade_of(a) * self.grade_of(b)) % 2 else ONE
                lhs = self.star_terms(self.mul_terms({a: ONE}, {b: ONE}))
                rhs = vscale(self.mul_terms(self.star_terms({b: ONE}), self.star_terms({a: ONE})), sg)
                if lhs != rhs:
                    return {"law": "antimultiplicative", "pair": [_show({a: ONE}), _show({b: ONE})]}
        return None

    def commutation_witness(self, hor_degree: int = 2):
        """(1⊗e_i)(φ⊗1) = (-1)^{|φ|} Σ φ_k ⊗ e_i∘c_k, with ∘ taken on Ψ_inv directly."""
        sp = self.space
        for i in range(sp.dim):
            for w in self.hor.window(hor_degree):
                lhs = self.mul_terms({((), (i,)): ONE}, {(w, ()): ONE})
                rhs: dict = {}
                sg = -ONE if self.pres.word_grade(w) % 2 else ONE
                for (u, c), x in self.hor.coact_word(w).terms.items():
                    for j, y in sp.circ_word({i: ONE}, c).items():
                        vaxpy(rhs, {(u, (j,)): sg * x * y})
                if lhs != rhs:
                    return {"generator": i, "word": list(w)}
        return None


class VHElement:
    """A vh element, optionally tagged with the chart it is expressed in."""

    __slots__ = ("alg", "terms", "chart")

    def __init__(self, alg: VHAlgebra, terms: Mapping, chart=None):
        self.alg = alg
        self.terms = dict(terms)
        self.chart = chart

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"{c}·[{'·'.join(h) or '1'} ⊗ {list(k)}]" for (h, k), c in self.terms.items())

    def _check(self, other):
        if not isinstance(other, VHElement) or other.alg is not self.alg:
            raise TypeError("vh elements from different algebras")
        if self.chart is not None and other.chart is not None and self.chart != other.chart:
            raise ChartError(f"chart mismatch: {self.chart} vs {other.chart}")
        return self.chart if self.chart is not None else other.chart

    def __eq__(self, other):
        if not isinstance(other, VHElement):
            return NotImplemented
        return self.alg is other.alg and self.terms == other.terms

    __hash__ = None

    def __bool__(self):
        return bool(self.terms)

    def __add__(self, other):
        ch = self._check(other)
        out = dict(self.terms)
        vaxpy(out, other.terms)
        return VHElement(self.alg, out, ch)

    def __neg__(self):
        return VHElement(self.alg, vscale(self.terms, -ONE), self.chart)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, VHElement):
            ch = self._check(other)
            return VHElement(self.alg, self.alg.mul_terms(self.terms, other.terms), ch)
        return VHElement(self.alg, vscale(self.terms, as_scalar(other)), self.chart)

    def __rmul__(self, c):
        return VHElement(self.alg, vscale(self.terms, as_scalar(c)), self.chart)

    def star(self) -> "VHElement":
        return VHElement(self.alg, self.alg.star_terms(self.terms), self.chart)

    def homogeneous(self) -> dict:
        out: dict = {}
        for k, c in self.terms.items():
            out.setdefault(self.alg.grade_of(k), {})[k] = c
        return out


def vh_multiply(x: VHElement, y: VHElement) -> VHElement:
    return x * y


def vh_star(x: VHElement) -> VHElement:
    return x.star()


# -- charts --------------------------------------------------------------------------------

class Chart:
    """A preconnection D with its curvature table and differential ∂_D."""

    def __init__(self, alg: VHAlgebra, D: Preconnection, multiplets: MultipletTable, label: str | None = None):
        self.alg = alg
        self.D = D
        self.label = label or D.label
        self.multiplets = multiplets
        self.rho_nat = rho_chi_natural(D, multiplets)
        self.rho = self.rho_nat.descend(alg.space)
        if alg.variant == "vee":
            w = alg.env.d_stability_witness()
            if w is not None:
                raise CalculusError("ker A is not d-stable; ∂_D is not defined on the ∨ variant", w)
        self._dh: dict = {}
        self._dk: dict = {}

    def __repr__(self):
        return f"Chart({self.label!r})"

    def d_hor(self, hw: Word) -> dict:
        """∂_D(φ⊗1) = Dφ⊗1 + (-1)^{|φ|} Σ φ_k ⊗ π(c_k)."""
        hit = self._dh.get(hw)
        if hit is not None:
            return hit
        alg = self.alg
        out: dict = {}
        for w, c in self.D.word(hw).items():
            vaxpy(out, {(w, ()): c})
        sg = -ONE if alg.pres.word_grade(hw) % 2 else ONE
        for (u, c), x in alg.hor.coact_word(hw).terms.items():
            for j, y in alg.space.project_word(c).items():
                vaxpy(out, {(u, (j,)): sg * x * y})
        self._dh[hw] = out
        return out

    def d_gen(self, i: int) -> dict:
        """∂_D(1⊗e_i) = ρ_D(e_i)⊗1 + 1⊗d e_i."""
        out = {(w, ()): c for w, c in self.rho[i].terms.items()}
        for k, c in self.alg.env.reduce(self.alg.env.d_generator(i)).items():
            vaxpy(out, {((), k): c})
        return out

    def d_key(self, key: tuple) -> dict:
        hit = self._dk.get(key)
        if hit is not None:
            return hit
        alg = self.alg
        out: dict = {}
        for j, i in enumerate(key):
            sg = -ONE if j % 2 else ONE
            left = {((), key[:j]): sg}
            right = {((), key[j + 1 :]): ONE}
            vaxpy(out, alg.mul_terms(alg.mul_terms(left, self.d_gen(i)), right))
        self._dk[key] = out
        return out

    def partial_terms(self, a: Mapping) -> dict:
        alg = self.alg
        out: dict = {}
        for (hw, key), c in a.items():
            part = alg.mul_terms(self.d_hor(hw), {((), key): ONE})
            if key:
                sg = -ONE if alg.pres.word_grade(hw) % 2 else ONE
                vaxpy(part, alg.mul_terms({(hw, ()): sg}, self.d_key(key)))
            vaxpy(out, part, c)
        return out

    def partial(self, x: VHElement) -> VHElement:
        if x.chart is not None and x.chart != self.label:
            raise ChartError(f"element lives in chart {x.chart}, not {self.label}")
        return VHElement(self.alg, self.partial_terms(x.terms), self.label)

    # -- checks -------------------------------------------------------------------------------
    def verify(self, hor_degree: int = 1, env_degree: int = 1) -> dict:
        alg = self.alg
        gens = alg.generators()
        res = {"degree": None, "square": None, "hermitian": None, "leibniz": None, "base": None}
        for g in gens:
            dg = self.partial(g)
            gg = set(g.homogeneous())
            if dg and set(dg.homogeneous()) != {x + 1 for x in gg}:
                res["degree"] = repr(g)
            top = max((len(k[1]) for k in g.terms), default=0)
            if top + 2 <= alg.env.n_max and self.partial(dg):
                res["square"] = repr(g)
            if self.partial(g.star()) != dg.star():
                res["hermitian"] = repr(g)
        basis = alg.basis(hor_degree, env_degree)
        for a in basis:
            for b in basis:
                if alg._too_big(a, b) or len(a[1]) + len(b[1]) + 1 > alg.env.n_max:
                    continue
                sg = -ONE if alg.grade_of(a) % 2 else ONE
                lhs = self.partial_terms(alg.mul_terms({a: ONE}, {b: ONE}))
                rhs = alg.mul_terms(self.partial_terms({a: ONE}), {b: ONE})
                vaxpy(rhs, alg.mul_terms({a: ONE}, self.partial_terms({b: ONE})), sg)
                if lhs != rhs:
                    res["leibniz"] = [_show({a: ONE}), _show({b: ONE})]
                    break
            if res["leibniz"]:
                break
        bd = alg.hor.base_differential
        for g in alg.hor.base_generators:
            x = alg.pres.gen(g)
            expect = {(w, ()): c for w, c in bd[g].terms.items()}
            if self.d_hor((g,)) != expect:
                res["base"] = g
        return {"checks": res, "ok": all(v is None for v in res.values())}


def partial_D(chart: Chart, x: VHElement) -> VHElement:
    return chart.partial(x)


# -- gauge maps ------------------------------------------------------------------------------

class GaugeIso:
    """h(φ⊗1) = φ⊗1, h(1⊗e_i) = 1⊗e_i - χ_i⊗1, extended multiplicatively."""

    def __init__(self, alg: VHAlgebra, chi: Sequence[AlgElement], label: str = ""):
        if len(chi) != alg.space.dim:
            raise ValueError("χ table must have one entry per basis one-form")
        self.alg = alg
        self.chi = list(chi)
        self.label = label
        self._key: dict = {}

    @classmethod
    def from_delta(cls, alg: VHAlgebra, E: Delta, multiplets: MultipletTable) -> "GaugeIso":
        nat = rho_chi_natural(E, multiplets)
        return cls(alg, nat.descend(alg.space), E.label)

    def scaled(self, c) -> "GaugeIso":
        return GaugeIso(self.alg, [c * x for x in self.chi], f"{c}*{self.label}")

    def gen_image(self, i: int) -> dict:
        out = {((), (i,)): ONE}
        for w, c in self.chi[i].terms.items():
            vaxpy(out, {(w, ()): -c})
        return out

    def key_image(self, key: tuple) -> dict:
        hit = self._key.get(key)
        if hit is not None:
            return hit
        if not key:
            res = {((), ()): ONE}
        else:
            res = self.alg.mul_terms(self.key_image(key[:-1]), self.gen_image(key[-1]))
        self._key[key] = res
        return res

    def apply_terms(self, a: Mapping) -> dict:
        out: dict = {}
        for (hw, key), c in a.items():
            vaxpy(out, self.alg.mul_terms({(hw, ()): ONE}, self.key_image(key)), c)
        return out

    def __call__(self, x: VHElement, target=None) -> VHElement:
        return VHElement(self.alg, self.apply_terms(x.terms), target)

    def compose_table(self, other: "GaugeIso") -> "GaugeIso":
        """Table of h_other∘h_self on generators (χ adds up)."""
        return GaugeIso(self.alg, [a + b for a, b in zip(self.chi, other.chi)], f"{self.label}+{other.label}")


def h_E_apply(alg: VHAlgebra, x: VHElement, E: Delta, multiplets: MultipletTable, target=None) -> VHElement:
    return GaugeIso.from_delta(alg, E, multiplets)(x, target)


def gauge_suite(alg: VHAlgebra, D: Preconnection, E: Delta, W: Delta, multiplets: MultipletTable,
                hor_degree: int = 1, env_degree: int = 1) -> dict:
    """h_0 = id, h_W h_E = h_{E+W}, hermitian, multiplicative, h_E ∂_D = ∂_{D+E} h_E."""
    hE = GaugeIso.from_delta(alg, E, multiplets)
    hW = GaugeIso.from_delta(alg, W, multiplets)
    hEW = GaugeIso.from_delta(alg, E + W, multiplets)
    h0 = GaugeIso.from_delta(alg, E.scaled(ZERO), multiplets)
    hmE = GaugeIso.from_delta(alg, -E, multiplets)
    cD = Chart(alg, D, multiplets)
    cDE = Chart(alg, D + E, multiplets)
    res = {"identity": None, "composition": None, "inverse": None, "hermitian": None,
           "multiplicative": None, "intertwines": None}
    basis = alg.basis(hor_degree, alg.env.n_max)
    for a in basis:
        x = {a: ONE}
        if h0.apply_terms(x) != x:
            res["identity"] = _show(x)
        hx = hE.apply_terms(x)
        if hW.apply_terms(hx) != hEW.apply_terms(x):
            res["composition"] = _show(x)
        if hmE.apply_terms(hx) != x:
            res["inverse"] = _show(x)
        if hE.apply_terms(alg.star_terms(x)) != alg.star_terms(hx):
            res["hermitian"] = _show(x)
        if len(a[1]) < alg.env.n_max:
            if hE.apply_terms(cD.partial_terms(x)) != cDE.partial_terms(hx):
                res["intertwines"] = _show(x)
    pairs = alg.basis(hor_degree, env_degree)
    for a in pairs:
        for b in pairs:
            if alg._too_big(a, b):
                continue
            lhs = hE.apply_terms(alg.mul_terms({a: ONE}, {b: ONE}))
            rhs = alg.mul_terms(hE.apply_terms({a: ONE}), hE.apply_terms({b: ONE}))
            if lhs != rhs:
                res["multiplicative"] = [_show({a: ONE}), _show({b: ONE})]
                break
        if res["multiplicative"]:
            break
    return {"checks": res, "ok": all(v is None for v in res.values())}


# -- gluing ----------------------------------------------------------------------------------

@dataclass(frozen=True)
class GluedForm:
    chart: str
    terms: tuple  # sorted items, so the form is hashable and immutable

    @classmethod
    def of(cls, chart: str, x: VHElement | Mapping) -> "GluedForm":
        terms = x.terms if isinstance(x, VHElement) else x
        return cls(chart, tuple(sorted(((k, c) for k, c in terms.items() if c), key=lambda t: repr(t[0]))))

    def as_dict(self) -> dict:
        return dict(self.terms)


class Atlas:
    """A finite family of charts with transition maps h_{D'-D}."""

    def __init__(self, alg: VHAlgebra, preconnections: Sequence[Preconnection], multiplets: MultipletTable):
        if not preconnections:
            raise ChartError("atlas needs at least one chart")
        self.alg = alg
        self.multiplets = multiplets
        self.charts: dict[str, Chart] = {}
        for D in preconnections:
            if D.label in self.charts:
                raise ChartError(f"duplicate chart label {D.label!r}")
            self.charts[D.label] = Chart(alg, D, multiplets)
        self._trans: dict = {}

    @property
    def labels(self) -> list[str]:
        return list(self.charts)

    def chart(self, label: str) -> Chart:
        try:
            return self.charts[label]
        except KeyError:
            raise ChartError(f"chart {label!r} is not in the family") from None

    def difference(self, src: str, dst: str) -> Delta:
        return self.chart(dst).D - self.chart(src).D

    def transition(self, src: str, dst: str) -> GaugeIso:
        key = (src, dst)
        hit = self._trans.get(key)
        if hit is None:
            hit = GaugeIso.from_delta(self.alg, self.difference(src, dst), self.multiplets)
            self._trans[key] = hit
        return hit

    def form(self, label: str, x: VHElement | Mapping) -> GluedForm:
        self.chart(label)
        return GluedForm.of(label, x)

    def glue(self, f: GluedForm, target: str) -> GluedForm:
        if f.chart == target:
            self.chart(target)
            return f
        return GluedForm.of(target, self.transition(f.chart, target).apply_terms(f.as_dict()))

    def d_P(self, f: GluedForm) -> GluedForm:
        return GluedForm.of(f.chart, self.chart(f.chart).partial_terms(f.as_dict()))

    def mul(self, f: GluedForm, g: GluedForm) -> GluedForm:
        g = self.glue(g, f.chart)
        return GluedForm.of(f.chart, self.alg.mul_terms(f.as_dict(), g.as_dict()))

    def star(self, f: GluedForm) -> GluedForm:
        return GluedForm.of(f.chart, self.alg.star_terms(f.as_dict()))

    def equal(self, f: GluedForm, g: GluedForm) -> bool:
        return self.glue(g, f.chart) == f

    def transition_witness(self):
        """Transport D→D'→D is the identity on generators."""
        alg = self.alg
        for a in self.labels:
            for b in self.labels:
                for x in alg.generators():
                    f = self.form(a, x)
                    if self.glue(self.glue(f, b), a) != f:
                        return {"charts": [a, b], "element": repr(x)}
        return None

    def independence_suite(self, hor_degree: int = 1, env_degree: int = 1) -> dict:
        """d_P and products computed in any chart agree after transport."""
        alg = self.alg
        res = {"round_trip": self.transition_witness(), "d_P": None, "product": None}
        basis = alg.basis(hor_degree, max(alg.env.n_max - 1, 0))
        for a in self.labels:
            for b in self.labels:
                if a == b:
                    continue
                for k in basis:
                    f = self.form(a, {k: ONE})
                    if self.glue(self.d_P(self.glue(f, b)), a) != self.d_P(f):
                        res["d_P"] = {"charts": [a, b], "element": _show({k: ONE})}
                        break
                pb = alg.basis(hor_degree, env_degree)
                for k1 in pb:
                    for k2 in pb:
                        if alg._too_big(k1, k2):
                            continue
                        f, g = self.form(a, {k1: ONE}), self.form(a, {k2: ONE})
                        here = self.mul(f, g)
                        there = self.mul(self.glue(f, b), self.glue(g, b))
                        if self.glue(there, a) != here:
                            res["product"] = {"charts": [a, b], "pair": [_show({k1: ONE}), _show({k2: ONE})]}
                            break
                    if res["product"]:
                        break
        return {"checks": res, "ok": all(v is None for v in res.values())}


def glue(atlas: Atlas, f: GluedForm, target: str) -> GluedForm:
    return atlas.glue(f, target)


# -- F̂ and horizontality ---------------------------------------------------------------------

class GammaAlgebra:
    """Γ^env = 𝒜 ⊗ Ψ^env with (a⊗η)(b⊗ξ) = Σ a b⁽¹⁾ ⊗ (η∘b⁽²⁾)ξ; keys ``(𝒜 word, env key)``."""

    def __init__(self, space: InvariantFormSpace, env: EnvelopeSpace):
        self.space = space
        self.env = env
        self.h = space.h
        self.A = space.pres
        self._move: dict = {}

    def move(self, key: tuple, bw: Word) -> dict:
        hit = self._move.get((key, bw))
        if hit is not None:
            return hit
        out: dict = {}
        if not key:
            out = {(bw, ()): ONE}
        else:
            for (b1, b2), x in self.h.coproduct_word(bw).terms.items():
                for k2, y in self.env.circ_word({key: ONE}, b2).items():
                    vaxpy(out, {(b1, k2): x * y})
        self._move[(key, bw)] = out
        return out

    def mul_terms(self, a: Mapping, b: Mapping) -> dict:
        out: dict = {}
        nf = self.A.nf_word
        for (a1, k1), x in a.items():
            for (b1, k2), y in b.items():
                for (u, k3), z in self.move(k1, b1).items():
                    words = nf(a1 + u)
                    keys = self.env.reduce({k3 + k2: ONE})
                    for w, s in words.items():
                        for k4, t in keys.items():
                            vaxpy(out, {(w, k4): x * y * z * s * t})
        return out

    def d_terms(self, a: Mapping) -> dict:
        """d(a⊗η) = Σ a⁽¹⁾ ⊗ π(a⁽²⁾)η + a ⊗ dη."""
        out: dict = {}
        for (aw, key), x in a.items():
            for (a1, a2), y in self.h.coproduct_word(aw).terms.items():
                for j, z in self.space.project_word(a2).items():
                    for k2, t in self.env.reduce({(j,) + key: ONE}).items():
                        vaxpy(out, {(a1, k2): x * y * z * t})
            if key:
                for k2, t in self.env.reduce(self.env.d_raw({key: ONE})).items():
                    vaxpy(out, {(aw, k2): x * t})
        return out


class FHat:
    """F̂(φ⊗ϑ) = F⋆(φ) ϖ̂(ϑ) in vh ⊗ Γ^env, ϖ̂(ϑ) = ϖ(ϑ) + 1⊗ϑ on generators.

    Keys are ``(hor word, vh env key, 𝒜 word, Γ env key)``.
    """

    def __init__(self, atlas: Atlas):
        self.atlas = atlas
        self.alg = atlas.alg
        self.gamma = GammaAlgebra(self.alg.space, self.alg.env)
        self._key: dict = {}

    def _tgrade(self, k) -> int:
        return self.alg.pres.word_grade(k[0]) + len(k[1])

    def mul_terms(self, a: Mapping, b: Mapping) -> dict:
        out: dict = {}
        for k1, x in a.items():
            for k2, y in b.items():
                sg = -ONE if (len(k1[3]) * self._tgrade(k2)) % 2 else ONE
                left = self.alg.mul_terms({(k1[0], k1[1]): ONE}, {(k2[0], k2[1]): ONE})
                right = self.gamma.mul_terms({(k1[2], k1[3]): ONE}, {(k2[2], k2[3]): ONE})
                for (hw, vk), s in left.items():
                    for (aw, gk), t in right.items():
                        vaxpy(out, {(hw, vk, aw, gk): sg * x * y * s * t})
        return out

    def varpi_hat(self, i: int) -> dict:
        out = {((), (), (), (i,)): ONE}
        for (j, w), c in self.alg.space.varpi_table[i].items():
            vaxpy(out, {((), (j,), w, ()): c})
        return out

    def key_image(self, key: tuple) -> dict:
        hit = self._key.get(key)
        if hit is not None:
            return hit
        if not key:
            res = {((), (), (), ()): ONE}
        else:
            res = self.mul_terms(self.key_image(key[:-1]), self.varpi_hat(key[-1]))
        self._key[key] = res
        return res

    def apply_terms(self, a: Mapping) -> dict:
        out: dict = {}
        for (hw, key), c in a.items():
            head = {(u, (), cw, ()): x for (u, cw), x in self.alg.hor.coact_word(hw).terms.items()}
            vaxpy(out, self.mul_terms(head, self.key_image(key)), c)
        return out

    def __call__(self, f: GluedForm) -> GluedForm:
        return GluedForm.of(f.chart, self.apply_terms(f.as_dict()))

    def d_terms(self, chart: Chart, a: Mapping) -> dict:
        """(∂_D ⊗ id + (-1)^{deg} id ⊗ d)."""
        out: dict = {}
        for (hw, vk, aw, gk), x in a.items():
            for (h2, k2), y in chart.partial_terms({(hw, vk): ONE}).items():
                vaxpy(out, {(h2, k2, aw, gk): x * y})
            sg = -ONE if self._tgrade((hw, vk)) % 2 else ONE
            for (a2, g2), y in self.gamma.d_terms({(aw, gk): ONE}).items():
                vaxpy(out, {(hw, vk, a2, g2): sg * x * y})
        return out

    def transport_terms(self, a: Mapping, iso: GaugeIso) -> dict:
        out: dict = {}
        for (hw, vk, aw, gk), x in a.items():
            for (h2, k2), y in iso.apply_terms({(hw, vk): ONE}).items():
                vaxpy(out, {(h2, k2, aw, gk): x * y})
        return out

    def positive_part(self, a: Mapping) -> dict:
        return {k: c for k, c in a.items() if k[3]}

    # -- checks ------------------------------------------------------------------------------
    def verify(self, hor_degree: int = 1, env_degree: int = 1) -> dict:
        alg = self.alg
        res = {"multiplicative": None, "differential": None, "chart_independence": None, "horizontality": None}
        pb = alg.basis(hor_degree, env_degree)
        for a in pb:
            for b in pb:
                if alg._too_big(a, b):
                    continue
                lhs = self.apply_terms(alg.mul_terms({a: ONE}, {b: ONE}))
                rhs = self.mul_terms(self.apply_terms({a: ONE}), self.apply_terms({b: ONE}))
                if lhs != rhs:
                    res["multiplicative"] = [_show({a: ONE}), _show({b: ONE})]
                    break
            if res["multiplicative"]:
                break
        for label, chart in self.atlas.charts.items():
            for g in alg.generators():
                if any(len(k[1]) + 1 > alg.env.n_max for k in g.terms):
                    continue
                lhs = self.apply_terms(chart.partial_terms(g.terms))
                rhs = self.d_terms(chart, self.apply_terms(g.terms))
                if lhs != rhs:
                    res["differential"] = {"chart": label, "generator": repr(g)}
                    break
        for a in self.atlas.labels:
            for b in self.atlas.labels:
                if a == b:
                    continue
                iso = self.atlas.transition(a, b)
                for k in alg.basis(hor_degree, env_degree):
                    lhs = self.apply_terms(iso.apply_terms({k: ONE}))
                    rhs = self.transport_terms(self.apply_terms({k: ONE}), iso)
                    if lhs != rhs:
                        res["chart_independence"] = {"charts": [a, b], "element": _show({k: ONE})}
                        break
        h = horizontality(self, hor_degree)
        if not h["equal"]:
            res["horizontality"] = h
        return {"checks": res, "ok": all(v is None for v in res.values())}


def f_hat(atlas: Atlas, f: GluedForm) -> GluedForm:
    return FHat(atlas)(f)


def horizontality(fh: FHat, hor_degree: int = 1) -> dict:
    """Window kernel of x ↦ (positive Γ-degree part of F̂x) against the span of hor⊗1."""
    alg = fh.alg
    basis = alg.basis(hor_degree)
    cols = {k: fh.positive_part(fh.apply_terms({k: ONE})) for k in basis}
    ker = kernel(cols)
    hor_keys = [k for k in basis if not k[1]]
    ech = Echelon().extend(ker)
    expected = Echelon().extend({k: ONE} for k in hor_keys)
    equal = ech.rank == expected.rank and all(not ech.reduce({k: ONE}) for k in hor_keys)
    return {"kernel_dim": ech.rank, "hor_dim": expected.rank, "window": len(basis), "equal": equal}


# -- connections -----------------------------------------------------------------------------

class ConnectionForm:
    """ω_D(ϑ) = π_D⁻¹(1⊗ϑ) on the basis of Ψ_inv."""

    def __init__(self, atlas: Atlas, label: str):
        self.atlas = atlas
        self.label = label
        self.chart = atlas.chart(label)
        alg = atlas.alg
        self.table = [atlas.form(label, {((), (i,)): ONE}) for i in range(alg.space.dim)]

    def __call__(self, vec: Mapping) -> GluedForm:
        return GluedForm.of(self.label, {((), (i,)): c for i, c in vec.items() if c})

    def derivative_in(self, target: str, hw: Word) -> dict:
        """D_ω(φ) = d_Pφ - (-1)^{|φ|} Σ φ_k ω(π(c_k)), evaluated in chart ``target``."""
        atlas = self.atlas
        alg = atlas.alg
        dphi = atlas.chart(target).partial_terms({(hw, ()): ONE})
        sg = -ONE if alg.pres.word_grade(hw) % 2 else ONE
        corr: dict = {}
        for (u, c), x in alg.hor.coact_word(hw).terms.items():
            pc = alg.space.project_word(c)
            if not pc:
                continue
            w_here = atlas.glue(self(pc), target).as_dict()
            vaxpy(corr, alg.mul_terms({(u, ()): x}, w_here))
        vaxpy(dphi, corr, -sg)
        return dphi

    def verify(self, hor_degree: int = 2) -> dict:
        atlas = self.atlas
        alg = atlas.alg
        res = {"regularity": alg.commutation_witness(hor_degree), "multiplicative": None, "round_trip": None, "shift": None}
        quad = alg.env._quadratic() if alg.space.dim else []
        for qv in quad:
            acc: dict = {}
            for (i, j), c in qv.items():
                vaxpy(acc, alg.mul_terms({((), (i,)): ONE}, {((), (j,)): ONE}), c)
            if acc:
                res["multiplicative"] = [[list(k), str(c)] for k, c in qv.items()]
                break
        for target in atlas.labels:
            for g in alg.pres.generators:
                got = self.derivative_in(target, (g.name,))
                back = atlas.glue(GluedForm.of(target, got), self.label).as_dict()
                want = {(w, ()): c for w, c in self.chart.D.word((g.name,)).items()}
                if back != want:
                    res["round_trip"] = {"chart": target, "generator": g.name}
                    break
        for other in atlas.labels:
            if other == self.label:
                continue
            om_other = ConnectionForm(atlas, other)
            chi = atlas.transition(self.label, other).chi
            for i in range(alg.space.dim):
                diff = dict(om_other.table[i].as_dict())
                vaxpy(diff, atlas.glue(self.table[i], other).as_dict(), -ONE)
                want = {(w, ()): c for w, c in chi[i].terms.items()}
                if diff != want:
                    res["shift"] = {"charts": [self.label, other], "index": i}
                    break
        return {"checks": res, "ok": all(v is None for v in res.values())}


def connection_of(atlas: Atlas, label: str) -> ConnectionForm:
    return ConnectionForm(atlas, label)


# -- exterior variants and the truncation formula ---------------------------------------------

def _chi_power(chi: Sequence[AlgElement], pres: Presentation):
    cache: dict = {(): {(): ONE}}

    def power(key: tuple) -> dict:
        hit = cache.get(key)
        if hit is None:
            prev = power(key[:-1])
            hit = {}
            for w, c in prev.items():
                for v, d in chi[key[-1]].terms.items():
                    vaxpy(hit, pres.nf_word(w + v), c * d)
            cache[key] = hit
        return hit

    return power


def quadratic_quotient_power(braid: BraidOperator, n_max: int):
    """Projection Ψ^{⊗k} → Ψ^{⊗k}/⟨im(1+σ)⟩, the free target for a braided-odd χ."""
    d = braid.dim
    imgs = []
    for key in braid.keys(2):
        col = dict(braid.sigma.column(key))
        vaxpy(col, {key: ONE})
        if col:
            imgs.append(col)
    rel: dict = {}
    for n in range(n_max + 1):
        ech = Echelon()
        if n >= 2:
            for i in range(n - 1):
                for left in basis_keys(d, i):
                    for right in basis_keys(d, n - 2 - i):
                        for v in imgs:
                            ech.insert({left + k + right: c for k, c in v.items()})
        rel[n] = ech

    def power(key: tuple) -> dict:
        return rel[len(key)].reduce({key: ONE})

    return power


def truncation_forms(braid: BraidOperator, power, vec: Mapping, n: int) -> tuple[dict, dict]:
    """Σ_k (χ^k⊗id)A_kl(ϑ) and Σ_k (1/k!)(χ^k A_k ⊗ id)A_kl(ϑ), keyed ``(χ key, tail)``."""
    f1: dict = {}
    f2: dict = {}
    for k in range(n + 1):
        l = n - k
        Akl = braid.shuffle_antisymmetrizer(k, l).apply(vec)
        Ak = braid.antisymmetrizer(k)
        inv = as_scalar(f"1/{factorial(k)}")
        for key, c in Akl.items():
            head, tail = key[:k], key[k:]
            for w, x in power(head).items():
                vaxpy(f1, {(w, tail): c * x})
            for h2, y in Ak.column(head).items():
                for w, x in power(h2).items():
                    vaxpy(f2, {(w, tail): inv * c * y * x})
    return f1, f2


def _tensor_algebra(alg: VHAlgebra, n_max: int) -> VHAlgebra:
    env = EnvelopeSpace(alg.space, "tensor", n_max)
    return VHAlgebra(alg.hor, alg.space, env)


def exterior_variant_suite(alg: VHAlgebra, charts: Sequence[Preconnection], multiplets: MultipletTable,
                           n_max: int = 3) -> dict:
    """Truncation formula, S^∨ stability and ideal checks on the tensor-level algebra."""
    sp = alg.space
    braid = BraidOperator.from_space(sp)
    T = _tensor_algebra(alg, n_max)
    res: dict = {"zero_difference": None, "truncation_forms": None, "direct_expansion": None,
                 "vee_stability": None, "upsilon_d_stability": None, "universal_forms": None}
    D = charts[0]
    deltas = [x - D for x in charts[1:]]
    for E in [None] + deltas:
        if E is None:
            chi = [alg.pres.zero() for _ in range(sp.dim)]
        else:
            chi = rho_chi_natural(E, multiplets).descend(sp)
        power = _chi_power(chi, alg.pres)
        h_minus = GaugeIso(T, [-x for x in chi])
        h_plus = GaugeIso(T, chi)
        for n in range(1, n_max + 1):
            for key in basis_keys(sp.dim, n):
                f1, f2 = truncation_forms(braid, power, {key: ONE}, n)
                if E is None and f1 != {((), key): ONE}:
                    res["zero_difference"] = list(key)
                if f1 != f2:
                    res["truncation_forms"] = {"difference": getattr(E, "label", "0"), "key": list(key)}
                if h_minus.key_image(key) != f1:
                    res["direct_expansion"] = {"difference": getattr(E, "label", "0"), "key": list(key)}
            for s in braid.vee_relations(n) if n >= 2 else []:
                img = h_plus.apply_terms({((), k): c for k, c in s.items()})
                tails: dict = {}
                for (w, tail), c in img.items():
                    tails.setdefault((w, len(tail)), {})[tail] = c
                for (w, l), v in tails.items():
                    if braid.antisymmetrizer(l).apply(v):
                        res["vee_stability"] = {"difference": getattr(E, "label", "0"), "degree": n}
                        break
    chart = Chart(T, D, multiplets)
    for n in range(2, n_max):
        ideal = Echelon()
        for m in range(2, n_max + 1):
            for s in braid.vee_relations(m):
                ideal.insert(s)
        for s in braid.vee_relations(n):
            img = chart.partial_terms({((), k): c for k, c in s.items()})
            by_w: dict = {}
            for (w, tail), c in img.items():
                by_w.setdefault(w, {})[tail] = c
            for w, v in by_w.items():
                if ideal.reduce(v):
                    res["upsilon_d_stability"] = {"degree": n, "hor": list(w)}
                    break
    upower = quadratic_quotient_power(braid, n_max)
    for n in range(2, n_max + 1):
        for key in basis_keys(sp.dim, n):
            f1, f2 = truncation_forms(braid, upower, {key: ONE}, n)
            if f1 != f2:
                res["universal_forms"] = {"key": list(key)}
                break
    return {"checks": res, "ok": all(v is None for v in res.values())}


def universal_truncation_suite(space: InvariantFormSpace, n_max: int = 3) -> dict:
    """Both forms of the truncation formula against the free braided-odd target."""
    braid = BraidOperator.from_space(space)
    power = quadratic_quotient_power(braid, n_max)
    for n in range(2, n_max + 1):
        for key in basis_keys(space.dim, n):
            f1, f2 = truncation_forms(braid, power, {key: ONE}, n)
            if f1 != f2:
                return {"ok": False, "key": list(key)}
    return {"ok": True}


def free_odd_horizontal(space: InvariantFormSpace) -> tuple[GradedHorizontal, list[AlgElement]]:
    """hor generated by odd x_i with F⋆(x_i) = Σ x_j⊗c_ji and x^{⊗2}(1+σ) = 0.

    Returns the algebra and the χ table e_i ↦ x_i.  Raises when the quadratic
    rewriting system is not confluent in degree 3.
    """
    braid = BraidOperator.from_space(space)
    d = space.dim
    names = [f"x{i}" for i in range(d)]
    gens = [Generator(n, 1) for n in names]
    order = {n: i for i, n in enumerate(names)}

    def wkey(k):
        return (len(k), tuple(k))

    ech = Echelon(order=wkey)
    for key in braid.keys(2):
        col = dict(braid.sigma.column(key))
        vaxpy(col, {key: ONE})
        ech.insert(col)
    rules = []
    for row in ech.basis():
        p = max(row, key=wkey)
        rhs = tuple((-c, tuple(names[i] for i in k)) for k, c in row.items() if k != p)
        rules.append(Rule(tuple(names[i] for i in p), rhs))
    pres = Presentation(f"free_odd_{space.h.name}", gens, rules)
    conf = pres.local_confluence(3)
    if conf["unresolved"]:
        raise BundleError("quadratic relations are not confluent in degree 3", conf)
    legs = (pres, space.pres)
    table = {}
    for i in range(d):
        t: dict = {}
        for j, c in space.varpi_legs(i):
            for w, x in c.terms.items():
                vaxpy(t, {((names[j],), w): x})
        table[names[i]] = TensorElement(legs, t, _normal=True)
    hor = GradedHorizontal(pres.name, pres, space.h, table)
    return hor, [pres.gen(n) for n in names]
