"""Bundles, horizontal forms, preconnections and their natural maps.

A :class:`GradedHorizontal` is a graded presented *-algebra ``hor`` whose
degree-0 part is the total space, together with a coaction table
``F⋆: hor -> hor ⊗ 𝒜`` on generators.  Preconnections and their
differences are odd antiderivations given by generator values.

The natural maps are rebuilt two ways: from multiplet tables with
``ρ(u_ij) = Σ_k b_ki* Δ(b_kj)``, and from freeness witnesses with
``ρ(a) = Σ q_i Δ(b_i)``.  Curvature-type maps carry a sign:
``ρ♮_D = -ρ_{Δ=D²}`` and ``χ♮_E = -ρ_{Δ=E}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .algebra import AlgElement, Generator, Presentation, Rule, TensorElement, Word
from .fodc import CalculusError, IdealSpec, InvariantFormSpace, classical_ideal, counit_kernel_basis
from .hopf import HopfStructure, preset
from .linalg import Echelon, TrackedEchelon, kernel, vaxpy
from .scalar import ONE, ZERO, as_scalar, parse_scalar


class BundleError(ValueError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class FreenessError(BundleError):
    """No freeness witness inside the searched window."""


# -- horizontal algebra ------------------------------------------------------------

class GradedHorizontal:
    """hor with its extended coaction F⋆; degree 0 is the total space ℬ."""

    def __init__(
        self,
        name: str,
        pres: Presentation,
        hopf: HopfStructure,
        coaction: Mapping[str, TensorElement],
        *,
        base_generators: Sequence[str] = (),
        base_differential: Mapping[str, AlgElement] | None = None,
        embed: Mapping[str, str] | None = None,
    ):
        self.name = name
        self.pres = pres
        self.hopf = hopf
        self.A = hopf.pres
        self.legs = (pres, hopf.pres)
        self.table = dict(coaction)
        for g in pres.generators:
            if g.name not in self.table:
                raise BundleError(f"coaction misses generator {g.name!r}")
            t = self.table[g.name]
            if t.legs[0] is not pres or t.legs[1] is not hopf.pres:
                raise BundleError(f"coaction of {g.name!r} has wrong legs")
        self.base_generators = tuple(base_generators)
        self.base_differential = dict(base_differential or {})
        self.embed_map = dict(embed) if embed else None
        self._cache: dict = {}

    def __repr__(self):
        return f"GradedHorizontal({self.name!r})"

    # -- coaction -----------------------------------------------------------------
    def coact_word(self, w: Word) -> TensorElement:
        hit = self._cache.get(w)
        if hit is not None:
            return hit
        if not w:
            res = TensorElement(self.legs, {((), ()): ONE}, _normal=True)
        elif len(w) == 1:
            res = self.table[w[0]]
        else:
            res = self.coact_word(w[:-1]) * self.table[w[-1]]
        self._cache[w] = res
        return res

    def coact(self, x: AlgElement) -> TensorElement:
        out: dict = {}
        for w, c in x.terms.items():
            vaxpy(out, self.coact_word(w).terms, c)
        return TensorElement(self.legs, out, _normal=True)

    def split(self, x: AlgElement) -> dict:
        """F⋆(x) as ``{𝒜-word c: φ_c}`` with F⋆(x) = Σ φ_c ⊗ c."""
        grouped: dict = {}
        for (u, c), v in self.coact(x).terms.items():
            grouped.setdefault(c, {})[u] = v
        return {c: AlgElement(self.pres, t, _normal=True) for c, t in grouped.items()}

    def embed(self, a: AlgElement) -> AlgElement:
        """𝒜 → hor for bundles whose total space contains the structure group."""
        if self.embed_map is None:
            raise BundleError("this bundle has no embedding of the structure group")
        out: dict = {}
        for w, c in a.terms.items():
            vaxpy(out, {tuple(self.embed_map[s] for s in w): c})
        return self.pres.element(out)

    def element(self, terms) -> AlgElement:
        return self.pres.element(terms)

    def window(self, degree: int, grade: int | None = None) -> list:
        ws = self.pres.window(degree)
        if grade is None:
            return ws
        return [w for w in ws if self.pres.word_grade(w) == grade]

    def tensor(self, a: AlgElement, c: AlgElement) -> TensorElement:
        return TensorElement.pure(a, c)

    # -- verification ----------------------------------------------------------------
    def verify(self, degree: int = 3) -> dict:
        p, h = self.pres, self.hopf
        fails: dict = {"grading": [], "star": [], "relations": [], "coassociativity": [], "counit": []}
        for g in p.generators:
            t = self.table[g.name]
            if any(p.word_grade(u) != g.grade for (u, _) in t.terms):
                fails["grading"].append(g.name)
            x = p.gen(g.name)
            if p.has_involution() and self.coact(x.star()) != self.coact(x).star():
                fails["star"].append(g.name)
        for r in p.rules:
            lhs = self.coact_word(r.lhs)
            rhs = TensorElement.zero(self.legs)
            for c, w in r.rhs:
                rhs = rhs + c * self.coact_word(w)
            if lhs != rhs:
                fails["relations"].append(list(r.lhs))
        for w in self.window(degree):
            t = self.coact_word(w)
            left: dict = {}
            right: dict = {}
            for (u, c), x in t.terms.items():
                for (a, b), y in h.coproduct_word(c).terms.items():
                    vaxpy(right, {(u, a, b): x * y})
                for (u2, c2), y in self.coact_word(u).terms.items():
                    vaxpy(left, {(u2, c2, c): x * y})
            if left != right:
                fails["coassociativity"].append(list(w))
            back: dict = {}
            for (u, c), x in t.terms.items():
                e = h.counit_word(c)
                if e:
                    vaxpy(back, {u: x * e})
            if back != {w: ONE}:
                fails["counit"].append(list(w))
        return {"failures": fails, "ok": not any(fails.values())}


# -- freeness -----------------------------------------------------------------------------

def _grade0_words(hor: GradedHorizontal, length: int) -> list:
    return hor.window(length, grade=0)


def freeness_witness(hor: GradedHorizontal, a: AlgElement, max_length: int = 4) -> list[tuple[AlgElement, AlgElement]]:
    """Pairs (q_i, b_i) in ℬ with Σ q_i F(b_i) = 1⊗a, by exact linear solve.

    The search grows the word length of q and b together; b-words are first
    restricted to those whose coaction touches the support of ``a``.
    """
    p = hor.pres
    if a.pres is not hor.A:
        raise BundleError("freeness witness needs an element of the structure group algebra")
    if not a:
        return []
    target = {((), c): x for c, x in a.terms.items()}
    supp = set(a.terms)
    for L in range(0, max_length + 1):
        qs = _grade0_words(hor, L)
        for restrict in (True, False):
            bs = [v for v in _grade0_words(hor, L) if not restrict or any(c in supp for (_, c) in hor.coact_word(v).terms)]
            te = TrackedEchelon()
            for v in bs:
                fv = hor.coact_word(v)
                for u in qs:
                    col: dict = {}
                    for (x, c), y in fv.terms.items():
                        for w, z in p.nf_word(u + x).items():
                            vaxpy(col, {(w, c): y * z})
                    te.insert(col, (u, v))
            sol = te.solve(target)
            if sol is not None:
                pairs = _group_pairs(p, sol)
                if check_witness(hor, a, pairs):
                    return pairs
                raise BundleError("internal: solved witness does not verify", a)
    raise FreenessError(f"freeness not witnessed up to word length {max_length}", a)


def _group_pairs(p: Presentation, sol: Mapping) -> list:
    by_b: dict = {}
    for (u, v), c in sol.items():
        by_b.setdefault(v, {})
        vaxpy(by_b[v], {u: c})
    out = []
    for v in sorted(by_b, key=p.order_key):
        q = p.element(by_b[v])
        if q:
            out.append((q, p.element({v: ONE})))
    return out


def check_witness(hor: GradedHorizontal, a: AlgElement, pairs) -> bool:
    acc = TensorElement.zero(hor.legs)
    for q, b in pairs:
        acc = acc + TensorElement.pure(q, hor.A.one()) * hor.coact(b)
    return acc == TensorElement.pure(hor.pres.one(), a)


def trivial_witness(hor: GradedHorizontal, a: AlgElement) -> list[tuple[AlgElement, AlgElement]]:
    """[(κ(a⁽¹⁾), a⁽²⁾)] for bundles with ℬ ⊇ 𝒜 and F = φ on 𝒜."""
    h = hor.hopf
    out = []
    for (u, v), c in h.coproduct(a).terms.items():
        out.append((c * hor.embed(h.antipode_word(u)), hor.embed(hor.A.element({v: ONE}))))
    return out


def witness_table(hor: GradedHorizontal, degree: int, max_length: int = 4) -> dict:
    """Witness for every 𝒜 window word (the solver path)."""
    return {w: freeness_witness(hor, hor.A.element({w: ONE}), max_length) for w in hor.A.window(degree)}


# -- base forms ---------------------------------------------------------------------------

class BaseForms:
    """F⋆-invariant part of the hor window, per grade, with the base differential."""

    def __init__(self, hor: GradedHorizontal, degree: int):
        self.hor = hor
        self.degree = degree
        p = hor.pres
        self.spaces: dict[int, list[AlgElement]] = {}
        by_grade: dict = {}
        for w in hor.window(degree):
            by_grade.setdefault(p.word_grade(w), []).append(w)
        for g, words in sorted(by_grade.items()):
            cols = {}
            for w in words:
                t = dict(hor.coact_word(w).terms)
                vaxpy(t, {(w, ()): -ONE})
                cols[w] = t
            self.spaces[g] = [p.element(v) for v in kernel(cols)]
        self._ech = {g: Echelon(p.order_key).extend(x.terms for x in v) for g, v in self.spaces.items()}
        self.d = None
        if hor.base_differential:
            self.d = Antiderivation(hor, hor.base_differential, label="d_M", partial=True)

    def dims(self) -> dict:
        return {g: len(v) for g, v in self.spaces.items()}

    def basis(self, grade: int | None = None) -> list[AlgElement]:
        if grade is not None:
            return list(self.spaces.get(grade, []))
        return [x for g in sorted(self.spaces) for x in self.spaces[g]]

    def is_invariant(self, x: AlgElement) -> bool:
        return self.hor.coact(x) == TensorElement.pure(x, self.hor.A.one())

    def contains(self, x: AlgElement) -> bool:
        if x.degree() > self.degree:
            return self.is_invariant(x)
        for g in x.grades() or {0}:
            part = {w: c for w, c in x.terms.items() if self.hor.pres.word_grade(w) == g}
            ech = self._ech.get(g)
            if ech is None or ech.reduce(part):
                return False
        return True

    def verify(self) -> dict:
        fails: dict = {"product": None, "star": None, "unit": None}
        basis = self.basis()
        if not self.contains(self.hor.pres.one()):
            fails["unit"] = "unit not invariant"
        for x in basis:
            if not self.is_invariant(x.star()):
                fails["star"] = repr(x)
                break
        for x in basis:
            for y in basis:
                if x.degree() + y.degree() <= self.degree and not self.is_invariant(x * y):
                    fails["product"] = [repr(x), repr(y)]
                    break
            if fails["product"]:
                break
        if self.d is not None:
            fails["d_degree"] = None
            fails["d_invariant"] = None
            fails["d_squared"] = None
            fails["d_hermitian"] = None
            fails["d_relations"] = self.d.relation_witness()
            for x in basis:
                if not _base_only(self, x):
                    continue
                dx = self.d(x)
                if dx and dx.grades() != {x.grade() + 1}:
                    fails["d_degree"] = repr(x)
                if not self.is_invariant(dx):
                    fails["d_invariant"] = repr(x)
                if self.d(dx):
                    fails["d_squared"] = repr(x)
                if self.d(x.star()) != dx.star():
                    fails["d_hermitian"] = repr(x)
        return {"failures": fails, "ok": all(v is None for v in fails.values())}


def _base_only(base: BaseForms, x: AlgElement) -> bool:
    gens = set(base.hor.base_generators)
    return all(s in gens for w in x.terms for s in w)


def base_invariants(hor: GradedHorizontal, degree: int) -> BaseForms:
    return BaseForms(hor, degree)


# -- antiderivations ----------------------------------------------------------------------

class Antiderivation:
    """Odd derivation of hor fixed by values on generators (missing ones are 0).

    ``partial=True`` allows generators without values and raises if such a
    generator is actually hit; used for the base differential.
    """

    kind = "antiderivation"

    def __init__(self, hor: GradedHorizontal, values: Mapping[str, AlgElement], label: str = "", partial: bool = False):
        self.hor = hor
        self.pres = hor.pres
        self.values = {}
        for g, v in values.items():
            if g not in self.pres.index:
                raise BundleError(f"unknown generator {g!r}")
            if not isinstance(v, AlgElement):
                v = self.pres.scalar(as_scalar(v)) if v else self.pres.zero()
            self.values[g] = v
        self.label = label
        self.partial = partial
        self._cache: dict = {}

    def __repr__(self):
        return f"{type(self).__name__}({self.label!r})"

    def _gen(self, s):
        v = self.values.get(s)
        if v is None:
            if self.partial:
                raise BundleError(f"{self.label or 'map'} has no value on {s!r}")
            return None
        return v

    def word(self, w: Word) -> dict:
        hit = self._cache.get(w)
        if hit is not None:
            return hit
        p = self.pres
        out: dict = {}
        grade = 0
        for i, s in enumerate(w):
            v = self._gen(s)
            if v is not None and v:
                sg = -ONE if grade % 2 else ONE
                left = w[:i]
                right = w[i + 1 :]
                for u, c in v.terms.items():
                    vaxpy(out, p.nf_word(left + u + right), sg * c)
            grade += p.gen_by_name[s].grade
        self._cache[w] = out
        return out

    def __call__(self, x: AlgElement) -> AlgElement:
        out: dict = {}
        for w, c in x.terms.items():
            vaxpy(out, self.word(w), c)
        return AlgElement(self.pres, out, _normal=True)

    def _combine(self, other: "Antiderivation", c, cls=None, label=None):
        vals = {}
        for g in self.pres.generators:
            a = self.values.get(g.name, self.pres.zero())
            b = other.values.get(g.name, self.pres.zero())
            vals[g.name] = a + c * b
        cls = cls or Antiderivation
        return cls(self.hor, vals, label or f"({self.label}{'+' if c == 1 else '-'}{other.label})")

    def star_conjugate(self) -> "Antiderivation":
        """x ↦ D(x*)*, fixed by its generator values."""
        vals = {}
        for g in self.pres.generators:
            x = self.pres.gen(g.name)
            vals[g.name] = self(x.star()).star()
        return type(self)(self.hor, vals, f"*{self.label}*")

    # -- checks ---------------------------------------------------------------------------
    def degree_witness(self):
        for g, v in self.values.items():
            if v and v.grades() != {self.pres.gen_by_name[g].grade + 1}:
                return g
        return None

    def relation_witness(self):
        p = self.pres
        for r in p.rules:
            try:
                lhs = self.word(r.lhs)
                rhs: dict = {}
                for c, w in r.rhs:
                    vaxpy(rhs, self.word(w), c)
            except BundleError:
                continue
            if lhs != rhs:
                return list(r.lhs)
        return None

    def covariance_witness(self, words):
        hor = self.hor
        for w in words:
            x = self.pres.element({w: ONE})
            lhs = hor.coact(self(x))
            t = hor.coact_word(w)
            rhs: dict = {}
            for (u, c), y in t.terms.items():
                for u2, z in self.word(u).items():
                    vaxpy(rhs, {(u2, c): y * z})
            if lhs.terms != rhs:
                return list(w)
        return None

    def hermiticity_witness(self, words):
        for w in words:
            x = self.pres.element({w: ONE})
            if self(x.star()) != self(x).star():
                return list(w)
        return None


class Preconnection(Antiderivation):
    kind = "preconnection"

    def __add__(self, other: "Delta") -> "Preconnection":
        if not isinstance(other, Delta):
            raise TypeError("a preconnection can only be shifted by a difference")
        return self._combine(other, ONE, Preconnection, f"{self.label}+{other.label}")

    def __sub__(self, other):
        if isinstance(other, Preconnection):
            return self._combine(other, -ONE, Delta, f"{self.label}-{other.label}")
        if isinstance(other, Delta):
            return self._combine(other, -ONE, Preconnection, f"{self.label}-{other.label}")
        return NotImplemented

    def square(self, x: AlgElement) -> AlgElement:
        return self(self(x))

    def verify(self, base: BaseForms, degree: int | None = None) -> dict:
        d = base.degree if degree is None else degree
        words = self.hor.window(d)
        res = {
            "pre1_degree": self.degree_witness(),
            "pre4_leibniz_relations": self.relation_witness(),
            "pre3_covariance": self.covariance_witness(words),
            "pre5_hermitian": self.hermiticity_witness(words),
            "pre2_base": None,
        }
        if base.d is not None:
            for x in base.basis():
                if _base_only(base, x) and self(x) != base.d(x):
                    res["pre2_base"] = repr(x)
                    break
        return {"checks": res, "ok": all(v is None for v in res.values())}

    def symmetrized(self) -> "Preconnection":
        """(*D* + D)/2."""
        c = self.star_conjugate()
        half = as_scalar("1/2")
        vals = {g.name: half * (self.values.get(g.name, self.pres.zero()) + c.values[g.name]) for g in self.pres.generators}
        return Preconnection(self.hor, vals, f"sym({self.label})")


class Delta(Antiderivation):
    """A difference of preconnections: vanishes on the base forms."""

    kind = "delta"

    def __add__(self, other: "Delta") -> "Delta":
        return self._combine(other, ONE, Delta, f"{self.label}+{other.label}")

    def __neg__(self) -> "Delta":
        return self.scaled(-ONE)

    def scaled(self, c) -> "Delta":
        return Delta(self.hor, {g: c * v for g, v in self.values.items()}, f"{c}*{self.label}")

    def verify(self, base: BaseForms, degree: int | None = None) -> dict:
        d = base.degree if degree is None else degree
        words = self.hor.window(d)
        res = {
            "degree": self.degree_witness(),
            "leibniz_relations": self.relation_witness(),
            "covariance": self.covariance_witness(words),
            "hermitian": self.hermiticity_witness(words),
            "vanishes_on_base": None,
        }
        for x in base.basis():
            if self(x):
                res["vanishes_on_base"] = repr(x)
                break
        return {"checks": res, "ok": all(v is None for v in res.values())}


def zero_delta(hor: GradedHorizontal) -> Delta:
    return Delta(hor, {}, "0")


def extend_antiderivation(values: Mapping, hor: GradedHorizontal, kind: str = "preconnection", label: str = ""):
    """Build a Preconnection (base values forced to d_M) or a Delta (base values 0)."""
    vals = dict(values)
    if kind == "preconnection":
        for g in hor.base_generators:
            forced = hor.base_differential.get(g, hor.pres.zero())
            given = vals.get(g)
            if given is not None and given != forced:
                raise BundleError(f"value on base generator {g!r} differs from d_M", g)
            vals[g] = forced
        D = Preconnection(hor, vals, label)
    elif kind == "delta":
        for g in hor.base_generators:
            if vals.get(g):
                raise BundleError(f"difference must vanish on base generator {g!r}", g)
        D = Delta(hor, vals, label)
    else:
        raise ValueError(kind)
    w = D.relation_witness()
    if w is not None:
        raise BundleError("values are not compatible with a relation", w)
    return D


# -- multiplets ----------------------------------------------------------------------------

@dataclass
class Multiplet:
    label: str
    u: list  # u[i][j] in 𝒜
    b: list  # b[k][i] in ℬ

    @property
    def size(self) -> int:
        return len(self.u)


class MultipletTable:
    """Multiplets (u^α, b^α) with a resolver expressing 𝒜 elements in matrix entries."""

    def __init__(self, hor: GradedHorizontal, multiplets: Sequence[Multiplet]):
        self.hor = hor
        self.multiplets = list(multiplets)
        self._te = TrackedEchelon(order=None)
        self.relations: list[dict] = []
        for m_idx, m in enumerate(self.multiplets):
            n = m.size
            for i in range(n):
                for j in range(n):
                    rel = self._te.insert(m.u[i][j].terms, (m_idx, i, j))
                    if rel is not None:
                        self.relations.append(rel)

    def resolve_word(self, w: Word) -> dict | None:
        return self._te.solve({w: ONE})

    def coverage_gap(self, degree: int):
        for w in self.hor.A.window(degree):
            if self.resolve_word(w) is None:
                return list(w)
        return None

    def verify(self) -> dict:
        """Transformation law and the unit identity Σ_k b_ki* F(b_kj) = 1⊗u_ij."""
        hor = self.hor
        A = hor.A
        h = hor.hopf
        for m in self.multiplets:
            n = m.size
            for i in range(n):
                for j in range(n):
                    # u is a corepresentation
                    lhs = h.coproduct(m.u[i][j])
                    rhs = TensorElement.zero((A, A))
                    for k in range(n):
                        rhs = rhs + TensorElement.pure(m.u[i][k], m.u[k][j])
                    if lhs != rhs:
                        return {"ok": False, "law": "corepresentation", "multiplet": m.label, "entry": [i, j]}
            for k in range(len(m.b)):
                for j in range(n):
                    lhs = hor.coact(m.b[k][j])
                    rhs = TensorElement.zero(hor.legs)
                    for l in range(n):
                        rhs = rhs + TensorElement.pure(m.b[k][l], m.u[l][j])
                    if lhs != rhs:
                        return {"ok": False, "law": "transformation", "multiplet": m.label, "entry": [k, j]}
            for i in range(n):
                for j in range(n):
                    acc = TensorElement.zero(hor.legs)
                    for k in range(len(m.b)):
                        acc = acc + TensorElement.pure(m.b[k][i].star(), A.one()) * hor.coact(m.b[k][j])
                    if acc != TensorElement.pure(hor.pres.one(), m.u[i][j]):
                        return {"ok": False, "law": "unit_identity", "multiplet": m.label, "entry": [i, j]}
        return {"ok": True}


def regular_multiplets(hor: GradedHorizontal, degree: int) -> MultipletTable:
    """Multiplets for bundles containing 𝒜 (trivial bundles): b = u.

    Grouplike structure groups get one 1×1 multiplet per normal word; finite
    groups get the regular corepresentation u_gh = δ_{g⁻¹h}.
    """
    h = hor.hopf
    A = hor.A
    if getattr(h, "group", None) is not None:
        grp = h.group
        els = grp["elements"]
        u = [[h.delta(grp["mul"](grp["inv"][g], k)) for k in els] for g in els]
        b = [[hor.embed(x) for x in row] for row in u]
        return MultipletTable(hor, [Multiplet("regular", u, b)])
    ms = []
    for w in A.window(degree):
        a = A.element({w: ONE})
        if h.coproduct(a) != TensorElement.pure(a, a):
            raise BundleError("automatic multiplets need grouplike words", list(w))
        ms.append(Multiplet("·".join(w) or "1", [[a]], [[hor.embed(a)]]))
    return MultipletTable(hor, ms)


# -- natural maps ---------------------------------------------------------------------------

class NaturalMaps:
    """ρ♮ (from D²) or χ♮ (from E) on 𝒜, evaluated lazily on words."""

    def __init__(self, source, multiplets: MultipletTable | None, kind: str, *, via: str = "multiplets", witness_length: int = 4):
        self.source = source
        self.hor = source.hor
        self.kind = kind
        self.multiplets = multiplets
        self.via = via
        self.witness_length = witness_length
        if kind == "rho":
            self.delta_map = source.square
        elif kind == "chi":
            self.delta_map = source
        else:
            raise ValueError(kind)
        self._entry: dict = {}
        self._cache: dict = {}
        self.scale = ONE

    def corrupted(self, scale=-ONE) -> "NaturalMaps":
        m = NaturalMaps(self.source, self.multiplets, self.kind, via=self.via, witness_length=self.witness_length)
        m.scale = scale
        return m

    def _entry_value(self, key) -> AlgElement:
        hit = self._entry.get(key)
        if hit is not None:
            return hit
        m_idx, i, j = key
        m = self.multiplets.multiplets[m_idx]
        acc = self.hor.pres.zero()
        for k in range(len(m.b)):
            acc = acc + m.b[k][i].star() * self.delta_map(m.b[k][j])
        self._entry[key] = acc
        return acc

    def word(self, w: Word) -> AlgElement:
        hit = self._cache.get(w)
        if hit is not None:
            return hit
        if not w:
            res = self.hor.pres.zero()
        elif self.via == "multiplets":
            combo = self.multiplets.resolve_word(w)
            if combo is None:
                raise BundleError("multiplet coverage gap", list(w))
            res = self.hor.pres.zero()
            for key, c in combo.items():
                res = res + c * self._entry_value(key)
            res = -res
        else:
            pairs = freeness_witness(self.hor, self.hor.A.element({w: ONE}), self.witness_length)
            res = self.hor.pres.zero()
            for q, b in pairs:
                res = res + q * self.delta_map(b)
            res = -res
        res = self.scale * res
        self._cache[w] = res
        return res

    def __call__(self, a: AlgElement) -> AlgElement:
        out = self.hor.pres.zero()
        for w, c in a.terms.items():
            out = out + c * self.word(w)
        return out

    def descend(self, space: InvariantFormSpace) -> list[AlgElement]:
        """ρ_D(e_i) = ρ♮(r_i); refuses when ρ♮ does not vanish on the ideal."""
        for b in space.ideal_basis():
            if self(b):
                raise CalculusError(f"{self.kind}♮ does not vanish on the ideal", b)
        return [self(r) for r in space.reps]

    def relation_witness(self):
        """ρ must vanish on linear relations among multiplet entries."""
        if self.via != "multiplets":
            return None
        for rel in self.multiplets.relations:
            acc = self.hor.pres.zero()
            for key, c in rel.items():
                acc = acc + c * self._entry_value(key)
            if acc:
                return {str(k): str(v) for k, v in rel.items()}
        return None

    def reconstruct(self, x: AlgElement) -> AlgElement:
        """-Σ φ_k ρ♮(c_k) for ρ; -(-1)^{∂φ} Σ φ_k χ♮(c_k) for χ, on homogeneous parts."""
        out = self.hor.pres.zero()
        for w, c in x.terms.items():
            g = self.hor.pres.word_grade(w)
            sg = -ONE if (self.kind == "chi" and g % 2) else ONE
            for cw, phi in self.hor.split(self.hor.pres.element({w: ONE})).items():
                out = out - sg * c * phi * self.word(cw)
        return out


def rho_chi_natural(x, multiplets: MultipletTable | None, *, via: str = "multiplets") -> NaturalMaps:
    kind = "rho" if isinstance(x, Preconnection) else "chi"
    return NaturalMaps(x, multiplets, kind, via=via)


def _kernel_elements(h: HopfStructure, degree: int):
    return counit_kernel_basis(h, degree)


def verify_natural_map(nat: NaturalMaps, degree: int, D: Preconnection | None = None) -> dict:
    """Reconstruction, module law, covariance, hermiticity and Δ-closedness on the window."""
    hor = nat.hor
    h = hor.hopf
    A = hor.A
    p = hor.pres
    res: dict = {}
    res["unit"] = None if not nat.word(()) else "ρ(1) != 0"
    res["entry_relations"] = nat.relation_witness()
    bad = None
    for w in hor.window(degree):
        x = p.element({w: ONE})
        if nat.delta_map(x) != nat.reconstruct(x):
            bad = list(w)
            break
    res["reconstruction"] = bad
    # module law ρ(a)φ = (±) Σ φ_k ρ(a c_k) for a in ker ε
    bad = None
    for a in _kernel_elements(h, degree):
        for w in hor.window(max(degree - a.degree(), 0)):
            phi = p.element({w: ONE})
            g = p.word_grade(w)
            lhs = nat(a) * phi
            rhs = p.zero()
            for cw, phik in hor.split(phi).items():
                rhs = rhs + phik * nat(a * A.element({cw: ONE}))
            if nat.kind == "chi" and g % 2:
                rhs = -rhs
            if lhs != rhs:
                bad = {"a": repr(a), "phi": list(w)}
                break
        if bad:
            break
    res["module_law"] = bad
    # covariance F⋆ρ(a) = (ρ⊗id)ad(a)
    bad = None
    for w in A.window(degree):
        a = A.element({w: ONE})
        lhs = hor.coact(nat(a))
        rhs: dict = {}
        for (u, v), c in h.adjoint(a).terms.items():
            for y, z in nat.word(u).terms.items():
                vaxpy(rhs, {(y, v): c * z})
        if lhs.terms != rhs:
            bad = list(w)
            break
    res["covariance"] = bad
    bad = None
    for w in A.window(degree):
        a = A.element({w: ONE})
        if nat(h.antipode(a).star()) != -nat(a).star():
            bad = list(w)
            break
    res["hermitian"] = bad
    if nat.kind == "rho" and D is not None:
        bad = None
        for w in A.window(degree):
            if D(nat.word(w)):
                bad = list(w)
                break
        res["closed"] = bad
    return {"checks": res, "ok": all(v is None for v in res.values())}


def natural_maps_agree(a: NaturalMaps, b: NaturalMaps, degree: int):
    """Uniqueness: first 𝒜 window word where two tables differ."""
    for w in a.hor.A.window(degree):
        if a.word(w) != b.word(w):
            return list(w)
    return None


def sum_identity_witness(rho_D: NaturalMaps, rho_DE: NaturalMaps, chi_E: NaturalMaps, D: Preconnection, degree: int):
    """ρ♮_{D+E}(a) = ρ♮_D(a) + Dχ♮_E(a) + χ♮_E(a⁽¹⁾)χ♮_E(a⁽²⁾)."""
    h = rho_D.hor.hopf
    for w in h.pres.window(degree):
        a = h.pres.element({w: ONE})
        quad = rho_D.hor.pres.zero()
        for (u, v), c in h.coproduct(a).terms.items():
            quad = quad + c * chi_E.word(u) * chi_E.word(v)
        if rho_DE(a) != rho_D(a) + D(chi_E(a)) + quad:
            return list(w)
    return None


def half_identity_witness(chi_E: NaturalMaps, degree: int):
    """χ(a⁽¹⁾)χ(a⁽²⁾) = ½ χ(a⁽²⁾)χ(κ(a⁽¹⁾)a⁽³⁾) for a in ker ε."""
    h = chi_E.hor.hopf
    half = as_scalar("1/2")
    for a in _kernel_elements(h, degree):
        lhs = chi_E.hor.pres.zero()
        for (u, v), c in h.coproduct(a).terms.items():
            lhs = lhs + c * chi_E.word(u) * chi_E.word(v)
        rhs = chi_E.hor.pres.zero()
        for (u, v), c in h.adjoint(a).terms.items():
            rhs = rhs + c * chi_E.word(u) * chi_E.word(v)
        if lhs != half * rhs:
            return repr(a)
    return None


def verify_preconnection_lemmas(D: Preconnection, E: Delta, multiplets: MultipletTable, degree: int, *, oracle: bool = True) -> dict:
    rho_D = rho_chi_natural(D, multiplets)
    chi_E = rho_chi_natural(E, multiplets)
    DE = D + E
    rho_DE = rho_chi_natural(DE, multiplets)
    out = {
        "rho_D": verify_natural_map(rho_D, degree, D),
        "chi_E": verify_natural_map(chi_E, degree),
        "rho_D+E": verify_natural_map(rho_DE, degree, DE),
    }
    checks = {k: (None if v["ok"] else v["checks"]) for k, v in out.items()}
    checks["sum_identity"] = sum_identity_witness(rho_D, rho_DE, chi_E, D, degree)
    checks["half_identity"] = half_identity_witness(chi_E, degree)
    if oracle:
        checks["witness_route_rho"] = natural_maps_agree(rho_D, rho_chi_natural(D, multiplets, via="witness"), degree)
        checks["witness_route_chi"] = natural_maps_agree(chi_E, rho_chi_natural(E, multiplets, via="witness"), degree)
    return {"checks": checks, "ok": all(v is None for v in checks.values())}


# -- the ideal R̂ ---------------------------------------------------------------------------

@dataclass
class IdealFamily:
    rho_kernel: list
    chi_kernels: list
    hat: IdealSpec
    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(v is None for v in self.checks.values())


def _natural_kernel(h: HopfStructure, nats: Sequence[NaturalMaps], degree: int) -> list[AlgElement]:
    kb = _kernel_elements(h, degree)
    cols = {}
    for i, a in enumerate(kb):
        col: dict = {}
        for n_idx, nat in enumerate(nats):
            for w, c in nat(a).terms.items():
                vaxpy(col, {(n_idx, w): c})
        cols[i] = col
    out = []
    for rel in kernel(cols):
        acc: dict = {}
        for i, c in rel.items():
            vaxpy(acc, kb[i].terms, c)
        out.append(h.pres.element(acc))
    return out


def hat_R(family: Sequence, multiplets: MultipletTable, degree: int) -> IdealFamily:
    """ℛ_D ∩ ⋂_E 𝒫_E over the window, with D the first preconnection.

    Further preconnections D' contribute E = D' - D; supplied Delta entries
    are used directly.
    """
    family = list(family)
    pres_list = [x for x in family if isinstance(x, Preconnection)]
    if not family or not pres_list:
        raise BundleError("family needs at least one preconnection")
    D = pres_list[0]
    h = D.hor.hopf
    deltas = [x - D for x in pres_list[1:]] + [x for x in family if isinstance(x, Delta)]
    rho = rho_chi_natural(D, multiplets)
    chis = [rho_chi_natural(E, multiplets) for E in deltas]
    rho_ker = _natural_kernel(h, [rho], degree)
    chi_kers = [_natural_kernel(h, [c], degree) for c in chis]
    hat = _natural_kernel(h, [rho] + chis, degree)
    spec = IdealSpec(hat)
    checks = {}
    for label, nats, basis in [("R_D", [rho], rho_ker)] + [(f"P_{E.label}", [c], k) for E, c, k in zip(deltas, chis, chi_kers)]:
        checks[label] = _ideal_laws(h, nats[0], basis, degree)
    return IdealFamily(rho_ker, chi_kers, spec, checks)


def _ideal_laws(h: HopfStructure, nat: NaturalMaps, basis: Sequence[AlgElement], degree: int):
    A = h.pres
    gens = [A.gen(g.name) for g in A.generators]
    for b in basis:
        for x in gens:
            bx = b * x
            if bx.degree() <= degree and nat(bx):
                return {"law": "right_ideal", "element": repr(b)}
        ad: dict = {}
        for (u, v), c in h.adjoint(b).terms.items():
            for y, z in nat.word(u).terms.items():
                vaxpy(ad, {(y, v): c * z})
        if ad:
            return {"law": "ad_invariance", "element": repr(b)}
        if nat(h.antipode(b).star()):
            return {"law": "star", "element": repr(b)}
    return None


# -- presets ---------------------------------------------------------------------------------

BASE_GENERATORS = (
    Generator("p", 0, "p"),
    Generator("th", 1, "th", -1),
    Generator("ta", 1, "ta"),
)


def _base_rules():
    return [
        Rule(("p", "p"), ((ONE, ("p",)),)),
        Rule(("th", "th"), ()),
        Rule(("ta", "ta"), ()),
        Rule(("ta", "th"), ((-ONE, ("th", "ta")),)),
        Rule(("th", "p"), ((ONE, ("p", "th")),)),
        Rule(("ta", "p"), ((ONE, ("p", "ta")),)),
    ]


def two_point_base() -> Presentation:
    """Forms on the two-point space: idempotent p, odd th (anti-hermitian), odd ta (hermitian)."""
    return Presentation("two_point", BASE_GENERATORS, _base_rules())


def _base_differential(pres: Presentation) -> dict:
    # d p = 0, d th = th·ta, d ta = 0
    return {"p": pres.zero(), "th": pres.word("th", "ta"), "ta": pres.zero()}


def trivial_bundle(group: str | HopfStructure = "u1") -> GradedHorizontal:
    """hor = Ω_M ⊗ 𝒜 over the two-point base, F⋆ = id ⊗ φ."""
    h = preset(group) if isinstance(group, str) else group
    A = h.pres
    gens = list(BASE_GENERATORS) + [Generator(g.name, 0, g.star, g.star_sign) for g in A.generators]
    rules = _base_rules() + list(A.rules)
    for g in A.generators:
        for b in BASE_GENERATORS:
            rules.append(Rule((g.name, b.name), ((ONE, (b.name, g.name)),)))
    pres = Presentation(f"trivial_{h.name}", gens, rules)
    legs = (pres, A)
    table = {}
    for b in BASE_GENERATORS:
        table[b.name] = TensorElement(legs, {((b.name,), ()): ONE}, _normal=True)
    for g in A.generators:
        t = h.cop_table[g.name]
        table[g.name] = TensorElement(legs, {(u, v): c for (u, v), c in t.terms.items()})
    return GradedHorizontal(
        f"trivial_{h.name}",
        pres,
        h,
        table,
        base_generators=[b.name for b in BASE_GENERATORS],
        base_differential=_base_differential(pres),
        embed={g.name: g.name for g in A.generators},
    )


def hopf_fibration() -> GradedHorizontal:
    """Degree-0 bundle ℬ = polynomial functions on quantum SU(2), G = U(1)."""
    h_su = preset("su_q_2")
    h = preset("u1")
    B = h_su.pres
    A = h.pres
    legs = (B, A)
    proj = {"alpha": "z", "gamma": "z", "alpha*": "zi", "gamma*": "zi"}
    table = {g: TensorElement(legs, {((g,), (proj[g],)): ONE}, _normal=True) for g in proj}
    return GradedHorizontal("hopf_fibration", B, h, table)


def lambda_forms(hor: GradedHorizontal, params: Sequence) -> list[AlgElement]:
    """One anti-hermitian base one-form s1·p·th + s2·(1-p)·th per Lie functional."""
    p = hor.pres
    P = p.gen("p")
    TH = p.gen("th")
    out = []
    for k in range(len(hor.hopf.lie_functionals)):
        s1, s2 = (as_scalar(x) for x in params[2 * k : 2 * k + 2])
        out.append(s1 * P * TH + s2 * (1 - P) * TH)
    return out


def d_lambda(hor: GradedHorizontal, params: Sequence, label: str | None = None, forms: Sequence[AlgElement] | None = None) -> Preconnection:
    """D(φ⊗a) = d_Mφ⊗a + (-1)^{∂φ} Σ φ λ(a⁽¹⁾)⊗a⁽²⁾, λ(a) = Σ_k X_k(a) A_k."""
    h = hor.hopf
    if forms is None:
        if len(params) != 2 * len(h.lie_functionals):
            raise BundleError(f"expected {2 * len(h.lie_functionals)} parameters")
        forms = lambda_forms(hor, params)
    Xs = [h.eps_derivation(t) for t in h.lie_functionals]

    def lam(w):
        acc = hor.pres.zero()
        for X, F in zip(Xs, forms):
            x = X(w)
            if x:
                acc = acc + x * F
        return acc

    vals = {}
    for g in h.pres.generators:
        acc = hor.pres.zero()
        for (u, v), c in h.cop_table[g.name].terms.items():
            acc = acc + c * lam(u) * hor.embed(h.pres.element({v: ONE}))
        vals[g.name] = acc
    return extend_antiderivation(vals, hor, "preconnection", label or f"D{list(map(str, params))}")


def lambda_family(hor: GradedHorizontal) -> list[Preconnection]:
    """D_0 and one D per basis vector of the parameter space."""
    n = 2 * len(hor.hopf.lie_functionals)
    fam = [d_lambda(hor, [0] * n, "D0")]
    for i in range(n):
        params = [0] * n
        params[i] = 1
        fam.append(d_lambda(hor, params, f"D_e{i}"))
    return fam


def classical_reference(hor: GradedHorizontal, degree: int) -> IdealSpec:
    return classical_ideal(hor.hopf, None, degree)


BUNDLE_PRESETS: dict[str, Callable[[], GradedHorizontal]] = {
    "trivial_u1": lambda: trivial_bundle("u1"),
    "trivial_torus2": lambda: trivial_bundle("torus2"),
    "trivial_cyclic2": lambda: trivial_bundle("cyclic2"),
    "trivial_cyclic3": lambda: trivial_bundle("cyclic3"),
    "trivial_s3": lambda: trivial_bundle("s3"),
    "hopf_fibration": hopf_fibration,
}


def bundle_preset(name: str) -> GradedHorizontal:
    if name in BUNDLE_PRESETS:
        return BUNDLE_PRESETS[name]()
    if name.startswith("trivial_"):
        return trivial_bundle(name[len("trivial_") :])
    raise KeyError(f"unknown bundle preset {name!r}")


# -- JSON ------------------------------------------------------------------------------------

def element_from_wire(pres: Presentation, data) -> AlgElement:
    """``[[coeff, [letters...]], ...]`` or a plain scalar."""
    if not isinstance(data, list):
        return pres.scalar(parse_scalar(data))
    out: dict = {}
    for c, w in data:
        vaxpy(out, {tuple(w): parse_scalar(c)})
    return pres.element(out)


@dataclass
class BundleSpec:
    """A loaded bundle configuration: horizontal algebra plus preconnection tables."""

    hor: GradedHorizontal
    preconnections: list = field(default_factory=list)
    multiplets: MultipletTable | None = None

    @property
    def name(self) -> str:
        return self.hor.name

    @classmethod
    def from_json(cls, data: Mapping) -> "BundleSpec":
        if "preset" in data:
            hor = bundle_preset(data["preset"])
        else:
            h = preset(data["structure_group"])
            pres = Presentation.from_json(data["horizontal"] if "horizontal" in data else data["total_space"])
            table = {}
            for g, items in data["coaction"].items():
                t: dict = {}
                for c, u, v in items:
                    vaxpy(t, {(tuple(u), tuple(v)): parse_scalar(c)})
                table[g] = TensorElement((pres, h.pres), t)
            bd = {g: element_from_wire(pres, v) for g, v in data.get("base_differential", {}).items()}
            hor = GradedHorizontal(
                data.get("name", pres.name),
                pres,
                h,
                table,
                base_generators=data.get("base_generators", list(bd)),
                base_differential=bd,
                embed=data.get("embed"),
            )
        pcs = []
        for entry in data.get("preconnections", []):
            label = entry.get("label", f"D{len(pcs)}")
            if "params" in entry:
                pcs.append(d_lambda(hor, entry["params"], label))
            else:
                vals = {g: element_from_wire(hor.pres, v) for g, v in entry["values"].items()}
                pcs.append(extend_antiderivation(vals, hor, entry.get("kind", "preconnection"), label))
        return cls(hor, pcs)
