"""Left-covariant first-order calculi: quotients ker(ε)/R inside a window.

The space of left-invariant forms is realized on a basis of representatives
``r_i = w_i - ε(w_i)`` where the ``w_i`` are window words that are not pivots
of the reduced ideal span.  Two independent routes compute the projection:

* ``project_window`` reduces modulo the ideal span (needs the window);
* ``project`` folds over letters with ``π(ub) = π(u)∘b + ε(u)π(b)`` using
  only the per-generator ∘-tables, so it works on any element.

Agreement of the two routes on the window is one of the exactness checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .algebra import AlgElement, TensorElement, Word
from .hopf import HopfStructure
from .linalg import Echelon, TrackedEchelon, same_span, vaxpy, vscale
from .scalar import ONE, ZERO, parse_scalar, scalar_to_wire


class CalculusError(ValueError):
    """Raised when an ideal fails a structural condition; carries a witness."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class WindowOverflow(RuntimeError):
    """A product needed by a table leaves the truncation window."""


def element_to_json(a: AlgElement) -> list:
    return [[scalar_to_wire(c), list(w)] for w, c in sorted(a.terms.items(), key=lambda t: a.pres.order_key(t[0]))]


def element_from_json(pres, data) -> AlgElement:
    out: dict = {}
    for c, w in data:
        vaxpy(out, {tuple(w): parse_scalar(c)})
    return pres.element(out)


@dataclass
class IdealSpec:
    """Generators of a right ideal inside ker(ε)."""

    generators: list = field(default_factory=list)
    mode: str = "right"

    def to_json(self) -> dict:
        return {"generators": [element_to_json(g) for g in self.generators], "mode": self.mode}

    @classmethod
    def from_json(cls, pres, data: Mapping) -> "IdealSpec":
        mode = data.get("mode", "right")
        if mode != "right":
            raise ValueError("only right ideals are supported")
        return cls([element_from_json(pres, g) for g in data.get("generators", [])], mode)


def counit_kernel_basis(h: HopfStructure, degree: int) -> list[AlgElement]:
    """``w - ε(w)`` for every non-unit window word."""
    p = h.pres
    return [p.element({w: ONE, (): -h.counit_word(w)}) for w in p.window(degree) if w]


class InvariantFormSpace:
    """Ψ_inv = ker(ε)/R on a window of word length ``degree``."""

    def __init__(self, h: HopfStructure, ideal: IdealSpec, degree: int, *, check_stable: bool = True):
        if degree < 1:
            raise ValueError("window degree must be >= 1")
        self.h = h
        self.pres = p = h.pres
        self.degree = degree
        self.ideal_spec = ideal
        self.words = p.window(degree)
        for g in ideal.generators:
            if g.pres is not p:
                raise CalculusError("ideal generator from another algebra", g)
            if h.counit(g):
                raise CalculusError("ideal generator outside ker(ε)", g)
            if g.degree() > degree:
                raise CalculusError("ideal generator outside the window", g)
        self.ideal = self._closure(ideal.generators)
        piv = self.ideal.pivots()
        self.basis_words = [w for w in self.words if w and w not in piv]
        self.dim = len(self.basis_words)
        self.reps = [p.element({w: ONE, (): -h.counit_word(w)}) for w in self.basis_words]
        self._index = {w: i for i, w in enumerate(self.basis_words)}
        self._proj_cache: dict = {}
        self._gen_proj = {g.name: self.project_window(p.gen(g.name)) for g in p.generators}
        self._circ_gen = self._circ_tables()
        self.closed = all(col is not None for row in self._circ_gen for col in row.values())
        self._varpi = None
        self._star = None
        self.stable = None
        if check_stable:
            self.stable = self.stabilization()["stable"]

    # -- construction -----------------------------------------------------------
    def _closure(self, gens) -> Echelon:
        """Span of the right ideal generated by ``gens`` intersected with the window."""
        p = self.pres
        ech = Echelon(p.order_key)
        todo = []
        for g in gens:
            if ech.insert(g.terms):
                todo.append(g)
        gens_el = [p.gen(x.name) for x in p.generators]
        while todo:
            b = todo.pop()
            for x in gens_el:
                prod = b * x
                if prod and prod.degree() <= self.degree and ech.insert(prod.terms):
                    todo.append(prod)
        return ech

    def _circ_tables(self):
        p = self.pres
        tables = []
        for i, r in enumerate(self.reps):
            row = {}
            for g in p.generators:
                prod = r * p.gen(g.name)
                # overflowing entries are kept as None and only fail when used
                row[g.name] = self.project_window(prod) if prod.degree() <= self.degree else None
            tables.append(row)
        return tables

    def stabilization(self) -> dict:
        """Rebuild one degree higher and compare quotient dimensions."""
        try:
            up = InvariantFormSpace(self.h, self.ideal_spec, self.degree + 1, check_stable=False)
            dim_up = up.dim
        except WindowOverflow:
            dim_up = None
        return {"degree": self.degree, "dim": self.dim, "dim_next": dim_up, "stable": dim_up == self.dim}

    # -- projections ---------------------------------------------------------------
    def project_window(self, a: AlgElement) -> dict:
        """π(a) by reduction modulo the ideal span; ``a`` must lie in the window."""
        if a.degree() > self.degree:
            raise WindowOverflow(f"element of degree {a.degree()} outside window {self.degree}")
        h = self.h
        v = dict(a.terms)
        e = h.counit(a)
        if e:
            vaxpy(v, {(): -e})
        r = self.ideal.reduce(v)
        out = {}
        for w, c in r.items():
            if w:
                out[self._index[w]] = c
        return out

    def project_word(self, w: Word) -> dict:
        hit = self._proj_cache.get(w)
        if hit is not None:
            return hit
        if not w:
            res = {}
        elif len(w) == 1:
            res = self._gen_proj[w[0]]
        else:
            head = self.project_word(w[:-1])
            res = self.circ_word(head, w[-1:])
            e = self.h.counit_word(w[:-1])
            if e:
                res = dict(res)
                vaxpy(res, self._gen_proj[w[-1]], e)
        self._proj_cache[w] = res
        return res

    def project_any(self, a: AlgElement) -> dict:
        """Window reduction when possible, the fold otherwise."""
        if a.degree() <= self.degree:
            return self.project_window(a)
        return self.project(a)

    def project(self, a: AlgElement) -> dict:
        """π(a) for any element, via the module law on generators."""
        out: dict = {}
        for w, c in a.terms.items():
            vaxpy(out, self.project_word(w), c)
        return out

    # -- right module structure --------------------------------------------------------
    def circ_word(self, vec: Mapping, w: Word) -> dict:
        cur = dict(vec)
        for s in w:
            nxt: dict = {}
            for i, c in cur.items():
                col = self._circ_gen[i][s]
                if col is None:
                    raise WindowOverflow(
                        f"π({'·'.join(self.basis_words[i])})∘{s} leaves window {self.degree}"
                    )
                vaxpy(nxt, col, c)
            cur = nxt
        return cur

    def circ(self, vec: Mapping, a: AlgElement) -> dict:
        """ϑ∘a, with π(b)∘a = π(ba) - ε(b)π(a)."""
        out: dict = {}
        for w, c in a.terms.items():
            vaxpy(out, self.circ_word(vec, w), c)
        return out

    # -- coadjoint coaction -------------------------------------------------------------
    def ideal_basis(self) -> list[AlgElement]:
        return [self.pres.element(v) for v in self.ideal.basis()]

    def bicovariance_witness(self):
        """An ideal element b with (π⊗id)ad(b) != 0, or None."""
        for b in self.ideal_basis():
            t = self._pi_first_leg(self.h.adjoint(b))
            if t:
                return b
        return None

    def star_witness(self):
        """An ideal element b with κ(b)* outside the ideal, or None."""
        for b in self.ideal_basis():
            if self.project_any(self.h.antipode(b).star()):
                return b
        return None

    def _pi_first_leg(self, t: TensorElement) -> dict:
        out: dict = {}
        for (u, v), c in t.terms.items():
            pu = self.project_window(self.pres.element({u: ONE})) if len(u) <= self.degree else self.project_word(u)
            for j, x in pu.items():
                key = (j, v)
                y = out.get(key, ZERO) + c * x
                if y:
                    out[key] = y
                else:
                    out.pop(key, None)
        return out

    @property
    def varpi_table(self) -> list[dict]:
        if self._varpi is None:
            w = self.bicovariance_witness()
            if w is not None:
                raise CalculusError("ideal is not ad-invariant; ϖ is not defined", w)
            self._varpi = [self._pi_first_leg(self.h.adjoint(r)) for r in self.reps]
        return self._varpi

    def varpi(self, vec: Mapping) -> dict:
        """ϖ(ϑ) as ``{(basis index, word of 𝒜): coeff}``."""
        table = self.varpi_table
        out: dict = {}
        for i, c in vec.items():
            vaxpy(out, table[i], c)
        return out

    def varpi_legs(self, i: int) -> list[tuple[int, AlgElement]]:
        """ϖ(e_i) grouped as ``[(j, c_ji)]`` with ϖ(e_i) = Σ e_j ⊗ c_ji."""
        grouped: dict = {}
        for (j, w), c in self.varpi_table[i].items():
            grouped.setdefault(j, {})[w] = c
        return [(j, AlgElement(self.pres, t, _normal=True)) for j, t in sorted(grouped.items())]

    # -- star ---------------------------------------------------------------------------------
    @property
    def star_table(self) -> list[dict]:
        if self._star is None:
            w = self.star_witness()
            if w is not None:
                raise CalculusError("κ(R)* is not contained in R; no *-structure", w)
            self._star = [vscale(self.project_any(self.h.antipode(r).star()), -ONE) for r in self.reps]
        return self._star

    def star(self, vec: Mapping) -> dict:
        """π(a)* = -π(κ(a)*); scalars are real so the map is linear."""
        table = self.star_table
        out: dict = {}
        for i, c in vec.items():
            vaxpy(out, table[i], c)
        return out

    # -- verification -------------------------------------------------------------------------
    def verify(self) -> dict:
        """Covariance, module and exactness checks with witnesses."""
        p = self.pres
        h = self.h
        res: dict = {}
        b = self.bicovariance_witness()
        res["ad_invariance"] = None if b is None else repr(b)
        b = self.star_witness()
        res["star_stability"] = None if b is None else repr(b)
        if not self.closed:
            res["window_closed"] = "∘-tables leave the window; fold-based checks skipped"
            return {"checks": res, "ok": False}
        # both projection routes agree on the window
        bad = None
        for w in self.words:
            a = p.element({w: ONE})
            if self.project(a) != self.project_window(a):
                bad = list(w)
                break
        res["projection_routes"] = bad
        # kernel of π on ker ε equals the ideal span
        cols = {}
        kb = counit_kernel_basis(h, self.degree)
        for i, a in enumerate(kb):
            cols[i] = self.project(a)
        te = TrackedEchelon()
        rels = []
        for i, col in cols.items():
            rel = te.insert(col, i)
            if rel is not None:
                rels.append(rel)
        kernel_els = []
        for rel in rels:
            acc: dict = {}
            for i, c in rel.items():
                vaxpy(acc, kb[i].terms, c)
            kernel_els.append(acc)
        res["exactness"] = None if same_span(kernel_els, [v for v in self.ideal.basis()]) else "kernel of π differs from ideal span"
        res["surjectivity"] = None if te.rank == self.dim else f"rank {te.rank} != dim {self.dim}"
        # right-module law on the window
        bad = None
        for i, r in enumerate(self.reps):
            for w in self.words:
                prod = r * p.element({w: ONE})
                if prod.degree() > self.degree:
                    continue
                if self.circ_word({i: ONE}, w) != self.project_window(prod):
                    bad = {"basis": i, "word": list(w)}
                    break
            if bad:
                break
        res["module_law"] = bad
        if res["ad_invariance"] is None:
            res["coaction_laws"] = self._check_coaction()
            res["bimodule_law"] = self._check_bimodule()
        if res["star_stability"] is None:
            bad = None
            for i in range(self.dim):
                if self.star(self.star({i: ONE})) != {i: ONE}:
                    bad = i
                    break
            res["star_involution"] = bad
        return {"checks": res, "ok": all(v is None for v in res.values())}

    def _check_coaction(self):
        h = self.h
        for i in range(self.dim):
            v = self.varpi({i: ONE})
            # (id⊗ε)ϖ = id
            back: dict = {}
            for (j, w), c in v.items():
                e = h.counit_word(w)
                if e:
                    vaxpy(back, {j: c * e})
            if back != {i: ONE}:
                return {"law": "counit", "basis": i}
            # (ϖ⊗id)ϖ = (id⊗φ)ϖ
            left: dict = {}
            for (j, w), c in v.items():
                for (k, u), x in self.varpi({j: ONE}).items():
                    key = (k, u, w)
                    left[key] = left.get(key, ZERO) + c * x
            right: dict = {}
            for (j, w), c in v.items():
                for (u, w2), x in h.coproduct_word(w).terms.items():
                    key = (j, u, w2)
                    right[key] = right.get(key, ZERO) + c * x
            if {k: x for k, x in left.items() if x} != {k: x for k, x in right.items() if x}:
                return {"law": "coassociativity", "basis": i}
        return None

    def _check_bimodule(self):
        """ϖ(ϑ∘a) = Σ (ϑ_k∘a^(2)) ⊗ κ(a^(1)) c_k a^(3) on generators a."""
        h = self.h
        p = self.pres
        for i in range(self.dim):
            legs = self.varpi_legs(i)
            for g in p.generators:
                a = p.gen(g.name)
                left = self.varpi(self.circ({i: ONE}, a))
                right: dict = {}
                t3 = h.coproduct_iterate(a, 2)
                for (w1, w2, w3), c in t3.terms.items():
                    k1 = h.antipode_word(w1)
                    for j, cj in legs:
                        th = self.circ_word({j: ONE}, w2)
                        prod = k1 * cj * p.element({w3: ONE})
                        for k, x in th.items():
                            for u, y in prod.terms.items():
                                key = (k, u)
                                right[key] = right.get(key, ZERO) + c * x * y
                right = {k: v for k, v in right.items() if v}
                if left != right:
                    return {"basis": i, "generator": g.name}
        return None

    def describe(self) -> dict:
        return {
            "hopf": self.h.name,
            "window": self.degree,
            "dim": self.dim,
            "basis": ["·".join(w) for w in self.basis_words],
            "ideal_rank": self.ideal.rank,
            "stable": self.stable,
        }


def quotient_build(h: HopfStructure, ideal: IdealSpec, degree: int) -> InvariantFormSpace:
    return InvariantFormSpace(h, ideal, degree)


def full_ideal(h: HopfStructure, degree: int) -> IdealSpec:
    return IdealSpec(counit_kernel_basis(h, degree))


def check_eps_derivation(h: HopfStructure, table: Mapping, degree: int):
    """First window pair (u, v) violating X(uv) = ε(u)X(v) + X(u)ε(v), or None."""
    X = h.eps_derivation(table)
    p = h.pres
    words = p.window(degree)

    def Xel(terms):
        tot = ZERO
        for w, c in terms.items():
            tot = tot + c * X(w)
        return tot

    for u in words:
        for v in words:
            if len(u) + len(v) > degree:
                continue
            lhs = Xel(p.nf_word(u + v))
            rhs = h.counit_word(u) * X(v) + X(u) * h.counit_word(v)
            if lhs != rhs:
                return (u, v)
    # consistency with the relations: X must vanish on lhs - rhs
    for r in p.rules:
        if X(r.lhs) != Xel(r.rhs_dict()):
            return (r.lhs, "rule")
    return None


def classical_ideal(h: HopfStructure, lie_functionals: Sequence[Mapping] | None, degree: int) -> IdealSpec:
    """{a ∈ ker ε ∩ window : (X⊗id)ad(a) = 0 for all supplied X}."""
    if lie_functionals is None:
        lie_functionals = h.lie_functionals
    funcs = []
    for table in lie_functionals:
        bad = check_eps_derivation(h, table, degree)
        if bad is not None:
            raise CalculusError("functional is not an ε-derivation", bad)
        funcs.append(h.eps_derivation(table))
    kb = counit_kernel_basis(h, degree)
    te = TrackedEchelon()
    rels = []
    for i, a in enumerate(kb):
        col: dict = {}
        if funcs:
            ad = h.adjoint(a)
            for k, X in enumerate(funcs):
                for (u, v), c in ad.terms.items():
                    x = X(u)
                    if x:
                        vaxpy(col, {(k, v): c * x})
        rel = te.insert(col, i)
        if rel is not None:
            rels.append(rel)
    gens = []
    for rel in Echelon().extend(rels).basis():
        acc: dict = {}
        for i, c in rel.items():
            vaxpy(acc, kb[i].terms, c)
        gens.append(h.pres.element(acc))
    return IdealSpec(gens)


def circ(space: InvariantFormSpace, vec, a):
    return space.circ(vec, a)


def coadjoint_varpi(space: InvariantFormSpace, vec):
    return space.varpi(vec)


def star_inv(space: InvariantFormSpace, vec):
    return space.star(vec)


def verify_calculus_covariance(space: InvariantFormSpace) -> dict:
    return space.verify()


def group_calculus(h: HopfStructure, subset: Sequence[str]) -> IdealSpec:
    """Left-covariant calculus on a finite group with invariant forms labelled by ``subset``.

    R is spanned by the deltas of elements outside ``subset`` and the identity;
    the calculus is bicovariant iff ``subset`` is closed under conjugation.
    """
    grp = h.group
    bad = [g for g in subset if g not in grp["elements"] or g == grp["identity"]]
    if bad:
        raise CalculusError("subset must consist of non-identity group elements", bad)
    keep = set(subset) | {grp["identity"]}
    return IdealSpec([h.delta(g) for g in grp["elements"] if g not in keep])
