"""Braided flips, antisymmetrizers and the envelope algebras of a calculus.

Tensors over Ψ_inv are dicts keyed by tuples of basis indices.  The flip
acts on two neighbouring legs; a permutation ``perm`` (one-line, 0-based)
acts by moving leg ``i`` to position ``perm[i]``, so ``P_{πρ} = P_π P_ρ``.
Braided lifts ``σ_π`` are products of flips along reduced words: the main
route peels right descents, the oracle route peels left descents.
"""

from __future__ import annotations

import os
from itertools import permutations, product
from math import factorial
from typing import Mapping, Sequence

from .algebra import Word
from .fodc import CalculusError, InvariantFormSpace
from .linalg import Echelon, LinMap, bareiss_rank, tensor_maps, vaxpy, vscale
from .scalar import ONE, ZERO, scalar_to_wire

DEFAULT_BUDGET = 5


class BudgetError(ValueError):
    """Tensor degree beyond the factorial budget."""


def budget() -> int:
    raw = os.environ.get("QPB_BUDGET")
    return int(raw) if raw else DEFAULT_BUDGET


def _check_budget(n: int):
    b = budget()
    if n > b:
        raise BudgetError(f"degree {n} exceeds antisymmetrizer budget {b} (set QPB_BUDGET)")


# -- permutations -------------------------------------------------------------------

def compose(p: Sequence[int], r: Sequence[int]) -> tuple:
    """(p r)(i) = p(r(i))."""
    return tuple(p[r[i]] for i in range(len(r)))


def inverse(p: Sequence[int]) -> tuple:
    out = [0] * len(p)
    for i, x in enumerate(p):
        out[x] = i
    return tuple(out)


def transposition(n: int, i: int) -> tuple:
    s = list(range(n))
    s[i], s[i + 1] = s[i + 1], s[i]
    return tuple(s)


def sign(p: Sequence[int]) -> int:
    inv = sum(1 for i in range(len(p)) for j in range(i + 1, len(p)) if p[i] > p[j])
    return -1 if inv % 2 else 1


def reduced_word(p: Sequence[int], side: str = "right") -> list[int]:
    """Letters ``i`` with ``p = s_{i1} s_{i2} ...`` of minimal length.

    ``right`` strips right descents (p(i) > p(i+1)); ``left`` strips left
    descents (p⁻¹(i) > p⁻¹(i+1)).  Both give reduced words, usually different.
    """
    p = tuple(p)
    n = len(p)
    word: list[int] = []
    if side == "right":
        while True:
            i = next((i for i in range(n - 1) if p[i] > p[i + 1]), None)
            if i is None:
                break
            word.append(i)
            p = compose(p, transposition(n, i))
        return word[::-1]
    if side == "left":
        while True:
            pi = inverse(p)
            i = next((i for i in range(n - 1) if pi[i] > pi[i + 1]), None)
            if i is None:
                break
            word.append(i)
            p = compose(transposition(n, i), p)
        return word
    raise ValueError(side)


def shuffles(k: int, l: int) -> list[tuple]:
    """Permutations increasing on ``0..k-1`` and on ``k..k+l-1``."""
    n = k + l
    out = []
    for pos in _combinations(n, k):
        rest = [i for i in range(n) if i not in pos]
        out.append(tuple(pos) + tuple(rest))
    return out


def _combinations(n, k):
    from itertools import combinations

    return combinations(range(n), k)


def apply_perm_keys(perm: Sequence[int], v: Mapping) -> dict:
    """Unbraided P_π on tuple-keyed tensors."""
    out = {}
    for key, c in v.items():
        new = [None] * len(key)
        for i, x in enumerate(key):
            new[perm[i]] = x
        out[tuple(new)] = c
    return out


# -- braid operator ---------------------------------------------------------------------

class BraidOperator:
    """σ on Ψ⊗Ψ in a fixed basis ``range(dim)``, with its lifts to Ψ^{⊗n}."""

    def __init__(self, dim: int, sigma: LinMap, space: InvariantFormSpace | None = None, label: str = ""):
        self.dim = dim
        self.sigma = sigma
        self.space = space
        self.label = label
        self._local: dict = {}
        self._perm_cache: dict = {}
        self._A: dict = {}

    @classmethod
    def from_space(cls, space: InvariantFormSpace) -> "BraidOperator":
        """σ(e_i⊗e_j) = Σ_k e_k ⊗ (e_i∘c_kj) where ϖ(e_j) = Σ_k e_k⊗c_kj."""
        n = space.dim
        cols = {}
        for i in range(n):
            for j in range(n):
                col: dict = {}
                for k, c in space.varpi_legs(j):
                    for m, x in space.circ({i: ONE}, c).items():
                        vaxpy(col, {(k, m): x})
                cols[(i, j)] = col
        return cls(n, LinMap(cols, basis_keys(n, 2)), space, space.h.name)

    @classmethod
    def flip(cls, dim: int) -> "BraidOperator":
        cols = {(i, j): {(j, i): ONE} for i in range(dim) for j in range(dim)}
        return cls(dim, LinMap(cols, basis_keys(dim, 2)), None, f"flip{dim}")

    def corrupted(self, key, scale=-ONE) -> "BraidOperator":
        """Copy with one column entry multiplied by ``scale``; ``key = (col, row)``."""
        col, row = key
        cols = {k: dict(v) for k, v in self.sigma.cols.items()}
        cols[col][row] = cols[col][row] * scale
        return BraidOperator(self.dim, LinMap(cols, self.sigma.domain), self.space, self.label + "~")

    # -- lifts -------------------------------------------------------------------------
    def keys(self, n: int) -> list[tuple]:
        return basis_keys(self.dim, n)

    def local(self, n: int, i: int) -> LinMap:
        """σ acting on legs i, i+1 of Ψ^{⊗n}."""
        hit = self._local.get((n, i))
        if hit is not None:
            return hit
        cols = {}
        for key in self.keys(n):
            col = {}
            for k2, c in self.sigma.cols.get(key[i : i + 2], {}).items():
                col[key[:i] + k2 + key[i + 2 :]] = c
            cols[key] = col
        m = LinMap(cols, self.keys(n))
        self._local[(n, i)] = m
        return m

    def sigma_word(self, perm: Sequence[int], side: str = "right") -> LinMap:
        """σ_π through a reduced word; ``side`` picks the decomposition."""
        perm = tuple(perm)
        n = len(perm)
        if side == "right":
            hit = self._perm_cache.get(perm)
            if hit is not None:
                return hit
        m = LinMap.identity(self.keys(n))
        for i in reduced_word(perm, side):
            m = m @ self.local(n, i)
        if side == "right":
            self._perm_cache[perm] = m
        return m

    def _all_lifts(self, n: int) -> dict:
        """σ_π for every π ∈ S_n, built by length with σ_π = σ_{πs_i}σ_i."""
        ident = tuple(range(n))
        out = {ident: LinMap.identity(self.keys(n))}
        frontier = [ident]
        while frontier:
            nxt = []
            for p in frontier:
                for i in range(n - 1):
                    if p[i] < p[i + 1]:
                        w = compose(p, transposition(n, i))
                        if w not in out:
                            out[w] = out[p] @ self.local(n, i)
                            nxt.append(w)
            frontier = nxt
        self._perm_cache.update(out)
        return out

    # -- antisymmetrizers --------------------------------------------------------------
    def antisymmetrizer(self, n: int) -> LinMap:
        """A_n = Σ_π sgn(π) σ_π."""
        _check_budget(n)
        hit = self._A.get(n)
        if hit is not None:
            return hit
        keys = self.keys(n)
        if n <= 1:
            res = LinMap.identity(keys)
        else:
            acc = {k: {} for k in keys}
            for p, m in self._all_lifts(n).items():
                sg = ONE if sign(p) > 0 else -ONE
                for k, col in m.cols.items():
                    vaxpy(acc[k], col, sg)
            res = LinMap(acc, keys)
        self._A[n] = res
        return res

    def antisymmetrizer_oracle(self, n: int) -> LinMap:
        """Same sum assembled from left-descent words, no caching."""
        _check_budget(n)
        keys = self.keys(n)
        acc = {k: {} for k in keys}
        for p in permutations(range(n)):
            m = self.sigma_word(p, side="left")
            sg = ONE if sign(p) > 0 else -ONE
            for k, col in m.cols.items():
                vaxpy(acc[k], col, sg)
        return LinMap(acc, keys)

    def shuffle_antisymmetrizer(self, k: int, l: int) -> LinMap:
        """A_kl = Σ over (k,l)-shuffles π of sgn(π) σ_{π⁻¹}."""
        n = k + l
        _check_budget(n)
        keys = self.keys(n)
        acc = {x: {} for x in keys}
        for p in shuffles(k, l):
            m = self.sigma_word(inverse(p))
            sg = ONE if sign(p) > 0 else -ONE
            for x, col in m.cols.items():
                vaxpy(acc[x], col, sg)
        return LinMap(acc, keys)

    def antisymmetrizer_kind(self, n: int, kind="total") -> LinMap:
        if kind == "total":
            return self.antisymmetrizer(n)
        k, l = kind
        if k + l != n:
            raise ValueError("shuffle split must add up to n")
        return self.shuffle_antisymmetrizer(k, l)

    def exterior_dim(self, n: int) -> int:
        return self.antisymmetrizer(n).rank()

    def exterior_dim_oracle(self, n: int) -> int:
        return bareiss_rank(self.antisymmetrizer_oracle(n).cols.values())

    def vee_relations(self, n: int) -> list[dict]:
        """Basis of S^∨_n = ker A_n."""
        return self.antisymmetrizer(n).kernel()

    # -- checks ----------------------------------------------------------------------
    def braid_witness(self):
        """First degree-3 basis key where the braid relation fails, or None."""
        s1, s2 = self.local(3, 0), self.local(3, 1)
        return (s1 @ s2 @ s1).difference_witness(s2 @ s1 @ s2)

    def inverse_witness(self):
        """σ must be bijective: rank check on Ψ⊗Ψ."""
        r = self.sigma.rank()
        return None if r == self.dim ** 2 else {"rank": r, "expected": self.dim ** 2}

    def factorization_witness(self, n_max: int):
        for n in range(2, n_max + 1):
            for k in range(1, n):
                l = n - k
                lhs = self.antisymmetrizer(n)
                rhs = tensor_maps(self.antisymmetrizer(k), self.antisymmetrizer(l)) @ self.shuffle_antisymmetrizer(k, l)
                w = lhs.difference_witness(rhs)
                if w is not None:
                    return {"k": k, "l": l, "key": list(w)}
        return None

    def decomposition_witness(self, n_max: int, rng=None, samples: int = 12):
        """σ_π from right and left reduced words must agree."""
        for n in range(2, n_max + 1):
            perms = list(permutations(range(n)))
            if rng is not None and len(perms) > samples:
                perms = rng.sample(perms, samples)
            for p in perms:
                a = self.sigma_word(p, "right")
                b = self.sigma_word(p, "left")
                if a != b:
                    return {"perm": list(p)}
        return None

    def star_witness(self):
        """σTσ = T with T(e_i⊗e_j) = e_j*⊗e_i*."""
        sp = self.space
        if sp is None:
            star = lambda i: {i: ONE}
        else:
            star = lambda i: sp.star({i: ONE})
        cols = {}
        for (i, j) in self.keys(2):
            col: dict = {}
            for a, x in star(j).items():
                for b, y in star(i).items():
                    vaxpy(col, {(a, b): x * y})
            cols[(i, j)] = col
        T = LinMap(cols, self.keys(2))
        return (self.sigma @ T @ self.sigma).difference_witness(T)

    def equivariance_witness(self):
        """(σ⊗id)ϖ₂ = ϖ₂σ with ϖ₂ the diagonal coaction on Ψ⊗Ψ."""
        sp = self.space
        if sp is None:
            return None
        pres = sp.pres

        def varpi2(v):
            out: dict = {}
            for (i, j), c in v.items():
                for k, ck in sp.varpi_legs(i):
                    for m, cm in sp.varpi_legs(j):
                        prod = ck * cm
                        for w, x in prod.terms.items():
                            vaxpy(out, {((k, m), w): c * x})
            return out

        for key in self.keys(2):
            lhs: dict = {}
            for (pair, w), c in varpi2({key: ONE}).items():
                for k2, x in self.sigma.cols.get(pair, {}).items():
                    vaxpy(lhs, {(k2, w): c * x})
            rhs = varpi2(self.sigma.column(key))
            if lhs != rhs:
                return list(key)
        return None

    def verify(self, n_max: int = 4, rng=None) -> dict:
        res = {
            "bijective": self.inverse_witness(),
            "braid_relation": self.braid_witness(),
        }
        if res["braid_relation"] is None:
            res["decomposition_independence"] = self.decomposition_witness(min(n_max, budget()), rng)
            res["factorization"] = self.factorization_witness(min(n_max, budget()))
        res["star_compatibility"] = self.star_witness()
        res["coaction_equivariance"] = self.equivariance_witness()
        return {"checks": res, "ok": all(v is None for v in res.values())}


def basis_keys(dim: int, n: int) -> list[tuple]:
    return [tuple(k) for k in product(range(dim), repeat=n)]


def matrix_dump(m: LinMap, rows: Sequence | None = None) -> dict:
    """{rows, cols, entries: [[i, j, scalar]]} with positions in sorted key order."""
    cols = sorted(m.domain)
    rows = sorted(rows) if rows is not None else cols
    ri = {k: i for i, k in enumerate(rows)}
    ci = {k: j for j, k in enumerate(cols)}
    entries = sorted((ri[r], ci[c], x) for r, c, x in m.entries())
    return {
        "rows": len(rows),
        "cols": len(cols),
        "entries": [[i, j, scalar_to_wire(x)] for i, j, x in entries],
    }


def sigma(braid: BraidOperator, t: Mapping) -> dict:
    return braid.sigma.apply(t)


def sigma_word(braid: BraidOperator, perm: Sequence[int]) -> LinMap:
    if braid.braid_witness() is not None:
        raise CalculusError("braid relation fails; σ_π is not well defined")
    return braid.sigma_word(perm)


def antisymmetrizer(braid: BraidOperator, n: int, kind="total") -> LinMap:
    return braid.antisymmetrizer_kind(n, kind)


def exterior_dim(braid: BraidOperator, n: int) -> int:
    return braid.exterior_dim(n)


def verify_braid_identities(space: InvariantFormSpace, n_max: int = 4) -> dict:
    return BraidOperator.from_space(space).verify(n_max)


# -- envelope algebras ----------------------------------------------------------------

VARIANTS = ("tensor", "wedge", "vee")


class EnvelopeSpace:
    """Ψ_inv^{⊗}/I graded by tensor degree up to ``n_max``.

    ``wedge``: I generated by Q = span{π(a⁽¹⁾)⊗π(a⁽²⁾) : a ∈ R∩window}.
    ``vee``: I_n = ker A_n.  ``tensor``: I = 0.
    Elements are dicts keyed by index tuples, always stored reduced.
    """

    def __init__(self, space: InvariantFormSpace, variant: str, n_max: int, braid: BraidOperator | None = None):
        if variant not in VARIANTS:
            raise ValueError(f"unknown envelope variant {variant!r}")
        self.space = space
        self.variant = variant
        self.n_max = n_max
        self.dim1 = space.dim
        self.braid = braid
        if variant == "vee" and braid is None:
            self.braid = BraidOperator.from_space(space)
        self.rel: dict[int, Echelon] = {}
        self._d1 = None
        self._build()

    def _quadratic(self) -> list[dict]:
        sp = self.space
        h = sp.h
        out = []
        for b in sp.ideal_basis():
            t: dict = {}
            for (u, v), c in h.coproduct(b).terms.items():
                if not u or not v:
                    continue  # π(1) = 0
                for i, x in sp.project_word(u).items():
                    for j, y in sp.project_word(v).items():
                        vaxpy(t, {(i, j): c * x * y})
            if t:
                out.append(t)
        return out

    def _build(self):
        d = self.dim1
        for n in range(0, self.n_max + 1):
            ech = Echelon()
            if self.variant == "wedge" and n >= 2:
                if n == 2:
                    self.Q = Echelon().extend(self._quadratic())
                for i in range(n - 1):
                    for left in basis_keys(d, i):
                        for right in basis_keys(d, n - 2 - i):
                            for qv in self.Q.basis():
                                ech.insert({left + k + right: c for k, c in qv.items()})
            elif self.variant == "vee" and n >= 2:
                _check_budget(n)
                ech.extend(self.braid.vee_relations(n))
            self.rel[n] = ech

    # -- structure ----------------------------------------------------------------------
    def basis(self, n: int) -> list[tuple]:
        piv = self.rel[n].pivots()
        return [k for k in basis_keys(self.dim1, n) if k not in piv]

    def dim(self, n: int) -> int:
        return len(basis_keys(self.dim1, n)) - self.rel[n].rank

    def dims(self) -> list[int]:
        return [self.dim(n) for n in range(self.n_max + 1)]

    def reduce(self, v: Mapping) -> dict:
        """Normal form; components above ``n_max`` are kept unreduced."""
        by_deg: dict = {}
        for k, c in v.items():
            by_deg.setdefault(len(k), {})[k] = c
        out = {}
        for n, part in by_deg.items():
            if n in self.rel:
                part = self.rel[n].reduce(part)
            out.update(part)
        return out

    def mul(self, a: Mapping, b: Mapping) -> dict:
        out: dict = {}
        for k1, x in a.items():
            for k2, y in b.items():
                vaxpy(out, {k1 + k2: x * y})
        return self.reduce(out)

    def contains_relation(self, v: Mapping) -> bool:
        return not self.reduce(v)

    # -- differential ---------------------------------------------------------------------
    def d_generator(self, i: int) -> dict:
        """d e_i = -Σ π(r_i⁽¹⁾)⊗π(r_i⁽²⁾)."""
        if self._d1 is None:
            sp = self.space
            h = sp.h
            table = []
            for r in sp.reps:
                t: dict = {}
                for (u, v), c in h.coproduct(r).terms.items():
                    if not u or not v:
                        continue
                    for a, x in sp.project_word(u).items():
                        for b, y in sp.project_word(v).items():
                            vaxpy(t, {(a, b): -c * x * y})
                table.append(t)
            self._d1 = table
        return self._d1[i]

    def d_raw(self, v: Mapping) -> dict:
        """Antiderivation on the tensor level, no reduction."""
        out: dict = {}
        for key, c in v.items():
            for j, i in enumerate(key):
                sg = c if j % 2 == 0 else -c
                for k2, x in self.d_generator(i).items():
                    vaxpy(out, {key[:j] + k2 + key[j + 1 :]: sg * x})
        return out

    def d(self, v: Mapping) -> dict:
        if self.variant == "vee":
            w = self.d_stability_witness()
            if w is not None:
                raise CalculusError("ker A is not d-stable in the window; no differential on Ψ^∨", w)
        return self.reduce(self.d_raw(v))

    # -- right action, coaction, star -------------------------------------------------------
    def circ_word(self, v: Mapping, w: Word) -> dict:
        """(η₁…η_n)∘a = Σ (η₁∘a⁽¹⁾)…(η_n∘a⁽ⁿ⁾) for a word a."""
        out: dict = {}
        for key, c in v.items():
            vaxpy(out, self._circ_key(key, w), c)
        return self.reduce(out)

    def _circ_key(self, key: tuple, w: Word) -> dict:
        """Unreduced (e_{k1}…e_{kn})∘w, peeling the first leg."""
        cache = self.__dict__.setdefault("_circ_cache", {})
        hit = cache.get((key, w))
        if hit is not None:
            return hit
        sp = self.space
        if not key:
            e = sp.h.counit_word(w)
            res = {(): e} if e else {}
        elif len(key) == 1:
            res = {(m,): x for m, x in sp.circ_word({key[0]: ONE}, w).items()}
        else:
            res = {}
            for (a, b), x in sp.h.coproduct_word(w).terms.items():
                head = sp.circ_word({key[0]: ONE}, a)
                if not head:
                    continue
                tail = self._circ_key(key[1:], b)
                for m, y in head.items():
                    for k2, z in tail.items():
                        vaxpy(res, {(m,) + k2: x * y * z})
        cache[(key, w)] = res
        return res

    def circ(self, v: Mapping, a) -> dict:
        out: dict = {}
        for w, c in a.terms.items():
            vaxpy(out, self.circ_word(v, w), c)
        return out

    def varpi(self, v: Mapping) -> dict:
        """Multiplicative extension of ϖ: keys ``(index tuple, word)``."""
        sp = self.space
        pres = sp.pres
        out: dict = {}
        for key, c in v.items():
            cur = [((), pres.scalar(c))]
            for i in key:
                nxt = []
                legs = sp.varpi_legs(i)
                for k0, a0 in cur:
                    for j, cj in legs:
                        nxt.append((k0 + (j,), a0 * cj))
                cur = nxt
            for k0, a0 in cur:
                for w, x in a0.terms.items():
                    vaxpy(out, {(k0, w): x})
        # reduce the Ψ-legs per word
        grouped: dict = {}
        for (k0, w), x in out.items():
            grouped.setdefault(w, {})[k0] = x
        res: dict = {}
        for w, vec in grouped.items():
            for k0, x in self.reduce(vec).items():
                res[(k0, w)] = x
        return res

    def star(self, v: Mapping) -> dict:
        """(e_{i1}…e_{in})* = (-1)^{n(n-1)/2} e_{in}*…e_{i1}*."""
        sp = self.space
        out: dict = {}
        for key, c in v.items():
            n = len(key)
            sg = -c if (n * (n - 1) // 2) % 2 else c
            acc = {(): sg}
            for i in reversed(key):
                si = sp.star({i: ONE})
                nxt: dict = {}
                for k0, y in acc.items():
                    for m, z in si.items():
                        vaxpy(nxt, {k0 + (m,): y * z})
                acc = nxt
            vaxpy(out, acc)
        return self.reduce(out)

    # -- checks -------------------------------------------------------------------------------
    def relation_basis(self, n: int) -> list[dict]:
        return self.rel[n].basis() if n in self.rel else []

    def d_stability_witness(self):
        for n in range(2, self.n_max):
            for r in self.relation_basis(n):
                if self.reduce(self.d_raw(r)):
                    return {"degree": n, "relation": _show(r)}
        return None

    def d_square_witness(self):
        top = self.n_max - 2
        for n in range(1, top + 1):
            for k in self.basis(n):
                if self.reduce(self.d_raw(self.reduce(self.d_raw({k: ONE})))):
                    return list(k)
        return None

    def circ_stability_witness(self):
        pres = self.space.pres
        for n in range(2, self.n_max + 1):
            for r in self.relation_basis(n):
                for g in pres.generators:
                    if self.circ_word(r, (g.name,)):
                        return {"degree": n, "generator": g.name, "relation": _show(r)}
        return None

    def star_stability_witness(self):
        for n in range(2, self.n_max + 1):
            for r in self.relation_basis(n):
                if self.star(r):
                    return {"degree": n, "relation": _show(r)}
        return None

    def varpi_stability_witness(self):
        for n in range(2, self.n_max + 1):
            for r in self.relation_basis(n):
                if self.varpi(r):
                    return {"degree": n, "relation": _show(r)}
        return None

    def verify(self) -> dict:
        res = {
            "d_stability": self.d_stability_witness(),
            "circ_stability": self.circ_stability_witness(),
            "star_stability": self.star_stability_witness(),
            "coaction_stability": self.varpi_stability_witness(),
        }
        if res["d_stability"] is None:
            res["d_squared"] = self.d_square_witness()
        return {"checks": res, "ok": all(v is None for v in res.values())}


def _show(v: Mapping) -> list:
    return [[list(k), str(c)] for k, c in sorted(v.items())]


def surjection_witness(wedge: EnvelopeSpace, vee: EnvelopeSpace):
    """∧ → ∨ is well defined degreewise iff I^∧_n ⊆ I^∨_n; surjective by construction."""
    for n in range(2, min(wedge.n_max, vee.n_max) + 1):
        for r in wedge.relation_basis(n):
            if vee.rel[n].reduce(r):
                return {"degree": n, "relation": _show(r)}
        if wedge.dim(n) < vee.dim(n):
            return {"degree": n, "dims": [wedge.dim(n), vee.dim(n)]}
    return None


def envelope_space(space: InvariantFormSpace, variant: str, n_max: int) -> EnvelopeSpace:
    return EnvelopeSpace(space, variant, n_max)


def envelope_differential(env: EnvelopeSpace, x: Mapping) -> dict:
    return env.d(x)
