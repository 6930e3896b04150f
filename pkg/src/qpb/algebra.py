"""Finitely presented graded *-algebras over Q(q) with rewriting normal forms.

A word is a tuple of generator names; the empty tuple is the unit.  Words
are compared degree-lexicographically using the generator order of their
presentation.  Every rule rewrites a word into a combination of strictly
smaller words, so rewriting terminates; normal forms are unique when the rule
set is confluent, which :meth:`Presentation.local_confluence` checks on all
critical pairs up to a length bound.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping

from .linalg import vaxpy, vscale
from .scalar import (
    ONE,
    ZERO,
    RatFunc,
    format_scalar,
    parse_scalar,
    scalar_to_wire,
    specialize_scalar,
)

Word = tuple


class AlgebraError(ValueError):
    pass


class UnknownGenerator(AlgebraError):
    pass


class PresentationMismatch(AlgebraError):
    pass


class RewriteBudgetError(RuntimeError):
    """Raised when normalization does not terminate within the step budget."""


@dataclass(frozen=True)
class Generator:
    name: str
    grade: int = 0
    star: str | None = None
    star_sign: int = 1  # x* = star_sign * partner


@dataclass(frozen=True)
class Rule:
    lhs: Word
    rhs: tuple  # ((coeff, word), ...)

    def rhs_dict(self) -> dict:
        out: dict = {}
        for c, w in self.rhs:
            vaxpy(out, {w: c})
        return out


class Presentation:
    """Generators, grades, involution data and a rewrite system."""

    def __init__(
        self,
        name: str,
        generators: Iterable[Generator],
        rules: Iterable[Rule] = (),
        *,
        check_order: bool = True,
        budget: int = 200_000,
    ):
        self.name = name
        self.generators = tuple(generators)
        self.index = {g.name: i for i, g in enumerate(self.generators)}
        if len(self.index) != len(self.generators):
            raise AlgebraError("duplicate generator names")
        self.gen_by_name = {g.name: g for g in self.generators}
        self.rules = tuple(rules)
        self.budget = budget
        self._rule_map: dict = {}
        for r in self.rules:
            for s in r.lhs:
                self._check_symbol(s)
            for _, w in r.rhs:
                for s in w:
                    self._check_symbol(s)
            if check_order:
                for c, w in r.rhs:
                    if c and self.order_key(w) >= self.order_key(r.lhs):
                        raise AlgebraError(
                            f"rule {r.lhs} -> {w} does not decrease the word order"
                        )
            self._rule_map.setdefault(r.lhs, r.rhs_dict())
        self._lengths = sorted({len(lhs) for lhs in self._rule_map})
        self._nf_cache: dict = {}
        self._star_cache: dict = {}
        self._steps = 0
        self._specialized: dict = {}
        self.graded = any(g.grade for g in self.generators)

    # -- basics ------------------------------------------------------------
    def __repr__(self):
        return f"Presentation({self.name!r}, {[g.name for g in self.generators]})"

    def _check_symbol(self, s):
        if s not in self.index:
            raise UnknownGenerator(f"unknown generator symbol {s!r} in {self.name}")

    def order_key(self, word: Word):
        idx = self.index
        return (len(word), tuple(idx[s] for s in word))

    def word_grade(self, word: Word) -> int:
        g = self.gen_by_name
        return sum(g[s].grade for s in word)

    # -- rewriting ---------------------------------------------------------
    def _find(self, word: Word):
        rm = self._rule_map
        n = len(word)
        for i in range(n):
            for L in self._lengths:
                if i + L > n:
                    break
                if word[i : i + L] in rm:
                    return i, L
        return None

    def is_normal(self, word: Word) -> bool:
        return self._find(word) is None

    def _nf(self, word: Word) -> dict:
        hit = self._nf_cache.get(word)
        if hit is not None:
            return hit
        self._steps += 1
        if self._steps > self.budget:
            raise RewriteBudgetError(f"rewrite budget exceeded in {self.name} at {word}")
        found = self._find(word)
        if found is None:
            res = {word: ONE}
        else:
            i, L = found
            rhs = self._rule_map[word[i : i + L]]
            res = {}
            pre, post = word[:i], word[i + L :]
            for w, c in rhs.items():
                vaxpy(res, self._nf(pre + w + post), c)
        self._nf_cache[word] = res
        return res

    def nf_word(self, word: Word) -> dict:
        for s in word:
            if s not in self.index:
                raise UnknownGenerator(f"unknown generator symbol {s!r} in {self.name}")
        self._steps = 0
        try:
            return self._nf(tuple(word))
        except RecursionError as exc:
            raise RewriteBudgetError(f"rewrite budget exceeded in {self.name}") from exc

    def normalize(self, terms: Mapping) -> dict:
        out: dict = {}
        for w, c in terms.items():
            if c:
                vaxpy(out, self.nf_word(w), c)
        return out

    # -- element constructors ---------------------------------------------
    def element(self, terms: Mapping | None = None) -> "AlgElement":
        return AlgElement(self, terms or {})

    def gen(self, name: str) -> "AlgElement":
        self._check_symbol(name)
        return AlgElement(self, {(name,): ONE})

    def word(self, *names: str) -> "AlgElement":
        return AlgElement(self, {tuple(names): ONE})

    def one(self) -> "AlgElement":
        return AlgElement(self, {(): ONE}, _normal=True)

    def zero(self) -> "AlgElement":
        return AlgElement(self, {}, _normal=True)

    def scalar(self, c) -> "AlgElement":
        return AlgElement(self, {(): c} if c else {}, _normal=True)

    # -- star ---------------------------------------------------------------
    def star_word(self, word: Word) -> dict:
        """Normal form of ``word*``; graded reversal with generator signs."""
        hit = self._star_cache.get(word)
        if hit is not None:
            return hit
        sign = 1
        out = []
        grades = []
        for s in word:
            g = self.gen_by_name[s]
            if g.star is None:
                raise AlgebraError(f"involution undefined for {s!r}")
            sign *= g.star_sign
            grades.append(g.grade)
            out.append(g.star)
        # (x1...xn)* = (-1)^{sum_{i<j} |xi||xj|} xn* ... x1*
        odd = 0
        acc = 0
        for gr in grades:
            odd += acc * gr
            acc += gr
        if odd % 2:
            sign = -sign
        res = vscale(self.nf_word(tuple(reversed(out))), ONE * sign)
        self._star_cache[word] = res
        return res

    def has_involution(self) -> bool:
        return all(g.star is not None for g in self.generators)

    # -- windows ------------------------------------------------------------
    def window(self, degree: int) -> list:
        """All normal words of length <= degree, in word order."""
        words = [()]
        layer = [()]
        for _ in range(degree):
            nxt = []
            for u in layer:
                for g in self.generators:
                    w = u + (g.name,)
                    if self.is_normal(w):
                        nxt.append(w)
            words.extend(nxt)
            layer = nxt
            if not layer:
                break
        return sorted(words, key=self.order_key)

    # -- confluence -----------------------------------------------------------
    def critical_pairs(self, degree_bound: int):
        """Overlap and inclusion ambiguities of total length <= degree_bound."""
        out = []
        rules = self.rules
        for a, r1 in enumerate(rules):
            l1 = r1.lhs
            for b, r2 in enumerate(rules):
                l2 = r2.lhs
                # overlaps: proper suffix of l1 equals proper prefix of l2
                for k in range(1, min(len(l1), len(l2))):
                    if l1[-k:] == l2[:k]:
                        w = l1 + l2[k:]
                        if len(w) <= degree_bound:
                            out.append((w, a, 0, b, len(l1) - k))
                # inclusions: l2 occurs inside l1 (a rule never conflicts with itself)
                if len(l1) <= degree_bound:
                    for i in range(len(l1) - len(l2) + 1):
                        if l1[i : i + len(l2)] == l2 and not (a == b and i == 0):
                            out.append((l1, a, 0, b, i))
        seen = set()
        uniq = []
        for item in out:
            w, a, i, b, j = item
            key = (w, frozenset([(a, i), (b, j)]))
            if key in seen or (a, i) == (b, j):
                continue
            seen.add(key)
            uniq.append(item)
        return uniq

    def _one_step(self, word, rule: Rule, pos: int) -> dict:
        pre, post = word[:pos], word[pos + len(rule.lhs) :]
        out: dict = {}
        for c, w in rule.rhs:
            vaxpy(out, {pre + w + post: c})
        return out

    def local_confluence(self, degree_bound: int = 4) -> dict:
        """Resolve every critical pair; report unresolved ones with witnesses."""
        if degree_bound < 2:
            raise ValueError("degree_bound must be at least 2")
        unresolved = []
        pairs = self.critical_pairs(degree_bound)
        for w, a, i, b, j in pairs:
            left = self.normalize(self._one_step(w, self.rules[a], i))
            right = self.normalize(self._one_step(w, self.rules[b], j))
            if left != right:
                diff = dict(left)
                vaxpy(diff, right, -ONE)
                unresolved.append(
                    {
                        "word": list(w),
                        "rules": [list(self.rules[a].lhs), list(self.rules[b].lhs)],
                        "difference": _terms_repr(diff),
                    }
                )
        return {"pairs_checked": len(pairs), "unresolved": unresolved}

    # -- specialization ---------------------------------------------------------
    def specialized(self, value) -> "Presentation":
        key = value
        hit = self._specialized.get(key)
        if hit is not None:
            return hit
        rules = [
            Rule(r.lhs, tuple((specialize_scalar(c, value), w) for c, w in r.rhs))
            for r in self.rules
        ]
        p = Presentation(f"{self.name}@q={value}", self.generators, rules, budget=self.budget)
        self._specialized[key] = p
        return p

    # -- serialization ------------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "name": self.name,
            "generators": [
                {"name": g.name, "grade": g.grade, "star_partner": g.star, "star_sign": g.star_sign}
                for g in self.generators
            ],
            "order": [g.name for g in self.generators],
            "rules": [
                {"lhs": list(r.lhs), "rhs": [[scalar_to_wire(c), list(w)] for c, w in r.rhs]}
                for r in self.rules
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Presentation":
        gens = {
            g["name"]: Generator(
                g["name"],
                int(g.get("grade", 0)),
                g.get("star_partner", g.get("star")),
                int(g.get("star_sign", 1)),
            )
            for g in data["generators"]
        }
        order = data.get("order") or [g["name"] for g in data["generators"]]
        missing = set(order) ^ set(gens)
        if missing:
            raise UnknownGenerator(f"order and generator list disagree on {sorted(missing)}")
        rules = []
        for r in data.get("rules", []):
            rhs = tuple((parse_scalar(c), tuple(w)) for c, w in r["rhs"])
            rules.append(Rule(tuple(r["lhs"]), rhs))
        return cls(data["name"], [gens[n] for n in order], rules)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _terms_repr(terms: Mapping) -> str:
    if not terms:
        return "0"
    parts = []
    for w, c in sorted(terms.items(), key=lambda t: (len(t[0]), t[0])):
        word = "·".join(w) if w else "1"
        cs = format_scalar(c)
        if cs == "1":
            parts.append(word)
        elif cs == "-1":
            parts.append(f"-{word}")
        else:
            parts.append(f"({cs})*{word}" if isinstance(c, RatFunc) else f"{cs}*{word}")
    return " + ".join(parts).replace("+ -", "- ")


def _is_scalar(x) -> bool:
    return isinstance(x, (int, RatFunc)) or type(x) is type(ONE)


class AlgElement:
    """Linear combination of normal words; immutable by convention."""

    __slots__ = ("pres", "terms")

    def __init__(self, pres: Presentation, terms: Mapping, _normal: bool = False):
        self.pres = pres
        self.terms = dict(terms) if _normal else pres.normalize(terms)

    # -- inspection -----------------------------------------------------------
    def __repr__(self):
        return _terms_repr(self.terms)

    def coeff(self, word: Word):
        return self.terms.get(tuple(word), ZERO)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, AlgElement):
            return self.pres is other.pres and self.terms == other.terms
        if _is_scalar(other):
            return self.terms == ({(): other} if other else {})
        return NotImplemented

    __hash__ = None

    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    def grades(self) -> set:
        return {self.pres.word_grade(w) for w in self.terms}

    def grade(self) -> int:
        gs = self.grades()
        if len(gs) > 1:
            raise AlgebraError("element is not homogeneous")
        return gs.pop() if gs else 0

    def scalar_part(self):
        return self.terms.get((), ZERO)

    # -- arithmetic -------------------------------------------------------------
    def _same(self, other):
        if not isinstance(other, AlgElement):
            raise TypeError(f"cannot combine AlgElement with {type(other).__name__}")
        if other.pres is not self.pres:
            raise PresentationMismatch(f"{self.pres.name} vs {other.pres.name}")

    def __add__(self, other):
        if _is_scalar(other):
            other = self.pres.scalar(other)
        self._same(other)
        out = dict(self.terms)
        vaxpy(out, other.terms)
        return AlgElement(self.pres, out, _normal=True)

    __radd__ = __add__

    def __neg__(self):
        return AlgElement(self.pres, vscale(self.terms, -ONE), _normal=True)

    def __sub__(self, other):
        if _is_scalar(other):
            other = self.pres.scalar(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if _is_scalar(other):
            return AlgElement(self.pres, vscale(self.terms, other), _normal=True)
        self._same(other)
        p = self.pres
        out: dict = {}
        for u, a in self.terms.items():
            for v, b in other.terms.items():
                vaxpy(out, p.nf_word(u + v), a * b)
        return AlgElement(p, out, _normal=True)

    def __rmul__(self, other):
        if _is_scalar(other):
            return AlgElement(self.pres, vscale(self.terms, other), _normal=True)
        return NotImplemented

    def __pow__(self, k: int):
        out = self.pres.one()
        for _ in range(k):
            out = out * self
        return out

    def star(self) -> "AlgElement":
        p = self.pres
        out: dict = {}
        for w, c in self.terms.items():
            vaxpy(out, p.star_word(w), c)
        return AlgElement(p, out, _normal=True)

    def specialize(self, value) -> "AlgElement":
        sp = self.pres.specialized(value)
        return AlgElement(sp, {w: specialize_scalar(c, value) for w, c in self.terms.items()})

    def map_words(self, f) -> dict:
        """Apply a linear map given on words (returning dicts) to this element."""
        out: dict = {}
        for w, c in self.terms.items():
            vaxpy(out, f(w), c)
        return out


def normalize(expr: Mapping, pres: Presentation) -> AlgElement:
    """Normal form of a raw combination ``{word: coeff}``."""
    return AlgElement(pres, expr)


def multiply(a, b):
    return a * b


def star_map(a):
    return a.star()


def specialize(a, value):
    return a.specialize(value)


def check_local_confluence(p: Presentation, degree_bound: int = 4) -> dict:
    return p.local_confluence(degree_bound)


# -- tensors ------------------------------------------------------------------------

class TensorElement:
    """Element of a graded tensor product of presented algebras.

    ``terms`` maps k-tuples of normal words to scalars.  Products carry the
    Koszul sign; the star acts legwise, which is what the graded rule
    (xy)* = (-1)^{|x||y|} y* x* gives on ``x ⊗ 1`` and ``1 ⊗ y``.
    """

    __slots__ = ("legs", "terms")

    def __init__(self, legs, terms: Mapping, _normal: bool = False):
        self.legs = tuple(legs)
        if _normal:
            self.terms = dict(terms)
        else:
            self.terms = self._normalize(terms)

    def _normalize(self, terms):
        out: dict = {}
        for key, c in terms.items():
            if not c:
                continue
            if len(key) != len(self.legs):
                raise AlgebraError("tensor degree mismatch")
            acc = {(): c}
            for leg, w in zip(self.legs, key):
                nf = leg.nf_word(tuple(w))
                nxt: dict = {}
                for pre, x in acc.items():
                    for v, y in nf.items():
                        k = pre + (v,)
                        nxt[k] = nxt.get(k, ZERO) + x * y
                acc = nxt
            vaxpy(out, acc)
        return out

    @classmethod
    def pure(cls, *factors: AlgElement) -> "TensorElement":
        legs = tuple(f.pres for f in factors)
        acc = {(): ONE}
        for f in factors:
            nxt: dict = {}
            for pre, x in acc.items():
                for w, y in f.terms.items():
                    k = pre + (w,)
                    nxt[k] = nxt.get(k, ZERO) + x * y
            acc = nxt
        return cls(legs, {k: v for k, v in acc.items() if v}, _normal=True)

    @classmethod
    def zero(cls, legs) -> "TensorElement":
        return cls(legs, {}, _normal=True)

    @property
    def degree(self) -> int:
        return len(self.legs)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for key, c in sorted(self.terms.items(), key=lambda t: [(len(w), w) for w in t[0]]):
            leg = " ⊗ ".join("·".join(w) if w else "1" for w in key)
            parts.append(f"{format_scalar(c)}·[{leg}]")
        return " + ".join(parts)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, TensorElement):
            return NotImplemented
        return (
            len(self.legs) == len(other.legs)
            and all(a is b for a, b in zip(self.legs, other.legs))
            and self.terms == other.terms
        )

    __hash__ = None

    def _same(self, other):
        if not isinstance(other, TensorElement):
            raise TypeError("expected TensorElement")
        if len(other.legs) != len(self.legs) or any(a is not b for a, b in zip(self.legs, other.legs)):
            raise PresentationMismatch("tensor legs differ")

    def __add__(self, other):
        self._same(other)
        out = dict(self.terms)
        vaxpy(out, other.terms)
        return TensorElement(self.legs, out, _normal=True)

    def __neg__(self):
        return TensorElement(self.legs, vscale(self.terms, -ONE), _normal=True)

    def __sub__(self, other):
        return self + (-other)

    def __rmul__(self, c):
        if _is_scalar(c):
            return TensorElement(self.legs, vscale(self.terms, c), _normal=True)
        return NotImplemented

    def __mul__(self, other):
        if _is_scalar(other):
            return TensorElement(self.legs, vscale(self.terms, other), _normal=True)
        self._same(other)
        legs = self.legs
        graded = any(p.graded for p in legs)
        out: dict = {}
        for ka, xa in self.terms.items():
            ga = [p.word_grade(w) for p, w in zip(legs, ka)] if graded else None
            for kb, xb in other.terms.items():
                sign = 1
                if graded:
                    gb = [p.word_grade(w) for p, w in zip(legs, kb)]
                    s = 0
                    for i in range(len(legs)):
                        if ga[i]:
                            for j in range(i):
                                s += ga[i] * gb[j]
                    sign = -1 if s % 2 else 1
                acc = {(): xa * xb * sign}
                for p, u, v in zip(legs, ka, kb):
                    nf = p.nf_word(u + v)
                    nxt: dict = {}
                    for pre, x in acc.items():
                        for w, y in nf.items():
                            k = pre + (w,)
                            nxt[k] = nxt.get(k, ZERO) + x * y
                    acc = nxt
                vaxpy(out, acc)
        return TensorElement(legs, out, _normal=True)

    def star(self) -> "TensorElement":
        out: dict = {}
        for key, c in self.terms.items():
            acc = {(): c}
            for p, w in zip(self.legs, key):
                sw = p.star_word(w)
                nxt: dict = {}
                for pre, x in acc.items():
                    for v, y in sw.items():
                        k = pre + (v,)
                        nxt[k] = nxt.get(k, ZERO) + x * y
                acc = nxt
            vaxpy(out, acc)
        return TensorElement(self.legs, out, _normal=True)

    def map_leg(self, i: int, f, new_leg: Presentation | None = None) -> "TensorElement":
        """Apply a linear word map ``f(word) -> dict`` on leg ``i``."""
        legs = list(self.legs)
        if new_leg is not None:
            legs[i] = new_leg
        out: dict = {}
        for key, c in self.terms.items():
            for w, y in f(key[i]).items():
                k = key[:i] + (w,) + key[i + 1 :]
                out[k] = out.get(k, ZERO) + c * y
        return TensorElement(legs, {k: v for k, v in out.items() if v}, _normal=True)

    def contract_scalar_leg(self, i: int, f) -> "TensorElement":
        """Apply a scalar-valued word functional on leg ``i`` and drop it."""
        legs = self.legs[:i] + self.legs[i + 1 :]
        out: dict = {}
        for key, c in self.terms.items():
            x = f(key[i])
            if x:
                k = key[:i] + key[i + 1 :]
                out[k] = out.get(k, ZERO) + c * x
        return TensorElement(legs, {k: v for k, v in out.items() if v}, _normal=True)

    def to_element(self) -> AlgElement:
        """Collapse a one-leg tensor to an AlgElement."""
        if len(self.legs) != 1:
            raise AlgebraError("only single-leg tensors collapse to elements")
        return AlgElement(self.legs[0], {k[0]: v for k, v in self.terms.items()}, _normal=True)

    def multiply_legs(self) -> AlgElement:
        """The multiplication map m: A⊗A -> A (ungraded legs of one algebra)."""
        p = self.legs[0]
        if any(leg is not p for leg in self.legs):
            raise PresentationMismatch("multiplication needs equal legs")
        out: dict = {}
        for key, c in self.terms.items():
            w = ()
            for part in key:
                w = w + part
            vaxpy(out, p.nf_word(w), c)
        return AlgElement(p, out, _normal=True)


def tensor_from_pairs(legs, items: Iterable) -> TensorElement:
    """Build a tensor from ``(coeff, word_1, ..., word_k)`` tuples."""
    terms: dict = {}
    for item in items:
        c, *words = item
        key = tuple(tuple(w) for w in words)
        terms[key] = terms.get(key, ZERO) + c
    return TensorElement(legs, terms)
