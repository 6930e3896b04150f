"""Exact sparse linear algebra over Q(q).

Vectors are plain dicts ``key -> scalar`` with no zero entries.  Keys can be
anything hashable and orderable through a caller supplied sort key; the
pivot of a row is its largest key, so reducing modulo an :class:`Echelon`
leaves a remainder supported on non-pivot keys and remainders are canonical.

The dense fraction-free :func:`bareiss_rank` is deliberately independent of
the echelon code and serves as the oracle path in the tests.
"""

from __future__ import annotations

from typing import Callable, Hashable, Iterable, Mapping

from .scalar import ONE, ZERO

Vec = dict


# -- vectors -------------------------------------------------------------------

def vadd(u: Mapping, v: Mapping, c=ONE) -> dict:
    """Return ``u + c*v``."""
    out = dict(u)
    if not c:
        return out
    for k, x in v.items():
        y = out.get(k, ZERO) + c * x
        if y:
            out[k] = y
        else:
            out.pop(k, None)
    return out


def vaxpy(out: dict, v: Mapping, c=ONE) -> dict:
    """In place ``out += c*v``; returns ``out``."""
    if not c:
        return out
    for k, x in v.items():
        y = out.get(k, ZERO) + c * x
        if y:
            out[k] = y
        else:
            out.pop(k, None)
    return out


def vscale(v: Mapping, c) -> dict:
    if not c:
        return {}
    if c == 1:
        return dict(v)
    return {k: c * x for k, x in v.items()}


def vsub(u: Mapping, v: Mapping) -> dict:
    return vadd(u, v, -ONE)


def vclean(v: Mapping) -> dict:
    return {k: x for k, x in v.items() if x}


# -- echelon forms ----------------------------------------------------------------

class Echelon:
    """Incremental reduced row echelon form.

    Every stored row has coefficient 1 at its pivot and 0 at every other
    pivot.  ``order`` maps a key to something comparable; the pivot of a new
    row is its maximal key under that order.
    """

    def __init__(self, order: Callable | None = None):
        self.order = order
        self.rows: dict = {}

    def _pivot(self, v):
        if self.order is None:
            return max(v)
        return max(v, key=self.order)

    def reduce(self, v: Mapping) -> dict:
        out = dict(v)
        rows = self.rows
        for p in [k for k in out if k in rows]:
            c = out.get(p)
            if c:
                vaxpy(out, rows[p], -c)
        return out

    def insert(self, v: Mapping) -> bool:
        """Add ``v`` to the span; returns False when it was already inside."""
        r = self.reduce(v)
        if not r:
            return False
        p = self._pivot(r)
        c = r[p]
        if c != 1:
            r = vscale(r, ONE / c)
        for key, row in self.rows.items():
            x = row.get(p)
            if x:
                vaxpy(row, r, -x)
        self.rows[p] = r
        return True

    def extend(self, vecs: Iterable[Mapping]) -> "Echelon":
        for v in vecs:
            self.insert(v)
        return self

    def contains(self, v: Mapping) -> bool:
        return not self.reduce(v)

    @property
    def rank(self) -> int:
        return len(self.rows)

    def pivots(self) -> set:
        return set(self.rows)

    def basis(self) -> list[dict]:
        keys = sorted(self.rows, key=self.order) if self.order else sorted(self.rows)
        return [dict(self.rows[k]) for k in keys]

    def copy(self) -> "Echelon":
        e = Echelon(self.order)
        e.rows = {k: dict(v) for k, v in self.rows.items()}
        return e


class TrackedEchelon:
    """Echelon form that remembers each row as a combination of inputs.

    Used for kernels (a dependent insert yields a relation among inputs)
    and for solving ``target = sum x_j * input_j``.
    """

    def __init__(self, order: Callable | None = None):
        self.order = order
        self.rows: dict = {}  # pivot -> (vec, combo)

    def _pivot(self, v):
        if self.order is None:
            return max(v)
        return max(v, key=self.order)

    def reduce(self, v: Mapping) -> tuple[dict, dict]:
        out = dict(v)
        combo: dict = {}
        for p in [k for k in out if k in self.rows]:
            c = out.get(p)
            if c:
                row, rc = self.rows[p]
                vaxpy(out, row, -c)
                vaxpy(combo, rc, c)
        return out, combo

    def insert(self, v: Mapping, label: Hashable) -> dict | None:
        """Insert ``v`` labelled ``label``.

        Returns None when independent; otherwise the kernel relation
        ``{label: 1, other: -c, ...}`` that sums the inputs to zero.
        """
        r, combo = self.reduce(v)
        if not r:
            rel = vscale(combo, -ONE)
            vaxpy(rel, {label: ONE})
            return rel
        rc = vscale(combo, -ONE)
        vaxpy(rc, {label: ONE})
        p = self._pivot(r)
        c = r[p]
        if c != 1:
            inv = ONE / c
            r = vscale(r, inv)
            rc = vscale(rc, inv)
        for key, (row, rowc) in self.rows.items():
            x = row.get(p)
            if x:
                vaxpy(row, r, -x)
                vaxpy(rowc, rc, -x)
        self.rows[p] = (r, rc)
        return None

    def solve(self, target: Mapping) -> dict | None:
        r, combo = self.reduce(target)
        if r:
            return None
        return combo

    @property
    def rank(self) -> int:
        return len(self.rows)


def kernel(columns: Mapping[Hashable, Mapping], order: Callable | None = None) -> list[dict]:
    """Basis of the kernel of the map sending label ``j`` to ``columns[j]``.

    Each kernel vector is a dict over labels.  The returned basis is put in
    reduced echelon form over labels, so it is canonical.
    """
    te = TrackedEchelon(order)
    rels = []
    for label, col in columns.items():
        rel = te.insert(col, label)
        if rel is not None:
            rels.append(rel)
    return Echelon().extend(rels).basis() if rels else []


def solve(columns: Mapping[Hashable, Mapping], target: Mapping, order: Callable | None = None) -> dict | None:
    te = TrackedEchelon(order)
    for label, col in columns.items():
        te.insert(col, label)
    return te.solve(target)


def rank(vecs: Iterable[Mapping], order: Callable | None = None) -> int:
    return Echelon(order).extend(vecs).rank


def span_contains(big: Iterable[Mapping], small: Iterable[Mapping]) -> list[dict]:
    """Vectors of ``small`` not inside span(big); empty list means containment."""
    e = Echelon().extend(big)
    return [dict(v) for v in small if not e.contains(v)]


def same_span(a: Iterable[Mapping], b: Iterable[Mapping]) -> bool:
    a, b = list(a), list(b)
    ea = Echelon().extend(a)
    eb = Echelon().extend(b)
    if ea.rank != eb.rank:
        return False
    return all(ea.contains(v) for v in b)


# -- dense fraction-free oracle -------------------------------------------------

def bareiss_rank(vecs: Iterable[Mapping]) -> int:
    """Rank through fraction-free Bareiss elimination on a dense matrix.

    Rows are the given vectors.  Rational rows are first scaled to integer
    rows so that all intermediate divisions are exact integer divisions; rows
    with q-dependent entries run the same recurrence over Q(q).
    """
    rows = [dict(v) for v in vecs if v]
    if not rows:
        return 0
    keys = sorted({k for v in rows for k in v}, key=repr)
    idx = {k: i for i, k in enumerate(keys)}
    mat = []
    for v in rows:
        line = [ZERO] * len(keys)
        for k, x in v.items():
            line[idx[k]] = x
        mat.append(_integral_row(line))
    return _bareiss(mat)


def _integral_row(line):
    from math import lcm

    from .scalar import RatFunc

    if any(isinstance(x, RatFunc) for x in line):
        return line
    den = 1
    for x in line:
        if x:
            den = lcm(den, int(x.denominator))
    return [int(x * den) for x in line]


def _bareiss(mat) -> int:
    m = [list(r) for r in mat]
    nrows, ncols = len(m), len(m[0])
    prev = 1
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][c]
        for i in range(r + 1, nrows):
            a = m[i][c]
            row_i = m[i]
            row_r = m[r]
            for j in range(c + 1, ncols):
                val = p * row_i[j] - a * row_r[j]
                row_i[j] = _exact_div(val, prev)
            row_i[c] = 0
        prev = p
        r += 1
        if r == nrows:
            break
    return r


def _exact_div(a, b):
    if isinstance(a, int) and isinstance(b, int):
        qt, rem = divmod(a, b)
        if rem:
            raise ArithmeticError("inexact division in fraction-free elimination")
        return qt
    return a / b


# -- linear maps -------------------------------------------------------------------

class LinMap:
    """A linear map stored column by column: ``cols[basis_key] -> Vec``.

    Keys missing from ``cols`` map to zero; ``domain`` lists the basis the
    map is defined on so that equality and identity make sense.
    """

    __slots__ = ("cols", "domain")

    def __init__(self, cols: Mapping, domain: Iterable | None = None):
        self.cols = {k: vclean(v) for k, v in cols.items()}
        self.domain = tuple(domain) if domain is not None else tuple(cols)

    @classmethod
    def identity(cls, domain: Iterable) -> "LinMap":
        domain = tuple(domain)
        return cls({k: {k: ONE} for k in domain}, domain)

    @classmethod
    def zero(cls, domain: Iterable) -> "LinMap":
        domain = tuple(domain)
        return cls({}, domain)

    def apply(self, v: Mapping) -> dict:
        out: dict = {}
        for k, x in v.items():
            col = self.cols.get(k)
            if col:
                vaxpy(out, col, x)
        return out

    def column(self, k) -> dict:
        return dict(self.cols.get(k, {}))

    def __matmul__(self, other: "LinMap") -> "LinMap":
        return LinMap({k: self.apply(other.cols.get(k, {})) for k in other.domain}, other.domain)

    def __add__(self, other: "LinMap") -> "LinMap":
        dom = self.domain if len(self.domain) >= len(other.domain) else other.domain
        return LinMap({k: vadd(self.cols.get(k, {}), other.cols.get(k, {})) for k in dom}, dom)

    def __sub__(self, other: "LinMap") -> "LinMap":
        return self + other.scale(-ONE)

    def __neg__(self) -> "LinMap":
        return self.scale(-ONE)

    def scale(self, c) -> "LinMap":
        return LinMap({k: vscale(v, c) for k, v in self.cols.items()}, self.domain)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LinMap):
            return NotImplemented
        keys = set(self.domain) | set(other.domain)
        return all(self.cols.get(k, {}) == other.cols.get(k, {}) for k in keys)

    __hash__ = None

    def difference_witness(self, other: "LinMap"):
        """First basis key (in domain order) where the two maps differ."""
        for k in tuple(self.domain) + tuple(other.domain):
            if self.cols.get(k, {}) != other.cols.get(k, {}):
                return k
        return None

    def rank(self) -> int:
        return rank(self.cols.values())

    def kernel(self) -> list[dict]:
        return kernel({k: self.cols.get(k, {}) for k in self.domain})

    def is_zero(self) -> bool:
        return not any(self.cols.values())

    def entries(self):
        """Triples ``(row, col, value)`` sorted for stable dumps."""
        out = []
        for c in self.domain:
            for r, x in self.cols.get(c, {}).items():
                out.append((r, c, x))
        return out


def tensor_maps(a: LinMap, b: LinMap) -> LinMap:
    """``a ⊗ b`` on tuple keys: the key ``ka + kb`` maps to ``a(ka) ⊗ b(kb)``."""
    cols = {}
    domain = []
    for ka in a.domain:
        ca = a.cols.get(ka, {})
        for kb in b.domain:
            key = tuple(ka) + tuple(kb)
            domain.append(key)
            cb = b.cols.get(kb, {})
            col: dict = {}
            for ra, xa in ca.items():
                for rb, xb in cb.items():
                    kk = tuple(ra) + tuple(rb)
                    col[kk] = col.get(kk, ZERO) + xa * xb
            cols[key] = col
    return LinMap(cols, domain)
