"""Exact scalars, graded bases, sparse graded linear maps and Koszul signs.

Scalars are ``fractions.Fraction`` throughout (always normalized, gcd-reduced,
positive denominator).  Vectors are sparse dicts ``label -> Fraction`` with no
zero entries.  All sign computations reduce to one Koszul rule:

    (f_1 (x) ... (x) f_k)(v_1 (x) ... (x) v_k)
        = (-1)^{sum_{i<j} |f_j||v_i|} f_1(v_1) (x) ... (x) f_k(v_k)
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

Q = Fraction

#: separator used to join atomic labels into tensor-basis labels;
#: forbidden inside atomic labels.
TENSOR_SEP = "|"


class WindowOverflowError(Exception):
    """An operation produced an element outside the declared window."""


def qstr(q: Fraction) -> str:
    """Render a rational as ``p`` or ``p/q``."""
    if q.denominator == 1:
        return str(q.numerator)
    return "%d/%d" % (q.numerator, q.denominator)


def parse_q(s: str) -> Fraction:
    return Fraction(s)


# ---------------------------------------------------------------------------
# sparse vectors


def vclean(v: dict) -> dict:
    return {k: c for k, c in v.items() if c != 0}


def vadd(a: dict, b: dict, coeff=Q(1)) -> dict:
    out = dict(a)
    for k, c in b.items():
        out[k] = out.get(k, Q(0)) + coeff * c
        if out[k] == 0:
            del out[k]
    return out


def vscale(v: dict, coeff) -> dict:
    if coeff == 0:
        return {}
    return {k: coeff * c for k, c in v.items()}


def veq(a: dict, b: dict) -> bool:
    return vclean(a) == vclean(b)


# ---------------------------------------------------------------------------
# graded bases


class GradedBasis:
    """Ordered basis of a finite graded vector space over Q.

    ``window = (lo, hi)`` is the closed degree range the object claims to
    describe; degrees inside the window with no labels are honest zero
    spaces.  Labels are unique across all degrees.
    """

    def __init__(self, window: tuple[int, int], by_degree: dict[int, list[str]]):
        lo, hi = window
        if lo > hi:
            raise ValueError("empty window %r" % (window,))
        self.window = (lo, hi)
        self.by_degree: dict[int, tuple[str, ...]] = {}
        self._degree: dict[str, int] = {}
        for d in sorted(by_degree):
            labels = tuple(by_degree[d])
            if not labels:
                continue
            if d < lo or d > hi:
                raise WindowOverflowError(
                    "degree %d outside window %r" % (d, window))
            for lab in labels:
                if lab in self._degree:
                    raise ValueError("duplicate label %r" % lab)
                self.by_degree[d] = labels
                self._degree[lab] = d

    def labels(self) -> list[str]:
        return [lab for d in sorted(self.by_degree) for lab in self.by_degree[d]]

    def degree(self, label: str) -> int:
        try:
            return self._degree[label]
        except KeyError:
            raise KeyError("label %r not in basis" % label) from None

    def __contains__(self, label: str) -> bool:
        return label in self._degree

    def dim(self, degree: int | None = None) -> int:
        if degree is None:
            return len(self._degree)
        return len(self.by_degree.get(degree, ()))

    def degrees(self) -> list[int]:
        return sorted(self.by_degree)

    def element_degree(self, vec: dict) -> int | None:
        """Degree of a homogeneous vector, None for 0, error if mixed."""
        degs = {self.degree(k) for k in vclean(vec)}
        if not degs:
            return None
        if len(degs) > 1:
            raise ValueError("vector is not homogeneous: degrees %s" % degs)
        return degs.pop()

    def homogeneous_parts(self, vec: dict) -> dict[int, dict]:
        out: dict[int, dict] = {}
        for k, c in vclean(vec).items():
            out.setdefault(self.degree(k), {})[k] = c
        return out

    def __eq__(self, other) -> bool:
        return (isinstance(other, GradedBasis)
                and self.window == other.window
                and self.by_degree == other.by_degree)

    def __repr__(self) -> str:
        return "GradedBasis(window=%r, dim=%d)" % (self.window, self.dim())


def tensor_basis(*bases: GradedBasis) -> GradedBasis:
    """Tensor product basis; labels joined with TENSOR_SEP, degrees add."""
    assert bases
    lo = sum(b.window[0] for b in bases)
    hi = sum(b.window[1] for b in bases)
    by_degree: dict[int, list[str]] = {}
    for combo in itertools.product(*[b.labels() for b in bases]):
        d = sum(b.degree(lab) for b, lab in zip(bases, combo))
        by_degree.setdefault(d, []).append(TENSOR_SEP.join(combo))
    return GradedBasis((lo, hi), by_degree)


def split_label(label: str) -> list[str]:
    return label.split(TENSOR_SEP)


def join_label(parts) -> str:
    return TENSOR_SEP.join(parts)


# ---------------------------------------------------------------------------
# Koszul sign kernel


@dataclass(frozen=True)
class SignContext:
    """Degrees of the tensor factors a permutation or shuffle acts on."""

    degrees: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(self.degrees))


def _order_sign(degrees, order) -> int:
    # Koszul sign of rearranging v_0 (x) ... (x) v_{n-1} into the sequence
    # given by ``order`` (order[p] = original index now at position p):
    # product over inverted pairs of (-1)^{d_a d_b}.
    exp = 0
    n = len(order)
    for p in range(n):
        for r in range(p + 1, n):
            if order[p] > order[r]:
                exp += degrees[order[p]] * degrees[order[r]]
    return -1 if exp % 2 else 1


def perm_sign(ctx: SignContext, perm) -> int:
    """Koszul sign of sigma acting on the tensor factors.

    ``perm`` is 0-based: position i is sent to position perm[i], so the
    reordered tensor has v_{sigma^{-1}(p)} at position p.
    """
    n = len(ctx.degrees)
    perm = tuple(perm)
    if sorted(perm) != list(range(n)):
        raise ValueError("not a permutation of 0..%d: %r" % (n - 1, perm))
    inv = [0] * n
    for i, p in enumerate(perm):
        inv[p] = i
    return _order_sign(ctx.degrees, inv)


def shuffle_sign(ctx: SignContext, blocks) -> int:
    """Koszul sign moving v_0 (x) ... (x) v_{n-1} into block order.

    ``blocks`` is an ordered partition of 0..n-1 into tuples, each
    internally increasing.
    """
    n = len(ctx.degrees)
    order: list[int] = []
    for blk in blocks:
        if list(blk) != sorted(blk):
            raise ValueError("block %r not increasing" % (blk,))
        order.extend(blk)
    if sorted(order) != list(range(n)):
        raise ValueError("blocks %r do not partition 0..%d" % (blocks, n - 1))
    return _order_sign(ctx.degrees, order)


def interleave_sign(map_degrees, arg_positions, word_degrees) -> int:
    """Sign of applying maps into a tensor word by the Koszul rule.

    Map j (degree ``map_degrees[j]``) is applied to the factor at position
    ``arg_positions[j]`` of a word whose factor degrees are
    ``word_degrees``; the sign is sum_j |f_j| * (degree left of its
    argument).  Positions must be strictly increasing.
    """
    exp = 0
    prefix = list(itertools.accumulate([0] + list(word_degrees)))
    for fd, pos in zip(map_degrees, arg_positions):
        exp += fd * prefix[pos]
    return -1 if exp % 2 else 1


# ---------------------------------------------------------------------------
# sparse graded linear maps


class LinMap:
    """Sparse degree-homogeneous linear map between graded bases."""

    def __init__(self, source: GradedBasis, target: GradedBasis, degree: int,
                 entries: dict[str, dict[str, Fraction]], check: bool = True):
        self.source = source
        self.target = target
        self.degree = degree
        ent: dict[str, dict[str, Fraction]] = {}
        for src, col in entries.items():
            col = {t: Q(c) for t, c in col.items() if c != 0}
            if not col:
                continue
            if check:
                ds = source.degree(src)
                for tgt in col:
                    if target.degree(tgt) != ds + degree:
                        raise ValueError(
                            "entry %r -> %r violates degree %d" % (src, tgt, degree))
            ent[src] = col
        self.entries = ent

    @classmethod
    def zero(cls, source, target, degree) -> "LinMap":
        return cls(source, target, degree, {}, check=False)

    @classmethod
    def identity(cls, basis) -> "LinMap":
        return cls(basis, basis, 0, {lab: {lab: Q(1)} for lab in basis.labels()},
                   check=False)

    def column(self, src_label: str) -> dict:
        return dict(self.entries.get(src_label, {}))

    def apply(self, vec: dict) -> dict:
        out: dict[str, Fraction] = {}
        for src, c in vec.items():
            for tgt, e in self.entries.get(src, {}).items():
                out[tgt] = out.get(tgt, Q(0)) + c * e
        return vclean(out)

    def compose(self, other: "LinMap") -> "LinMap":
        """self o other."""
        if other.target is not self.source and other.target != self.source:
            raise ValueError("compose: middle bases disagree")
        entries: dict[str, dict[str, Fraction]] = {}
        for src, col in other.entries.items():
            acc: dict[str, Fraction] = {}
            for mid, c in col.items():
                for tgt, e in self.entries.get(mid, {}).items():
                    acc[tgt] = acc.get(tgt, Q(0)) + c * e
            acc = vclean(acc)
            if acc:
                entries[src] = acc
        return LinMap(other.source, self.target, self.degree + other.degree,
                      entries, check=False)

    def add(self, other: "LinMap") -> "LinMap":
        if self.degree != other.degree:
            raise ValueError("add: degrees differ")
        entries = {s: dict(col) for s, col in self.entries.items()}
        for s, col in other.entries.items():
            acc = entries.setdefault(s, {})
            for t, c in col.items():
                acc[t] = acc.get(t, Q(0)) + c
        return LinMap(self.source, self.target, self.degree, entries, check=False)

    def scale(self, coeff) -> "LinMap":
        coeff = Q(coeff)
        return LinMap(self.source, self.target, self.degree,
                      {s: {t: coeff * c for t, c in col.items()}
                       for s, col in self.entries.items()}, check=False)

    def is_zero(self) -> bool:
        return not self.entries

    def first_nonzero(self) -> tuple[str, str, Fraction] | None:
        for s in sorted(self.entries):
            col = self.entries[s]
            t = sorted(col)[0]
            return (s, t, col[t])
        return None

    def transpose(self, dual_source: GradedBasis, dual_target: GradedBasis,
                  dualize) -> "LinMap":
        """Transpose f^T(phi) = (-1)^{|f||phi|} phi o f.

        ``dualize`` maps a label to its dual label; the dual of a degree-d
        label has degree -d.
        """
        entries: dict[str, dict[str, Fraction]] = {}
        for src, col in self.entries.items():
            for tgt, c in col.items():
                phi_deg = -self.target.degree(tgt)
                sign = -1 if (self.degree * phi_deg) % 2 else 1
                entries.setdefault(dualize(tgt), {})[dualize(src)] = sign * c
        return LinMap(dual_source, dual_target, self.degree, entries, check=False)

    def __eq__(self, other) -> bool:
        return (isinstance(other, LinMap) and self.degree == other.degree
                and self.entries == other.entries)

    def __repr__(self) -> str:
        return "LinMap(degree=%d, nnz=%d)" % (
            self.degree, sum(len(c) for c in self.entries.values()))


def compose(f: LinMap, g: LinMap) -> LinMap:
    """f o g (apply g first)."""
    return f.compose(g)


def tensor_map(maps: list[LinMap], source: GradedBasis | None = None,
               target: GradedBasis | None = None) -> LinMap:
    """Tensor product of maps with the Koszul sign rule."""
    if source is None:
        source = tensor_basis(*[m.source for m in maps])
    if target is None:
        target = tensor_basis(*[m.target for m in maps])
    degree = sum(m.degree for m in maps)
    map_degs = [m.degree for m in maps]
    entries: dict[str, dict[str, Fraction]] = {}
    for src_label in source.labels():
        parts = split_label(src_label)
        if len(parts) != len(maps):
            raise ValueError("label %r has wrong tensor length" % src_label)
        part_degs = [m.source.degree(p) for m, p in zip(maps, parts)]
        sign = interleave_sign(map_degs, range(len(maps)), part_degs)
        cols = [m.column(p) for m, p in zip(maps, parts)]
        if not all(cols):
            continue
        acc: dict[str, Fraction] = {}
        for combo in itertools.product(*[sorted(c.items()) for c in cols]):
            tgt = join_label([t for t, _ in combo])
            coeff = Q(sign)
            for _, c in combo:
                coeff *= c
            acc[tgt] = acc.get(tgt, Q(0)) + coeff
        acc = vclean(acc)
        if acc:
            entries[src_label] = acc
    return LinMap(source, target, degree, entries, check=False)
