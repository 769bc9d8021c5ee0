"""Chain complexes over Q with exact homology and hom-complex calculus.

Differentials have degree -1.  Homology in degrees adjacent to the window
boundary is reported as unknown, never guessed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from operadiq.exact import (
    Q, GradedBasis, LinMap, tensor_basis, split_label, join_label,
    interleave_sign, vclean,
)


class ChainComplex:
    """Finite graded basis plus a degree -1 differential with d^2 = 0."""

    def __init__(self, basis: GradedBasis, d: LinMap, check: bool = True):
        if d.degree != -1:
            raise ValueError("differential must have degree -1")
        self.basis = basis
        self.d = d
        if check:
            bad = check_d_squared(self)
            if bad is not None:
                raise ValueError("d^2 != 0, first failure on %r" % (bad,))

    @classmethod
    def zero_diff(cls, basis: GradedBasis) -> "ChainComplex":
        return cls(basis, LinMap.zero(basis, basis, -1), check=False)

    def __repr__(self):
        return "ChainComplex(dim=%d, window=%r)" % (
            self.basis.dim(), self.basis.window)


def check_d_squared(cx: ChainComplex) -> str | None:
    """Return the first basis label with d(d(x)) != 0, or None."""
    dd = cx.d.compose(cx.d)
    hit = dd.first_nonzero()
    return None if hit is None else hit[0]


def hom_differential(source: ChainComplex, target: ChainComplex,
                     f: LinMap) -> LinMap:
    """del(f) = d_target o f - (-1)^{|f|} f o d_source."""
    sign = -1 if f.degree % 2 else 1
    return target.d.compose(f).add(f.compose(source.d).scale(-sign))


#: separator for hom-basis labels; distinct from TENSOR_SEP so hom labels can
#: carry tensor-word sources and be tensored themselves.
HOM_SEP = "~"


def hom_label(s: str, t: str, dual_suffix: str = "'") -> str:
    return s + dual_suffix + HOM_SEP + t


def split_hom_label(label: str, dual_suffix: str = "'") -> tuple[str, str]:
    s_dual, _, t = label.partition(HOM_SEP)
    return s_dual[:-len(dual_suffix)], t


def hom_basis(source: GradedBasis, target: GradedBasis,
              dual_suffix: str = "'") -> GradedBasis:
    """Basis of Hom(source, target): labels  s'~t  of degree |t| - |s|."""
    by_degree: dict[int, list[str]] = {}
    for s in source.labels():
        for t in target.labels():
            d = target.degree(t) - source.degree(s)
            by_degree.setdefault(d, []).append(
                hom_label(s, t, dual_suffix))
    lo = target.window[0] - source.window[1]
    hi = target.window[1] - source.window[0]
    return GradedBasis((lo, hi), by_degree)


class HomComplex:
    """Hom(V, W) as a chain complex with the commutator differential."""

    def __init__(self, source: ChainComplex, target: ChainComplex):
        self.source = source
        self.target = target
        self.basis = hom_basis(source.basis, target.basis)
        self.d = self._differential()
        self.cx = ChainComplex(self.basis, self.d, check=False)

    def _differential(self) -> LinMap:
        entries: dict[str, dict[str, Fraction]] = {}
        for lab in self.basis.labels():
            s, t = split_hom_label(lab)
            fdeg = self.basis.degree(lab)
            sign = -1 if fdeg % 2 else 1
            col: dict[str, Fraction] = {}
            # d_W o f : replace the target by its boundary
            for t2, c in self.target.d.column(t).items():
                key = hom_label(s, t2)
                col[key] = col.get(key, Q(0)) + c
            # -(-1)^{|f|} f o d_V : f hits anything whose boundary contains s
            for s2 in self.source.basis.labels():
                c = self.source.d.column(s2).get(s)
                if c:
                    key = hom_label(s2, t)
                    col[key] = col.get(key, Q(0)) - sign * c
            col = vclean(col)
            if col:
                entries[lab] = col
        return LinMap(self.basis, self.basis, -1, entries, check=False)

    def as_map(self, vec: dict) -> LinMap:
        """Interpret a vector in the hom basis as an actual LinMap."""
        entries: dict[str, dict[str, Fraction]] = {}
        degs = {self.basis.degree(k) for k in vclean(vec)}
        deg = degs.pop() if len(degs) == 1 else 0
        if len(degs) > 0:
            raise ValueError("non-homogeneous hom element")
        for lab, c in vclean(vec).items():
            s, t = split_hom_label(lab)
            entries.setdefault(s, {})[t] = c
        return LinMap(self.source.basis, self.target.basis, deg, entries,
                      check=False)

    def from_map(self, f: LinMap) -> dict:
        vec: dict[str, Fraction] = {}
        for s, col in f.entries.items():
            for t, c in col.items():
                vec[hom_label(s, t)] = c
        return vec


def dual_label(label: str, suffix: str = "'") -> str:
    return label[:-1] if label.endswith(suffix) else label + suffix


def dual_basis(basis: GradedBasis) -> GradedBasis:
    by_degree: dict[int, list[str]] = {}
    for d in basis.degrees():
        by_degree[-d] = [dual_label(l) for l in basis.by_degree[d]]
    return GradedBasis((-basis.window[1], -basis.window[0]), by_degree)


def dual(cx: ChainComplex) -> ChainComplex:
    """Dual complex: < d" phi, v > = -(-1)^{|phi|} < phi, d v >."""
    b = dual_basis(cx.basis)
    entries: dict[str, dict[str, Fraction]] = {}
    for src, col in cx.d.entries.items():
        for tgt, c in col.items():
            phi = dual_label(tgt)
            s = -1 if b.degree(phi) % 2 else 1   # (-1)^{|phi|}
            entries.setdefault(phi, {})[dual_label(src)] = -s * c
    return ChainComplex(b, LinMap(b, b, -1, entries, check=False), check=False)


def suspend(cx: ChainComplex, shift: int = 1) -> ChainComplex:
    """Degree shift by ``shift`` in {1,-1}; d_{sV}(sv) = -s d_V v."""
    if shift not in (1, -1):
        raise ValueError("shift must be +1 or -1")
    b = GradedBasis((cx.basis.window[0] + shift, cx.basis.window[1] + shift),
                    {d + shift: list(cx.basis.by_degree[d])
                     for d in cx.basis.degrees()})
    d = LinMap(b, b, -1, {s: {t: -c for t, c in col.items()}
                          for s, col in cx.d.entries.items()}, check=False)
    return ChainComplex(b, d, check=False)


def tensor_complex(complexes: list[ChainComplex]) -> ChainComplex:
    """Tensor product with the Koszul differential."""
    bases = [c.basis for c in complexes]
    b = tensor_basis(*bases)
    entries: dict[str, dict[str, Fraction]] = {}
    for lab in b.labels():
        parts = split_label(lab)
        degs = [bs.degree(p) for bs, p in zip(bases, parts)]
        col: dict[str, Fraction] = {}
        for i, cx in enumerate(complexes):
            sign = interleave_sign([-1], [i], degs)
            for t, c in cx.d.column(parts[i]).items():
                tgt = join_label(parts[:i] + [t] + parts[i + 1:])
                col[tgt] = col.get(tgt, Q(0)) + sign * c
        col = vclean(col)
        if col:
            entries[lab] = col
    return ChainComplex(b, LinMap(b, b, -1, entries, check=False), check=False)


# ---------------------------------------------------------------------------
# exact linear algebra


def row_reduce(rows: list[list[Fraction]]):
    """Exact Gaussian elimination; returns (rank, rref rows, pivot columns)."""
    rows = [list(r) for r in rows]
    if not rows:
        return 0, [], []
    ncols = len(rows[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        pv = rows[r][c]
        rows[r] = [x / pv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return r, rows[:r], pivots


def matrix_rank(rows) -> int:
    return row_reduce(rows)[0]


def kernel_basis(rows: list[list[Fraction]], ncols: int) -> list[list[Fraction]]:
    """Basis of the kernel of the matrix given by rows acting on column vectors.

    ``rows`` are the rows of the matrix (each of length ncols).
    """
    rank, rref, pivots = row_reduce(rows)
    free = [c for c in range(ncols) if c not in pivots]
    out = []
    for fc in free:
        v = [Q(0)] * ncols
        v[fc] = Q(1)
        for ri, pc in enumerate(pivots):
            v[pc] = -rref[ri][fc]
        out.append(v)
    return out


def in_span(span_rows: list[list[Fraction]], vec: list[Fraction]) -> bool:
    rank, rref, pivots = row_reduce(span_rows)
    v = list(vec)
    for ri, pc in enumerate(pivots):
        if v[pc] != 0:
            f = v[pc]
            v = [x - f * y for x, y in zip(v, rref[ri])]
    return all(x == 0 for x in v)


@dataclass
class HomologySummary:
    degree: int
    known: bool
    dim: int | None = None
    representatives: list[dict] | None = None


def _matrix_of(d: LinMap, src_labels, tgt_labels):
    idx = {t: i for i, t in enumerate(tgt_labels)}
    cols = []
    for s in src_labels:
        col = [Q(0)] * len(tgt_labels)
        for t, c in d.column(s).items():
            col[idx[t]] = c
        cols.append(col)
    return cols  # list of columns


def homology(cx: ChainComplex) -> dict[int, HomologySummary]:
    """Exact homology per degree. Degrees d with d-1 or d+1 outside the
    window are unknown (the truncation hides boundaries)."""
    lo, hi = cx.basis.window
    out: dict[int, HomologySummary] = {}
    for deg in range(lo, hi + 1):
        if deg - 1 < lo or deg + 1 > hi:
            out[deg] = HomologySummary(deg, known=False)
            continue
        here = list(cx.basis.by_degree.get(deg, ()))
        below = list(cx.basis.by_degree.get(deg - 1, ()))
        above = list(cx.basis.by_degree.get(deg + 1, ()))
        if not here:
            out[deg] = HomologySummary(deg, known=True, dim=0,
                                       representatives=[])
            continue
        # kernel of d: C_deg -> C_{deg-1}
        cols_out = _matrix_of(cx.d, here, below)
        rows = [[cols_out[j][i] for j in range(len(here))]
                for i in range(len(below))]
        kern = kernel_basis(rows, len(here))
        # image of d: C_{deg+1} -> C_deg as row vectors
        img_cols = _matrix_of(cx.d, above, here)
        img_rows = [list(c) for c in img_cols if any(x != 0 for x in c)]
        rank_img = matrix_rank(img_rows) if img_rows else 0
        dim_h = len(kern) - rank_img
        reps: list[dict] = []
        span = [list(r) for r in img_rows]
        for kv in kern:
            if len(reps) == dim_h:
                break
            if span and in_span(span, kv):
                continue
            if not span and all(x == 0 for x in kv):
                continue
            reps.append({here[i]: kv[i] for i in range(len(here)) if kv[i] != 0})
            span.append(kv)
        out[deg] = HomologySummary(deg, known=True, dim=dim_h,
                                   representatives=reps)
    return out


def quasi_iso_verdict(f: LinMap, source: ChainComplex, target: ChainComplex):
    """Is f (a chain map of degree 0) a quasi-isomorphism on the interior?

    Returns (verdict, details) with verdict in {"PASS", "FAIL", "UNKNOWN"}.
    Degrees where either homology is unknown are skipped and reported.
    """
    hs = homology(source)
    ht = homology(target)
    unknown = []
    for deg in sorted(set(hs) | set(ht)):
        a, b = hs.get(deg), ht.get(deg)
        if a is None or b is None or not a.known or not b.known:
            unknown.append(deg)
            continue
        if a.dim != b.dim:
            return "FAIL", "homology dims differ in degree %d" % deg
        if a.dim == 0:
            continue
        # induced map: send source reps through f, check they stay independent
        # modulo target boundaries.
        tgt_here = list(target.basis.by_degree.get(deg, ()))
        above = list(target.basis.by_degree.get(deg + 1, ()))
        img_cols = _matrix_of(target.d, above, tgt_here)
        span = [list(c) for c in img_cols if any(x != 0 for x in c)]
        base_rank = matrix_rank(span) if span else 0
        rows = list(span)
        for rep in a.representatives:
            fv = f.apply(rep)
            rows.append([fv.get(t, Q(0)) for t in tgt_here])
        if matrix_rank(rows) != base_rank + a.dim:
            return "FAIL", "induced map not injective in degree %d" % deg
    return ("PASS", "unknown degrees: %s" % unknown) if unknown else ("PASS", "")
