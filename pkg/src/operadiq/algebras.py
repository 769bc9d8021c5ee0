"""Algebras over an operad, conilpotent coalgebras, and relative (co)bar.

Storage conventions.  An element of a free algebra P(V) or a cofree
coalgebra C(V) of weight w is a label ``p|v1|...|vw`` with p a basis
label of the (co)operad in arity w; weight-1 elements are ``1|v``.  In
symmetric mode only canonical representatives of coinvariant classes
are stored; ``canon_pair`` picks them and carries the Koszul
coefficient (classes whose orbit identifies a state with both signs
are honest zeroes and are dropped).

Truncation.  Quasi-free objects keep weights 1..weight_cap.  The
quadratic cobar differential raises weight strictly and the bar one
lowers it, so every two-step composite landing in a stored column also
has its intermediate inside the window and d^2 = 0 holds on the nose.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from operadiq.exact import (
    Q, GradedBasis, LinMap, SignContext, WindowOverflowError,
    join_label, split_label, perm_sign, shuffle_sign, vadd, vclean,
)
from operadiq.complexes import ChainComplex
from operadiq.operads.core import (
    NS, SYM, UNIT, Cooperad, Operad, CollMap, OpTwisting,
    subset_slot, check_cooperad_morphism, check_operad_morphism,
    check_op_twisting,
)

MAX_REPORTED = 6


# ---------------------------------------------------------------------------
# combinatorial helpers


def compositions(total: int, parts: int):
    """Ordered tuples of positive integers with the given sum."""
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def ordered_covers(n: int, k: int):
    """Ordered partitions of {1..n} into k nonempty subsets (each sorted)."""
    for assign in itertools.product(range(k), repeat=n):
        if len(set(assign)) != k:
            continue
        yield tuple(tuple(i + 1 for i in range(n) if assign[i] == b)
                    for b in range(k))


def _invert(perm: tuple[int, ...]) -> tuple[int, ...]:
    inv = [0] * len(perm)
    for i, p in enumerate(perm):
        inv[p] = i
    return tuple(inv)


def canon_pair(coll, n: int, c_lab: str, args, deg_of):
    """Canonical representative of the class of c (x) a_1 ... a_n.

    Returns (c', args', coeff) with  class[input] = coeff * class[rep],
    or None when the orbit forces the class to vanish.  Needs monomial
    symmetric actions (true for all collections built here).
    """
    args = tuple(args)
    if coll.mode == NS or n <= 1:
        return (c_lab, args, Q(1))
    start = (c_lab, args)
    seen: dict[tuple, Fraction] = {start: Q(1)}
    frontier = [start]
    while frontier:
        nxt = []
        for st in frontier:
            c0, a0 = st
            co = seen[st]
            for t in range(1, n):
                cvec = coll.act_transposition(n, t, {c0: Q(1)})
                if len(cvec) != 1:
                    raise ValueError(
                        "canonical storage needs monomial actions")
                (c1, cc), = cvec.items()
                d1, d2 = deg_of(a0[t - 1]), deg_of(a0[t])
                ks = Q(-1) if (d1 * d2) % 2 else Q(1)
                a1 = a0[:t - 1] + (a0[t], a0[t - 1]) + a0[t + 1:]
                st1 = (c1, a1)
                co1 = co * cc * ks
                if st1 in seen:
                    if seen[st1] != co1:
                        return None
                else:
                    seen[st1] = co1
                    nxt.append(st1)
        frontier = nxt
    best = min(seen, key=lambda s: (s[1], s[0]))
    return (best[0], best[1], seen[best])


def _expand(vecs):
    """Terms (labels, coeff) of a pure tensor of sparse vectors."""
    for combo in itertools.product(*[sorted(v.items()) for v in vecs]):
        coeff = Q(1)
        for (_l, c) in combo:
            coeff *= c
        yield tuple(l for (l, _c) in combo), coeff


# ---------------------------------------------------------------------------
# algebras over an operad


class PAlgebra:
    """Chain complex with a P-action, given label-wise.

    ``gamma_labels(n, p_label, arg_labels)`` returns the value on basis
    elements as a sparse vector; it may raise WindowOverflowError on
    truncated carriers.  Every value is checked to be degree
    homogeneous of degree |p| + sum |a_i|.
    """

    def __init__(self, operad: Operad, cx: ChainComplex, gamma_labels,
                 name: str = "", check: bool = True,
                 max_arity: int | None = None):
        self.operad = operad
        self.cx = cx
        self.mode = operad.mode
        self.name = name
        self._fn = gamma_labels
        self._cache: dict = {}
        if check:
            fails = check_palgebra(self, max_arity)
            if fails:
                raise ValueError("invalid algebra %s:\n%s"
                                 % (name or "<anon>", "\n".join(fails)))

    def gamma_labels(self, n: int, p_lab: str, args) -> dict:
        args = tuple(args)
        key = (n, p_lab, args)
        if key in self._cache:
            return self._cache[key]
        out = vclean({l: Q(c) for l, c in self._fn(n, p_lab, args).items()})
        want = self.operad.coll.basis(n).degree(p_lab) + \
            sum(self.cx.basis.degree(a) for a in args)
        for l in out:
            if self.cx.basis.degree(l) != want:
                raise ValueError("gamma not degree homogeneous on %r" % (key,))
        self._cache[key] = out
        return out

    def gamma(self, n: int, pvec: dict, argvecs) -> dict:
        out: dict = {}
        for p, pc in pvec.items():
            for labs, co in _expand(argvecs):
                val = self.gamma_labels(n, p, labs)
                if val:
                    out = vadd(out, val, pc * co)
        return vclean(out)

    def structure_map(self, n: int) -> LinMap:
        """Materialized gamma in arity n (small carriers only)."""
        from operadiq.exact import tensor_basis
        size = self.operad.coll.basis(n).dim() * (self.cx.basis.dim() ** n)
        if size > 200000:
            raise ValueError("refusing to materialize %d columns" % size)
        src = tensor_basis(self.operad.coll.basis(n),
                           *([self.cx.basis] * n))
        ent: dict = {}
        for lab in src.labels():
            parts = split_label(lab)
            try:
                col = self.gamma_labels(n, parts[0], tuple(parts[1:]))
            except WindowOverflowError:
                continue
            if col:
                ent[lab] = col
        return LinMap(src, self.cx.basis, 0, ent)


def check_palgebra(A: PAlgebra, max_arity: int | None = None) -> list[str]:
    """Unit, chain-map, associativity, and (sym) equivariance failures."""
    P = A.operad
    cap = min(P.cap, max_arity or P.cap)
    labs = list(A.cx.basis.labels())
    deg = A.cx.basis.degree
    fails: list[str] = []

    for a in labs:
        if A.gamma_labels(1, P.unit_label, (a,)) != {a: Q(1)}:
            fails.append("unit law fails on %s" % a)
    if fails:
        return fails

    def note(msg):
        if len(fails) < MAX_REPORTED:
            fails.append(msg)

    for n in range(2, cap + 1):
        for p in P.coll.basis(n).labels():
            dp = P.coll.basis(n).degree(p)
            dvec = P.coll.component(n).d.column(p)
            for args in itertools.product(labs, repeat=n):
                try:
                    lhs = A.cx.d.apply(A.gamma_labels(n, p, args))
                    rhs = A.gamma(n, dvec, [{a: Q(1)} for a in args]) \
                        if dvec else {}
                    sp = -1 if dp % 2 else 1
                    pre = 0
                    for j, a in enumerate(args):
                        col = A.cx.d.column(a)
                        if col:
                            sgn = Q(sp * (-1 if pre % 2 else 1))
                            vecs = [{b: Q(1)} for b in args]
                            vecs[j] = col
                            rhs = vadd(rhs, A.gamma(n, {p: Q(1)}, vecs), sgn)
                        pre += deg(a)
                except WindowOverflowError:
                    continue
                if vclean(lhs) != vclean(rhs):
                    note("chain map fails on (%s; %s)" % (p, ",".join(args)))

    for m in range(2, cap + 1):
        for k in range(2, cap + 1):
            n = m + k - 1
            if n > cap:
                continue
            for i in range(1, m + 1):
                for p in P.coll.basis(m).labels():
                    for q in P.coll.basis(k).labels():
                        comp = P.pcompose(m, {p: Q(1)}, i, k, {q: Q(1)})
                        dq = P.coll.basis(k).degree(q)
                        for args in itertools.product(labs, repeat=n):
                            try:
                                lhs = A.gamma(n, comp, [{a: Q(1)}
                                                        for a in args])
                                inner = A.gamma_labels(
                                    k, q, args[i - 1:i - 1 + k])
                                outer_args = [{a: Q(1)}
                                              for a in args[:i - 1]] + \
                                    [inner] + [{a: Q(1)}
                                               for a in args[i - 1 + k:]]
                                rhs = A.gamma(m, {p: Q(1)}, outer_args)
                            except WindowOverflowError:
                                continue
                            exp = dq * sum(deg(a) for a in args[:i - 1])
                            if exp % 2:
                                rhs = {l: -c for l, c in rhs.items()}
                            if vclean(lhs) != vclean(rhs):
                                note("associativity fails at (%d,%d,%d) "
                                     "on (%s,%s;%s)"
                                     % (m, i, k, p, q, ",".join(args)))

    if A.mode == SYM:
        for n in range(2, cap + 1):
            for p in P.coll.basis(n).labels():
                for t in range(1, n):
                    pt = P.coll.act_transposition(n, t, {p: Q(1)})
                    for args in itertools.product(labs, repeat=n):
                        sw = list(args)
                        sw[t - 1], sw[t] = sw[t], sw[t - 1]
                        try:
                            lhs = A.gamma(n, pt, [{a: Q(1)} for a in args])
                            rhs = A.gamma_labels(n, p, tuple(sw))
                        except WindowOverflowError:
                            continue
                        if (deg(args[t - 1]) * deg(args[t])) % 2:
                            rhs = {l: -c for l, c in rhs.items()}
                        if vclean(lhs) != vclean(rhs):
                            note("equivariance fails at t=%d on (%s;%s)"
                                 % (t, p, ",".join(args)))
    return fails


# ---------------------------------------------------------------------------
# conilpotent coalgebras over a cooperad


class CCoalgebra:
    """Conilpotent C-coalgebra with label-wise comultiplications.

    ``delta_terms(n, label)`` lists (c_label, arg_labels, coeff) for the
    n-fold comultiplication, n >= 2; the 1-fold one is the identity.
    ``bound(label)`` is the largest n with a nonzero value; iterating
    the comultiplication must terminate (checked by cycle detection).
    """

    def __init__(self, cooperad: Cooperad, cx: ChainComplex,
                 terms: dict | None = None, delta_fn=None, name: str = "",
                 check: bool = True, max_parts: int | None = None):
        if (terms is None) == (delta_fn is None):
            raise ValueError("give exactly one of terms / delta_fn")
        self.cooperad = cooperad
        self.cx = cx
        self.mode = cooperad.mode
        self.name = name
        if delta_fn is None:
            table = {n: {l: tuple(ts) for l, ts in d.items()}
                     for n, d in terms.items()}
            delta_fn = lambda n, lab: table.get(n, {}).get(lab, ())
        self._fn = delta_fn
        self._cache: dict = {}
        self._bounds: dict[str, int] = {}
        if check:
            fails = check_ccoalgebra(self, max_parts)
            if fails:
                raise ValueError("invalid coalgebra %s:\n%s"
                                 % (name or "<anon>", "\n".join(fails)))

    def delta_terms(self, n: int, lab: str):
        if n < 2:
            raise ValueError("delta_terms needs n >= 2")
        key = (n, lab)
        if key in self._cache:
            return self._cache[key]
        if n > self.cooperad.cap:
            out: tuple = ()
        else:
            raw = self._fn(n, lab)
            dl = self.cx.basis.degree(lab)
            acc: dict = {}
            for (c, args, q) in raw:
                args = tuple(args)
                if len(args) != n:
                    raise ValueError("arity mismatch in Delta^%d(%s)"
                                     % (n, lab))
                d = self.cooperad.basis(n).degree(c) + \
                    sum(self.cx.basis.degree(a) for a in args)
                if d != dl:
                    raise ValueError("Delta^%d not degree 0 on %s" % (n, lab))
                k = (c, args)
                acc[k] = acc.get(k, Q(0)) + Q(q)
            out = tuple((c, a, co) for (c, a), co in sorted(acc.items())
                        if co != 0)
        self._cache[key] = out
        return out

    def bound(self, lab: str) -> int:
        if lab not in self._bounds:
            b = 1
            for n in range(2, self.cooperad.cap + 1):
                if self.delta_terms(n, lab):
                    b = n
            self._bounds[lab] = b
        return self._bounds[lab]

    def delta_map(self, n: int) -> LinMap:
        """Materialized n-fold comultiplication (small carriers only)."""
        from operadiq.exact import tensor_basis
        size = self.cooperad.basis(n).dim() * (self.cx.basis.dim() ** n)
        if size > 200000:
            raise ValueError("refusing to materialize %d columns" % size)
        tgt = tensor_basis(self.cooperad.basis(n),
                           *([self.cx.basis] * n))
        ent: dict = {}
        for lab in self.cx.basis.labels():
            col: dict = {}
            for (c, args, q) in self.delta_terms(n, lab):
                col[join_label([c, *args])] = \
                    col.get(join_label([c, *args]), Q(0)) + q
            col = vclean(col)
            if col:
                ent[lab] = col
        return LinMap(self.cx.basis, tgt, 0, ent)


def _pair_avg(coll, n: int, acc: dict, deg_of) -> dict:
    """Average of keyed (c, args) sums over the diagonal S_n relation."""
    out: dict = {}
    perms = list(itertools.permutations(range(n)))
    fact = Q(1, len(perms))
    for (c, args), co in acc.items():
        degs = tuple(deg_of(a) for a in args)
        ctx = SignContext(degs)
        for sigma in perms:
            s = perm_sign(ctx, sigma)
            inv = _invert(sigma)
            new_args = tuple(args[inv[p]] for p in range(n))
            for c2, cc in coll.act_perm(n, sigma, {c: Q(1)}).items():
                k = (c2, new_args)
                out[k] = out.get(k, Q(0)) + co * cc * s * fact
    return {k: v for k, v in out.items() if v != 0}


def _slot_block_avg(C: Cooperad, m: int, k: int, acc: dict, deg_of) -> dict:
    """Average of keyed (b, e, slot, args) sums over S_m x S_k.

    Keys are in extracted normal form: b and e in front, the n = m+k-1
    arguments in slot order with the inner block expanded at ``slot``.
    """
    out: dict = {}
    perms_m = list(itertools.permutations(range(m)))
    perms_k = list(itertools.permutations(range(k)))
    fact = Q(1, len(perms_m) * len(perms_k))
    for (b, e, slot, args), co in acc.items():
        degs = [deg_of(a) for a in args]
        p0 = slot - 1
        ydegs = tuple(degs[p0:p0 + k])
        edeg = C.basis(k).degree(e)
        for rho2 in perms_k:
            s_in = perm_sign(SignContext(ydegs), rho2)
            inv2 = _invert(rho2)
            ys = args[p0:p0 + k]
            ys2 = tuple(ys[inv2[p]] for p in range(k))
            for e2, ec in C.coll.act_perm(k, rho2, {e: Q(1)}).items():
                co2 = co * ec * s_in
                # cargo list in slot order; the block is one cargo
                singles = list(args[:p0]) + list(args[p0 + k:])
                sdegs = [deg_of(a) for a in singles]
                block_deg = edeg + sum(ydegs)
                cargo_deg = sdegs[:slot - 1] + [block_deg] + \
                    sdegs[slot - 1:]
                s1 = -1 if (edeg * sum(sdegs[:slot - 1])) % 2 else 1
                for rho in perms_m:
                    s2 = perm_sign(SignContext(tuple(cargo_deg)), rho)
                    invm = _invert(rho)
                    slot2 = rho[slot - 1] + 1
                    cargo = []
                    for q in range(m):
                        if q == slot - 1:
                            cargo.append(("B", ys2))
                        elif q < slot - 1:
                            cargo.append(("S", singles[q]))
                        else:
                            cargo.append(("S", singles[q - 1]))
                    new_cargo = [cargo[invm[p]] for p in range(m)]
                    new_args: list = []
                    for item in new_cargo:
                        if item[0] == "B":
                            new_args.extend(item[1])
                        else:
                            new_args.append(item[1])
                    before = sum(deg_of(a) for a in new_args[:slot2 - 1])
                    s3 = -1 if (edeg * before) % 2 else 1
                    for b2, bc in C.coll.act_perm(m, rho, {b: Q(1)}).items():
                        key = (b2, e2, slot2, tuple(new_args))
                        out[key] = out.get(key, Q(0)) + \
                            co2 * bc * s1 * s2 * s3 * fact
    return {k: v for k, v in out.items() if v != 0}


def check_ccoalgebra(D: CCoalgebra, max_parts: int | None = None) -> list[str]:
    """Conilpotence, chain-map, and coassociativity failures."""
    C = D.cooperad
    cap = min(C.cap, max_parts or C.cap)
    labs = list(D.cx.basis.labels())
    deg = D.cx.basis.degree
    fails: list[str] = []

    # termination of the iterated comultiplication: the splitting graph
    # on basis labels must be acyclic
    edges: dict[str, set] = {l: set() for l in labs}
    for l in labs:
        for n in range(2, cap + 1):
            for (_c, args, _q) in D.delta_terms(n, l):
                edges[l].update(args)
    color: dict[str, int] = {}

    def visit(u, stack):
        color[u] = 1
        for v in edges.get(u, ()):
            if color.get(v) == 1:
                fails.append("comultiplication does not terminate: cycle "
                             "through %s" % " -> ".join(stack + [v]))
                return False
            if color.get(v, 0) == 0 and not visit(v, stack + [v]):
                return False
        color[u] = 2
        return True

    for l in labs:
        if color.get(l, 0) == 0:
            if not visit(l, [l]):
                return fails

    def note(msg):
        if len(fails) < MAX_REPORTED:
            fails.append(msg)

    # chain map: Delta^n d = (d_C (x) 1 + sum_j 1 (x) .. d .. (x) 1) Delta^n
    for n in range(2, cap + 1):
        dmat = C.coll.component(n).d
        for l in labs:
            lhs: dict = {}
            for z, qz in D.cx.d.column(l).items():
                for (c, args, q) in D.delta_terms(n, z):
                    k = (c, args)
                    lhs[k] = lhs.get(k, Q(0)) + qz * q
            rhs: dict = {}
            for (c, args, q) in D.delta_terms(n, l):
                dc = C.basis(n).degree(c)
                for c2, qc in dmat.column(c).items():
                    k = (c2, args)
                    rhs[k] = rhs.get(k, Q(0)) + q * qc
                pre = dc
                for j, a in enumerate(args):
                    sgn = -1 if pre % 2 else 1
                    for a2, qa in D.cx.d.column(a).items():
                        na = args[:j] + (a2,) + args[j + 1:]
                        k = (c, na)
                        rhs[k] = rhs.get(k, Q(0)) + q * qa * sgn
                    pre += deg(a)
            if D.mode == SYM:
                lhs = _pair_avg(C.coll, n, lhs, deg)
                rhs = _pair_avg(C.coll, n, rhs, deg)
            lhs = {k: v for k, v in lhs.items() if v != 0}
            rhs = {k: v for k, v in rhs.items() if v != 0}
            if lhs != rhs:
                note("Delta^%d is not a chain map on %s" % (n, l))

    # coassociativity, blockwise against the cooperad decomposition
    for m in range(2, cap + 1):
        for k in range(2, cap + 1):
            n = m + k - 1
            if n > cap:
                continue
            for i in range(1, m + 1):
                for x in labs:
                    lhs: dict = {}
                    for (cn, args, q) in D.delta_terms(n, x):
                        degs = tuple(deg(a) for a in args)
                        for (S, b, e, q2) in C.reduced_terms(n, cn):
                            if len(S) != k or subset_slot(S, n) != i:
                                continue
                            comp = [t for t in range(1, n + 1)
                                    if t not in S]
                            pre = tuple(t - 1 for t in comp[:i - 1])
                            post = tuple(t - 1 for t in comp[i - 1:])
                            s0 = tuple(t - 1 for t in S)
                            sh = shuffle_sign(SignContext(degs),
                                              (pre, s0, post))
                            ga = tuple(args[t] for t in pre + s0 + post)
                            key = (b, e, i, ga)
                            lhs[key] = lhs.get(key, Q(0)) + q * q2 * sh
                    rhs: dict = {}
                    for (c, zs, r) in D.delta_terms(m, x):
                        zdeg = [deg(z) for z in zs]
                        for (e, ys, s) in D.delta_terms(k, zs[i - 1]):
                            ex = C.basis(k).degree(e) * sum(zdeg[:i - 1])
                            sgn = -1 if ex % 2 else 1
                            na = zs[:i - 1] + ys + zs[i:]
                            key = (c, e, i, na)
                            rhs[key] = rhs.get(key, Q(0)) + r * s * sgn
                    if D.mode == SYM:
                        lhs = _slot_block_avg(C, m, k, lhs, deg)
                        rhs = _slot_block_avg(C, m, k, rhs, deg)
                    lhs = {kk: v for kk, v in lhs.items() if v != 0}
                    rhs = {kk: v for kk, v in rhs.items() if v != 0}
                    if lhs != rhs:
                        note("coassociativity fails at (m=%d,i=%d,k=%d) "
                             "on %s" % (m, i, k, x))
    return fails


# ---------------------------------------------------------------------------
# quasi-free objects


class QuasiFreeCoalgebra:
    """Cofree C-coalgebra on a complex with a coderivation differential."""

    def __init__(self, cooperad, gens, weight_cap, alpha, store, complex,
                 d1, d2, coalgebra, name=""):
        self.cooperad = cooperad
        self.gens = gens
        self.weight_cap = weight_cap
        self.alpha = alpha
        self.store = store
        self.complex = complex
        self.d1 = d1
        self.d2 = d2
        self.coalgebra = coalgebra
        self.name = name

    def weight(self, lab: str) -> int:
        return len(split_label(lab)) - 1

    def proj_weight(self, vec: dict, w: int) -> dict:
        return {l: c for l, c in vec.items() if self.weight(l) == w}

    def label_of(self, c_lab: str, args) -> tuple[str, Fraction] | None:
        """Stored label and coefficient for c (x) args; None if zero."""
        w = len(tuple(args))
        if w > self.weight_cap:
            raise WindowOverflowError("weight %d above cap %d"
                                      % (w, self.weight_cap))
        cp = canon_pair(self.cooperad.coll, w, c_lab, args,
                        self.gens.basis.degree)
        if cp is None:
            return None
        c2, a2, s = cp
        lab = join_label([c2, *a2])
        if lab not in self.complex.basis:
            raise ValueError("unknown element %r" % lab)
        return lab, s


class QuasiFreeAlgebra:
    """Free P-algebra on a complex with a derivation differential."""

    def __init__(self, operad, gens, weight_cap, alpha, store, complex,
                 d1, d2, algebra, name=""):
        self.operad = operad
        self.gens = gens
        self.weight_cap = weight_cap
        self.alpha = alpha
        self.store = store
        self.complex = complex
        self.d1 = d1
        self.d2 = d2
        self.algebra = algebra
        self.name = name

    def weight(self, lab: str) -> int:
        return len(split_label(lab)) - 1

    def proj_weight(self, vec: dict, w: int) -> dict:
        return {l: c for l, c in vec.items() if self.weight(l) == w}

    def label_of(self, p_lab: str, args) -> tuple[str, Fraction] | None:
        w = len(tuple(args))
        if w > self.weight_cap:
            raise WindowOverflowError("weight %d above cap %d"
                                      % (w, self.weight_cap))
        cp = canon_pair(self.operad.coll, w, p_lab, args,
                        self.gens.basis.degree)
        if cp is None:
            return None
        p2, a2, s = cp
        lab = join_label([p2, *a2])
        if lab not in self.complex.basis:
            raise ValueError("unknown element %r" % lab)
        return lab, s


def _weighted_store(coll, gens_basis: GradedBasis, cap: int):
    """Basis and label -> (head, args) table of a (co)free carrier."""
    store: dict[str, tuple[str, tuple[str, ...]]] = {}
    by_degree: dict[int, list[str]] = {}
    gl = list(gens_basis.labels())

    def put(lab, head, args, d):
        store[lab] = (head, args)
        by_degree.setdefault(d, []).append(lab)

    for v in gl:
        put(join_label([UNIT, v]), UNIT, (v,), gens_basis.degree(v))
    for w in range(2, cap + 1):
        hb = coll.basis(w)
        if coll.mode == SYM:
            trivial = all(
                coll.act_transposition(w, t, {l: Q(1)}) == {l: Q(1)}
                for l in hb.labels() for t in range(1, w))
        else:
            trivial = False
        for head in hb.labels():
            hd = hb.degree(head)
            if trivial:
                arg_iter = itertools.combinations_with_replacement(gl, w)
            else:
                arg_iter = itertools.product(gl, repeat=w)
            for args in arg_iter:
                cp = canon_pair(coll, w, head, args, gens_basis.degree)
                if cp is None:
                    continue
                h2, a2, s = cp
                if (h2, a2) != (head, args) or s != 1:
                    continue
                d = hd + sum(gens_basis.degree(a) for a in args)
                put(join_label([head, *args]), head, args, d)
    degs = list(by_degree)
    basis = GradedBasis((min(degs), max(degs)), by_degree)
    return basis, store


def _gate_twisting(alpha: OpTwisting):
    cert = alpha.certificate
    if cert is None:
        cert = check_op_twisting(alpha)
        alpha.certificate = cert
    if not cert.passed:
        raise ValueError(
            "twisting morphism %s fails its Maurer-Cartan equation "
            "(residual at arity %s on %s)"
            % (alpha.name or "<anon>", cert.residual_arity,
               cert.residual_label))


def _cofree_delta_fn(C: Cooperad, store, gdeg):
    """Comultiplications of the cofree coalgebra on stored labels."""

    def fn(n, lab):
        head, args = store[lab]
        w = len(args)
        if n < 2 or n > w:
            return ()
        acc: dict = {}
        degs = tuple(gdeg(a) for a in args)
        if C.mode == NS:
            covers = [tuple(tuple(range(1 + sum(sz[:j]),
                                        1 + sum(sz[:j + 1])))
                            for j in range(n))
                      for sz in compositions(w, n)]
        else:
            covers = list(ordered_covers(w, n))
        for blocks in covers:
            sizes = tuple(len(b) for b in blocks)
            concat = [t for b in blocks for t in b]
            if C.mode == NS:
                ks, hvec = 1, {head: Q(1)}
            else:
                sigma = [0] * w
                for pos, orig in enumerate(concat):
                    sigma[orig - 1] = pos
                sigma = tuple(sigma)
                ks = perm_sign(SignContext(degs), sigma)
                hvec = C.coll.act_perm(w, sigma, {head: Q(1)})
            new_args = tuple(args[t - 1] for t in concat)
            segs = []
            at = 0
            for sz in sizes:
                segs.append(new_args[at:at + sz])
                at += sz
            segdeg = [sum(gdeg(a) for a in s) for s in segs]
            for h2, hc in hvec.items():
                for (outer, inners, q) in C.full_delta(w, sizes).get(h2, []):
                    exp = 0
                    for j, inner in enumerate(inners):
                        exp += C.basis(sizes[j]).degree(inner) * \
                            sum(segdeg[:j])
                    coeff = ks * hc * q * (Q(-1) if exp % 2 else Q(1))
                    blabels = []
                    for inner, seg in zip(inners, segs):
                        cp = canon_pair(C.coll, len(seg), inner, seg, gdeg)
                        if cp is None:
                            coeff = Q(0)
                            break
                        cj, aj, s = cp
                        coeff *= s
                        blabels.append(join_label([cj, *aj]))
                    if coeff:
                        key = (outer, tuple(blabels))
                        acc[key] = acc.get(key, Q(0)) + coeff
        return tuple((c, a, co) for (c, a), co in sorted(acc.items())
                     if co != 0)

    return fn


def bar(alpha: OpTwisting, A: PAlgebra, weight_cap: int = 4,
        check: bool = True, on_overflow: str = "error",
        name: str = "") -> QuasiFreeCoalgebra:
    """Bar construction of A relative to the twisting morphism alpha.

    on_overflow governs terms whose algebra product leaves a truncated
    carrier: "error" raises, "drop" discards them (sound whenever the
    carrier window is closed under subwords, as for the polynomial
    fixtures).
    """
    C = alpha.source
    P = alpha.target
    if A.operad.coll is not P.coll:
        raise ValueError("algebra operad does not match the twisting target")
    if weight_cap > C.cap:
        raise ValueError("weight cap %d above cooperad arity cap %d"
                         % (weight_cap, C.cap))
    if on_overflow not in ("error", "drop"):
        raise ValueError("on_overflow must be 'error' or 'drop'")
    _gate_twisting(alpha)
    gens = A.cx
    gdeg = gens.basis.degree
    basis, store = _weighted_store(C.coll, gens.basis, weight_cap)
    name = name or "B[%s](%s)" % (alpha.name, A.name or "A")

    def canon_add(acc, head, args, coeff):
        w = len(args)
        cp = canon_pair(C.coll, w, head, args, gdeg)
        if cp is None:
            return
        h2, a2, s = cp
        lab = join_label([h2, *a2])
        acc[lab] = acc.get(lab, Q(0)) + coeff * s

    e1: dict = {}
    e2: dict = {}
    for lab, (head, args) in store.items():
        w = len(args)
        col1: dict = {}
        hd = C.basis(w).degree(head) if w >= 2 else 0
        if w >= 2:
            for h2, qc in C.coll.component(w).d.column(head).items():
                canon_add(col1, h2, args, qc)
        pre = hd
        for j, a in enumerate(args):
            sgn = Q(-1) if pre % 2 else Q(1)
            for a2, qa in A.cx.d.column(a).items():
                canon_add(col1, head, args[:j] + (a2,) + args[j + 1:],
                          sgn * qa)
            pre += gdeg(a)
        col1 = vclean(col1)
        if col1:
            e1[lab] = col1

        if w < 2:
            continue
        col2: dict = {}
        degs = tuple(gdeg(a) for a in args)
        for (S, b, e, q) in C.full_terms(w, head):
            if e == UNIT:
                continue
            k = len(S)
            m = w - k + 1
            av = alpha.apply(k, {e: Q(1)})
            if not av:
                continue
            j = subset_slot(S, w)
            comp = [t for t in range(1, w + 1) if t not in S]
            if C.mode == SYM and tuple(S) != tuple(range(S[0], S[0] + k)):
                pre_b = tuple(t - 1 for t in comp[:j - 1])
                post_b = tuple(t - 1 for t in comp[j - 1:])
                sh = shuffle_sign(SignContext(degs),
                                  (pre_b, tuple(t - 1 for t in S), post_b))
            else:
                sh = 1
            bdeg = C.basis(m).degree(b)
            edeg = C.basis(k).degree(e)
            bsum = sum(degs[t - 1] for t in comp[:j - 1])
            sgn = -1 if (bdeg + (edeg - 1) * bsum) % 2 else 1
            inner = tuple(args[t - 1] for t in S)
            try:
                gval = A.gamma(k, av, [{a: Q(1)} for a in inner])
            except WindowOverflowError:
                if on_overflow == "drop":
                    continue
                raise
            coeff0 = q * Q(sgn) * sh
            outer_args = [args[t - 1] for t in comp]
            for g_lab, gc in gval.items():
                na = tuple(outer_args[:j - 1] + [g_lab] +
                           outer_args[j - 1:])
                canon_add(col2, b, na, coeff0 * gc)
        col2 = vclean(col2)
        if col2:
            e2[lab] = col2

    d1 = LinMap(basis, basis, -1, e1)
    d2 = LinMap(basis, basis, -1, e2)
    cx = ChainComplex(basis, d1.add(d2), check=check)
    coalg = CCoalgebra(C, cx, delta_fn=_cofree_delta_fn(C, store, gdeg),
                       name=name, check=check)
    return QuasiFreeCoalgebra(C, gens, weight_cap, alpha, store, cx,
                              d1, d2, coalg, name)


def cobar(alpha: OpTwisting, D: CCoalgebra, weight_cap: int = 4,
          check: bool = True, name: str = "") -> QuasiFreeAlgebra:
    """Cobar construction of D relative to the twisting morphism alpha.

    Quadratic terms that would exceed the weight cap are discarded;
    they can never feed back into stored weights, so the truncation is
    a genuine quotient complex.
    """
    C = alpha.source
    P = alpha.target
    if D.cooperad.coll is not C.coll:
        raise ValueError("coalgebra cooperad does not match the twisting "
                         "source")
    if weight_cap > P.cap:
        raise ValueError("weight cap %d above operad arity cap %d"
                         % (weight_cap, P.cap))
    _gate_twisting(alpha)
    gens = D.cx
    gdeg = gens.basis.degree
    basis, store = _weighted_store(P.coll, gens.basis, weight_cap)
    name = name or "Omega[%s](%s)" % (alpha.name, D.name or "D")

    def canon_add(acc, head, args, coeff):
        cp = canon_pair(P.coll, len(args), head, args, gdeg)
        if cp is None:
            return
        h2, a2, s = cp
        lab = join_label([h2, *a2])
        acc[lab] = acc.get(lab, Q(0)) + coeff * s

    e1: dict = {}
    e2: dict = {}
    for lab, (head, args) in store.items():
        w = len(args)
        hd = P.coll.basis(w).degree(head) if w >= 2 else 0
        col1: dict = {}
        if w >= 2:
            for h2, qc in P.coll.component(w).d.column(head).items():
                canon_add(col1, h2, args, qc)
        pre = hd
        for j, a in enumerate(args):
            sgn = Q(-1) if pre % 2 else Q(1)
            for a2, qa in D.cx.d.column(a).items():
                canon_add(col1, head, args[:j] + (a2,) + args[j + 1:],
                          sgn * qa)
            pre += gdeg(a)
        col1 = vclean(col1)
        if col1:
            e1[lab] = col1

        col2: dict = {}
        for j in range(1, w + 1):
            x = args[j - 1]
            before = sum(gdeg(a) for a in args[:j - 1])
            for n in range(2, D.bound(x) + 1):
                if w + n - 1 > weight_cap:
                    break
                for (c, ys, r) in D.delta_terms(n, x):
                    av = alpha.apply(n, {c: Q(1)})
                    if not av:
                        continue
                    cdeg = C.basis(n).degree(c)
                    exp = hd + cdeg * before
                    coeff0 = -r * (Q(-1) if exp % 2 else Q(1))
                    na = args[:j - 1] + ys + args[j:]
                    for pl, pc in av.items():
                        nb = P.pcompose(w, {head: Q(1)}, j, n, {pl: Q(1)})
                        for b2, bc in nb.items():
                            canon_add(col2, b2, na, coeff0 * pc * bc)
        col2 = vclean(col2)
        if col2:
            e2[lab] = col2

    d1 = LinMap(basis, basis, -1, e1)
    d2 = LinMap(basis, basis, -1, e2)
    cx = ChainComplex(basis, d1.add(d2), check=check)

    def free_gamma(n, p_lab, arg_labels):
        heads, words = [], []
        for al in arg_labels:
            h, ws = store[al]
            heads.append(h)
            words.append(ws)
        wtot = sum(len(ws) for ws in words)
        if wtot > weight_cap:
            raise WindowOverflowError("weight %d above cap %d"
                                      % (wtot, weight_cap))
        # Koszul: each head crosses the argument words to its left
        exp = 0
        pre = 0
        for h, ws in zip(heads, words):
            hdg = P.coll.basis(len(ws)).degree(h) if len(ws) >= 2 else 0
            exp += hdg * pre
            pre += sum(gdeg(a) for a in ws)
        base = P.gamma(n, {p_lab: Q(1)},
                       [(len(ws), {h: Q(1)})
                        for h, ws in zip(heads, words)])
        cat = tuple(a for ws in words for a in ws)
        out: dict = {}
        sgn = Q(-1) if exp % 2 else Q(1)
        for b2, bc in base.items():
            canon_add(out, b2, cat, sgn * bc)
        return vclean(out)

    algebra = PAlgebra(P, cx, free_gamma, name=name, check=False)
    return QuasiFreeAlgebra(P, gens, weight_cap, alpha, store, cx,
                            d1, d2, algebra, name)


# ---------------------------------------------------------------------------
# twisting elements relative to a twisting morphism


@dataclass
class RelTwistingVerdict:
    passed: bool
    fail_label: str | None
    residual: dict
    labels_checked: int
    note: str = ""

    def __str__(self):
        if self.passed:
            return "PASS (%d basis elements)" % self.labels_checked
        return "FAIL at %s: residual %r" % (self.fail_label, self.residual)


def _check_phi_shape(D: CCoalgebra, A: PAlgebra, phi: LinMap):
    if phi.degree != 0:
        raise ValueError("twisting elements have degree 0, got %d"
                         % phi.degree)
    if set(phi.source.labels()) != set(D.cx.basis.labels()):
        raise ValueError("map is not defined on the coalgebra basis")
    if set(phi.target.labels()) != set(A.cx.basis.labels()):
        raise ValueError("map does not land in the algebra basis")


def twisting_residual(alpha: OpTwisting, D: CCoalgebra, A: PAlgebra,
                      phi: LinMap, lab: str) -> dict:
    """(del phi + star_alpha(phi)) evaluated on one basis label."""
    acc = A.cx.d.apply(phi.column(lab))
    acc = vadd(acc, phi.apply(D.cx.d.column(lab)), Q(-1))
    for n in range(2, D.bound(lab) + 1):
        for (c, ys, r) in D.delta_terms(n, lab):
            av = alpha.apply(n, {c: Q(1)})
            if not av:
                continue
            val = A.gamma(n, av, [phi.column(y) for y in ys])
            acc = vadd(acc, val, r)
    return vclean(acc)


def star_alpha(alpha: OpTwisting, D: CCoalgebra, A: PAlgebra,
               phi: LinMap) -> LinMap:
    """The operation phi |-> gamma_A (alpha (x) phi^n) Delta_D."""
    _check_phi_shape(D, A, phi)
    ent: dict = {}
    for lab in D.cx.basis.labels():
        acc: dict = {}
        for n in range(2, D.bound(lab) + 1):
            for (c, ys, r) in D.delta_terms(n, lab):
                av = alpha.apply(n, {c: Q(1)})
                if not av:
                    continue
                acc = vadd(acc, A.gamma(n, av,
                                        [phi.column(y) for y in ys]), r)
        acc = vclean(acc)
        if acc:
            ent[lab] = acc
    return LinMap(D.cx.basis, A.cx.basis, -1, ent)


def check_rel_twisting(alpha: OpTwisting, D: CCoalgebra, A: PAlgebra,
                       phi: LinMap) -> RelTwistingVerdict:
    """Maurer-Cartan check del(phi) + star_alpha(phi) = 0, label by label."""
    _check_phi_shape(D, A, phi)
    count = 0
    for lab in D.cx.basis.labels():
        res = twisting_residual(alpha, D, A, phi, lab)
        if res:
            return RelTwistingVerdict(False, lab, res, count)
        count += 1
    return RelTwistingVerdict(True, None, {}, count)


# ---------------------------------------------------------------------------
# the three faces of a twisting element


@dataclass
class RosettaTriple:
    alpha: OpTwisting
    D: CCoalgebra
    A: PAlgebra
    phi: LinMap
    alg: LinMap
    coalg: LinMap
    omega: QuasiFreeAlgebra
    bar: QuasiFreeCoalgebra
    verdict: RelTwistingVerdict


def _alg_from_phi(omega: QuasiFreeAlgebra, A: PAlgebra,
                  phi: LinMap) -> LinMap:
    ent: dict = {}
    for lab in omega.complex.basis.labels():
        head, args = omega.store[lab]
        try:
            col = A.gamma(len(args), {head: Q(1)},
                          [phi.column(x) for x in args])
        except WindowOverflowError as exc:
            raise ValueError("algebra-morphism form does not fit the "
                             "window: %s" % exc)
        col = vclean(col)
        if col:
            ent[lab] = col
    return LinMap(omega.complex.basis, A.cx.basis, 0, ent)


def _coalg_from_phi(barq: QuasiFreeCoalgebra, D: CCoalgebra,
                    phi: LinMap) -> LinMap:
    ent: dict = {}
    for lab in D.cx.basis.labels():
        if D.bound(lab) > barq.weight_cap:
            raise ValueError(
                "coalgebra-morphism form does not fit the window: %s "
                "splits into %d parts, cap %d"
                % (lab, D.bound(lab), barq.weight_cap))
        acc: dict = {}
        pieces = [(UNIT, (lab,), Q(1))]
        for n in range(2, D.bound(lab) + 1):
            pieces.extend(D.delta_terms(n, lab))
        for (c, ys, r) in pieces:
            for labs, co in _expand([phi.column(y) for y in ys]):
                got = barq.label_of(c, labs)
                if got is None:
                    continue
                tl, s = got
                acc[tl] = acc.get(tl, Q(0)) + r * co * s
        acc = vclean(acc)
        if acc:
            ent[lab] = acc
    return LinMap(D.cx.basis, barq.complex.basis, 0, ent)


def _phi_from_alg(omega: QuasiFreeAlgebra, A: PAlgebra,
                  f: LinMap) -> LinMap:
    ent: dict = {}
    for v in omega.gens.basis.labels():
        col = vclean(f.column(join_label([UNIT, v])))
        if col:
            ent[v] = col
    return LinMap(omega.gens.basis, A.cx.basis, 0, ent)


def _phi_from_coalg(barq: QuasiFreeCoalgebra, D: CCoalgebra,
                    f: LinMap) -> LinMap:
    ent: dict = {}
    for x in D.cx.basis.labels():
        acc: dict = {}
        for l, c in f.column(x).items():
            parts = split_label(l)
            if len(parts) == 2 and parts[0] == UNIT:
                acc[parts[1]] = acc.get(parts[1], Q(0)) + c
        acc = vclean(acc)
        if acc:
            ent[x] = acc
    return LinMap(D.cx.basis, barq.gens.basis, 0, ent)


def _validate_alg_form(omega: QuasiFreeAlgebra, A: PAlgebra,
                       f: LinMap) -> list[str]:
    fails = []
    if f.degree != 0:
        fails.append("morphism must have degree 0, got %d" % f.degree)
        return fails
    if set(f.source.labels()) != set(omega.complex.basis.labels()):
        fails.append("source is not the cobar basis")
        return fails
    phi = _phi_from_alg(omega, A, f)
    for lab in omega.complex.basis.labels():
        lhs = vclean(A.cx.d.apply(f.column(lab)))
        rhs = vclean(f.apply(omega.complex.d.column(lab)))
        if lhs != rhs:
            fails.append("not a chain map at %s" % lab)
            if len(fails) >= MAX_REPORTED:
                return fails
    for lab in omega.complex.basis.labels():
        head, args = omega.store[lab]
        if len(args) < 2:
            continue
        try:
            want = vclean(A.gamma(len(args), {head: Q(1)},
                                  [phi.column(x) for x in args]))
        except WindowOverflowError:
            fails.append("image of %s does not fit the window" % lab)
            continue
        if want != vclean(f.column(lab)):
            fails.append("not multiplicative at %s" % lab)
            if len(fails) >= MAX_REPORTED:
                return fails
    return fails


def _validate_coalg_form(barq: QuasiFreeCoalgebra, D: CCoalgebra,
                         f: LinMap) -> list[str]:
    fails = []
    if f.degree != 0:
        fails.append("morphism must have degree 0, got %d" % f.degree)
        return fails
    if set(f.source.labels()) != set(D.cx.basis.labels()):
        fails.append("source is not the coalgebra basis")
        return fails
    B = barq.coalgebra
    deg = barq.complex.basis.degree
    for lab in D.cx.basis.labels():
        lhs = vclean(barq.complex.d.apply(f.column(lab)))
        rhs = vclean(f.apply(D.cx.d.column(lab)))
        if lhs != rhs:
            fails.append("not a chain map at %s" % lab)
            if len(fails) >= MAX_REPORTED:
                return fails
    cap = min(barq.weight_cap, D.cooperad.cap)
    for lab in D.cx.basis.labels():
        for n in range(2, cap + 1):
            lhs: dict = {}
            for bl, bc in f.column(lab).items():
                for (c, bargs, q) in B.delta_terms(n, bl):
                    k = (c, bargs)
                    lhs[k] = lhs.get(k, Q(0)) + bc * q
            rhs: dict = {}
            for (c, ys, r) in D.delta_terms(n, lab):
                for labs, co in _expand([f.column(y) for y in ys]):
                    k = (c, labs)
                    rhs[k] = rhs.get(k, Q(0)) + r * co
            if D.mode == SYM:
                lhs = _pair_avg(D.cooperad.coll, n, lhs, deg)
                rhs = _pair_avg(D.cooperad.coll, n, rhs, deg)
            lhs = {k: v for k, v in lhs.items() if v != 0}
            rhs = {k: v for k, v in rhs.items() if v != 0}
            if lhs != rhs:
                fails.append("Delta^%d not respected at %s" % (n, lab))
                if len(fails) >= MAX_REPORTED:
                    return fails
    return fails


def rosetta_convert(alpha: OpTwisting, D: CCoalgebra, A: PAlgebra, x,
                    kind: str, weight_cap: int = 4, check: bool = True,
                    on_overflow: str = "error") -> RosettaTriple:
    """All three faces of a twisting element from any one of them.

    kind is "tw" (a degree-0 map D -> A), "alg" (a map defined on the
    cobar basis), or "coalg" (a map into the bar basis).  Invalid input
    is refused with a diagnosis.
    """
    omega = cobar(alpha, D, weight_cap, check=check)
    barq = bar(alpha, A, weight_cap, check=check, on_overflow=on_overflow)
    if kind == "tw":
        phi = x
        _check_phi_shape(D, A, phi)
    elif kind == "alg":
        fails = _validate_alg_form(omega, A, x)
        if fails:
            raise ValueError("not an algebra morphism off the cobar "
                             "construction:\n%s" % "\n".join(fails))
        phi = _phi_from_alg(omega, A, x)
    elif kind == "coalg":
        fails = _validate_coalg_form(barq, D, x)
        if fails:
            raise ValueError("not a coalgebra morphism into the bar "
                             "construction:\n%s" % "\n".join(fails))
        phi = _phi_from_coalg(barq, D, x)
    else:
        raise ValueError("kind must be 'tw', 'alg' or 'coalg'")
    verdict = check_rel_twisting(alpha, D, A, phi)
    if not verdict.passed:
        raise ValueError("twisting element fails its Maurer-Cartan "
                         "equation: %s" % verdict)
    return RosettaTriple(alpha, D, A, phi,
                         _alg_from_phi(omega, A, phi),
                         _coalg_from_phi(barq, D, phi),
                         omega, barq, verdict)


# ---------------------------------------------------------------------------
# base change along (co)operad morphisms


@dataclass
class CooperadMorphism:
    source: Cooperad
    target: Cooperad
    map: CollMap
    name: str = ""

    def apply(self, n: int, vec: dict) -> dict:
        return self.map.apply(n, vec)

    def check(self, max_arity: int | None = None) -> list[str]:
        return check_cooperad_morphism(self.map, self.source, self.target,
                                       max_arity)


@dataclass
class OperadMorphism:
    source: Operad
    target: Operad
    map: CollMap
    name: str = ""

    def apply(self, n: int, vec: dict) -> dict:
        return self.map.apply(n, vec)

    def check(self, max_arity: int | None = None) -> list[str]:
        return check_operad_morphism(self.map, self.source, self.target,
                                     max_arity)


def push_coalg(f: CooperadMorphism, D: CCoalgebra,
               check: bool = True) -> CCoalgebra:
    """D with structure maps pushed forward along f: C' -> C."""
    if D.cooperad.coll is not f.source.coll:
        raise ValueError("coalgebra does not live over the morphism source")

    def fn(n, lab):
        out = []
        for (c, args, q) in D.delta_terms(n, lab):
            for c2, fc in f.apply(n, {c: Q(1)}).items():
                out.append((c2, args, q * fc))
        return out

    return CCoalgebra(f.target, D.cx, delta_fn=fn, check=check,
                      name="push[%s](%s)" % (f.name, D.name or "D"))


def pull_alg(g: OperadMorphism, A: PAlgebra,
             check: bool = True) -> PAlgebra:
    """A with action pulled back along g: P -> P'."""
    if A.operad.coll is not g.target.coll:
        raise ValueError("algebra does not live over the morphism target")

    def fn(n, p_lab, args):
        out: dict = {}
        for p2, gc in g.apply(n, {p_lab: Q(1)}).items():
            out = vadd(out, A.gamma_labels(n, p2, args), gc)
        return out

    return PAlgebra(g.source, A.cx, fn, check=check,
                    name="pull[%s](%s)" % (g.name, A.name or "A"))
