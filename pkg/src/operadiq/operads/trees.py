"""Free operads on rooted trees, with the operadic bar and cobar.

A tree is a nested tuple: a leaf is the int it is labeled by, a vertex is
``(generator_label, child, ..., child)``.  In symmetric mode trees are kept
in canonical form (children of every vertex sorted by least leaf, which makes
the DFS leaf word lexicographically minimal); in nonsymmetric mode children
are planar and the leaves read 1..n left to right.

The element represented by a tree is its DFS generator word, so every sign
below is a Koszul reordering of that word.  Reordering children of a vertex
acts on the vertex generator through the stored transposition actions; those
actions must be monomial (each label goes to +-1 times a single label), which
holds for every structure built here and keeps canonical forms linear-free.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from operadiq.exact import (
    Q, GradedBasis, LinMap, join_label, tensor_basis, vclean,
)
from operadiq.complexes import ChainComplex
from operadiq.operads.core import (
    NS, SYM, UNIT, Collection, Cooperad, Operad, OpTwisting,
    check_op_twisting, subset_shuffle, subset_slot, unit_component,
)


# ---------------------------------------------------------------------------
# generator alphabets


def _check_gen_label(lab: str):
    if "|" in lab:
        raise ValueError("generator label %r contains the tensor separator" % lab)
    depth = 0
    for ch in lab:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ValueError("unbalanced parens in label %r" % lab)
        elif ch in ";," and depth == 0:
            raise ValueError("top-level %r in label %r" % (ch, lab))
    if depth != 0:
        raise ValueError("unbalanced parens in label %r" % lab)


class GenSet:
    """Tree-vertex alphabet: labels with degrees per arity >= 2, and in
    symmetric mode a monomial action of the adjacent transpositions."""

    def __init__(self, mode: str, cap: int, labels: dict[int, list[str]],
                 degrees: dict[int, dict[str, int]],
                 swaps: dict[int, dict[int, dict[str, tuple[str, int]]]] | None = None,
                 name: str = ""):
        self.mode = mode
        self.cap = cap
        self.labels = {n: list(ls) for n, ls in labels.items() if ls}
        self.degrees = degrees
        self.swaps = swaps or {}
        self.name = name
        for n, ls in self.labels.items():
            if n < 2:
                raise ValueError("generators start at arity 2")
            for lab in ls:
                _check_gen_label(lab)
        if mode == SYM:
            for n in self.labels:
                for t in range(1, n):
                    if t not in self.swaps.get(n, {}):
                        raise ValueError("missing swap (%d %d) at arity %d"
                                         % (t, t + 1, n))
        self._tree_cache: dict[int, list] = {}

    def arities(self) -> list[int]:
        return sorted(self.labels)

    def degree(self, r: int, label: str) -> int:
        return self.degrees[r][label]

    def swap(self, r: int, t: int, label: str) -> tuple[str, int]:
        """Image of ``label`` under the adjacent transposition (t, t+1)."""
        if self.mode == NS:
            raise ValueError("no actions in nonsymmetric mode")
        return self.swaps[r][t][label]


def _monomial_columns(a: LinMap) -> dict[str, tuple[str, int]]:
    out = {}
    for lab in a.source.labels():
        col = vclean(a.column(lab))
        if len(col) != 1:
            raise ValueError("action on %r is not monomial" % lab)
        (tgt, c), = col.items()
        if c not in (Q(1), Q(-1)):
            raise ValueError("action on %r has coefficient %s" % (lab, c))
        out[lab] = (tgt, 1 if c == Q(1) else -1)
    return out


def genset_from_collection(coll: Collection, shift: int = 0,
                           rename: dict[str, str] | None = None,
                           name: str = "") -> GenSet:
    """Vertex alphabet from the arity >= 2 part of a collection, with the
    component degrees shifted by ``shift`` (one (de)suspension per vertex)."""
    rn = rename or {}
    labels: dict[int, list[str]] = {}
    degrees: dict[int, dict[str, int]] = {}
    swaps: dict[int, dict[int, dict[str, tuple[str, int]]]] = {}
    for n in range(2, coll.cap + 1):
        b = coll.basis(n)
        if b.dim() == 0:
            continue
        labels[n] = [rn.get(lab, lab) for lab in b.labels()]
        degrees[n] = {rn.get(lab, lab): b.degree(lab) + shift
                      for lab in b.labels()}
        if coll.mode == SYM:
            swaps[n] = {}
            for t in range(1, n):
                mono = _monomial_columns(coll.actions[n][t])
                swaps[n][t] = {rn.get(s, s): (rn.get(l2, l2), sg)
                               for s, (l2, sg) in mono.items()}
    return GenSet(coll.mode, coll.cap, labels, degrees,
                  swaps if coll.mode == SYM else None, name=name)


# ---------------------------------------------------------------------------
# tree primitives


def is_leaf(t) -> bool:
    return isinstance(t, int)


def corolla(label: str, n: int):
    return (label,) + tuple(range(1, n + 1))


def tree_leaves(t) -> list[int]:
    if is_leaf(t):
        return [t]
    out: list[int] = []
    for c in t[1:]:
        out.extend(tree_leaves(c))
    return out


def tree_arity(t) -> int:
    return len(tree_leaves(t))


def min_leaf(t) -> int:
    if is_leaf(t):
        return t
    return min(min_leaf(c) for c in t[1:])


def tree_vertices(t) -> list[tuple[tuple, tuple]]:
    """DFS list of (path, node); paths are tuples of child indices."""
    out = []

    def walk(u, path):
        if is_leaf(u):
            return
        out.append((path, u))
        for j, c in enumerate(u[1:]):
            walk(c, path + (j,))
    walk(t, ())
    return out


def subtree_at(t, path):
    for j in path:
        t = t[j + 1]
    return t


def replace_at(t, path, new):
    if not path:
        return new
    j = path[0]
    return t[:j + 1] + (replace_at(t[j + 1], path[1:], new),) + t[j + 2:]


def tree_degree(gs: GenSet, t) -> int:
    if is_leaf(t):
        return 0
    return gs.degree(len(t) - 1, t[0]) + sum(tree_degree(gs, c) for c in t[1:])


def dfs_degrees(gs: GenSet, t) -> list[int]:
    if is_leaf(t):
        return []
    out = [gs.degree(len(t) - 1, t[0])]
    for c in t[1:]:
        out.extend(dfs_degrees(gs, c))
    return out


def relabel(t, f):
    if is_leaf(t):
        return f(t)
    return (t[0],) + tuple(relabel(c, f) for c in t[1:])


def std(t):
    """Order-preserving relabeling of the leaves to 1..k."""
    lv = sorted(tree_leaves(t))
    pos = {a: i + 1 for i, a in enumerate(lv)}
    return relabel(t, lambda a: pos[a])


def enc(t) -> str:
    if is_leaf(t):
        return str(t)
    return "(" + t[0] + ";" + ",".join(enc(c) for c in t[1:]) + ")"


def parse(s: str):
    if not s.startswith("("):
        try:
            return int(s)
        except ValueError:
            raise ValueError("bad leaf %r" % s) from None
    if not s.endswith(")"):
        raise ValueError("unbalanced %r" % s)
    body = s[1:-1]
    depth = 0
    cut = -1
    for i, ch in enumerate(body):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ValueError("unbalanced %r" % s)
        elif ch == ";" and depth == 0:
            cut = i
            break
    if cut < 1:
        raise ValueError("missing vertex label in %r" % s)
    label, rest = body[:cut], body[cut + 1:]
    parts: list[str] = []
    depth = 0
    cur: list[str] = []
    for ch in rest:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    if any(not p for p in parts):
        raise ValueError("empty child in %r" % s)
    return (label,) + tuple(parse(p) for p in parts)


# ---------------------------------------------------------------------------
# signs


def koszul_reorder_sign(degrees: list[int], order: list[int]) -> int:
    """Sign for reordering graded symbols 0..L-1 into the given order."""
    s = 1
    for p in range(len(order)):
        if degrees[order[p]] % 2 == 0:
            continue
        for q in range(p + 1, len(order)):
            if order[p] > order[q] and degrees[order[q]] % 2:
                s = -s
    return s


def canon(gs: GenSet, t) -> tuple[object, int]:
    """Sort children by least leaf; collects Koszul swap signs and the
    monomial generator action.  Identity in nonsymmetric mode."""
    if is_leaf(t):
        return t, 1
    sign = 1
    kids = []
    for c in t[1:]:
        cc, s = canon(gs, c)
        sign *= s
        kids.append(cc)
    label = t[0]
    if gs.mode == NS:
        return (label,) + tuple(kids), sign
    r = len(kids)
    mins = [min_leaf(k) for k in kids]
    degs = [tree_degree(gs, k) for k in kids]
    changed = True
    while changed:
        changed = False
        for s in range(r - 1):
            if mins[s] > mins[s + 1]:
                if degs[s] % 2 and degs[s + 1] % 2:
                    sign = -sign
                label, sg = gs.swap(r, s + 1, label)
                sign *= sg
                kids[s], kids[s + 1] = kids[s + 1], kids[s]
                mins[s], mins[s + 1] = mins[s + 1], mins[s]
                degs[s], degs[s + 1] = degs[s + 1], degs[s]
                changed = True
    return (label,) + tuple(kids), sign


def act_tree(gs: GenSet, t, sigma: tuple[int, ...]) -> tuple[object, int]:
    """Relabel leaves a -> sigma(a) (0-based sigma), then canonicalize."""
    if gs.mode == NS:
        if tuple(sigma) != tuple(range(len(sigma))):
            raise ValueError("nontrivial relabeling in ns mode")
        return t, 1
    return canon(gs, relabel(t, lambda a: sigma[a - 1] + 1))


def gamma_tree(gs: GenSet, base, parts: list) -> tuple[object, int]:
    """gamma(base; parts) with standard block relabeling.

    ``base`` has leaves 1..r, ``parts[j]`` has leaves 1..n_j; the leaves of
    part j are shifted onto the j-th consecutive block.  Returns (tree, sign)
    with the composite element equal to sign * tree.
    """
    sizes = [tree_arity(p) for p in parts]
    offs = [0]
    for s in sizes:
        offs.append(offs[-1] + s)
    base_word = dfs_degrees(gs, base)
    part_words = [dfs_degrees(gs, p) for p in parts]
    id_start = [len(base_word)]
    for w in part_words:
        id_start.append(id_start[-1] + len(w))
    degrees = base_word + [d for w in part_words for d in w]
    order: list[int] = []
    bcount = [0]

    def build(u):
        if is_leaf(u):
            j = u
            order.extend(range(id_start[j - 1], id_start[j - 1] + len(part_words[j - 1])))
            return relabel(parts[j - 1], lambda a: a + offs[j - 1])
        order.append(bcount[0])
        bcount[0] += 1
        return (u[0],) + tuple(build(c) for c in u[1:])

    out = build(base)
    return out, koszul_reorder_sign(degrees, order)


def graft(gs: GenSet, t1, i: int, t2) -> tuple[object, int]:
    """Partial composition t1 o_i t2 of standard trees (consecutive block)."""
    m = tree_arity(t1)
    parts = [1] * m
    parts[i - 1] = t2
    return gamma_tree(gs, t1, parts)


def compose_subset_tree(gs: GenSet, t1, S: tuple[int, ...], t2) -> tuple[object, int]:
    """Graft t2 over the leaf set S of the composite (std leaf labels)."""
    n = tree_arity(t1) + tree_arity(t2) - 1
    j = subset_slot(S, n)
    t0, s0 = graft(gs, t1, j, t2)
    if gs.mode == SYM and tuple(S) != tuple(range(j, j + len(S))):
        t1_, s1 = act_tree(gs, t0, subset_shuffle(tuple(S), n))
        return t1_, s0 * s1
    return t0, s0


# ---------------------------------------------------------------------------
# enumeration


def _set_partitions(items: tuple[int, ...], r: int):
    """Partitions into exactly r nonempty blocks, blocks sorted by minimum."""
    if r == 1:
        yield [list(items)]
        return
    if len(items) < r:
        return
    first, rest = items[0], items[1:]

    # first stays in block 1; distribute the rest
    def distribute(left, blocks):
        if not left:
            if len(blocks) == r and all(blocks):
                yield [sorted(b) for b in blocks]
            return
        x, more = left[0], left[1:]
        for bi in range(len(blocks)):
            blocks[bi].append(x)
            yield from distribute(more, blocks)
            blocks[bi].pop()
        if len(blocks) < r:
            blocks.append([x])
            yield from distribute(more, blocks)
            blocks.pop()
    for part in distribute(list(rest), [[first]]):
        yield sorted(part, key=min)


def all_trees(gs: GenSet, n: int) -> list:
    """Basis trees with n leaves (canonical representatives, sorted)."""
    if n in gs._tree_cache:
        return gs._tree_cache[n]
    if n == 1:
        gs._tree_cache[1] = [1]
        return gs._tree_cache[1]
    out = []
    if gs.mode == NS:
        for r in gs.arities():
            if r > n:
                continue
            for comp in _compositions(n, r):
                kid_lists = []
                off = 0
                for size in comp:
                    kids = [relabel(t, lambda a, o=off: a + o)
                            for t in all_trees(gs, size)]
                    kid_lists.append(kids)
                    off += size
                for kids in itertools.product(*kid_lists):
                    for g in gs.labels[r]:
                        out.append((g,) + tuple(kids))
    else:
        for r in gs.arities():
            if r > n:
                continue
            for blocks in _set_partitions(tuple(range(1, n + 1)), r):
                kid_lists = []
                for b in blocks:
                    pos = {i + 1: v for i, v in enumerate(b)}
                    kids = [relabel(t, lambda a, p=pos: p[a])
                            for t in all_trees(gs, len(b))]
                    kid_lists.append(kids)
                for kids in itertools.product(*kid_lists):
                    for g in gs.labels[r]:
                        out.append((g,) + tuple(kids))
    out.sort(key=enc)
    gs._tree_cache[n] = out
    return out


def _compositions(n: int, r: int):
    if r == 1:
        yield (n,)
        return
    for first in range(1, n - r + 2):
        for rest in _compositions(n - first, r - 1):
            yield (first,) + rest


def _tree_basis(gs: GenSet, n: int) -> GradedBasis:
    if n == 1:
        return GradedBasis((0, 0), {0: [UNIT]})
    trees = all_trees(gs, n)
    by_degree: dict[int, list[str]] = {}
    for t in trees:
        by_degree.setdefault(tree_degree(gs, t), []).append(enc(t))
    if not by_degree:
        return GradedBasis((0, 0), {})
    lo, hi = min(by_degree), max(by_degree)
    return GradedBasis((lo, hi), by_degree)


# ---------------------------------------------------------------------------
# the free operad


def free_operad(gs: GenSet, diffs: dict[int, LinMap] | None = None,
                name: str = "") -> Operad:
    """Free operad on the alphabet, with an optional differential per arity."""
    diffs = diffs or {}
    comps: dict[int, ChainComplex] = {}
    for n in range(1, gs.cap + 1):
        b = _tree_basis(gs, n)
        if n in diffs:
            comps[n] = ChainComplex(b, diffs[n])
        else:
            comps[n] = ChainComplex.zero_diff(b)
    actions: dict[int, dict[int, LinMap]] = {}
    if gs.mode == SYM:
        for n in range(2, gs.cap + 1):
            b = comps[n].basis
            if b.dim() == 0:
                continue
            actions[n] = {}
            for t in range(1, n):
                tau = list(range(n))
                tau[t - 1], tau[t] = tau[t], tau[t - 1]
                entries = {}
                for tr in all_trees(gs, n):
                    t2, sg = act_tree(gs, tr, tuple(tau))
                    entries[enc(tr)] = {enc(t2): Q(sg)}
                actions[n][t] = LinMap(b, b, 0, entries)
    coll = Collection(gs.mode, gs.cap, comps,
                      actions if gs.mode == SYM else None, name=name)
    partial: dict[tuple[int, int, int], LinMap] = {}
    for m in range(2, gs.cap + 1):
        for k in range(2, gs.cap + 1):
            if m + k - 1 > gs.cap:
                continue
            bm, bk = coll.basis(m), coll.basis(k)
            if bm.dim() == 0 or bk.dim() == 0:
                continue
            src = tensor_basis(bm, bk)
            tgt = coll.basis(m + k - 1)
            for i in range(1, m + 1):
                entries = {}
                for t1 in all_trees(gs, m):
                    for t2 in all_trees(gs, k):
                        res, sg = graft(gs, t1, i, t2)
                        entries[join_label([enc(t1), enc(t2)])] = {enc(res): Q(sg)}
                partial[(m, i, k)] = LinMap(src, tgt, 0, entries)
    op = Operad(coll, partial)
    op.genset = gs
    return op


def free_morphism(F: Operad, P: Operad, gen_values: dict[tuple[int, str], dict],
                  degree: int = 0, name: str = ""):
    """Operad morphism out of a free operad, from values on the corollas.

    ``gen_values[(r, label)]`` is an element of P(r) of degree
    |label| + degree; the morphism sends each basis tree to the gamma of the
    generator values along the tree, with the free operad's own signs.
    """
    from operadiq.operads.core import CollMap

    gs: GenSet = F.genset
    cache: dict[str, dict] = {}

    def ev(t) -> dict:
        if is_leaf(t):
            return {P.unit_label: Q(1)}
        key = enc(t)
        if key in cache:
            return cache[key]
        r = len(t) - 1
        kids = list(t[1:])
        sigma = []
        for kid in kids:
            sigma.extend(a - 1 for a in sorted(tree_leaves(kid)))
        sigma = tuple(sigma)
        parts_std = [std(kid) for kid in kids]
        tcons, s0 = gamma_tree(gs, corolla(t[0], r), parts_std)
        tcheck, s2 = act_tree(gs, tcons, sigma)
        if tcheck != t or s0 != 1:
            raise AssertionError("tree recursion out of step on %s" % key)
        n = tree_arity(t)
        vec = gen_values[(r, t[0])]
        cur_arity = r
        pos = 1
        for kid_std in parts_std:
            kn = tree_arity(kid_std)
            vec = P.pcompose(cur_arity, vec, pos, kn, ev(kid_std))
            cur_arity += kn - 1
            pos += kn
        if gs.mode == SYM and sigma != tuple(range(n)):
            vec = P.coll.act_perm(n, sigma, vec)
        vec = vclean({k: v * s2 for k, v in vec.items()})
        cache[key] = vec
        return vec

    comps = {}
    for n in range(1, min(F.cap, P.cap) + 1):
        sb, tb = F.basis(n), P.basis(n)
        if n == 1:
            comps[n] = LinMap(sb, tb, degree, {UNIT: {P.unit_label: Q(1)}},
                              check=False)
            continue
        entries = {}
        for t in all_trees(gs, n):
            val = ev(t)
            if val:
                entries[enc(t)] = val
        comps[n] = LinMap(sb, tb, degree, entries)
    return CollMap(F, P, degree, comps, name=name)


# ---------------------------------------------------------------------------
# cobar


def cobar_operad(C: Cooperad, rename: dict[str, str] | None = None,
                 name: str = "") -> tuple[Operad, OpTwisting]:
    """Cobar construction Omega(C) with its universal twisting morphism.

    Generators are the arity >= 2 part of C desuspended (degree |c| - 1);
    d(g_c) = -g_{dc} - sum q (-1)^{|b|} g_b o_S g_e over the reduced
    decomposition, extended as a derivation.
    """
    rn = dict(rename or {})
    for n in range(2, C.cap + 1):
        for c in C.basis(n).labels():
            rn.setdefault(c, "g" + c if not rename else c)
    gs = genset_from_collection(C.coll, shift=-1, rename=rn, name=name)

    dgen: dict[tuple[int, str], dict] = {}
    for n in range(2, C.cap + 1):
        for c in C.basis(n).labels():
            acc: dict = {}
            for c2, q in C.component(n).d.column(c).items():
                t = corolla(rn[c2], n)
                acc[t] = acc.get(t, Q(0)) - q
            for (S, b, e, q) in C.reduced_terms(n, c):
                k = len(S)
                m = n - k + 1
                sb = -1 if C.basis(m).degree(b) % 2 else 1
                t2, sg = compose_subset_tree(
                    gs, corolla(rn[b], m), S, corolla(rn[e], k))
                acc[t2] = acc.get(t2, Q(0)) - q * sb * sg
            dgen[(n, rn[c])] = {t: v for t, v in acc.items() if v != 0}

    memo: dict[str, dict] = {}

    def d_tree(t) -> dict:
        if is_leaf(t):
            return {}
        key = enc(t)
        if key in memo:
            return memo[key]
        r = len(t) - 1
        kids = list(t[1:])
        sigma = []
        for kid in kids:
            sigma.extend(a - 1 for a in sorted(tree_leaves(kid)))
        sigma = tuple(sigma)
        parts_std = [std(kid) for kid in kids]
        tcons, s0 = gamma_tree(gs, corolla(t[0], r), parts_std)
        tcheck, s2 = act_tree(gs, tcons, sigma)
        if tcheck != t or s0 != 1:
            raise AssertionError("tree recursion out of step on %s" % key)
        out: dict = {}

        def add(tree, coeff):
            if coeff:
                out[tree] = out.get(tree, Q(0)) + coeff

        for U, cU in dgen.get((r, t[0]), {}).items():
            G, sG = gamma_tree(gs, U, parts_std)
            G2, sA = act_tree(gs, G, sigma)
            add(G2, Q(cU) * sG * sA * s2)
        pref = gs.degree(r, t[0])
        for s in range(len(kids)):
            dk = d_tree(parts_std[s])
            if dk:
                dsign = -1 if pref % 2 else 1
                for K2, cK in dk.items():
                    parts2 = parts_std[:s] + [K2] + parts_std[s + 1:]
                    G, sG = gamma_tree(gs, corolla(t[0], r), parts2)
                    G2, sA = act_tree(gs, G, sigma)
                    add(G2, Q(cK) * dsign * sG * sA * s2)
            pref += tree_degree(gs, parts_std[s])
        memo[key] = {k2: v for k2, v in out.items() if v != 0}
        return memo[key]

    diffs: dict[int, LinMap] = {}
    for n in range(2, gs.cap + 1):
        b = _tree_basis(gs, n)
        if b.dim() == 0:
            continue
        entries = {}
        for t in all_trees(gs, n):
            col = d_tree(t)
            if col:
                entries[enc(t)] = {enc(k2): v for k2, v in col.items()}
        diffs[n] = LinMap(b, b, -1, entries)
    op = free_operad(gs, diffs, name=name)
    op.gen_source = {(n, rn[c]): c for n in range(2, C.cap + 1)
                     for c in C.basis(n).labels()}

    comps = {}
    for n in range(2, C.cap + 1):
        sb = C.basis(n)
        if sb.dim() == 0:
            continue
        entries = {c: {enc(corolla(rn[c], n)): Q(1)} for c in sb.labels()}
        comps[n] = LinMap(sb, op.basis(n), -1, entries)
    iota = OpTwisting(C, op, comps, name="iota_" + (C.name or "C"))
    iota.certificate = check_op_twisting(iota)
    return op, iota


# ---------------------------------------------------------------------------
# bar


def bar_operad(P: Operad, name: str = "") -> tuple[Cooperad, OpTwisting]:
    """Bar construction Bar(P) with its universal twisting morphism.

    Cofree conilpotent cooperad on the suspended arity >= 2 part of P
    (vertex degrees |p| + 1); the differential is the per-vertex internal
    part plus single-edge contractions, the decomposition cuts one edge.
    """
    gs = genset_from_collection(P.coll, shift=+1, name=name)

    def d_col(t) -> dict:
        out: dict = {}

        def add(tree, coeff):
            if coeff:
                out[tree] = out.get(tree, Q(0)) + coeff

        verts = tree_vertices(t)
        prefixes = {}
        acc = 0
        for path, node in verts:
            prefixes[path] = acc
            acc += gs.degree(len(node) - 1, node[0])
        for path, node in verts:
            r = len(node) - 1
            pu = prefixes[path]
            psign = -1 if pu % 2 else 1
            for p2, cq in P.component(r).d.column(node[0]).items():
                add(replace_at(t, path, (p2,) + node[1:]), -cq * psign)
            bsum = 0
            for j, child in enumerate(node[1:]):
                if not is_leaf(child):
                    rv = len(child) - 1
                    sgn = psign
                    if (gs.degree(rv, child[0]) % 2) and (bsum % 2):
                        sgn = -sgn
                    if P.basis(r).degree(node[0]) % 2:
                        sgn = -sgn
                    col = P.pcompose(r, {node[0]: Q(1)}, j + 1, rv,
                                     {child[0]: Q(1)})
                    merged_kids = node[1:j + 1] + child[1:] + node[j + 2:]
                    for lab, cq in col.items():
                        mt = replace_at(t, path, (lab,) + merged_kids)
                        ct, cs = canon(gs, mt)
                        add(ct, cq * sgn * cs)
                bsum += tree_degree(gs, child)
        return {k: v for k, v in out.items() if v != 0}

    comps: dict[int, ChainComplex] = {}
    for n in range(1, gs.cap + 1):
        b = _tree_basis(gs, n)
        if n == 1 or b.dim() == 0:
            comps[n] = ChainComplex.zero_diff(b)
            continue
        entries = {}
        for t in all_trees(gs, n):
            col = d_col(t)
            if col:
                entries[enc(t)] = {enc(k2): v for k2, v in col.items()}
        comps[n] = ChainComplex(b, LinMap(b, b, -1, entries))
    actions: dict[int, dict[int, LinMap]] = {}
    if gs.mode == SYM:
        for n in range(2, gs.cap + 1):
            b = comps[n].basis
            if b.dim() == 0:
                continue
            actions[n] = {}
            for tpos in range(1, n):
                tau = list(range(n))
                tau[tpos - 1], tau[tpos] = tau[tpos], tau[tpos - 1]
                entries = {}
                for tr in all_trees(gs, n):
                    t2, sg = act_tree(gs, tr, tuple(tau))
                    entries[enc(tr)] = {enc(t2): Q(sg)}
                actions[n][tpos] = LinMap(b, b, 0, entries)
    coll = Collection(gs.mode, gs.cap, comps,
                      actions if gs.mode == SYM else None, name=name)

    delta1: dict[int, dict[str, list]] = {}
    for n in range(2, gs.cap + 1):
        dd: dict[str, list] = {}
        for t in all_trees(gs, n):
            terms = []
            for path, node in tree_vertices(t):
                if path == ():
                    continue
                S = tuple(sorted(tree_leaves(node)))
                inner = std(node)
                base = std(replace_at(t, path, min(S)))
                t2, sg = compose_subset_tree(gs, base, S, inner)
                if t2 != t:
                    raise AssertionError("cut does not regraft on %s" % enc(t))
                terms.append((S, enc(base), enc(inner), Q(sg)))
            if terms:
                dd[enc(t)] = terms
        if dd:
            delta1[n] = dd
    bar = Cooperad(coll, delta1)
    bar.genset = gs

    comps_pi = {}
    for n in range(2, min(gs.cap, P.cap) + 1):
        sb = bar.basis(n)
        if sb.dim() == 0 or P.basis(n).dim() == 0:
            continue
        entries = {}
        for p in P.basis(n).labels():
            entries[enc(corolla(p, n))] = {p: Q(1)}
        comps_pi[n] = LinMap(sb, P.basis(n), -1, entries)
    pi = OpTwisting(bar, P, comps_pi, name="pi_" + (P.name or "P"))
    pi.certificate = check_op_twisting(pi)
    return bar, pi


# ---------------------------------------------------------------------------
# the unit of the bar-cobar adjunction


def bar_cobar_unit(C: Cooperad, Bar: Cooperad, Omega: Operad,
                   name: str = ""):
    """The cooperad morphism C -> Bar(Omega(C)) with corolla part s o iota.

    Solved arity by arity from the decomposition-compatibility and chain-map
    constraints; the solution is pinned by its single-vertex part and is
    checked to be unique.
    """
    from operadiq.complexes import row_reduce
    from operadiq.operads.core import CollMap, check_cooperad_morphism

    rn = {}
    for (n, g), c in Omega.gen_source.items():
        rn[(n, c)] = g

    comps: dict[int, LinMap] = {}
    for n in range(2, min(C.cap, Bar.cap) + 1):
        src = C.basis(n)
        tgt = Bar.basis(n)
        if src.dim() == 0:
            continue
        # unknowns per source label: bar trees of the same degree
        unknowns: dict[str, list[str]] = {}
        for c in src.labels():
            dc = src.degree(c)
            unknowns[c] = [lab for lab in tgt.labels() if tgt.degree(lab) == dc]
        index: dict[tuple[str, str], int] = {}
        for c in src.labels():
            for lab in unknowns[c]:
                index[(c, lab)] = len(index)
        rows: list[list[Fraction]] = []
        rhs: list[Fraction] = []

        def constraint(keyed: dict[tuple[str, str], Fraction], const: Fraction):
            row = [Q(0)] * len(index)
            for kk, v in keyed.items():
                if kk in index:
                    row[index[kk]] = row[index[kk]] + v
                elif v != 0:
                    raise AssertionError("constraint hits excluded unknown")
            rows.append(row)
            rhs.append(const)

        for c in src.labels():
            # bar vertices carry Omega basis labels, so the generator's
            # corolla appears with its own corolla encoding as vertex label
            pin = enc(corolla(enc(corolla(rn[(n, c)], n)), n))
            for lab in unknowns[c]:
                if lab == pin:
                    constraint({(c, lab): Q(1)}, Q(1))
            if pin not in unknowns[c]:
                raise AssertionError("corolla pin missing for %s" % c)
            # other corollas vanish
            for lab in unknowns[c]:
                tr = parse(lab)
                if not is_leaf(tr) and all(is_leaf(x) for x in tr[1:]) \
                        and lab != pin:
                    constraint({(c, lab): Q(1)}, Q(0))
        # chain map: d_Bar(F(c)) - F(d_C(c)) = 0
        dBar = Bar.component(n).d
        dC = C.component(n).d
        for c in src.labels():
            tgt_rows: dict[str, dict[tuple[str, str], Fraction]] = {}
            for lab in unknowns[c]:
                for t2, q in dBar.column(lab).items():
                    tgt_rows.setdefault(t2, {})[(c, lab)] = \
                        tgt_rows.setdefault(t2, {}).get((c, lab), Q(0)) + q
            for c2, q in dC.column(c).items():
                for lab in unknowns.get(c2, []):
                    tgt_rows.setdefault(lab, {})[(c2, lab)] = \
                        tgt_rows.setdefault(lab, {}).get((c2, lab), Q(0)) - q
            for t2, keyed in tgt_rows.items():
                constraint(keyed, Q(0))
        # decomposition compatibility against the lower arities
        for c in src.labels():
            lhs: dict[tuple, dict[tuple[str, str], Fraction]] = {}
            for lab in unknowns[c]:
                for (S, b, e, q) in Bar.reduced_terms(n, lab):
                    kk = (S, b, e)
                    lhs.setdefault(kk, {})[(c, lab)] = \
                        lhs.setdefault(kk, {}).get((c, lab), Q(0)) + q
            rhsd: dict[tuple, Fraction] = {}
            for (S, b, e, q) in C.reduced_terms(n, c):
                m = n - len(S) + 1
                k = len(S)
                fb = comps[m].apply({b: Q(1)}) if m in comps else {}
                fe = comps[k].apply({e: Q(1)}) if k in comps else {}
                for b2, cb in fb.items():
                    for e2, ce in fe.items():
                        kk = (S, b2, e2)
                        rhsd[kk] = rhsd.get(kk, Q(0)) + q * cb * ce
            for kk in set(lhs) | set(rhsd):
                constraint(lhs.get(kk, {}), rhsd.get(kk, Q(0)))
        aug = [row + [rhs[i]] for i, row in enumerate(rows)]
        rank_a, rref, pivots = row_reduce(aug)
        if len(index) in pivots:
            raise AssertionError("no cooperad lift at arity %d" % n)
        if len(pivots) != len(index):
            raise AssertionError("cooperad lift not unique at arity %d" % n)
        sol = [Q(0)] * len(index)
        for rr, pc in enumerate(pivots):
            sol[pc] = rref[rr][len(index)]
        entries: dict[str, dict] = {}
        for (c, lab), pos in index.items():
            if sol[pos] != 0:
                entries.setdefault(c, {})[lab] = sol[pos]
        comps[n] = LinMap(src, tgt, 0, entries)

    f = CollMap(C, Bar, 0, comps, name=name or "unit_" + (C.name or "C"))
    fails = check_cooperad_morphism(f, C, Bar)
    if fails:
        raise AssertionError("bar-cobar unit fails: %s" % fails[0])
    return f
