"""Arity-truncated operads and conilpotent cooperads over Q.

Operads are stored through their partial compositions, cooperads through the
reduced infinitesimal decomposition Delta_(1); everything else (full gamma,
full Delta, convolution structure) is derived.  In SYMMETRIC mode each
component carries explicit degree-0 action maps for the adjacent
transpositions, and Delta_(1)/composite terms are indexed by the leaf set S
of the inner factor.

Storage semantics for a Delta_(1) term (S, base, inner, q) on c of arity n:
``c`` contains the two-level element obtained by grafting ``inner`` into slot
j_S of ``base`` (j_S = #{x not in S : x < min S} + 1) and relabeling leaves
so the inner block carries S, with coefficient ``q``.  In NONSYMMETRIC mode
S is a consecutive range.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from operadiq.exact import (
    Q, GradedBasis, LinMap, TENSOR_SEP, interleave_sign, join_label,
    split_label, tensor_basis, tensor_map, vadd, vclean, vscale,
)
from operadiq.complexes import ChainComplex, HomComplex, check_d_squared, \
    hom_label, tensor_complex

NS = "ns"
SYM = "sym"

UNIT = "1"

DEFAULT_ARITY_CAP = 5
SYM_ARITY_LIMIT = 6


def unit_component() -> ChainComplex:
    b = GradedBasis((0, 0), {0: [UNIT]})
    return ChainComplex.zero_diff(b)


# ---------------------------------------------------------------------------
# permutations


def adjacent_factorization(sigma: tuple[int, ...]) -> list[int]:
    """Write sigma (0-based, sigma[i] = image of i) as adjacent swaps.

    Returns 1-based positions t; acting by the stored generator maps in the
    returned order realizes the relabeling a -> sigma(a).
    """
    seq = list(sigma)
    swaps: list[int] = []
    changed = True
    while changed:
        changed = False
        for j in range(len(seq) - 1):
            if seq[j] > seq[j + 1]:
                seq[j], seq[j + 1] = seq[j + 1], seq[j]
                swaps.append(j + 1)
                changed = True
    return swaps


def block_permutation(m: int, i: int, k: int,
                      sigma_m: tuple[int, ...] | None = None,
                      sigma_k: tuple[int, ...] | None = None) -> tuple[int, ...]:
    """The permutation sigma_m o_i sigma_k of m+k-1 letters (0-based)."""
    n = m + k - 1
    if sigma_m is None:
        sigma_m = tuple(range(m))
    if sigma_k is None:
        sigma_k = tuple(range(k))
    # positions of the blown-up blocks: slot j of sigma_m has size k if j==i-1
    sizes = [k if j == i - 1 else 1 for j in range(m)]
    starts_src = [sum(sizes[:j]) for j in range(m)]
    # target position of slot j is sigma_m[j]; block sizes permute along
    sizes_tgt = [0] * m
    for j in range(m):
        sizes_tgt[sigma_m[j]] = sizes[j]
    starts_tgt = [sum(sizes_tgt[:j]) for j in range(m)]
    out = [0] * n
    for j in range(m):
        for r in range(sizes[j]):
            inner = sigma_k[r] if j == i - 1 else 0
            out[starts_src[j] + r] = starts_tgt[sigma_m[j]] + inner
    return tuple(out)


def subset_slot(S: tuple[int, ...], n: int) -> int:
    """Planar slot of the inner block with leaf set S (1-based)."""
    return sum(1 for x in range(1, min(S)) if x not in S) + 1


def _transport_subset(S: tuple[int, ...], n: int, tau: tuple[int, ...]):
    """Transport of an inner-block leaf set under the relabeling a -> tau(a).

    Returns (S', rho_base, rho_inner): the relabeled leaf set and the 0-based
    permutations by which base and inner factors must be acted so that the
    grafting structure is preserved.
    """
    k = len(S)
    S2 = tuple(sorted(tau[s - 1] + 1 for s in S))
    rho_e = tuple(S2.index(tau[s - 1] + 1) for s in S)
    j = subset_slot(S, n)
    j2 = subset_slot(S2, n)
    comp = [x for x in range(1, n + 1) if x not in S]
    comp2 = [x for x in range(1, n + 1) if x not in S2]
    m = n - k + 1
    rho_b = [0] * m
    for q in range(1, m + 1):
        if q == j:
            rho_b[q - 1] = j2 - 1
        else:
            x = comp[q - 1] if q < j else comp[q - 2]
            idx2 = comp2.index(tau[x - 1] + 1)
            rho_b[q - 1] = idx2 if idx2 + 1 < j2 else idx2 + 1
    return S2, tuple(rho_b), rho_e


def subset_shuffle(S: tuple[int, ...], n: int) -> tuple[int, ...]:
    """Permutation (0-based) relabeling the planar composite so the inner
    block carries S: leaf a of base-then-block planar order -> sigma(a)."""
    k = len(S)
    j = subset_slot(S, n)
    comp = [x for x in range(1, n + 1) if x not in S]
    out = [0] * n
    for r in range(j - 1):
        out[r] = comp[r] - 1
    for r in range(k):
        out[j - 1 + r] = S[r] - 1
    for r in range(j - 1, len(comp)):
        out[k + r] = comp[r] - 1
    return tuple(out)


# ---------------------------------------------------------------------------
# collections


class Collection:
    """Arity-indexed chain complexes; reduced (arity 1 = Q id, degree 0)."""

    def __init__(self, mode: str, cap: int, components: dict[int, ChainComplex],
                 actions: dict[int, dict[int, LinMap]] | None = None,
                 name: str = ""):
        if mode not in (NS, SYM):
            raise ValueError("mode must be %r or %r" % (NS, SYM))
        if mode == SYM and cap > SYM_ARITY_LIMIT:
            raise ValueError(
                "symmetric collections refuse arity caps above %d"
                % SYM_ARITY_LIMIT)
        self.mode = mode
        self.cap = cap
        self.name = name
        comps = dict(components)
        comps.setdefault(1, unit_component())
        if comps[1].basis.labels() != [UNIT] or comps[1].basis.degree(UNIT) != 0:
            raise ValueError("arity 1 must be Q<%s> in degree 0" % UNIT)
        for n in comps:
            if n < 1 or n > cap:
                raise ValueError("arity %d outside cap %d" % (n, cap))
        self.components = comps
        self.actions = actions or {}
        if mode == SYM:
            self._check_actions()

    def component(self, n: int) -> ChainComplex:
        if n > self.cap:
            raise ValueError("arity %d above cap %d" % (n, self.cap))
        if n not in self.components:
            b = GradedBasis((0, 0), {})
            self.components[n] = ChainComplex.zero_diff(b)
        return self.components[n]

    def basis(self, n: int) -> GradedBasis:
        return self.component(n).basis

    def arities(self) -> list[int]:
        return [n for n in range(1, self.cap + 1)
                if self.component(n).basis.dim() > 0]

    def _check_actions(self):
        for n in range(2, self.cap + 1):
            if self.basis(n).dim() == 0:
                continue
            acts = self.actions.get(n, {})
            for t in range(1, n):
                if t not in acts:
                    raise ValueError("missing action (%d %d) in arity %d"
                                     % (t, t + 1, n))
            for t in range(1, n):
                a = acts[t]
                if not a.compose(a).add(LinMap.identity(self.basis(n)).scale(-1)).is_zero():
                    raise ValueError("action %d not involutive in arity %d" % (t, n))
            for t in range(1, n - 1):
                lhs = acts[t].compose(acts[t + 1]).compose(acts[t])
                rhs = acts[t + 1].compose(acts[t]).compose(acts[t + 1])
                if not lhs.add(rhs.scale(-1)).is_zero():
                    raise ValueError("braid relation fails in arity %d" % n)
            for t in range(1, n):
                for s in range(t + 2, n):
                    lhs = acts[t].compose(acts[s])
                    rhs = acts[s].compose(acts[t])
                    if not lhs.add(rhs.scale(-1)).is_zero():
                        raise ValueError("commuting relation fails in arity %d" % n)
            dn = self.components[n].d
            if not dn.is_zero():
                for t in range(1, n):
                    if not acts[t].compose(dn).add(dn.compose(acts[t]).scale(-1)).is_zero():
                        raise ValueError(
                            "action (%d %d) is not a chain map in arity %d"
                            % (t, t + 1, n))

    def act_transposition(self, n: int, t: int, vec: dict) -> dict:
        if self.mode == NS:
            raise ValueError("no actions in nonsymmetric mode")
        if n == 1:
            return dict(vec)
        return self.actions[n][t].apply(vec)

    def act_perm(self, n: int, sigma: tuple[int, ...], vec: dict) -> dict:
        """Relabeling action a -> sigma(a) (0-based sigma)."""
        if self.mode == NS:
            if tuple(sigma) != tuple(range(n)):
                raise ValueError("nontrivial permutation in ns mode")
            return dict(vec)
        out = dict(vec)
        for t in adjacent_factorization(tuple(sigma)):
            out = self.act_transposition(n, t, out)
        return out


# ---------------------------------------------------------------------------
# operads


class Operad:
    """Collection with partial compositions o_i (all degree 0 chain maps)."""

    def __init__(self, coll: Collection, partial: dict[tuple[int, int, int], LinMap]):
        self.coll = coll
        self.mode = coll.mode
        self.cap = coll.cap
        self.name = coll.name
        self.partial = dict(partial)
        self._fill_unit_partials()
        self._tensor_cache: dict[tuple[int, int], GradedBasis] = {}

    @property
    def unit_label(self) -> str:
        return getattr(self.coll, "unit_label", UNIT)

    def _fill_unit_partials(self):
        u = self.unit_label
        for m in range(1, self.cap + 1):
            bm = self.coll.basis(m)
            if bm.dim() == 0:
                continue
            for i in range(1, m + 1):
                key = (m, i, 1)
                if key not in self.partial:
                    src = tensor_basis(bm, self.coll.basis(1))
                    ent = {join_label([lab, u]): {lab: Q(1)}
                           for lab in bm.labels()}
                    self.partial[key] = LinMap(src, bm, 0, ent, check=False)
            key = (1, 1, m)
            if key not in self.partial:
                src = tensor_basis(self.coll.basis(1), bm)
                ent = {join_label([u, lab]): {lab: Q(1)}
                       for lab in bm.labels()}
                self.partial[key] = LinMap(src, bm, 0, ent, check=False)

    def basis(self, n):
        return self.coll.basis(n)

    def component(self, n):
        return self.coll.component(n)

    def pcompose(self, m: int, vec1: dict, i: int, k: int, vec2: dict) -> dict:
        """Element-level o_i (no Koszul signs: these are elements)."""
        key = (m, i, k)
        pc = self.partial.get(key)
        if pc is None:
            return {}
        out: dict[str, Fraction] = {}
        for l1, c1 in vec1.items():
            for l2, c2 in vec2.items():
                col = pc.column(join_label([l1, l2]))
                for t, c in col.items():
                    out[t] = out.get(t, Q(0)) + c1 * c2 * c
        return vclean(out)

    def compose_subset(self, m: int, vec1: dict, S: tuple[int, ...],
                       k: int, vec2: dict) -> dict:
        """o_S: graft at the slot determined by S, then relabel leaves."""
        n = m + k - 1
        j = subset_slot(S, n)
        out = self.pcompose(m, vec1, j, k, vec2)
        if self.mode == SYM and tuple(S) != tuple(range(j, j + k)):
            out = self.coll.act_perm(n, subset_shuffle(tuple(S), n), out)
        return out

    def gamma(self, k: int, base_vec: dict, slot_vecs: list[tuple[int, dict]]) -> dict:
        """Full composition, partials applied left to right."""
        if len(slot_vecs) != k:
            raise ValueError("gamma needs %d slot arguments" % k)
        cur = dict(base_vec)
        cur_arity = k
        pos = 1
        for (arity, vec) in slot_vecs:
            cur = self.pcompose(cur_arity, cur, pos, arity, vec)
            cur_arity = cur_arity + arity - 1
            pos += arity
        return cur

    def check_axioms(self, max_arity: int | None = None,
                     equivariance: bool = True) -> list[str]:
        """Unit, chain-map, sequential/parallel axioms, equivariance.

        Returns a list of human-readable failures (empty = pass).
        equivariance=False skips the compatibility of the partial
        compositions with the actions; hom collections carry genuine
        actions but their composition is only natural in the planar
        sense, so they are checked with the flag off.
        """
        cap = min(self.cap, max_arity or self.cap)
        fails: list[str] = []
        fails += self._check_units(cap)
        fails += self._check_chain_maps(cap)
        fails += self._check_associativity(cap)
        if self.mode == SYM and equivariance:
            fails += self._check_equivariance(cap)
        return fails

    def finalize(self, max_arity: int | None = None) -> "Operad":
        fails = self.check_axioms(max_arity)
        if fails:
            raise ValueError("operad axioms fail: %s" % fails[0])
        return self

    def _check_units(self, cap) -> list[str]:
        fails = []
        u = self.unit_label
        for m in self.coll.arities():
            if m > cap:
                continue
            for lab in self.basis(m).labels():
                v = {lab: Q(1)}
                if vclean(self.pcompose(1, {u: Q(1)}, 1, m, v)) != v:
                    fails.append("left unit fails at %s" % lab)
                for i in range(1, m + 1):
                    if vclean(self.pcompose(m, v, i, 1, {u: Q(1)})) != v:
                        fails.append("right unit fails at %s slot %d" % (lab, i))
        return fails

    def _check_chain_maps(self, cap) -> list[str]:
        fails = []
        for (m, i, k), pc in self.partial.items():
            n = m + k - 1
            if n > cap:
                continue
            tens = tensor_complex([self.component(m), self.component(k)])
            lhs = self.component(n).d.compose(pc)
            rhs = pc.compose(tens.d)
            if not lhs.add(rhs.scale(-1)).is_zero():
                fails.append("o_%d not a chain map for (%d,%d)" % (i, m, k))
        return fails

    def _check_associativity(self, cap) -> list[str]:
        fails = []
        arities = self.coll.arities()
        for l, m, k in itertools.product(arities, repeat=3):
            if l < 2 and m < 2 and k < 2:
                continue
            if l + m + k - 2 > cap:
                continue
            for el in self.basis(l).labels():
                for em in self.basis(m).labels():
                    for ek in self.basis(k).labels():
                        vl, vm, vk = {el: Q(1)}, {em: Q(1)}, {ek: Q(1)}
                        dm = self.basis(m).degree(em)
                        dk = self.basis(k).degree(ek)
                        for i in range(1, l + 1):
                            # sequential
                            for j in range(1, m + 1):
                                lhs = self.pcompose(
                                    l + m - 1, self.pcompose(l, vl, i, m, vm),
                                    i - 1 + j, k, vk)
                                rhs = self.pcompose(
                                    l, vl, i, m + k - 1,
                                    self.pcompose(m, vm, j, k, vk))
                                if lhs != rhs:
                                    fails.append(
                                        "sequential fails %s o_%d %s o_%d %s"
                                        % (el, i, em, j, ek))
                            # parallel, i < p
                            for p in range(i + 1, l + 1):
                                lhs = self.pcompose(
                                    l + m - 1, self.pcompose(l, vl, i, m, vm),
                                    p + m - 1, k, vk)
                                sign = -1 if (dm * dk) % 2 else 1
                                rhs = vscale(self.pcompose(
                                    l + k - 1, self.pcompose(l, vl, p, k, vk),
                                    i, m, vm), sign)
                                if lhs != rhs:
                                    fails.append(
                                        "parallel fails %s o_%d %s / o_%d %s"
                                        % (el, i, em, p, ek))
        return fails

    def _check_equivariance(self, cap) -> list[str]:
        fails = []
        arities = self.coll.arities()
        for m in arities:
            for k in arities:
                n = m + k - 1
                if n > cap or n < 2 or (m == 1 and k == 1):
                    continue
                for em in self.basis(m).labels():
                    for ek in self.basis(k).labels():
                        vm, vk = {em: Q(1)}, {ek: Q(1)}
                        for i in range(1, m + 1):
                            base = self.pcompose(m, vm, i, k, vk)
                            # inner permutation
                            for s in range(1, k):
                                tau = tuple(block_permutation(
                                    m, i, k,
                                    None, _adj(k, s)))
                                lhs = self.pcompose(
                                    m, vm, i, k,
                                    self.coll.act_transposition(k, s, vk))
                                rhs = self.coll.act_perm(n, tau, base)
                                if lhs != rhs:
                                    fails.append(
                                        "inner equivariance fails (%d,%d,%d)"
                                        % (m, i, k))
                            # outer adjacent transposition
                            for t in range(1, m):
                                tau = tuple(block_permutation(m, i, k,
                                                              _adj(m, t), None))
                                new_i = _adj(m, t)[i - 1] + 1
                                lhs = self.pcompose(
                                    m, self.coll.act_transposition(m, t, vm),
                                    new_i, k, vk)
                                rhs = self.coll.act_perm(n, tau, base)
                                if lhs != rhs:
                                    fails.append(
                                        "outer equivariance fails (%d,%d,%d) t=%d"
                                        % (m, i, k, t))
        return fails


def _adj(n: int, t: int) -> tuple[int, ...]:
    """Adjacent transposition (t, t+1), 1-based, as a 0-based permutation."""
    out = list(range(n))
    out[t - 1], out[t] = out[t], out[t - 1]
    return tuple(out)


# ---------------------------------------------------------------------------
# cooperads


DeltaTerm = tuple[tuple[int, ...], str, str, Fraction]  # (S, base, inner, q)


class Cooperad:
    """Collection with the reduced infinitesimal decomposition."""

    def __init__(self, coll: Collection,
                 delta1: dict[int, dict[str, list[DeltaTerm]]]):
        self.coll = coll
        self.mode = coll.mode
        self.cap = coll.cap
        self.name = coll.name
        self.delta1 = {n: {lab: [(tuple(S), b, e, Q(q)) for (S, b, e, q) in terms]
                           for lab, terms in d.items()}
                       for n, d in delta1.items()}
        self._validate()
        self._dual: Operad | None = None
        self._full_cache: dict = {}

    def basis(self, n):
        return self.coll.basis(n)

    def component(self, n):
        return self.coll.component(n)

    def reduced_terms(self, n: int, label: str) -> list[DeltaTerm]:
        return self.delta1.get(n, {}).get(label, [])

    def full_terms(self, n: int, label: str) -> list[DeltaTerm]:
        """Reduced terms plus the primitive ones with an arity-1 factor."""
        out = list(self.reduced_terms(n, label))
        if n >= 2:
            out.append((tuple(range(1, n + 1)), UNIT, label, Q(1)))
            for i in range(1, n + 1):
                out.append(((i,), label, UNIT, Q(1)))
        return out

    def _validate(self):
        for n, d in self.delta1.items():
            for lab, terms in d.items():
                dl = self.basis(n).degree(lab)
                for (S, b, e, q) in terms:
                    k = len(S)
                    m = n - k + 1
                    if k < 2 or m < 2:
                        raise ValueError(
                            "reduced Delta_(1) term with arity-1 factor on %r"
                            % lab)
                    if tuple(sorted(S)) != S or not set(S) <= set(range(1, n + 1)):
                        raise ValueError("bad leaf set %r" % (S,))
                    if self.mode == NS and S != tuple(range(S[0], S[0] + k)):
                        raise ValueError("non-consecutive S in ns mode: %r" % (S,))
                    if self.basis(m).degree(b) + self.basis(k).degree(e) != dl:
                        raise ValueError("Delta_(1) not degree 0 on %r" % lab)

    def conilpotence_bound(self, n: int, label: str) -> int:
        """Iterations of the reduced Delta_(1) before it vanishes."""
        frontier = {(n, label)}
        depth = 0
        while frontier:
            nxt = set()
            for (a, lab) in frontier:
                for (S, b, e, _q) in self.reduced_terms(a, lab):
                    nxt.add((a - len(S) + 1, b))
                    nxt.add((len(S), e))
            frontier = nxt
            depth += 1
            if depth > self.cap + 1:
                raise ValueError("conilpotence bound exceeded on %r" % label)
        return depth

    # -- derived structure ---------------------------------------------------

    def dual_operad(self) -> Operad:
        """Transpose of Delta_(1): o_i entry (a",b") -> c" gets the pairing
        sign (-1)^{|a||b|} against the (S consecutive at i) component."""
        if self._dual is not None:
            return self._dual
        from operadiq.complexes import dual as dual_cx

        comps: dict[int, ChainComplex] = {}
        for n in range(1, self.cap + 1):
            comps[n] = _dual_keep_labels(self.component(n))
        coll = Collection(self.mode, self.cap, comps,
                          actions={n: {t: _transpose_keep_labels(a, comps[n].basis)
                                       for t, a in acts.items()}
                                   for n, acts in self.coll.actions.items()},
                          name=self.name + "^")
        partial: dict[tuple[int, int, int], LinMap] = {}
        for n, d in self.delta1.items():
            for lab, terms in d.items():
                for (S, b, e, q) in terms:
                    k = len(S)
                    m = n - k + 1
                    i = subset_slot(S, n)
                    if self.mode == SYM and S != tuple(range(i, i + k)):
                        continue
                    key = (m, i, k)
                    if key not in partial:
                        src = tensor_basis(coll.basis(m), coll.basis(k))
                        partial[key] = LinMap.zero(src, coll.basis(n), 0)
                    db = self.basis(m).degree(b)
                    de = self.basis(k).degree(e)
                    sign = -1 if (db * de) % 2 else 1
                    ent = dict(partial[key].entries)
                    col = dict(ent.get(join_label([b, e]), {}))
                    col[lab] = col.get(lab, Q(0)) + sign * q
                    ent[join_label([b, e])] = col
                    partial[key] = LinMap(partial[key].source, coll.basis(n), 0,
                                          ent, check=False)
        self._dual = Operad(coll, partial)
        return self._dual

    def full_delta(self, n: int, lengths: tuple[int, ...]):
        """Components of iterated Delta with consecutive blocks ``lengths``.

        Returns {label: [(base, (inner_1..inner_k), q)]} where the inners sit
        over consecutive leaf blocks of the given lengths.
        """
        key = (n, tuple(lengths))
        if key in self._full_cache:
            return self._full_cache[key]
        if sum(lengths) != n:
            raise ValueError("lengths must sum to the arity")
        k = len(lengths)
        dual = self.dual_operad()
        out: dict[str, list] = {}
        base_b = dual.basis(k)
        inner_bs = [dual.basis(l) for l in lengths]
        for bl in base_b.labels():
            for combo in itertools.product(*[b.labels() for b in inner_bs]):
                res = dual.gamma(k, {bl: Q(1)},
                                 [(l, {c: Q(1)}) for l, c in zip(lengths, combo)])
                for tgt, coeff in res.items():
                    degs = [self.basis(k).degree(bl)] + \
                        [self.basis(l).degree(c) for l, c in zip(lengths, combo)]
                    eps = sum(degs[i] * degs[j]
                              for i in range(len(degs))
                              for j in range(i + 1, len(degs)))
                    sign = -1 if eps % 2 else 1
                    out.setdefault(tgt, []).append((bl, tuple(combo),
                                                    sign * coeff))
        # merge duplicates
        merged: dict[str, list] = {}
        for tgt, terms in out.items():
            acc: dict = {}
            for (bl, inns, c) in terms:
                acc[(bl, inns)] = acc.get((bl, inns), Q(0)) + c
            merged[tgt] = [(bl, inns, c) for (bl, inns), c in sorted(acc.items())
                           if c != 0]
        self._full_cache[key] = merged
        return merged

    def check_coassociativity(self, max_arity: int | None = None) -> list[str]:
        fails = self.dual_operad().check_axioms(max_arity)
        if self.mode == SYM:
            fails += self._check_delta_equivariance(max_arity)
        return fails

    def _check_delta_equivariance(self, max_arity: int | None = None) -> list[str]:
        """Delta_(1) commutes with relabeling: the terms of c^tau are the
        leafwise transport of the terms of c (no Koszul sign; the two tensor
        factors keep their order)."""
        cap = min(self.cap, max_arity or self.cap)
        fails = []
        for n in range(3, cap + 1):
            for lab in self.basis(n).labels():
                for t in range(1, n):
                    tau = _adj(n, t)
                    lhs: dict = {}
                    for lab2, c in self.coll.act_transposition(
                            n, t, {lab: Q(1)}).items():
                        for (S, b, e, q) in self.reduced_terms(n, lab2):
                            lhs = vadd(lhs, {(S, b, e): c * q})
                    rhs: dict = {}
                    for (S, b, e, q) in self.reduced_terms(n, lab):
                        S2, rho_b, rho_e = _transport_subset(S, n, tau)
                        m, k = n - len(S) + 1, len(S)
                        vb = self.coll.act_perm(m, rho_b, {b: Q(1)})
                        ve = self.coll.act_perm(k, rho_e, {e: Q(1)})
                        for b2, cb in vb.items():
                            for e2, ce in ve.items():
                                rhs = vadd(rhs, {(S2, b2, e2): q * cb * ce})
                    if vclean(lhs) != vclean(rhs):
                        fails.append(
                            "Delta_(1) equivariance fails on %s, swap (%d %d)"
                            % (lab, t, t + 1))
        return fails

    def finalize(self, max_arity: int | None = None) -> "Cooperad":
        fails = self.check_coassociativity(max_arity)
        if fails:
            raise ValueError("cooperad axioms fail: %s" % fails[0])
        return self


def _dual_keep_labels(cx: ChainComplex) -> ChainComplex:
    """Dual complex but reusing the original labels (self-dual bases)."""
    b = cx.basis
    nb = GradedBasis((-b.window[1], -b.window[0]),
                     {-d: list(b.by_degree[d]) for d in b.degrees()})
    entries: dict[str, dict[str, Fraction]] = {}
    for src, col in cx.d.entries.items():
        for tgt, c in col.items():
            s = -1 if nb.degree(tgt) % 2 else 1
            entries.setdefault(tgt, {})[src] = -s * c
    return ChainComplex(nb, LinMap(nb, nb, -1, entries, check=False),
                        check=False)


def _transpose_keep_labels(a: LinMap, nb: GradedBasis) -> LinMap:
    entries: dict[str, dict[str, Fraction]] = {}
    for src, col in a.entries.items():
        for tgt, c in col.items():
            entries.setdefault(tgt, {})[src] = c
    return LinMap(nb, nb, 0, entries, check=False)


# ---------------------------------------------------------------------------
# collection maps, twisting morphisms, convolution


@dataclass
class CollMap:
    """Arity-wise family of linear maps between two collections."""

    source: object
    target: object
    degree: int
    comps: dict[int, LinMap]
    name: str = ""

    def comp(self, n: int) -> LinMap:
        if n in self.comps:
            return self.comps[n]
        sb = _coll_of(self.source).basis(n)
        tb = _coll_of(self.target).basis(n)
        return LinMap.zero(sb, tb, self.degree)

    def apply(self, n: int, vec: dict) -> dict:
        return self.comp(n).apply(vec)


def _coll_of(x) -> Collection:
    if isinstance(x, Collection):
        return x
    return x.coll


def op_morphism_unit(op: Operad) -> CollMap:
    return CollMap(op, op, 0,
                   {n: LinMap.identity(op.basis(n)) for n in op.coll.arities()})


def check_operad_morphism(f: CollMap, source: Operad, target: Operad,
                          max_arity: int | None = None) -> list[str]:
    cap = min(source.cap, target.cap, max_arity or source.cap)
    fails = []
    if vclean(f.apply(1, {UNIT: Q(1)})) != {UNIT: Q(1)}:
        fails.append("unit not preserved")
    for n in range(1, cap + 1):
        lhs = f.comp(n).compose(source.component(n).d)
        rhs = target.component(n).d.compose(f.comp(n))
        if not lhs.add(rhs.scale(-1)).is_zero():
            fails.append("not a chain map in arity %d" % n)
    for (m, i, k) in source.partial:
        if m + k - 1 > cap or m > cap or k > cap:
            continue
        for lm in source.basis(m).labels():
            for lk in source.basis(k).labels():
                lhs = f.apply(m + k - 1,
                              source.pcompose(m, {lm: Q(1)}, i, k, {lk: Q(1)}))
                rhs = target.pcompose(m, f.apply(m, {lm: Q(1)}), i, k,
                                      f.apply(k, {lk: Q(1)}))
                if lhs != rhs:
                    fails.append("o_%d not preserved on (%s,%s)" % (i, lm, lk))
    return fails


def check_cooperad_morphism(f: CollMap, source: Cooperad, target: Cooperad,
                            max_arity: int | None = None) -> list[str]:
    """Delta_(1) o f = (f (x) f) o Delta_(1) on the reduced parts."""
    cap = min(source.cap, target.cap, max_arity or source.cap)
    fails = []
    for n in range(1, cap + 1):
        lhs_d = f.comp(n).compose(source.component(n).d)
        rhs_d = target.component(n).d.compose(f.comp(n))
        if not lhs_d.add(rhs_d.scale(-1)).is_zero():
            fails.append("not a chain map in arity %d" % n)
        for lab in source.basis(n).labels():
            lhs: dict = {}
            for tgt, c in f.apply(n, {lab: Q(1)}).items():
                for (S, b, e, q) in target.reduced_terms(n, tgt):
                    lhs = vadd(lhs, {(S, b, e): c * q})
            rhs: dict = {}
            for (S, b, e, q) in source.reduced_terms(n, lab):
                fb = f.apply(n - len(S) + 1, {b: Q(1)})
                fe = f.apply(len(S), {e: Q(1)})
                for b2, cb in fb.items():
                    for e2, ce in fe.items():
                        rhs = vadd(rhs, {(S, b2, e2): q * cb * ce})
            if vclean(lhs) != vclean(rhs):
                fails.append("Delta_(1) not preserved on %s (arity %d)"
                             % (lab, n))
    return fails


@dataclass
class TwistingCertificate:
    passed: bool
    cap: int
    residual_arity: int | None = None
    residual_label: str | None = None


@dataclass
class OpTwisting:
    """Degree -1 arity-preserving map C -> P with del(a) + a * a = 0."""

    source: Cooperad
    target: Operad
    comps: dict[int, LinMap]
    name: str = ""
    certificate: TwistingCertificate | None = None

    def comp(self, n: int) -> LinMap:
        if n in self.comps:
            return self.comps[n]
        return LinMap.zero(self.source.basis(n), self.target.basis(n), -1)

    def apply(self, n: int, vec: dict) -> dict:
        return self.comp(n).apply(vec)

    def as_coll_map(self) -> CollMap:
        return CollMap(self.source, self.target, -1, self.comps, self.name)


def star_op(C: Cooperad, P: Operad, f: CollMap, g: CollMap) -> CollMap:
    """Convolution pre-Lie product f * g = gamma_(1)(f o_(1) g)Delta_(1)."""
    comps: dict[int, LinMap] = {}
    cap = min(C.cap, P.cap)
    for n in range(1, cap + 1):
        sb, tb = C.basis(n), P.basis(n)
        entries: dict[str, dict[str, Fraction]] = {}
        for lab in sb.labels():
            acc: dict = {}
            for (S, b, e, q) in C.full_terms(n, lab):
                k = len(S)
                m = n - k + 1
                fb = f.apply(m, {b: Q(1)})
                ge = g.apply(k, {e: Q(1)})
                if not fb or not ge:
                    continue
                sign = -1 if (g.degree * C.basis(m).degree(b)) % 2 else 1
                res = P.compose_subset(m, fb, S, k, ge)
                acc = vadd(acc, res, q * sign)
            acc = vclean(acc)
            if acc:
                entries[lab] = acc
        comps[n] = LinMap(sb, tb, f.degree + g.degree, entries, check=False)
    return CollMap(C, P, f.degree + g.degree, comps)


def op_bracket(C: Cooperad, P: Operad, f: CollMap, g: CollMap) -> CollMap:
    fg = star_op(C, P, f, g)
    gf = star_op(C, P, g, f)
    sign = -1 if (f.degree * g.degree) % 2 else 1
    comps = {n: fg.comp(n).add(gf.comp(n).scale(-sign))
             for n in range(1, min(C.cap, P.cap) + 1)}
    return CollMap(C, P, f.degree + g.degree, comps)


def hom_partial_d(C: Cooperad, P: Operad, f: CollMap) -> CollMap:
    """del(f) = d_P o f - (-1)^{|f|} f o d_C, arity-wise."""
    sign = -1 if f.degree % 2 else 1
    comps = {}
    for n in range(1, min(C.cap, P.cap) + 1):
        comps[n] = P.component(n).d.compose(f.comp(n)).add(
            f.comp(n).compose(C.component(n).d).scale(-sign))
    return CollMap(C, P, f.degree - 1, comps)


def check_op_twisting(alpha: OpTwisting,
                      max_arity: int | None = None) -> TwistingCertificate:
    C, P = alpha.source, alpha.target
    cap = min(C.cap, P.cap, max_arity or C.cap)
    if not alpha.comp(1).is_zero():
        return TwistingCertificate(False, cap, 1, UNIT)
    for n in alpha.comps:
        if alpha.comps[n].degree != -1:
            raise ValueError("twisting morphism must have degree -1")
    cm = alpha.as_coll_map()
    d_alpha = hom_partial_d(C, P, cm)
    sq = star_op(C, P, cm, cm)
    for n in range(1, cap + 1):
        resid = d_alpha.comp(n).add(sq.comp(n))
        hit = resid.first_nonzero()
        if hit is not None:
            cert = TwistingCertificate(False, cap, n, hit[0])
            alpha.certificate = cert
            return cert
    cert = TwistingCertificate(True, cap)
    alpha.certificate = cert
    return cert


def push_tw(alpha: OpTwisting, g: CollMap, target: Operad) -> OpTwisting:
    """g o alpha for an operad morphism g: P -> P'."""
    comps = {n: g.comp(n).compose(alpha.comp(n))
             for n in range(1, min(alpha.source.cap, target.cap) + 1)}
    out = OpTwisting(alpha.source, target, comps,
                     name="%s.%s" % (g.name or "g", alpha.name))
    out.certificate = check_op_twisting(out)
    return out


def pull_tw(alpha: OpTwisting, f: CollMap, source: Cooperad) -> OpTwisting:
    """alpha o f for a cooperad morphism f: C' -> C."""
    comps = {n: alpha.comp(n).compose(f.comp(n))
             for n in range(1, min(source.cap, alpha.target.cap) + 1)}
    out = OpTwisting(source, alpha.target, comps,
                     name="%s.%s" % (alpha.name, f.name or "f"))
    out.certificate = check_op_twisting(out)
    return out


# ---------------------------------------------------------------------------
# two-level composite elements and the infinitesimal composite of maps


@dataclass
class TwoLevel:
    """Element of M(k) (x) N(n_1) (x) ... (x) N(n_k), stored sparsely.

    Keys are (base_label, (slot_labels...)); the slot arities are fixed by
    the signature.
    """

    base_arity: int
    slot_arities: tuple[int, ...]
    terms: dict[tuple[str, tuple[str, ...]], Fraction] = field(default_factory=dict)

    def add(self, base: str, slots: tuple[str, ...], coeff: Fraction):
        key = (base, tuple(slots))
        self.terms[key] = self.terms.get(key, Q(0)) + coeff
        if self.terms[key] == 0:
            del self.terms[key]


def inf_composite(f: CollMap, g: CollMap, marked_only: bool = False):
    """f o' g on two-level elements: f on the base, g on exactly one slot.

    Returns a function TwoLevel -> list of (slot_index, TwoLevel) pairs
    collecting the image per marked slot.
    """
    def run(el: TwoLevel):
        out: dict[int, TwoLevel] = {}
        for (base, slots), coeff in el.terms.items():
            fb = f.apply(el.base_arity, {base: Q(1)})
            if not fb:
                continue
            base_deg = _coll_of(f.source).basis(el.base_arity).degree(base)
            slot_degs = [_coll_of(g.source).basis(a).degree(s)
                         for a, s in zip(el.slot_arities, slots)]
            for idx in range(len(slots)):
                gv = g.apply(el.slot_arities[idx], {slots[idx]: Q(1)})
                if not gv:
                    continue
                # Koszul: g passes the base and the earlier slots
                exp = g.degree * (base_deg + sum(slot_degs[:idx]))
                sign = -1 if exp % 2 else 1
                tl = out.setdefault(idx, TwoLevel(el.base_arity, el.slot_arities))
                for bl, cb in fb.items():
                    for sl, cs in gv.items():
                        new_slots = list(slots)
                        new_slots[idx] = sl
                        tl.add(bl, tuple(new_slots), sign * coeff * cb * cs)
        return sorted(out.items())
    return run


def convolution_operad(C: Cooperad, P: Operad) -> Operad:
    """hom(C, P) with composition through Delta and conjugation actions.

    Partial composition pairs f o_i g against the decomposition terms
    whose inner block sits at slot i in the min-ordered normal form.
    This satisfies the unit and associativity axioms; the o_i family is
    not stable under the conjugation action (only the slot-summed star
    product is), so check with equivariance=False.
    """
    cap = min(C.cap, P.cap)
    homs = {n: HomComplex(C.component(n), P.component(n))
            for n in range(1, cap + 1)}
    comps = {n: homs[n].cx for n in range(1, cap + 1)}
    unit_lab = hom_label(UNIT, UNIT)
    coll_comps = dict(comps)
    actions: dict[int, dict[int, LinMap]] = {}
    if C.mode == SYM:
        for n in range(2, cap + 1):
            acts = {}
            for t in range(1, n):
                ent: dict[str, dict[str, Fraction]] = {}
                for lab in homs[n].basis.labels():
                    fmap = homs[n].as_map({lab: Q(1)})
                    conj = _conjugate(C, P, n, t, fmap)
                    col = homs[n].from_map(conj)
                    if col:
                        ent[lab] = col
                acts[t] = LinMap(homs[n].basis, homs[n].basis, 0, ent,
                                 check=False)
            actions[n] = acts
    name = "hom(%s,%s)" % (C.name, P.name)
    # build a collection whose arity-1 part is the actual hom complex; the
    # reduced-unit convention is imposed by relabeling 1'|1 as the unit.
    coll = _HomCollection(C.mode, cap, coll_comps, actions, name, unit_lab)
    partial: dict[tuple[int, int, int], LinMap] = {}
    for m in range(1, cap + 1):
        for k in range(1, cap + 1):
            n = m + k - 1
            if n > cap or (m == 1 and k == 1):
                continue
            src = tensor_basis(homs[m].basis, homs[k].basis)
            for i in range(1, m + 1):
                entries: dict[str, dict[str, Fraction]] = {}
                for lf in homs[m].basis.labels():
                    fmap = homs[m].as_map({lf: Q(1)})
                    for lg in homs[k].basis.labels():
                        gmap = homs[k].as_map({lg: Q(1)})
                        res = _conv_partial(C, P, n, m, i, k, fmap, gmap)
                        col = homs[n].from_map(res) if res is not None else {}
                        col = vclean(col)
                        if col:
                            entries[join_label([lf, lg])] = col
                partial[(m, i, k)] = LinMap(src, homs[n].basis, 0, entries,
                                            check=False)
    return Operad(coll, partial)


class _HomCollection(Collection):
    """Collection for convolution operads; arity 1 is the full hom complex
    but the operadic unit is the element 1' | 1."""

    def __init__(self, mode, cap, components, actions, name, unit_label):
        # bypasses Collection.__init__ (the arity-1 component here is the
        # full hom complex, not Q<1>)
        self.unit_label = unit_label
        if mode not in (NS, SYM):
            raise ValueError("bad mode")
        if mode == SYM and cap > SYM_ARITY_LIMIT:
            raise ValueError("symmetric cap too large")
        self.mode = mode
        self.cap = cap
        self.name = name
        self.components = dict(components)
        self.actions = actions or {}
        if mode == SYM:
            self._check_actions()


def _conv_partial(C: Cooperad, P: Operad, n, m, i, k, fmap: LinMap,
                  gmap: LinMap) -> LinMap | None:
    """(f o_i g)(c) over the Delta_(1) terms whose block sits at slot i."""
    entries: dict[str, dict[str, Fraction]] = {}
    fdeg, gdeg = fmap.degree, gmap.degree
    for lab in C.basis(n).labels():
        acc: dict = {}
        for (S, b, e, q) in C.full_terms(n, lab):
            if len(S) != k or subset_slot(S, n) != i:
                continue
            fb = fmap.apply({b: Q(1)})
            ge = gmap.apply({e: Q(1)})
            if not fb or not ge:
                continue
            sign = -1 if (gdeg * C.basis(m).degree(b)) % 2 else 1
            res = P.compose_subset(m, fb, S, k, ge)
            acc = vadd(acc, res, q * sign)
        acc = vclean(acc)
        if acc:
            entries[lab] = acc
    return LinMap(C.basis(n), P.basis(n), fdeg + gdeg, entries, check=False)


def _conjugate(C: Cooperad, P: Operad, n: int, t: int, fmap: LinMap) -> LinMap:
    """(f^tau)(x) = f(x^tau)^tau for the adjacent transposition tau."""
    entries: dict[str, dict[str, Fraction]] = {}
    for lab in C.basis(n).labels():
        v = C.coll.act_transposition(n, t, {lab: Q(1)})
        out = P.coll.act_transposition(n, t, fmap.apply(v)) if v else {}
        out = vclean(out)
        if out:
            entries[lab] = out
    return LinMap(C.basis(n), P.basis(n), fmap.degree, entries, check=False)


# ---------------------------------------------------------------------------
# linear duality and (co)invariants


def dual_cooperad(P: Operad) -> Cooperad:
    """Linear dual of an operad as a cooperad on the same labels.

    Inverse of Cooperad.dual_operad: the Delta_(1) entry against a partial
    composition entry carries the pairing sign (-1)^{|a||b|}; only the
    consecutive leaf sets are populated, so in symmetric mode the result is
    the dual with its decomposition stored through consecutive blocks plus
    the action-transported rest.
    """
    comps = {n: _dual_keep_labels(P.component(n)) for n in range(1, P.cap + 1)}
    coll = Collection(P.mode, P.cap, comps,
                      actions={n: {t: _transpose_keep_labels(a, comps[n].basis)
                                   for t, a in acts.items()}
                               for n, acts in P.coll.actions.items()},
                      name=(P.name or "P") + "^")
    delta1: dict[int, dict[str, list[DeltaTerm]]] = {}
    for (m, i, k), pc in P.partial.items():
        if m == 1 or k == 1:
            continue
        n = m + k - 1
        if n > P.cap:
            continue
        S = tuple(range(i, i + k))
        for src, col in pc.entries.items():
            parts = split_label(src)
            b, e = parts[0], parts[1]
            db = P.basis(m).degree(b)
            de = P.basis(k).degree(e)
            sign = -1 if (db * de) % 2 else 1
            for lab, q in col.items():
                if q == 0:
                    continue
                delta1.setdefault(n, {}).setdefault(lab, []).append(
                    (S, b, e, sign * q))
    if P.mode == SYM:
        delta1 = _saturate_delta(coll, delta1)
    return Cooperad(coll, delta1)


def _saturate_delta(coll: Collection, delta1):
    """Extend consecutive-block Delta_(1) data over all leaf sets by
    equivariance (transport along adjacent relabelings until closure)."""
    full: dict[int, dict[str, dict]] = {}
    for n, d in delta1.items():
        full[n] = {}
        for lab, terms in d.items():
            acc: dict = {}
            for (S, b, e, q) in terms:
                acc[(tuple(S), b, e)] = acc.get((tuple(S), b, e), Q(0)) + q
            full[n][lab] = acc
    for n in sorted(full):
        changed = True
        while changed:
            changed = False
            for t in range(1, n):
                tau = _adj(n, t)
                for lab in list(coll.basis(n).labels()):
                    # transport of the terms of lab under tau
                    transported: dict = {}
                    for (S, b, e), q in full[n].get(lab, {}).items():
                        S2, rho_b, rho_e = _transport_subset(S, n, tau)
                        m, k = n - len(S) + 1, len(S)
                        vb = coll.act_perm(m, rho_b, {b: Q(1)})
                        ve = coll.act_perm(k, rho_e, {e: Q(1)})
                        for b2, cb in vb.items():
                            for e2, ce in ve.items():
                                kk = (S2, b2, e2)
                                transported[kk] = transported.get(kk, Q(0)) \
                                    + q * cb * ce
                    # lab^tau is a monomial-free linear combination in general;
                    # distribute the transported terms accordingly
                    img = coll.act_transposition(n, t, {lab: Q(1)})
                    if len(img) != 1:
                        raise ValueError(
                            "saturation needs monomial actions (label %r)" % lab)
                    (lab2, c2), = img.items()
                    for kk, q in transported.items():
                        cur = full[n].setdefault(lab2, {})
                        want = q / c2
                        if cur.get(kk, Q(0)) == 0 and want != 0:
                            cur[kk] = want
                            changed = True
                        elif cur.get(kk, Q(0)) not in (Q(0), want):
                            raise ValueError(
                                "inconsistent transport on %r" % lab2)
    out: dict[int, dict[str, list[DeltaTerm]]] = {}
    for n, d in full.items():
        for lab, acc in d.items():
            terms = [(S, b, e, q) for (S, b, e), q in sorted(acc.items())
                     if q != 0]
            if terms:
                out.setdefault(n, {})[lab] = terms
    return out


def symmetric_average(coll: Collection, n: int, vec: dict) -> dict:
    """Average of the S_n orbit; a projection onto the invariants."""
    if coll.mode != SYM:
        raise ValueError("averaging needs symmetric mode")
    out: dict = {}
    count = 0
    for sig in itertools.permutations(range(n)):
        out = vadd(out, coll.act_perm(n, sig, vec))
        count += 1
    return vclean({k: v / count for k, v in out.items()})


def coinvariant_relations(coll: Collection, n: int) -> list[dict]:
    """Spanning set of the coinvariant relations x^tau - x."""
    rels = []
    for t in range(1, n):
        for lab in coll.basis(n).labels():
            r = vadd(coll.act_transposition(n, t, {lab: Q(1)}),
                     {lab: Q(-1)})
            r = vclean(r)
            if r:
                rels.append(r)
    return rels


def coinvariant_reduce(coll: Collection, n: int, vec: dict) -> dict:
    """Canonical representative of the class of vec in the coinvariants."""
    from operadiq.complexes import row_reduce

    labels = coll.basis(n).labels()
    pos = {lab: p for p, lab in enumerate(labels)}
    rows = []
    for r in coinvariant_relations(coll, n):
        row = [Q(0)] * len(labels)
        for lab, c in r.items():
            row[pos[lab]] = c
        rows.append(row)
    _, rref, pivots = row_reduce(rows)
    cur = [Q(0)] * len(labels)
    for lab, c in vec.items():
        cur[pos[lab]] = c
    for rr, pc in enumerate(pivots):
        if cur[pc] != 0:
            f = cur[pc]
            cur = [cur[j] - f * rref[rr][j] for j in range(len(labels))]
    return vclean({labels[j]: cur[j] for j in range(len(labels))})
