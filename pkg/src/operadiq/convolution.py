"""Homotopy-Lie structure on hom(D, A) induced by a twisting morphism.

The brackets are ell_n = gamma_A (alpha (x) f_1 (x) ... (x) f_n) Delta^n;
in symmetric mode a bracket is the sum over all ways of matching the
maps to the comultiplication slots, with Koszul signs.  The same data
in tensor form lives on A (x) Cd for a dual-of-the-cooperad algebra Cd,
and ``hom_tensor_iso`` exchanges the two presentations on finite
carriers.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

from operadiq.exact import (
    Q, GradedBasis, LinMap, TENSOR_SEP, join_label, split_label, vadd, vclean,
)
from operadiq.complexes import dual, dual_label, hom_label, split_hom_label, \
    row_reduce, tensor_complex
from operadiq.operads import (
    SYM, Cooperad, Operad, OpTwisting, builtin, check_op_twisting, corolla,
    convolution_operad, dual_cooperad, enc, free_morphism,
    koszul_reorder_sign, pull_tw, push_tw,
)
from operadiq.algebras import (
    CCoalgebra, CooperadMorphism, OperadMorphism, PAlgebra,
    RelTwistingVerdict, pull_alg, push_coalg, twisting_residual,
)


def _require_twisting(alpha: OpTwisting):
    cert = alpha.certificate
    if cert is None:
        cert = check_op_twisting(alpha)
        alpha.certificate = cert
    if not cert.passed:
        raise ValueError(
            "twisting morphism %s fails its Maurer-Cartan equation"
            % (alpha.name or "<anon>"))


# ---------------------------------------------------------------------------
# the operad morphism behind the construction


def morphism_from_twisting(alpha: OpTwisting, name: str = "") -> OperadMorphism:
    """The morphism from the shifted homotopy operad determined by alpha.

    Generators of arity n are sent to alpha(n) inside the convolution
    operad hom(C, P).  That this lands in a morphism of dg operads is
    equivalent to the Maurer-Cartan equation for alpha, so a relation
    failure here is an internal error, not bad input.
    """
    _require_twisting(alpha)
    C, P = alpha.source, alpha.target
    cap = min(C.cap, P.cap)
    source = builtin("SLieInf" if C.mode == SYM else "SAsInf", cap)
    prefix = "l" if C.mode == SYM else "m"
    target = convolution_operad(C, P)
    gen_values: dict = {}
    for n in range(2, cap + 1):
        vec: dict = {}
        for c in C.basis(n).labels():
            for p, q in alpha.apply(n, {c: Q(1)}).items():
                vec[hom_label(c, p)] = q
        gen_values[(n, "%s%d" % (prefix, n))] = vec
    m = free_morphism(source, target, gen_values,
                      name=name or "M[%s]" % (alpha.name or "alpha"))
    om = OperadMorphism(source, target, m, name=m.name)
    fails = om.check()
    if fails:
        raise RuntimeError(
            "twisting morphism does not induce an operad morphism "
            "(implementation bug): %s" % "; ".join(fails))
    return om


def twisting_from_morphism(m: OperadMorphism, C: Cooperad,
                           P: Operad) -> OpTwisting:
    """Read the twisting morphism back off the generator images."""
    prefix = "l" if C.mode == SYM else "m"
    comps: dict = {}
    for n in range(2, min(C.cap, P.cap) + 1):
        gen = enc(corolla("%s%d" % (prefix, n), n))
        ent: dict = {}
        for hl, q in m.apply(n, {gen: Q(1)}).items():
            c, p = split_hom_label(hl)
            ent.setdefault(c, {})[p] = ent.get(c, {}).get(p, Q(0)) + q
        ent = {c: vclean(col) for c, col in ent.items()}
        ent = {c: col for c, col in ent.items() if col}
        if ent:
            comps[n] = LinMap(C.basis(n), P.basis(n), -1, ent)
    alpha = OpTwisting(C, P, comps, name="tw[%s]" % m.name)
    alpha.certificate = check_op_twisting(alpha)
    return alpha


# ---------------------------------------------------------------------------
# convolution brackets


class ConvolutionHomotopyAlgebra:
    """hom(D, A) with the brackets induced by a twisting morphism.

    ell(1, [f]) is the hom differential; ell(n, fs) for 2 <= n <=
    arity_cap evaluates the n-th bracket.  Evaluators are pure.
    """

    def __init__(self, alpha: OpTwisting, D: CCoalgebra, A: PAlgebra,
                 name: str = ""):
        _require_twisting(alpha)
        if D.cooperad.coll is not alpha.source.coll:
            raise ValueError("coalgebra cooperad does not match the twisting")
        if A.operad.coll is not alpha.target.coll:
            raise ValueError("algebra operad does not match the twisting")
        self.alpha = alpha
        self.D = D
        self.A = A
        self.mode = alpha.source.mode
        self.arity_cap = min(alpha.source.cap, alpha.target.cap)
        self.name = name or "hom^%s(%s,%s)" % (
            alpha.name or "a", D.name or "D", A.name or "A")

    def hom_d(self, f: LinMap) -> LinMap:
        """The differential d_A f - (-1)^|f| f d_D."""
        s = Q(-1) if f.degree % 2 else Q(1)
        ent: dict = {}
        for x in self.D.cx.basis.labels():
            acc = self.A.cx.d.apply(f.column(x))
            acc = vadd(acc, f.apply(self.D.cx.d.column(x)), -s)
            acc = vclean(acc)
            if acc:
                ent[x] = acc
        return LinMap(self.D.cx.basis, self.A.cx.basis, f.degree - 1, ent)

    def ell(self, n: int, fs) -> LinMap:
        fs = list(fs)
        if len(fs) != n:
            raise ValueError("expected %d maps, got %d" % (n, len(fs)))
        if n == 1:
            return self.hom_d(fs[0])
        if n > self.arity_cap:
            raise ValueError("arity %d above cap %d" % (n, self.arity_cap))
        degs = [f.degree for f in fs]
        C = self.alpha.source
        ent: dict = {}
        for x in self.D.cx.basis.labels():
            acc: dict = {}
            for (c, ys, r) in self.D.delta_terms(n, x):
                av = self.alpha.apply(n, {c: Q(1)})
                if not av:
                    continue
                cd = C.basis(n).degree(c)
                ydegs = [self.D.cx.basis.degree(y) for y in ys]
                sigmas = (itertools.permutations(range(n))
                          if self.mode == SYM else (tuple(range(n)),))
                for sigma in sigmas:
                    cols = [fs[sigma[j]].column(ys[j]) for j in range(n)]
                    if not all(cols):
                        continue
                    exp = sum(degs[sigma[j]] * (cd + sum(ydegs[:j]))
                              for j in range(n))
                    sgn = Q(koszul_reorder_sign(degs, list(sigma)))
                    if exp % 2:
                        sgn = -sgn
                    acc = vadd(acc, self.A.gamma(n, av, cols), r * sgn)
            acc = vclean(acc)
            if acc:
                ent[x] = acc
        return LinMap(self.D.cx.basis, self.A.cx.basis, sum(degs) - 1, ent)

    def mc_residual(self, phi: LinMap) -> LinMap:
        """d(phi) + sum of the bracket words of phi, degree-0 input.

        In symmetric mode the n-th term carries 1/n!; with all inputs
        equal this matches the single-orbit star operator exactly.  The
        series stops at the arity cap, which dominates every
        conilpotence bound of the coalgebra.
        """
        if phi.degree != 0:
            raise ValueError("Maurer-Cartan elements have degree 0")
        total = self.hom_d(phi)
        for n in range(2, self.arity_cap + 1):
            term = self.ell(n, [phi] * n)
            w = Q(1)
            if self.mode == SYM:
                for k in range(2, n + 1):
                    w /= k
            total = total.add(term.scale(w))
        return total

    def mc_check(self, phi: LinMap) -> RelTwistingVerdict:
        """Verdict on the Maurer-Cartan equation for phi.

        Evaluates both the bracket series and the star-operator
        residual; they must agree label by label (that equivalence is a
        theorem, so disagreement is an internal error).
        """
        res = self.mc_residual(phi)
        count = 0
        first = None
        for x in self.D.cx.basis.labels():
            rb = res.column(x)
            rs = vclean(twisting_residual(self.alpha, self.D, self.A,
                                          phi, x))
            if rb != rs:
                raise RuntimeError(
                    "Maurer-Cartan predicates disagree at %s: "
                    "brackets %r vs star %r" % (x, rb, rs))
            if rb and first is None:
                first = (x, rb, count)
            if first is None:
                count += 1
        if first is not None:
            return RelTwistingVerdict(False, first[0], first[1], first[2])
        return RelTwistingVerdict(True, None, {}, count)


def convolution_algebra(alpha: OpTwisting, D: CCoalgebra, A: PAlgebra,
                        name: str = "") -> ConvolutionHomotopyAlgebra:
    return ConvolutionHomotopyAlgebra(alpha, D, A, name=name)


def check_homotopy_relations(G: ConvolutionHomotopyAlgebra, fs) -> dict:
    """Residual of the homotopy-Lie relation on the given input tuple.

    Sums (ell_{n1} o_1 ell_{n2})^sigma over n1 + n2 = n + 1 and all
    shuffles (consecutive blocks in planar mode) with Koszul signs;
    the result is empty exactly when the relation holds on the tuple.
    """
    fs = list(fs)
    n = len(fs)
    degs = [f.degree for f in fs]
    total: dict = {}

    def add(term: LinMap, s: Fraction):
        for x in term.source.labels():
            col = term.column(x)
            if col:
                total[x] = vadd(total.get(x, {}), col, s)

    for n2 in range(1, n + 1):
        n1 = n + 1 - n2
        if G.mode == SYM:
            for S in itertools.combinations(range(n), n2):
                rest = [i for i in range(n) if i not in S]
                ks = Q(koszul_reorder_sign(degs, list(S) + rest))
                inner = G.ell(n2, [fs[i] for i in S])
                add(G.ell(n1, [inner] + [fs[i] for i in rest]), ks)
        else:
            for j in range(n1):
                ks = Q(-1) if sum(degs[:j]) % 2 else Q(1)
                inner = G.ell(n2, fs[j:j + n2])
                add(G.ell(n1, fs[:j] + [inner] + fs[j + n2:]), ks)
    return {x: col for x, col in ((x, vclean(c)) for x, c in total.items())
            if col}


def random_hom_maps(D: CCoalgebra, A: PAlgebra, count: int, seed: int,
                    degrees=(-1, 0, 1), labels=None) -> list[LinMap]:
    """Seeded homogeneous maps D -> A for spanning-set style checks.

    ``labels`` restricts the image to a subset of the target basis, so
    bracket words can be kept inside a truncation window.
    """
    rng = random.Random(seed)
    sb, tb = D.cx.basis, A.cx.basis
    allowed = None if labels is None else set(labels)
    out = []
    guard = 0
    while len(out) < count and guard < 50 * count:
        guard += 1
        d = rng.choice(degrees)
        ent: dict = {}
        for y in sb.labels():
            opts = [a for a in tb.labels()
                    if tb.degree(a) == sb.degree(y) + d
                    and (allowed is None or a in allowed)]
            if opts and rng.random() < 0.7:
                a = rng.choice(opts)
                ent[y] = {a: Q(rng.choice([-2, -1, 1, 2]))}
        if ent:
            out.append(LinMap(sb, tb, d, ent))
    if len(out) < count:
        raise ValueError("could not draw enough nonzero maps")
    return out


# ---------------------------------------------------------------------------
# naturality in both slots


def naturality_check(alpha: OpTwisting, D: CCoalgebra, A: PAlgebra,
                     f: CooperadMorphism | None = None,
                     g: OperadMorphism | None = None,
                     samples: int = 12, seed: int = 0) -> list[str]:
    """Compare the two convolution structures given by moving a
    (co)operad morphism across the twisting, on seeded spanning maps."""
    fails: list[str] = []
    if f is not None:
        left = convolution_algebra(pull_tw(alpha, f.map, f.source), D, A)
        right = convolution_algebra(alpha, push_coalg(f, D, check=False), A)
        fails += _compare_brackets(left, right, samples, seed, "pull")
    if g is not None:
        left = convolution_algebra(push_tw(alpha, g.map, g.target), D, A)
        right = convolution_algebra(alpha, D, pull_alg(g, A, check=False))
        fails += _compare_brackets(left, right, samples, seed, "push")
    return fails


def _compare_brackets(G1, G2, samples, seed, tag) -> list[str]:
    fails = []
    fs = random_hom_maps(G1.D, G1.A, samples, seed)
    for n in range(1, G1.arity_cap + 1):
        for k in range(3):
            pick = fs[(n + k) % len(fs):][:n]
            if len(pick) < n:
                pick = (pick + fs)[:n]
            a = G1.ell(n, pick)
            b = G2.ell(n, pick)
            if a != b:
                fails.append("%s: bracket %d differs" % (tag, n))
                break
    return fails


# ---------------------------------------------------------------------------
# tensor form


class TensorHomotopyAlgebra:
    """A (x) Cd with the basis-expansion form of the brackets.

    Cd is an algebra over the arity-wise dual of the cooperad; the n-th
    bracket pairs a basis of C(n) against its dual basis.  An optional
    basis replaces the canonical one per arity (vectors must be
    homogeneous and invertible against the canonical basis); the
    outcome provably does not depend on it.
    """

    def __init__(self, alpha: OpTwisting, A: PAlgebra, Cd: PAlgebra,
                 basis: dict | None = None, name: str = ""):
        _require_twisting(alpha)
        C = alpha.source
        if A.operad.coll is not alpha.target.coll:
            raise ValueError("algebra operad does not match the twisting")
        for n in range(1, min(C.cap, Cd.operad.cap) + 1):
            want = {dual_label(c) for c in C.basis(n).labels()}
            got = set(Cd.operad.coll.basis(n).labels())
            if want != got:
                raise ValueError(
                    "second factor is not an algebra over the dual "
                    "of the cooperad (arity %d)" % n)
        for b in (A.cx.basis, Cd.cx.basis):
            bad = [l for l in b.labels() if TENSOR_SEP in l]
            if bad:
                raise ValueError(
                    "tensor form needs separator-free labels, got %r"
                    % bad[0])
        self.alpha = alpha
        self.A = A
        self.Cd = Cd
        self.mode = C.mode
        self.arity_cap = min(C.cap, A.operad.cap, Cd.operad.cap)
        self.cx = tensor_complex([A.cx, Cd.cx])
        self.basis = {}
        for n in range(2, self.arity_cap + 1):
            if basis and n in basis:
                self.basis[n] = [dict(v) for v in basis[n]]
            else:
                self.basis[n] = [{c: Q(1)} for c in C.basis(n).labels()]
        self._duals = {n: self._dual_functionals(n)
                       for n in range(2, self.arity_cap + 1)}
        self.name = name or "%s(x)%s" % (A.name or "A", Cd.name or "Cd")

    def _dual_functionals(self, n: int):
        C = self.alpha.source
        labs = list(C.basis(n).labels())
        vecs = self.basis[n]
        if len(vecs) != len(labs):
            raise ValueError("basis of arity %d must have %d vectors"
                             % (n, len(labs)))
        m = len(labs)
        rows = [[vecs[j].get(labs[i], Q(0)) for j in range(m)] +
                [Q(1) if i == k else Q(0) for k in range(m)]
                for i in range(m)]
        rank, rref, pivots = row_reduce(rows)
        if rank < m or pivots[:m] != list(range(m)):
            raise ValueError("basis of arity %d is not invertible" % n)
        inv = [r[m:] for r in rref]
        # functional i, row over canonical dual labels
        return [{labs[k]: inv[k][i] for k in range(m) if inv[k][i] != 0}
                for i in range(m)]

    def _pair(self, lab: str) -> tuple[str, str]:
        a, x = split_label(lab)
        return a, x

    def ell(self, n: int, elems) -> dict:
        """Bracket of vectors in the tensor carrier; returns a vector."""
        elems = [dict(e) for e in elems]
        if len(elems) != n:
            raise ValueError("expected %d elements" % n)
        if n == 1:
            return vclean(self.cx.d.apply(elems[0]))
        if n > self.arity_cap:
            raise ValueError("arity %d above cap %d" % (n, self.arity_cap))
        C = self.alpha.source
        acc: dict = {}
        for combo in itertools.product(*[list(e.items()) for e in elems]):
            labs = [l for l, _ in combo]
            coeff = Q(1)
            for _, q in combo:
                coeff *= q
            pairs = [self._pair(l) for l in labs]
            adegs = [self.A.cx.basis.degree(a) for a, _ in pairs]
            xdegs = [self.Cd.cx.basis.degree(x) for _, x in pairs]
            for i, bvec in enumerate(self.basis[n]):
                cd = _vec_degree(C.basis(n), bvec)
                pvec = self.alpha.apply(n, bvec)
                if not pvec:
                    continue
                eps = sum(adegs[k] * sum(xdegs[:k]) for k in range(n))
                eps += cd * sum(adegs)
                va = self.A.gamma(n, pvec, [{a: Q(1)} for a, _ in pairs])
                vx = self.Cd.gamma(n, self._duals[n][i],
                                   [{x: Q(1)} for _, x in pairs])
                if not va or not vx:
                    continue
                s = coeff * (Q(-1) if eps % 2 else Q(1))
                for a2, qa in va.items():
                    for x2, qx in vx.items():
                        k = join_label([a2, x2])
                        acc[k] = acc.get(k, Q(0)) + s * qa * qx
        return vclean(acc)


def _vec_degree(basis: GradedBasis, vec: dict) -> int:
    degs = {basis.degree(l) for l in vec}
    if len(degs) != 1:
        raise ValueError("basis vectors must be homogeneous")
    return degs.pop()


def tensor_algebra(alpha: OpTwisting, A: PAlgebra, Cd: PAlgebra,
                   basis: dict | None = None,
                   name: str = "") -> TensorHomotopyAlgebra:
    return TensorHomotopyAlgebra(alpha, A, Cd, basis=basis, name=name)


# ---------------------------------------------------------------------------
# duality


def dualize_tw(alpha: OpTwisting) -> OpTwisting:
    """The transpose twisting morphism between the arity-wise duals."""
    C, P = alpha.source, alpha.target
    Cv = C.dual_operad()
    Pv = dual_cooperad(P)
    comps: dict = {}
    for n in range(1, min(C.cap, P.cap) + 1):
        ent: dict = {}
        for c in C.basis(n).labels():
            for p, q in alpha.apply(n, {c: Q(1)}).items():
                pd = P.basis(n).degree(p)
                s = Q(-1) if pd % 2 else Q(1)
                ent.setdefault(dual_label(p), {})[dual_label(c)] = q * s
        ent = {k: vclean(v) for k, v in ent.items()}
        ent = {k: v for k, v in ent.items() if v}
        if ent:
            comps[n] = LinMap(Pv.basis(n), Cv.basis(n), -1, ent)
    dual_alpha = OpTwisting(Pv, Cv, comps,
                            name="(%s)v" % (alpha.name or "alpha"))
    dual_alpha.certificate = check_op_twisting(dual_alpha)
    if not dual_alpha.certificate.passed:
        raise RuntimeError(
            "transpose of a twisting morphism fails Maurer-Cartan "
            "(implementation bug)")
    return dual_alpha


@dataclass
class HomTensorIso:
    """Mutually inverse chain maps between hom(D, A) and A (x) D-dual."""

    alpha: OpTwisting
    conv: ConvolutionHomotopyAlgebra
    tensor: TensorHomotopyAlgebra

    def to_tensor(self, phi: LinMap) -> dict:
        acc: dict = {}
        for y in self.conv.D.cx.basis.labels():
            for a, q in phi.column(y).items():
                acc[join_label([a, dual_label(y)])] = q
        return vclean(acc)

    def from_tensor(self, vec: dict) -> list[LinMap]:
        """Homogeneous components of the corresponding hom element."""
        parts: dict[int, dict] = {}
        tb = self.tensor.cx.basis
        for lab, q in vec.items():
            a, xd = self.tensor._pair(lab)
            y = xd[:-1]
            d = tb.degree(lab)
            parts.setdefault(d, {}).setdefault(y, {})[a] = \
                parts.get(d, {}).get(y, {}).get(a, Q(0)) + q
        out = []
        for d in sorted(parts):
            ent = {y: vclean(col) for y, col in parts[d].items()}
            ent = {y: col for y, col in ent.items() if col}
            out.append(LinMap(self.conv.D.cx.basis, self.conv.A.cx.basis,
                              d, ent))
        return out

    def check(self, samples: int = 10, seed: int = 0) -> list[str]:
        fails = []
        fs = random_hom_maps(self.conv.D, self.conv.A, samples, seed)
        for f in fs:
            if self.from_tensor(self.to_tensor(f)) != [f]:
                fails.append("round trip fails")
                break
        for f in fs[:4]:
            lhs = self.to_tensor(self.conv.hom_d(f))
            rhs = self.tensor.ell(1, [self.to_tensor(f)])
            if lhs != rhs:
                fails.append("differentials differ on a degree %d map"
                             % f.degree)
                break
        for n in range(2, self.conv.arity_cap + 1):
            for k in range(3):
                pick = (fs[k:] + fs)[:n]
                lhs = self.to_tensor(self.conv.ell(n, pick))
                rhs = self.tensor.ell(n, [self.to_tensor(f) for f in pick])
                if lhs != rhs:
                    fails.append("bracket %d differs" % n)
                    break
        return fails


def dual_coalgebra_algebra(D: CCoalgebra, name: str = "") -> PAlgebra:
    """The dual algebra of a finite coalgebra, over the dual operad.

    In symmetric mode the stored comultiplication rows are class
    representatives; their full orbit sum (Koszul signs, head moved
    along) gives the structure constants dual to the expansion the
    convolution brackets use, with no stabilizer division.
    """
    C = D.cooperad
    Cv = C.dual_operad()
    cx = dual(D.cx)
    db = D.cx.basis

    def fn(n, p_lab, args):
        if n == 1:
            return {args[0]: Q(1)}
        c = p_lab[:-1]
        ys = tuple(a[:-1] for a in args)
        acc: dict = {}
        for x in db.labels():
            for (c2, ys2, r) in D.delta_terms(n, x):
                if C.mode == SYM:
                    degs2 = [db.degree(y) for y in ys2]
                    for sigma in itertools.permutations(range(n)):
                        if tuple(ys2[j] for j in sigma) != ys:
                            continue
                        hv = C.coll.act_perm(n, sigma, {c2: Q(1)})
                        q = hv.get(c)
                        if not q:
                            continue
                        ks = koszul_reorder_sign(degs2, list(sigma))
                        acc[dual_label(x)] = (acc.get(dual_label(x), Q(0))
                                              + r * q * ks)
                elif c2 == c and ys2 == ys:
                    acc[dual_label(x)] = acc.get(dual_label(x), Q(0)) + r
        return vclean(acc)

    return PAlgebra(Cv, cx, fn, name=name or "(%s)v" % (D.name or "D"),
                    check=False)


def hom_tensor_iso(alpha: OpTwisting, D: CCoalgebra, A: PAlgebra,
                   basis: dict | None = None) -> HomTensorIso:
    Cd = dual_coalgebra_algebra(D)
    conv = convolution_algebra(alpha, D, A)
    tens = tensor_algebra(alpha, A, Cd, basis=basis)
    return HomTensorIso(alpha, conv, tens)
