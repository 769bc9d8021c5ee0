"""Reference objects for the test and acceptance suites.

A(n): the free graded-commutative algebra on x (degree 0) and y
(degree 1) with y^2 = 0 and dy = x^n, truncated by word length; the
constant term is excluded so the carrier is an honest non-unital
associative algebra.  H(n): its cohomology k[z]/(z^n) without the
unit, with zero differential.  The contraction (i, p, h) between them
satisfies 1 - ip = dh + hd with the maps exactly as printed; the
homotopy is the positive one (so h(x^a) = +x^{a-n}y), which also
matches the transferred i_2(z^a, z^b) = x^{a+b-n}y.

V: the coassociative coalgebra on v_1, v_2, ... (|v_i| = i) with zero
differential whose cobar differential realizes
d(v_i) = sum_{j+k=i-1} (-1)^j v_j (x) v_k.  Phi: the degree-0 map
V -> Omega_kappa(V) summing all compositions with coefficient +1; it
is a twisting element relative to kappa.  f1, f2, f3: the V -> H^2
test maps with f_i(v_1) = z and only f_1(v_2) = z nonzero beyond that.
"""

from __future__ import annotations

import functools
import itertools
import re
from dataclasses import dataclass, field

from operadiq.exact import (
    Q, GradedBasis, LinMap, WindowOverflowError, vclean,
)
from operadiq.complexes import ChainComplex
from operadiq.operads import builtin
from operadiq.operads.core import UNIT, OpTwisting
from operadiq.algebras import (
    CCoalgebra, PAlgebra, QuasiFreeAlgebra, RelTwistingVerdict,
    check_rel_twisting, cobar, compositions,
)

_MONO = re.compile(r"^(?:x(\d*))?(y)?$")


def mono_label(a: int, eps: int) -> str:
    """Label of x^a y^eps; (0, 0) is not a basis element."""
    if eps not in (0, 1) or a < 0 or (a, eps) == (0, 0):
        raise ValueError("bad monomial (%d, %d)" % (a, eps))
    xs = "" if a == 0 else ("x" if a == 1 else "x%d" % a)
    return xs + ("y" if eps else "")


def mono_parse(lab: str) -> tuple[int, int]:
    m = _MONO.match(lab)
    if not m or lab == "":
        raise ValueError("bad monomial label %r" % lab)
    xs, y = m.groups()
    if xs is None:
        a = 0
    elif xs == "":
        a = 1
    else:
        a = int(xs)
    return a, 1 if y else 0


@dataclass
class FixtureAn:
    """Truncated A(n) = k[x, y]/(y^2), dy = x^n, as an As-algebra."""

    n: int
    max_pow: int
    algebra: PAlgebra
    operad_cap: int

    @property
    def complex(self) -> ChainComplex:
        return self.algebra.cx


@dataclass
class FixtureHn:
    """H(n) = k[z]/(z^n) without unit, zero differential."""

    n: int
    algebra: PAlgebra

    @property
    def complex(self) -> ChainComplex:
        return self.algebra.cx


@dataclass
class FixtureContraction:
    n: int
    A: FixtureAn
    H: FixtureHn
    i: LinMap
    p: LinMap
    h: LinMap
    hi_zero: bool = field(default=False)
    ph_zero: bool = field(default=False)
    hh_zero: bool = field(default=False)

    def check(self) -> list[str]:
        """Retraction, chain-map, homotopy, and side-condition failures."""
        fails = []
        dA = self.A.complex.d
        if self.p.compose(self.i) != LinMap.identity(self.H.complex.basis):
            fails.append("pi != id")
        if self.i.compose(self.H.complex.d) != dA.compose(self.i):
            fails.append("i is not a chain map")
        if self.H.complex.d.compose(self.p) != self.p.compose(dA):
            fails.append("p is not a chain map")
        one = LinMap.identity(self.A.complex.basis)
        lhs = one.add(self.i.compose(self.p).scale(Q(-1)))
        rhs = dA.compose(self.h).add(self.h.compose(dA))
        if lhs != rhs:
            fails.append("1 - ip != dh + hd")
        return fails


def _an_gamma(n_trunc: int, max_pow: int):
    def fn(k, _p_lab, args):
        a_tot, eps_tot = 0, 0
        for lab in args:
            a, e = mono_parse(lab)
            a_tot += a
            eps_tot += e
        if eps_tot >= 2:
            return {}
        limit = max_pow if eps_tot == 0 else max_pow - n_trunc
        if a_tot > limit:
            raise WindowOverflowError(
                "x^%d%s exceeds the word-length window"
                % (a_tot, "y" if eps_tot else ""))
        return {mono_label(a_tot, eps_tot): Q(1)}
    return fn


def build_an(n: int = 2, max_pow: int = 6, operad_cap: int = 4,
             check: bool = True) -> FixtureAn:
    if n < 1 or max_pow < n:
        raise ValueError("need max_pow >= n >= 1")
    xs = [mono_label(a, 0) for a in range(1, max_pow + 1)]
    ys = [mono_label(a, 1) for a in range(0, max_pow - n + 1)]
    basis = GradedBasis((0, 1), {0: xs, 1: ys})
    ent = {mono_label(a, 1): {mono_label(a + n, 0): Q(1)}
           for a in range(0, max_pow - n + 1)}
    cx = ChainComplex(basis, LinMap(basis, basis, -1, ent))
    P = builtin("As", operad_cap)
    alg = PAlgebra(P, cx, _an_gamma(n, max_pow), name="A%d" % n,
                   check=check)
    return FixtureAn(n, max_pow, alg, operad_cap)


def z_label(a: int) -> str:
    if a < 1:
        raise ValueError("z exponent must be >= 1")
    return "z" if a == 1 else "z%d" % a


def build_hn(n: int = 2, operad_cap: int = 4,
             check: bool = True) -> FixtureHn:
    if n < 2:
        raise ValueError("H(n) needs n >= 2")
    basis = GradedBasis((0, 0), {0: [z_label(a) for a in range(1, n)]})
    cx = ChainComplex.zero_diff(basis)

    def fn(k, _p_lab, args):
        tot = sum(int(lab[1:] or 1) for lab in args)
        if tot >= n:
            return {}
        return {z_label(tot): Q(1)}

    P = builtin("As", operad_cap)
    alg = PAlgebra(P, cx, fn, name="H%d" % n, check=check)
    return FixtureHn(n, alg)


def build_contraction(n: int = 2, max_pow: int = 6,
                      operad_cap: int = 4) -> FixtureContraction:
    A = build_an(n, max_pow, operad_cap)
    H = build_hn(n, operad_cap)
    ab, hb = A.complex.basis, H.complex.basis
    i = LinMap(hb, ab, 0,
               {z_label(a): {mono_label(a, 0): Q(1)}
                for a in range(1, n)})
    p = LinMap(ab, hb, 0,
               {mono_label(a, 0): {z_label(a): Q(1)}
                for a in range(1, n)})
    h = LinMap(ab, ab, 1,
               {mono_label(a, 0): {mono_label(a - n, 1): Q(1)}
                for a in range(n, max_pow + 1)})
    con = FixtureContraction(
        n, A, H, i, p, h,
        hi_zero=h.compose(i).is_zero(),
        ph_zero=p.compose(h).is_zero(),
        hh_zero=h.compose(h).is_zero())
    fails = con.check()
    if fails:
        raise ValueError("contraction invalid: %s" % "; ".join(fails))
    if not (con.hi_zero and con.ph_zero and con.hh_zero):
        raise ValueError("side conditions fail")
    return con


# ---------------------------------------------------------------------------
# the coalgebra V and the twisting element Phi


def v_label(i: int) -> str:
    return "v%d" % i


def _weight_sign(u: tuple[int, ...]) -> int:
    """Coefficient of v_{u_1} (x) ... (x) v_{u_k} in the k-th
    comultiplication component; matches the printed k = 2, 3 cases and
    is forced for k >= 4 by coassociativity."""
    k = len(u)
    e = (k - 1) // 2 + sum(u[j] for j in range(k - 2, -1, -2))
    return -1 if e % 2 else 1


def v_delta_table(I: int, kmax: int) -> dict:
    terms: dict = {}
    for k in range(2, kmax + 1):
        tk = {}
        for i in range(1, I + 1):
            ts = [("t%d" % k, tuple(v_label(uj) for uj in u),
                   Q(_weight_sign(u)))
                  for u in compositions(i - k + 1, k)]
            if ts:
                tk[v_label(i)] = ts
        if tk:
            terms[k] = tk
    return terms


@dataclass
class FixtureV:
    I: int
    coalgebra: CCoalgebra
    cooperad_cap: int

    @property
    def complex(self) -> ChainComplex:
        return self.coalgebra.cx


def build_v(I: int = 6, cooperad_cap: int | None = None,
            check: bool = True) -> FixtureV:
    if I < 1:
        raise ValueError("need I >= 1")
    cap = cooperad_cap if cooperad_cap is not None else max(2, (I + 1) // 2)
    basis = GradedBasis((1, I), {i: [v_label(i)] for i in range(1, I + 1)})
    cx = ChainComplex.zero_diff(basis)
    C = builtin("As_shriek", cap)
    D = CCoalgebra(C, cx, terms=v_delta_table(I, cap), name="V%d" % I,
                   check=check)
    for i in range(1, I + 1):
        if D.bound(v_label(i)) > i:
            raise ValueError("conilpotence bound of v%d exceeds %d" % (i, i))
    return FixtureV(I, D, cap)


def explicit_comultiplication(V: FixtureV, n: int, k: int) -> dict:
    """Weight-k component of the comultiplication of v_n, computed
    from the printed formula (k <= 3) or by splitting off the last
    tensor factor (k >= 4); an oracle independent of the stored table.
    """
    if n > V.I:
        raise ValueError("v%d outside the fixture (I = %d)" % (n, V.I))
    if k < 2:
        raise ValueError("weight components start at k = 2")
    out: dict = {}
    if k == 2:
        for u in compositions(n - 1, 2):
            out[tuple(v_label(x) for x in u)] = \
                Q(-1) if u[0] % 2 else Q(1)
    elif k == 3:
        for u in compositions(n - 2, 3):
            out[tuple(v_label(x) for x in u)] = \
                Q(1) if u[1] % 2 else Q(-1)
    else:
        # split off the last tensor factor: the (k-1)-component on
        # (u_1 .. u_{k-2}, s) followed by the 2-component of v_s at the
        # last slot, s = u_{k-1} + u_k + 1, with the slot-crossing sign
        for u in compositions(n - k + 1, k):
            s = u[k - 2] + u[k - 1] + 1
            inner = explicit_comultiplication(V, s, 2).get(
                (v_label(u[k - 2]), v_label(u[k - 1])))
            if inner is None:
                continue
            outer_word = tuple(v_label(x) for x in u[:k - 2]) + \
                (v_label(s),)
            outer = explicit_comultiplication(V, n, k - 1).get(outer_word)
            if outer is None:
                continue
            sgn = -1 if (k + sum(u[:k - 2])) % 2 else 1
            out[tuple(v_label(x) for x in u)] = outer * inner * sgn
    return {w: c for w, c in out.items() if c != 0}


@dataclass
class FixturePhi:
    V: FixtureV
    kappa: OpTwisting
    omega: QuasiFreeAlgebra
    phi: LinMap
    verdict: RelTwistingVerdict

    def as_infty_morphism(self):
        from operadiq.inftymor import InftyCoalgMorphism
        return InftyCoalgMorphism(self.kappa, self.V.coalgebra,
                                  self.V.coalgebra, self.phi, name="Phi")


def phi_column(omega: QuasiFreeAlgebra, n: int) -> dict:
    """Sum over all compositions of n, every coefficient +1."""
    col: dict = {}
    for k in range(1, n + 1):
        for u in compositions(n, k):
            word = tuple(v_label(x) for x in u)
            if k == 1:
                got = omega.label_of(UNIT, word)
            else:
                got = omega.label_of("m%d" % k, word)
            if got is not None:
                lab, s = got
                col[lab] = col.get(lab, Q(0)) + s
    return vclean(col)


def build_phi(I: int = 6, check: bool = True) -> FixturePhi:
    V = build_v(I, cooperad_cap=I)
    kap = builtin("kappa_As", I)
    om = cobar(kap, V.coalgebra, weight_cap=I, check=check)
    vb = V.complex.basis
    phi = LinMap(vb, om.complex.basis, 0,
                 {v_label(n): phi_column(om, n) for n in range(1, I + 1)})
    verdict = check_rel_twisting(kap, V.coalgebra, om.algebra, phi)
    if not verdict.passed:
        raise ValueError("Phi fails its twisting equation: %s" % verdict)
    return FixturePhi(V, kap, om, phi, verdict)


# ---------------------------------------------------------------------------
# the section 5.4 test maps


def f_map(which: int, V: FixtureV, H: FixtureHn) -> dict[int, LinMap]:
    """f1, f2, or f3 as homogeneous components keyed by degree.

    All three send v_1 to z; f1 also sends v_2 to z, so it has a
    degree -1 and a degree -2 part.
    """
    if which not in (1, 2, 3):
        raise ValueError("the test maps are f1, f2, f3")
    vb = V.complex.basis
    hb = H.complex.basis
    out = {-1: LinMap(vb, hb, -1, {v_label(1): {z_label(1): Q(1)}})}
    if which == 1:
        out[-2] = LinMap(vb, hb, -2, {v_label(2): {z_label(1): Q(1)}})
    return out


# ---------------------------------------------------------------------------
# dispatcher


@functools.lru_cache(maxsize=None)
def _cached(name: str, params: tuple):
    kw = dict(params)
    if name == "A":
        return build_an(**kw)
    if name == "H":
        return build_hn(**kw)
    if name == "contraction":
        return build_contraction(**kw)
    if name == "V":
        return build_v(**kw)
    if name == "Phi":
        return build_phi(**kw)
    if name in ("f1", "f2", "f3"):
        V = build_v(kw.pop("I", 6))
        H = build_hn(kw.pop("n", 2))
        return f_map(int(name[1]), V, H)
    raise ValueError("unknown fixture %r" % name)


def build(name: str, **params):
    """Fixture constructors by name: A, H, contraction, V, Phi, f1-f3."""
    return _cached(name, tuple(sorted(params.items())))


def from_spec(spec: str):
    """Parse CLI-style fixture names: A2, H3, V, V8, Phi, contraction3."""
    if spec in ("f1", "f2", "f3", "Phi"):
        return build(spec)
    m = re.match(r"^([A-Za-z]+?)(\d+)?$", spec)
    if not m:
        raise ValueError("bad fixture name %r" % spec)
    base, num = m.groups()
    if base in ("A", "H", "contraction"):
        return build(base, **({"n": int(num)} if num else {}))
    if base == "V":
        return build("V", **({"I": int(num)} if num else {}))
    raise ValueError("bad fixture name %r" % spec)
