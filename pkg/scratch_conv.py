import sys, time
sys.path.insert(0, "src")
from fractions import Fraction as Q

from operadiq.exact import GradedBasis, LinMap
from operadiq.complexes import ChainComplex
from operadiq.operads import builtin, check_op_twisting
from operadiq.algebras import CCoalgebra, PAlgebra, bar, cobar, check_rel_twisting
from operadiq.fixtures import build
from operadiq.convolution import (
    convolution_algebra, check_homotopy_relations, random_hom_maps,
    morphism_from_twisting, twisting_from_morphism, dualize_tw,
    hom_tensor_iso, dual_coalgebra_algebra, tensor_algebra,
)

t0 = time.time()

# ---- NS relations: hom^kappa(V7, A_wide)
kap = builtin("kappa_As", 4)
V7 = build("V", I=7).coalgebra
A2 = build("A", n=2).algebra
Aw = build("A", n=2, max_pow=30).algebra
low = [l for l in Aw.cx.basis.labels()
       if l in ("x", "y", "x2", "x3", "xy", "x2y")]
G = convolution_algebra(kap, V7, Aw)
print("NS cap:", G.arity_cap)
fs = random_hom_maps(V7, Aw, 10, seed=5, degrees=(-3, -2, -1, 0, 1),
                     labels=low)
bad = 0
for n in (2, 3, 4):
    for k in range(4):
        pick = (fs[k:] + fs)[:n]
        r = check_homotopy_relations(G, pick)
        if r:
            bad += 1
            print("NS rel FAIL n=%d k=%d:" % (n, k), dict(list(r.items())[:2]))
print("NS relations bad:", bad, "%.1fs" % (time.time() - t0))

# ---- SYM: D3, At5 = cobar weight 5 (target), D_deep = bar(At2, 4)
iota = builtin("iota_Com", 4)
Cd4 = builtin("Com_dual", 4)
b3 = GradedBasis((1, 2), {1: ["u1", "u2"], 2: ["u3"]})
cx3 = ChainComplex.zero_diff(b3)
D3 = CCoalgebra(Cd4, cx3, terms={2: {"u3": [("c2", ("u1", "u2"), Q(1))]}},
                name="D3")
At2 = cobar(iota, D3, weight_cap=2).algebra
At5 = cobar(iota, D3, weight_cap=5).algebra
print("At2 dim:", len(list(At2.cx.basis.labels())),
      "At5 dim:", len(list(At5.cx.basis.labels())))
Dd = bar(iota, At2, weight_cap=4).coalgebra
print("D_deep dim:", len(list(Dd.cx.basis.labels())),
      "%.1fs" % (time.time() - t0))
G2 = convolution_algebra(iota, Dd, At5)
w1 = [l for l in At5.cx.basis.labels() if l.count("|") == 1]
fs2 = random_hom_maps(Dd, At5, 8, seed=11, degrees=(-1, 0, 1, 2),
                      labels=w1)
bad = 0
for n in (2, 3, 4):
    for k in range(3):
        pick = (fs2[k:] + fs2)[:n]
        r = check_homotopy_relations(G2, pick)
        if r:
            bad += 1
            print("SYM rel FAIL n=%d k=%d:" % (n, k), dict(list(r.items())[:2]))
print("SYM relations bad:", bad, "%.1fs" % (time.time() - t0))

# graded symmetry
f, g = fs2[0], fs2[1]
l_fg = G2.ell(2, [f, g])
l_gf = G2.ell(2, [g, f])
s = Q(-1) if (f.degree * g.degree) % 2 else Q(1)
print("sym swap ok:", l_fg == l_gf.scale(s))

# ---- mc equivalence
for m in random_hom_maps(V7, Aw, 6, seed=3, degrees=(0,), labels=low):
    v = G.mc_check(m)
for m in random_hom_maps(Dd, At5, 4, seed=7, degrees=(0,), labels=w1):
    v = G2.mc_check(m)
print("mc equivalence ok", "%.1fs" % (time.time() - t0))

# ---- morphism from twisting
om_k = morphism_from_twisting(kap)
om_i = morphism_from_twisting(iota)
print("morphisms ok:", om_k.name, om_i.name)
al2 = twisting_from_morphism(om_k.map, kap.source, kap.target)
same = all(al2.comp(n).entries == kap.comp(n).entries for n in range(2, 5))
print("round trip twisting:", same, al2.certificate.passed)

# ---- dualize
kv = dualize_tw(builtin("kappa_As", 5))
print("kappa dual cert:", kv.certificate.passed)
iv = dualize_tw(builtin("iota_Com", 3))
print("iota dual cert:", iv.certificate.passed, "%.1fs" % (time.time() - t0))

# ---- iso NS: kappa(3) on V5, A2
kap3 = builtin("kappa_As", 3)
V5 = build("V", I=5).coalgebra
iso = hom_tensor_iso(kap3, V5, A2)
fails = iso.check(samples=8, seed=2)
print("iso NS:", fails or "ok")

# basis change (scalars; C(n) is 1-dim)
from operadiq.operads import builtin as bi
labs2 = list(kap3.source.basis(2).labels())
labs3 = list(kap3.source.basis(3).labels())
iso_b = hom_tensor_iso(kap3, V5, A2,
                       basis={2: [{labs2[0]: Q(5, 3)}],
                              3: [{labs3[0]: Q(-7, 2)}]})
print("iso NS basis change:", iso_b.check(samples=6, seed=4) or "ok")

# ---- iso SYM: iota(3) on D3, shifted sl2
iota3 = builtin("iota_Com", 3)
SL3 = builtin("SLieInf", 3)
bs = GradedBasis((1, 1), {1: ["E", "H", "F"]})
cxs = ChainComplex.zero_diff(bs)
TBL = {("E", "F"): {"H": Q(1)}, ("F", "E"): {"H": Q(-1)},
       ("H", "E"): {"E": Q(2)}, ("E", "H"): {"E": Q(-2)},
       ("H", "F"): {"F": Q(-2)}, ("F", "H"): {"F": Q(2)}}

def gsl(n, p, args):
    if n == 1:
        return {args[0]: Q(1)}
    if n == 2 and p == "(l2;1,2)":
        return dict(TBL.get(tuple(args), {}))
    if n == 2:
        raise ValueError("unexpected arity-2 label %s" % p)
    return {}

Asl = PAlgebra(SL3, cxs, gsl, name="s.sl2", check=False)
D3b = CCoalgebra(builtin("Com_dual", 3), cx3,
                 terms={2: {"u3": [("c2", ("u1", "u2"), Q(1))]}}, name="D3b")
iso2 = hom_tensor_iso(iota3, D3b, Asl)
print("iso SYM:", iso2.check(samples=8, seed=6) or "ok")
print("total %.1fs" % (time.time() - t0))
