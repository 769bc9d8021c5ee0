"""Built-in (co)operads and twisting morphisms.

Degree conventions: As and Com sit in degree 0; the coassociative cogenerators
t_n of As_shriek sit in degree n-1, so the Koszul twisting morphism kappa has
degree -1; Com_dual and As_dual sit in degree 0, so their cobar constructions
SLieInf and SAsInf have all generators in degree -1 (the shifted convention).
"""

from __future__ import annotations

import itertools

from operadiq.exact import Q, GradedBasis, LinMap, join_label, tensor_basis
from operadiq.complexes import ChainComplex
from operadiq.operads.core import (
    NS, SYM, Collection, Cooperad, Operad, OpTwisting, check_op_twisting,
)
from operadiq.operads.trees import bar_operad, cobar_operad

DEFAULT_CAP = 5

_cache: dict = {}


def _one_dim(cap: int, labfun, degfun) -> dict[int, ChainComplex]:
    comps = {}
    for n in range(2, cap + 1):
        d = degfun(n)
        b = GradedBasis((min(d, 0), max(d, 0)), {d: [labfun(n)]})
        comps[n] = ChainComplex.zero_diff(b)
    return comps


def _trivial_actions(cap: int, comps) -> dict[int, dict[int, LinMap]]:
    acts = {}
    for n in range(2, cap + 1):
        b = comps[n].basis
        acts[n] = {t: LinMap.identity(b) for t in range(1, n)}
    return acts


def _corolla_partials(coll: Collection, labfun) -> dict:
    partial = {}
    for m in range(2, coll.cap + 1):
        for k in range(2, coll.cap + 1):
            n = m + k - 1
            if n > coll.cap:
                continue
            src = tensor_basis(coll.basis(m), coll.basis(k))
            tgt = coll.basis(n)
            for i in range(1, m + 1):
                ent = {join_label([labfun(m), labfun(k)]): {labfun(n): Q(1)}}
                partial[(m, i, k)] = LinMap(src, tgt, 0, ent)
    return partial


def _as_operad(cap: int) -> Operad:
    lab = lambda n: "m%d" % n
    comps = _one_dim(cap, lab, lambda n: 0)
    coll = Collection(NS, cap, comps, name="As")
    return Operad(coll, _corolla_partials(coll, lab))


def _com_operad(cap: int) -> Operad:
    lab = lambda n: "mu%d" % n
    comps = _one_dim(cap, lab, lambda n: 0)
    coll = Collection(SYM, cap, comps, _trivial_actions(cap, comps),
                      name="Com")
    return Operad(coll, _corolla_partials(coll, lab))


def _as_shriek(cap: int) -> Cooperad:
    lab = lambda n: "t%d" % n
    comps = _one_dim(cap, lab, lambda n: n - 1)
    coll = Collection(NS, cap, comps, name="As_shriek")
    delta1: dict[int, dict[str, list]] = {}
    for n in range(3, cap + 1):
        terms = []
        for k in range(2, n - 1 + 1):
            m = n - k + 1
            if m < 2:
                continue
            for i in range(1, m + 1):
                sign = -1 if ((i - 1) * (k - 1)) % 2 else 1
                S = tuple(range(i, i + k))
                terms.append((S, lab(m), lab(k), Q(sign)))
        delta1[n] = {lab(n): terms}
    return Cooperad(coll, delta1)


def _as_dual(cap: int) -> Cooperad:
    lab = lambda n: "a%d" % n
    comps = _one_dim(cap, lab, lambda n: 0)
    coll = Collection(NS, cap, comps, name="As_dual")
    delta1: dict[int, dict[str, list]] = {}
    for n in range(3, cap + 1):
        terms = []
        for k in range(2, n - 1 + 1):
            m = n - k + 1
            if m < 2:
                continue
            for i in range(1, m + 1):
                S = tuple(range(i, i + k))
                terms.append((S, lab(m), lab(k), Q(1)))
        delta1[n] = {lab(n): terms}
    return Cooperad(coll, delta1)


def _com_dual(cap: int) -> Cooperad:
    lab = lambda n: "c%d" % n
    comps = _one_dim(cap, lab, lambda n: 0)
    coll = Collection(SYM, cap, comps, _trivial_actions(cap, comps),
                      name="Com_dual")
    delta1: dict[int, dict[str, list]] = {}
    for n in range(3, cap + 1):
        terms = []
        for k in range(2, n - 1 + 1):
            m = n - k + 1
            if m < 2:
                continue
            for S in itertools.combinations(range(1, n + 1), k):
                terms.append((tuple(S), lab(m), lab(k), Q(1)))
        delta1[n] = {lab(n): terms}
    return Cooperad(coll, delta1)


def _slie_inf(cap: int) -> tuple[Operad, OpTwisting]:
    C = builtin("Com_dual", cap)
    rename = {"c%d" % n: "l%d" % n for n in range(2, cap + 1)}
    op, iota = cobar_operad(C, rename=rename, name="SLieInf")
    return op, iota


def _sas_inf(cap: int) -> tuple[Operad, OpTwisting]:
    C = builtin("As_dual", cap)
    rename = {"a%d" % n: "m%d" % n for n in range(2, cap + 1)}
    op, iota = cobar_operad(C, rename=rename, name="SAsInf")
    return op, iota


def _kappa(cap: int) -> OpTwisting:
    C = builtin("As_shriek", cap)
    P = builtin("As", cap)
    comp2 = LinMap(C.basis(2), P.basis(2), -1, {"t2": {"m2": Q(-1)}})
    kappa = OpTwisting(C, P, {2: comp2}, name="kappa_As")
    kappa.certificate = check_op_twisting(kappa)
    return kappa


def pi_of(P: Operad) -> OpTwisting:
    """Universal twisting morphism of the bar construction of P."""
    return bar_operad(P, name="Bar" + (P.name or "P"))[1]


def builtin(name: str, cap: int = DEFAULT_CAP):
    """Built-in structures by name, cached per (name, cap)."""
    key = (name, cap)
    if key in _cache:
        return _cache[key]
    if name == "As":
        val = _as_operad(cap)
    elif name == "Com":
        val = _com_operad(cap)
    elif name == "As_shriek":
        val = _as_shriek(cap)
    elif name == "As_dual":
        val = _as_dual(cap)
    elif name == "Com_dual":
        val = _com_dual(cap)
    elif name in ("SLieInf", "iota_Com"):
        op, iota = _slie_inf(cap)
        _cache[("SLieInf", cap)] = op
        _cache[("iota_Com", cap)] = iota
        val = op if name == "SLieInf" else iota
    elif name in ("SAsInf", "iota_As"):
        op, iota = _sas_inf(cap)
        _cache[("SAsInf", cap)] = op
        _cache[("iota_As", cap)] = iota
        val = op if name == "SAsInf" else iota
    elif name == "kappa_As":
        val = _kappa(cap)
    else:
        raise ValueError("unknown builtin %r" % name)
    _cache[key] = val
    return val
