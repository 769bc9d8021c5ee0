"""Operads, cooperads, twisting morphisms, trees, bar/cobar, builtins."""

from operadiq.operads.core import (
    NS, SYM, UNIT, DEFAULT_ARITY_CAP, SYM_ARITY_LIMIT,
    Collection, Operad, Cooperad, CollMap, OpTwisting, TwistingCertificate,
    TwoLevel, DeltaTerm,
    adjacent_factorization, block_permutation, subset_slot, subset_shuffle,
    unit_component, op_morphism_unit, check_operad_morphism,
    check_cooperad_morphism, star_op, op_bracket, hom_partial_d,
    check_op_twisting, push_tw, pull_tw, inf_composite, convolution_operad,
    dual_cooperad, symmetric_average, coinvariant_relations,
    coinvariant_reduce,
)
from operadiq.operads.trees import (
    GenSet, genset_from_collection, corolla, enc, parse, tree_leaves,
    tree_arity, tree_degree, canon, act_tree, graft, gamma_tree,
    compose_subset_tree, all_trees, free_operad, free_morphism,
    cobar_operad, bar_operad, bar_cobar_unit, koszul_reorder_sign,
)
from operadiq.operads.builtins import builtin, pi_of, DEFAULT_CAP

__all__ = [
    "NS", "SYM", "UNIT", "DEFAULT_ARITY_CAP", "SYM_ARITY_LIMIT",
    "Collection", "Operad", "Cooperad", "CollMap", "OpTwisting",
    "TwistingCertificate", "TwoLevel", "DeltaTerm",
    "adjacent_factorization", "block_permutation", "subset_slot",
    "subset_shuffle", "unit_component", "op_morphism_unit",
    "check_operad_morphism", "check_cooperad_morphism", "star_op",
    "op_bracket", "hom_partial_d", "check_op_twisting", "push_tw",
    "pull_tw", "inf_composite", "convolution_operad", "dual_cooperad",
    "symmetric_average", "coinvariant_relations", "coinvariant_reduce",
    "GenSet", "genset_from_collection", "corolla", "enc", "parse",
    "tree_leaves", "tree_arity", "tree_degree", "canon", "act_tree",
    "graft", "gamma_tree", "compose_subset_tree", "all_trees",
    "free_operad", "free_morphism", "cobar_operad", "bar_operad",
    "bar_cobar_unit", "koszul_reorder_sign", "builtin", "pi_of",
    "DEFAULT_CAP",
]
