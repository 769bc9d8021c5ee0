"""Exact computer algebra for truncated operads and convolution homotopy algebras.

Everything is computed over the rationals with no floating point anywhere.
Objects are arity- and weight-truncated; every verdict carries the caps it
was computed under.
"""

from operadiq.exact import Q, GradedBasis, LinMap, SignContext
from operadiq.complexes import ChainComplex

__all__ = ["Q", "GradedBasis", "LinMap", "SignContext", "ChainComplex"]
