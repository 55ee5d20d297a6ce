"""Exact-arithmetic computation and cross-verification of coset
highest-weight vectors, their Shapovalov norms, degenerate three-point
coefficients, conformal blocks, blowup-type bilinear relations, and
Selberg-type integrals, all at desk scale.

Every closed formula exposed here is checked against an independent
brute-force construction in the test suite; the library itself only
contains the machinery both sides share (exact scalars, graded modules,
series rings) plus the closed forms.
"""

__version__ = "0.1.0"
