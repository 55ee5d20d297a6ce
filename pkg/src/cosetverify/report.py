"""Structured pass/fail records for identity checks.

Every check in this package reports through CheckReport so the CLI can
stream results as JSON lines.  Reports are deterministic: serialization
sorts keys and leaves out wall-clock timing unless asked, because equal
configurations must produce byte-identical output.
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"

# Registry of check anchors.  Each anchor names one identity (or family)
# the engine can verify; docs/anchors.md carries the same list with a
# one-line description, and a test keeps the two in sync.
ANCHORS = (
    "affine-character-closed-form",
    "blowup-sphere-bilinear",
    "blowup-torus-bilinear",
    "bpz-second-order-ode",
    "constant-term-vs-closed-form",
    "coset-decomposition-hwv",
    "degenerate-block-hypergeometric",
    "intertwiner-matrix-elements",
    "kac-kazhdan-genericity",
    "knizhnik-zamolodchikov-system",
    "kyiv-tau-sigma-form",
    "norm-product-closed-form",
    "whittaker-blowup-bilinear",
    "hypergeometric-product-rationality",
    "selberg-closed-form-vs-quadrature",
    "three-point-recursion",
    "three-point-symmetry",
    "toda-equation-residual",
)


def _jsonable(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 \
            else str(x.numerator)
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    return x


@dataclass
class CheckReport:
    """One identity check: what ran, on which inputs, and how it ended.

    status is "pass", "fail" or "inconclusive"; a failing report must
    carry the first offending coefficient and its lattice position in
    the residual summary.  seed records the RNG seed that produced the
    inputs, when one was used.
    """

    name: str
    anchor: str
    inputs: dict = field(default_factory=dict)
    status: str = INCONCLUSIVE
    residual: str = ""
    seed: Optional[int] = None
    timing: Optional[float] = None

    def __post_init__(self):
        if self.anchor not in ANCHORS:
            raise ValueError(f"unregistered anchor {self.anchor!r}")
        if self.status not in (PASS, FAIL, INCONCLUSIVE):
            raise ValueError(f"bad status {self.status!r}")

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_json(self, include_timing: bool = False) -> str:
        payload = {
            "name": self.name,
            "anchor": self.anchor,
            "inputs": _jsonable(self.inputs),
            "status": self.status,
            "residual": self.residual,
            "seed": self.seed,
        }
        if include_timing:
            payload["timing"] = self.timing
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def offending(position, value) -> str:
    """Format the first offending coefficient for a failing report."""
    return f"first offending coefficient at {position}: {value}"
