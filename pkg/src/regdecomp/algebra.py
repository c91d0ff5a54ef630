"""Product rule for finite differences on scalars and dot products.

For ``z = b . x`` and a primed (changed) context ``z' = b' . x'``::

    z' - z = b . (x' - x) + x' . (b' - b)

holds exactly, with no dropped remainder. The differential product rule is
the limit in which the second-order term ``dx . db`` is negligible.

Dot products are accumulated with :func:`math.fsum` so that closure checks do
not degrade with vector length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


def as_vector(values, name: str = "vector") -> np.ndarray:
    """Return ``values`` as a read-only 1-D float64 array of finite entries."""
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.flags.writeable = False
    return arr


def _check_lengths(**vectors: np.ndarray) -> None:
    lengths = {name: len(v) for name, v in vectors.items()}
    if len(set(lengths.values())) > 1:
        detail = ", ".join(f"{k}={n}" for k, n in lengths.items())
        raise ValueError(f"length mismatch: {detail}")


def dot(a, b) -> float:
    """Dot product with an exactly rounded sum of the elementwise products.

    >>> dot([1, 2, 3], [4, 5, 6])
    32.0
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return math.fsum((a * b).tolist())


@dataclass(frozen=True)
class DeltaPair:
    """A vector observed in an initial and a changed context."""

    initial: np.ndarray
    changed: np.ndarray

    def __post_init__(self):
        initial = as_vector(self.initial, "initial")
        changed = as_vector(self.changed, "changed")
        _check_lengths(initial=initial, changed=changed)
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "changed", changed)

    @property
    def delta(self) -> np.ndarray:
        return self.changed - self.initial

    def swapped(self) -> "DeltaPair":
        return DeltaPair(self.changed, self.initial)

    def __len__(self) -> int:
        return len(self.initial)


class ProductRuleTerms(NamedTuple):
    total: float
    holding_coefficients: float
    coefficient_change: float


class DifferentialTerms(NamedTuple):
    first_order: float
    remainder: float


def product_rule_delta(b: DeltaPair, x: DeltaPair) -> ProductRuleTerms:
    """Split ``b'.x' - b.x`` into ``b.dx`` and ``x'.db``.

    The first term is the change in ``x`` with ``b`` held at its initial
    value; the second is the change in ``b`` weighted by the changed ``x``.
    """
    if len(b) != len(x):
        raise ValueError(f"length mismatch: b has {len(b)}, x has {len(x)}")
    holding = dot(b.initial, x.delta)
    change = dot(x.changed, b.delta)
    return ProductRuleTerms(holding + change, holding, change)


def differential_remainder(b, db, x, dx) -> DifferentialTerms:
    """First-order differential and the exact second-order remainder.

    ``first_order + remainder`` equals ``(b+db).(x+dx) - b.x``.
    """
    b, db, x, dx = (as_vector(v, n) for v, n in ((b, "b"), (db, "db"), (x, "x"), (dx, "dx")))
    _check_lengths(b=b, db=db, x=x, dx=dx)
    first = math.fsum((b * dx).tolist() + (x * db).tolist())
    return DifferentialTerms(first, dot(dx, db))


def closure_scale(*values: float) -> float:
    """Reference magnitude for relative closure checks, never below one."""
    return max([1.0] + [abs(v) for v in values])
