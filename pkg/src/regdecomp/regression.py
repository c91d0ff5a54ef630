"""Frequency-weighted least squares with an explicit intercept column.

Each entity ``j`` carries an outcome ``z_j``, a predictor row ``x_j`` whose
first entry is the constant 1, and a frequency ``q_j``. The fit minimises
``sum_j q_j (z_j - b . x_j)**2``. Because the intercept column is included,
the q-weighted mean residual vanishes and the predicted mean ``b . xbar``
reproduces the observed mean exactly.

Solver
------
Rows are scaled by ``sqrt(q_j)`` and the system is solved by Householder QR,
never through the normal equations. Entities with ``q_j = 0`` keep their index
(fitted values and residuals are reported for them) but carry no weight.

Rank deficiency
---------------
Columns are screened in declared order. A column is dependent when appending
it to the already accepted (unit-normalised) columns drops the ratio of
smallest to largest singular value to ``rcond`` (default 1e-10) or below. The
default is to raise :class:`RankDeficiencyError` naming those columns; with
``drop_dependent=True`` they are removed from the solve and receive a zero
coefficient, listed in :attr:`RegressionFit.dropped`.
"""

from __future__ import annotations

import math
from dataclasses import InitVar, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import solve_triangular

from regdecomp.algebra import as_vector, dot

RCOND = 1e-10
FREQ_TOL = 1e-9


class FrequencyError(ValueError):
    """Frequencies are negative, all zero, or do not sum to one."""


class RankDeficiencyError(ValueError):
    """The weighted design does not have full column rank."""

    def __init__(self, columns: Sequence[int], names: Sequence[str], detail: str = ""):
        self.columns = tuple(columns)
        self.names = tuple(names)
        msg = "rank-deficient weighted design; dependent columns: " + ", ".join(
            f"{i} ({n})" for i, n in zip(self.columns, self.names)
        )
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


@dataclass(frozen=True)
class FrequencyVector:
    """Nonnegative weights over entities summing to one.

    Weights whose sum is off by more than ``1e-9`` are rejected unless
    ``normalize=True``. Sums within that tolerance are rescaled silently.
    """

    weights: np.ndarray
    normalize: InitVar[bool] = False

    def __post_init__(self, normalize: bool):
        w = np.array(as_vector(self.weights, "frequencies"))
        if np.any(w < 0):
            bad = np.flatnonzero(w < 0).tolist()
            raise FrequencyError(f"negative frequencies at entities {bad}")
        total = math.fsum(w.tolist())
        if total <= 0:
            raise FrequencyError("frequencies are all zero")
        if abs(total - 1.0) > FREQ_TOL and not normalize:
            raise FrequencyError(
                f"frequencies sum to {total!r}, not 1; pass normalize=True to rescale"
            )
        if total != 1.0:
            w = w / total
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.weights)

    def __array__(self, dtype=None, copy=None):
        return self.weights if dtype is None else self.weights.astype(dtype)


Frequencies = Union[FrequencyVector, Sequence[float], np.ndarray]


def as_frequencies(q: Frequencies) -> FrequencyVector:
    return q if isinstance(q, FrequencyVector) else FrequencyVector(q)


@dataclass(frozen=True)
class DesignMatrix:
    """Entity-by-predictor matrix whose column 0 is identically one."""

    values: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        X = np.array(self.values, dtype=np.float64, copy=True)
        if X.ndim != 2 or X.shape[1] < 1:
            raise ValueError(f"design must be a 2-D matrix with an intercept column, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("design contains non-finite entries")
        if not np.all(X[:, 0] == 1.0):
            raise ValueError("column 0 of the design must be all ones")
        names = tuple(self.names) or ("intercept",) + tuple(f"x{i}" for i in range(1, X.shape[1]))
        if len(names) != X.shape[1]:
            raise ValueError(f"{len(names)} names given for {X.shape[1]} columns")
        X.flags.writeable = False
        object.__setattr__(self, "values", X)
        object.__setattr__(self, "names", names)

    @classmethod
    def with_intercept(cls, predictors, names: Optional[Sequence[str]] = None) -> "DesignMatrix":
        """Prepend a column of ones to an entity-by-predictor array."""
        P = np.asarray(predictors, dtype=np.float64)
        if P.ndim == 1:
            P = P[:, None]
        X = np.column_stack([np.ones(P.shape[0]), P])
        full = ("intercept",) + tuple(names) if names is not None else ()
        return cls(X, full)

    @property
    def n_entities(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]

    def column_means(self, q: Frequencies) -> np.ndarray:
        """q-weighted column means; entry 0 is exactly 1."""
        q = as_frequencies(q)
        if len(q) != self.n_entities:
            raise ValueError(f"length mismatch: {self.n_entities} rows, {len(q)} frequencies")
        xbar = np.array([weighted_mean(col, q) for col in self.values.T])
        xbar[0] = 1.0
        return xbar


@dataclass(frozen=True)
class RegressionFit:
    coefficients: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray
    weights: FrequencyVector
    names: tuple = ()
    dropped: tuple = field(default=())

    def __post_init__(self):
        for name in ("coefficients", "fitted", "residuals"):
            arr = getattr(self, name)
            arr.flags.writeable = False


def weighted_mean(v, q: Frequencies) -> float:
    """Return ``sum_j q_j v_j``."""
    q = as_frequencies(q)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (len(q),):
        raise ValueError(f"length mismatch: {v.shape[0] if v.ndim else 0} values, {len(q)} frequencies")
    return dot(q.weights, v)


def weighted_covariance(a, b, q: Frequencies) -> float:
    """Return ``sum_j q_j (a_j - abar)(b_j - bbar)`` with q-weighted means."""
    q = as_frequencies(q)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    da = a - weighted_mean(a, q)
    db = b - weighted_mean(b, q)
    return dot(q.weights, da * db)


def _dependent_columns(A: np.ndarray, rcond: float) -> list:
    """Indices of columns of ``A`` that are dependent on earlier columns."""
    norms = np.linalg.norm(A, axis=0)
    U = np.divide(A, norms, out=np.zeros_like(A), where=norms > 0)
    if A.shape[0] >= A.shape[1] and np.all(norms > 0):
        s = np.linalg.svd(U, compute_uv=False)
        if s[-1] > rcond * s[0]:
            return []
    kept, dependent = [], []
    for i in range(A.shape[1]):
        if norms[i] == 0 or len(kept) + 1 > A.shape[0]:
            dependent.append(i)
            continue
        s = np.linalg.svd(U[:, kept + [i]], compute_uv=False)
        if s[-1] <= rcond * s[0]:
            dependent.append(i)
        else:
            kept.append(i)
    return dependent


def fit_weighted_least_squares(
    X: DesignMatrix,
    z,
    q: Frequencies,
    *,
    drop_dependent: bool = False,
    rcond: float = RCOND,
) -> RegressionFit:
    """Fit ``z`` on the columns of ``X`` under frequencies ``q``.

    Parameters
    ----------
    X : DesignMatrix
        Design with leading intercept column.
    z : array_like
        Outcome per entity.
    q : FrequencyVector or array_like
        Entity frequencies.
    drop_dependent : bool
        Remove dependent columns (zero coefficient) instead of raising.
    rcond : float
        Relative singular-value threshold for dependence.

    Raises
    ------
    RankDeficiencyError
        If the weighted design is rank deficient and ``drop_dependent`` is
        false, including when fewer entities carry weight than there are
        columns.
    """
    if not isinstance(X, DesignMatrix):
        X = DesignMatrix(X)
    q = as_frequencies(q)
    z = as_vector(z, "outcome")
    m, k = X.values.shape
    if len(z) != m or len(q) != m:
        raise ValueError(f"dimension mismatch: design has {m} rows, outcome {len(z)}, frequencies {len(q)}")

    active = q.weights > 0
    root = np.sqrt(q.weights[active])
    A = X.values[active] * root[:, None]
    y = z[active] * root

    dependent = _dependent_columns(A, rcond)
    if dependent and (not drop_dependent or 0 in dependent):
        detail = ""
        if active.sum() < k:
            detail = f"only {int(active.sum())} entities carry weight for {k} columns"
        raise RankDeficiencyError(dependent, [X.names[i] for i in dependent], detail)
    kept = [i for i in range(k) if i not in dependent]

    Q, R = np.linalg.qr(A[:, kept])
    b_kept = solve_triangular(R, Q.T @ y)
    b = np.zeros(k)
    b[kept] = b_kept
    fitted = X.values @ b
    return RegressionFit(
        coefficients=b,
        fitted=fitted,
        residuals=z - fitted,
        weights=q,
        names=X.names,
        dropped=tuple(dependent),
    )


def predicted_mean(fit: RegressionFit, xbar) -> float:
    """Return ``b . xbar`` for a vector of predictor means with ``xbar[0] = 1``."""
    xbar = as_vector(xbar, "xbar")
    if len(xbar) != len(fit.coefficients):
        raise ValueError(f"length mismatch: {len(fit.coefficients)} coefficients, {len(xbar)} means")
    if abs(xbar[0] - 1.0) > 1e-12:
        raise ValueError(f"xbar[0] must be 1 (intercept), got {xbar[0]!r}")
    return dot(fit.coefficients, xbar)
