import logging
from functools import cached_property
from typing import Literal, Union

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, model_validator

from uniexp.exceptions import InputError, MatrixValidationError, StructuralError
from uniexp.models.schemas import SparsityStats, ValidationReport, Violation
from uniexp.settings import settings

logger = logging.getLogger(__name__)

ValidationMode = Literal["conservative", "substochastic"]

# Violations echoed in an error envelope; the report itself keeps all of them.
MAX_REPORTED_VIOLATIONS = 50


class RateMatrix(BaseModel):
    """
    Sparse CTMC generator Q stored column-compressed.

    The left action v^T Q is a single pass over the compressed columns, which
    scipy exposes as the row-compressed transpose.

    Attributes:
        matrix (sp.csc_matrix): The d x d generator with no stored zeros.
        layout (str): Storage-order tag written to artifacts.
    """

    matrix: sp.csc_matrix
    layout: Literal["csc"] = "csc"

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @model_validator(mode="after")
    def square(self) -> "RateMatrix":
        rows, cols = self.matrix.shape
        if rows != cols or rows < 1:
            raise ValueError(f"rate matrix must be square with d >= 1, got {rows}x{cols}")
        return self

    @classmethod
    def from_entries(cls, d: int, rows, cols, values) -> "RateMatrix":
        """
        Build a generator from coordinate triplets (0-based indices).

        Exact zeros are dropped. Semantic checks are left to `validate_rate_matrix`.

        Args:
            d (int): Statespace size.
            rows, cols, values: Equal-length sequences of coordinates and values.

        Returns:
            RateMatrix: The assembled matrix.

        Raises:
            StructuralError: On out-of-range or duplicate coordinates.
        """
        if d < 1:
            raise StructuralError(f"dimension must be positive, got {d}")
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        values = np.asarray(values, dtype=float).ravel()
        if not rows.shape == cols.shape == values.shape:
            raise StructuralError("row, column and value arrays differ in length")
        bad = (rows < 0) | (rows >= d) | (cols < 0) | (cols >= d)
        if bad.any():
            k = int(np.argmax(bad))
            raise StructuralError(
                f"index out of range: ({rows[k] + 1},{cols[k] + 1}) for d={d}",
                {"row": int(rows[k]) + 1, "col": int(cols[k]) + 1},
            )
        keys = rows * d + cols
        unique, counts = np.unique(keys, return_counts=True)
        if (counts > 1).any():
            key = int(unique[np.argmax(counts > 1)])
            raise StructuralError(
                f"duplicate entry at ({key // d + 1},{key % d + 1})",
                {"row": key // d + 1, "col": key % d + 1},
            )
        if not np.isfinite(values).all():
            raise StructuralError("non-finite matrix entry")
        keep = values != 0.0
        matrix = sp.coo_matrix(
            (values[keep], (rows[keep], cols[keep])), shape=(d, d)
        ).tocsc()
        matrix.sort_indices()
        return cls(matrix=matrix)

    @classmethod
    def from_sparse(cls, matrix) -> "RateMatrix":
        coo = sp.coo_matrix(matrix)
        if coo.shape[0] != coo.shape[1]:
            raise StructuralError(f"matrix is not square: {coo.shape}")
        return cls.from_entries(coo.shape[0], coo.row, coo.col, coo.data)

    @classmethod
    def from_dense(cls, array) -> "RateMatrix":
        return cls.from_sparse(sp.coo_matrix(np.asarray(array, dtype=float)))

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    @cached_property
    def rho(self) -> float:
        return float(np.max(np.abs(self.matrix.diagonal())))

    def scaled(self, factor: float) -> "RateMatrix":
        if factor < 0:
            raise InputError(f"scale factor must be nonnegative, got {factor}")
        matrix = sp.csc_matrix(self.matrix * factor)
        matrix.eliminate_zeros()
        return RateMatrix(matrix=matrix)

    def entries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Coordinate triplets in column-major order (0-based)."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.row, coo.col))
        return coo.row[order], coo.col[order], coo.data[order]

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


class ShiftedKernel(BaseModel):
    """The nonnegative shift P = Q + ρI together with ρ."""

    P: sp.csc_matrix
    rho: float

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def d(self) -> int:
        return self.P.shape[0]

    @cached_property
    def left_operator(self) -> sp.csr_matrix:
        # P^T as CSR walks the columns of P once per product
        return sp.csr_matrix(self.P.T)


def validate_rate_matrix(
    Q: RateMatrix,
    mode: ValidationMode = "conservative",
    row_sum_tol: float | None = None,
) -> ValidationReport:
    """
    Check the generator properties of Q.

    Args:
        Q (RateMatrix): Structurally well-formed matrix.
        mode (str): "conservative" requires |row sum| <= tol * max(1, |Q_ii|);
            "substochastic" only forbids positive row sums beyond that tolerance.
        row_sum_tol (Optional[float]): Defaults to settings.ROW_SUM_TOL.

    Returns:
        ValidationReport: Empty violation list when Q is a valid generator.
    """
    tol = settings.ROW_SUM_TOL if row_sum_tol is None else row_sum_tol
    coo = Q.matrix.tocoo()
    violations: list[Violation] = []

    negative = (coo.row != coo.col) & (coo.data < 0)
    for i, j, value in zip(coo.row[negative], coo.col[negative], coo.data[negative]):
        violations.append(
            Violation(kind="negative_offdiagonal", row=int(i), col=int(j), magnitude=float(-value))
        )

    diagonal = Q.matrix.diagonal()
    for i in np.flatnonzero(diagonal > 0):
        violations.append(
            Violation(kind="positive_diagonal", row=int(i), magnitude=float(diagonal[i]))
        )

    row_sums = np.asarray(Q.matrix.sum(axis=1)).ravel()
    allowed = tol * np.maximum(1.0, np.abs(diagonal))
    if mode == "conservative":
        bad = np.abs(row_sums) > allowed
    else:
        bad = row_sums > allowed
    for i in np.flatnonzero(bad):
        violations.append(Violation(kind="row_sum", row=int(i), magnitude=float(row_sums[i])))

    report = ValidationReport(mode=mode, row_sum_tol=tol, violations=violations)
    if not report.ok:
        logger.debug("validation found %d violations in %s mode", len(violations), mode)
    return report


def require_valid(
    Q: RateMatrix,
    mode: ValidationMode = "substochastic",
    row_sum_tol: float | None = None,
) -> RateMatrix:
    """
    Validate Q and raise on the first failure.

    Raises:
        MatrixValidationError: With the serialized violations in `extra`.
    """
    report = validate_rate_matrix(Q, mode, row_sum_tol)
    if not report.ok:
        shown = report.violations[:MAX_REPORTED_VIOLATIONS]
        raise MatrixValidationError(
            f"{report.violations[0].describe()} ({len(report.violations)} violations)",
            {"mode": mode, "violations": [v.model_dump() for v in shown]},
        )
    return Q


def rho_of(Q: RateMatrix) -> float:
    return Q.rho


def shift(Q: RateMatrix) -> ShiftedKernel:
    """
    Form P = Q + ρI with ρ = max_i |Q_ii|.

    Diagonal entries that become exactly zero are dropped from storage.
    """
    rho = Q.rho
    P = sp.csc_matrix(Q.matrix + rho * sp.identity(Q.d, format="csc"))
    P.eliminate_zeros()
    P.sort_indices()
    return ShiftedKernel(P=P, rho=rho)


def left_multiply(v, M: Union[ShiftedKernel, RateMatrix, sp.spmatrix]) -> np.ndarray:
    """
    Return v^T M.

    Raises:
        InputError: If the length of v differs from the dimension of M.
    """
    if isinstance(M, ShiftedKernel):
        operator = M.left_operator
    elif isinstance(M, RateMatrix):
        operator = M.matrix.T
    else:
        operator = sp.csr_matrix(M).T
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != operator.shape[1]:
        raise InputError(f"dimension mismatch: vector of length {v.shape} against d={operator.shape[1]}")
    return operator @ v


def sparsity_stats(Q: RateMatrix) -> SparsityStats:
    positive = int(np.count_nonzero(Q.matrix.data > 0))
    return SparsityStats(d=Q.d, nnz=Q.nnz, r=positive / Q.d)


def generator_from_rates(d: int, src, dst, rates) -> RateMatrix:
    """
    Assemble a conservative generator from transition triplets.

    Repeated (src, dst) pairs are summed and zero rates dropped; each diagonal
    entry is minus its row's off-diagonal total.

    Raises:
        StructuralError: If a transition is a self-loop.
    """
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    rates = np.asarray(rates, dtype=float)
    if (src == dst).any():
        raise StructuralError("self-transition in rate list")
    keep = rates > 0
    off = sp.coo_matrix((rates[keep], (src[keep], dst[keep])), shape=(d, d)).tocsr()
    out = np.asarray(off.sum(axis=1)).ravel()
    return RateMatrix.from_sparse(off - sp.diags(out, format="csr"))


def as_mass_vector(nu, d: int) -> np.ndarray:
    """
    Copy nu into a float array after checking it is a nonnegative d-vector.

    Raises:
        InputError: On wrong shape, non-finite or negative entries.
    """
    array = np.array(nu, dtype=float, copy=True)
    if array.ndim != 1 or array.shape[0] != d:
        raise InputError(f"dimension mismatch: initial vector has shape {array.shape}, expected ({d},)")
    if not np.isfinite(array).all():
        raise InputError("initial vector has non-finite entries")
    if (array < 0).any():
        k = int(np.argmax(array < 0))
        raise InputError(f"negative entry in initial vector at index {k + 1}", {"index": k + 1})
    return array
