"""Dense and iterative eigenvalue computations and the counting function."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import eigh, eigvalsh
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh
from tenacity import RetryError, Retrying, retry_if_exception_type, stop_after_attempt

from ..config import COUNTING_SLACK, DENSE_CAP, ITERATIVE
from ..exceptions import ResourceError, ValidationError
from ..randomness import START_VECTOR_STREAM, replica_generator

logger = logging.getLogger(__name__)

SYMMETRY_ATOL = 1e-12
# below this dimension ARPACK is replaced by a dense solve of the materialized operator
DENSE_FALLBACK_DIM = 64


@dataclass(frozen=True)
class IterativeResult:
    value: float
    residual: float
    converged: bool
    attempts: int
    ncv: Optional[int] = None


class _ResidualTooLarge(Exception):
    def __init__(self, value, residual):
        super().__init__(f"residual {residual:.3e} above tolerance at theta={value:.12g}")
        self.value = value
        self.residual = residual


def eigenvalues_dense(M, cap: Optional[int] = None) -> np.ndarray:
    """Full sorted spectrum of a real symmetric matrix."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {M.shape}")
    cap = DENSE_CAP if cap is None else cap
    if M.shape[0] > cap:
        raise ResourceError(f"dense eigensolve of dimension {M.shape[0]} exceeds the cap {cap}")
    asymmetry = float(np.abs(M - M.T).max()) if M.size else 0.0
    if asymmetry > SYMMETRY_ATOL:
        raise ValidationError(f"matrix is not symmetric (max |M - M^T| = {asymmetry:.3e})")
    return eigvalsh(M)


def start_vector(dim: int, seed: int, replica: int = 0) -> np.ndarray:
    """Deterministic pseudo-random unit vector for Krylov iterations."""
    v0 = replica_generator(seed, replica, START_VECTOR_STREAM).standard_normal(dim)
    return v0 / np.linalg.norm(v0)


def _materialize(apply: Callable, dim: int) -> np.ndarray:
    columns = [apply(column) for column in np.eye(dim)]
    M = np.column_stack(columns)
    return 0.5 * (M + M.T)


def max_eigenvalue_iterative(
    apply: Callable[[np.ndarray], np.ndarray],
    dim: int,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    seed: int = 0,
    replica: int = 0,
    attempts: Optional[int] = None,
) -> IterativeResult:
    """Largest eigenvalue of a symmetric operator given only its matvec.

    ARPACK's implicitly restarted Lanczos (``which='LA'``) from a seeded start
    vector. A non-converged solve is retried with a larger Krylov space; after
    the last attempt the result comes back with ``converged=False``.
    """
    tol = float(ITERATIVE["TOL"]) if tol is None else float(tol)
    max_iter = int(ITERATIVE["MAX_ITER"]) if max_iter is None else int(max_iter)
    attempts = int(ITERATIVE["ATTEMPTS"]) if attempts is None else int(attempts)
    if not tol > 0:
        raise ValidationError(f"tolerance must be positive, got {tol}")
    if dim < 1:
        raise ValidationError(f"dimension must be >= 1, got {dim}")

    def residual_of(theta, vector):
        vector = vector / np.linalg.norm(vector)
        return float(np.linalg.norm(apply(vector) - theta * vector))

    if dim <= DENSE_FALLBACK_DIM:
        values, vectors = eigh(_materialize(apply, dim))
        theta = float(values[-1])
        residual = residual_of(theta, vectors[:, -1])
        return IterativeResult(theta, residual, residual <= tol * max(1.0, abs(theta)), 1)

    operator = LinearOperator((dim, dim), matvec=apply, dtype=float)
    v0 = start_vector(dim, seed, replica)
    partial = {}

    def solve(attempt_number):
        ncv = min(dim - 1, 20 * 2 ** (attempt_number - 1))
        partial["ncv"] = ncv
        try:
            values, vectors = eigsh(
                operator, k=1, which="LA", v0=v0, ncv=ncv, maxiter=max_iter, tol=tol
            )
        except ArpackNoConvergence as error:
            if len(error.eigenvalues):
                partial["value"] = float(error.eigenvalues[-1])
                partial["residual"] = residual_of(partial["value"], error.eigenvectors[:, -1])
            raise
        theta = float(values[-1])
        residual = residual_of(theta, vectors[:, -1])
        partial.update(value=theta, residual=residual)
        if residual > tol * max(1.0, abs(theta)):
            raise _ResidualTooLarge(theta, residual)
        return IterativeResult(theta, residual, True, attempt_number, ncv)

    try:
        for attempt in Retrying(
            retry=retry_if_exception_type((ArpackNoConvergence, _ResidualTooLarge)),
            stop=stop_after_attempt(attempts),
        ):
            with attempt:
                result = solve(attempt.retry_state.attempt_number)
    except RetryError as error:
        logger.warning(
            "Iterative eigensolver did not converge after %d attempts (dim=%d)",
            error.last_attempt.attempt_number, dim,
        )
        return IterativeResult(
            value=partial.get("value", math.nan),
            residual=partial.get("residual", math.inf),
            converged=False,
            attempts=error.last_attempt.attempt_number,
            ncv=partial.get("ncv"),
        )
    return result


def counting_function(eigs, E):
    """Fraction of eigenvalues ``<= E`` (with absolute slack), vectorised over ``E``."""
    eigs = np.asarray(eigs, dtype=float)
    if eigs.size == 0:
        raise ValidationError("counting function of an empty spectrum")
    counts = np.searchsorted(np.sort(eigs), np.asarray(E, dtype=float) + COUNTING_SLACK, side="right")
    result = counts / eigs.size
    return float(result) if np.ndim(result) == 0 else result
