"""Random forest kernel E_{q,w}[S_n] and the kernel-ridge form Boulevard converges to.

Boulevard's fitted values converge to y* = (I/lambda + K)^{-1} K Y with
K = E_{q,w}[S_n], and its prediction at x to k_x^T (I/lambda + K)^{-1} Y with
k_x = E[s_n(x)]. This module materialises structure matrices, estimates K by
Monte Carlo, by exhaustive enumeration over subsamples, or from a fitted
ensemble's own trees, checks its properties, and solves the ridge system
directly.
"""

from __future__ import annotations

import itertools
import logging
import math
from typing import TYPE_CHECKING, Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from scipy import linalg
from scipy.special import gammaln

from .errors import BudgetExceededError, ConfigurationError, DimensionError
from .models.config import StructureConstraints
from .models.kernel import (
    FixedPoint,
    KernelEstimate,
    KernelMode,
    KernelPropertyReport,
    PropertyCheck,
    StructureMatrix,
)
from .models.trees import Subsample, TreeStructure
from .samplers.base import StructureSampler
from .seeding import derived_rng
from .trees import draw_subsample, structure_vectors_at

if TYPE_CHECKING:
    from .models.ensemble import BoulevardModel

logger = logging.getLogger(__name__)

MAX_DIRECT_SOLVE = 5000
MAX_ENUMERATION = 10**6
MC_CHUNK_SIZE = 50

TreeDraw = Callable[[np.random.Generator], Tuple[TreeStructure, Subsample]]


class SubsampledStructureDraw:
    """
    One (structure, subsample) draw in the same order the boosting loop uses:
    subsample first, then structure.
    """

    def __init__(
        self,
        sampler: StructureSampler,
        X: np.ndarray,
        constraints: StructureConstraints,
        theta: float,
        z: Optional[np.ndarray] = None,
    ) -> None:
        self.sampler = sampler
        self.X = np.asarray(X, dtype=float)
        self.constraints = constraints
        self.theta = theta
        self.z = z

    def __call__(self, rng: np.random.Generator) -> Tuple[TreeStructure, Subsample]:
        subsample = draw_subsample(self.X.shape[0], self.theta, rng)
        structure = self.sampler.sample(self.X, self.z, subsample, self.constraints, rng)
        return structure, subsample


def structure_matrix(structure: TreeStructure, X: np.ndarray, subsample: Subsample) -> StructureMatrix:
    return StructureMatrix(entries=structure_vectors_at(structure, X, subsample, X))


def _kernel_chunk(
    X: np.ndarray,
    builder: TreeDraw,
    count: int,
    entropy: int,
    chunk: int,
    queries: Optional[np.ndarray],
) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray], Optional[np.ndarray]]:
    rng = derived_rng(entropy, chunk)
    n = X.shape[0]
    total = np.zeros((n, n))
    total_sq = np.zeros((n, n))
    q_total = None if queries is None else np.zeros((queries.shape[0], n))
    q_total_sq = None if queries is None else np.zeros((queries.shape[0], n))
    for _ in range(count):
        structure, subsample = builder(rng)
        S = structure_vectors_at(structure, X, subsample, X)
        total += S
        total_sq += S * S
        if queries is not None:
            Q = structure_vectors_at(structure, X, subsample, queries)
            q_total += Q
            q_total_sq += Q * Q
    return total, total_sq, q_total, q_total_sq


def _mean_and_error(total: np.ndarray, total_sq: np.ndarray, replications: int) -> Tuple[np.ndarray, np.ndarray]:
    mean = total / replications
    variance = np.maximum(total_sq / replications - mean * mean, 0.0)
    return mean, np.sqrt(variance / replications)


def _entropy_from(rng: Union[np.random.Generator, int]) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(2**63 - 1))
    return int(rng)


def estimate_kernel_mc(
    X: np.ndarray,
    builder: TreeDraw,
    replications: int,
    rng: Union[np.random.Generator, int],
    queries: Optional[np.ndarray] = None,
    n_jobs: int = 1,
) -> KernelEstimate:
    """
    Entrywise average of structure matrices over independent (q, w) draws.

    Draws are grouped in chunks of MC_CHUNK_SIZE; chunk c is seeded from
    SeedSequence([entropy, c]) and chunk sums are added in chunk order, so the
    estimate does not depend on `n_jobs`. The output is symmetrised and the
    pre-symmetrisation asymmetry is reported.
    """
    if replications < 1:
        raise ConfigurationError("replications must be >= 1")
    points = np.asarray(X, dtype=float)
    query_points = None if queries is None else np.atleast_2d(np.asarray(queries, dtype=float))
    entropy = _entropy_from(rng)

    counts = [MC_CHUNK_SIZE] * (replications // MC_CHUNK_SIZE)
    if replications % MC_CHUNK_SIZE:
        counts.append(replications % MC_CHUNK_SIZE)

    parts = Parallel(n_jobs=n_jobs)(
        delayed(_kernel_chunk)(points, builder, count, entropy, chunk, query_points)
        for chunk, count in enumerate(counts)
    )

    n = points.shape[0]
    total = np.zeros((n, n))
    total_sq = np.zeros((n, n))
    q_total = None if query_points is None else np.zeros((query_points.shape[0], n))
    q_total_sq = None if query_points is None else np.zeros((query_points.shape[0], n))
    for part_total, part_sq, part_q, part_q_sq in parts:
        total += part_total
        total_sq += part_sq
        if q_total is not None:
            q_total += part_q
            q_total_sq += part_q_sq

    mean, std_error = _mean_and_error(total, total_sq, replications)
    asymmetry = float(np.max(np.abs(mean - mean.T))) if n else 0.0
    logger.debug("Monte Carlo kernel: n=%d replications=%d asymmetry=%.3g", n, replications, asymmetry)

    query_mean = query_error = None
    if q_total is not None:
        query_mean, query_error = _mean_and_error(q_total, q_total_sq, replications)

    return KernelEstimate(
        matrix=0.5 * (mean + mean.T),
        replications=replications,
        mode=KernelMode.MONTE_CARLO,
        asymmetry=asymmetry,
        std_error=0.5 * (std_error + std_error.T),
        query_matrix=query_mean,
        query_std_error=query_error,
    )


def kernel_from_ensemble(
    model: "BoulevardModel", X: np.ndarray, queries: Optional[np.ndarray] = None
) -> KernelEstimate:
    """
    K and E[s_n(x)] averaged over the structures and subsamples a fitted ensemble actually used.

    The average is not symmetrized; its rows sum to at most one. `asymmetry`
    records max |K - K^T|.
    """
    points = np.asarray(X, dtype=float)
    n = points.shape[0]
    query_points = None if queries is None else np.atleast_2d(np.asarray(queries, dtype=float))
    total = np.zeros((n, n))
    total_sq = np.zeros((n, n))
    q_total = None if query_points is None else np.zeros((query_points.shape[0], n))
    q_total_sq = None if query_points is None else np.zeros((query_points.shape[0], n))
    for tree in model.trees:
        S = structure_vectors_at(tree.structure, points, tree.subsample, points)
        total += S
        total_sq += S * S
        if q_total is not None:
            Q = structure_vectors_at(tree.structure, points, tree.subsample, query_points)
            q_total += Q
            q_total_sq += Q * Q

    B = len(model.trees)
    mean, std_error = _mean_and_error(total, total_sq, B)
    query_mean = query_error = None
    if q_total is not None:
        query_mean, query_error = _mean_and_error(q_total, q_total_sq, B)
    return KernelEstimate(
        matrix=mean,
        replications=B,
        mode=KernelMode.ENSEMBLE,
        asymmetry=float(np.max(np.abs(mean - mean.T))),
        std_error=std_error,
        query_matrix=query_mean,
        query_std_error=query_error,
    )


def estimate_kernel_exhaustive(
    X: np.ndarray,
    structures: Sequence[Tuple[TreeStructure, float]],
    subsample_size: int,
    max_enumeration: int = MAX_ENUMERATION,
) -> KernelEstimate:
    """Exact E_{q,w}[S_n] over every subsample of the given size and every listed structure."""
    points = np.asarray(X, dtype=float)
    n = points.shape[0]
    if not 1 <= subsample_size <= n:
        raise ConfigurationError(f"subsample_size must lie in [1, {n}]")
    count = math.comb(n, subsample_size)
    if count > max_enumeration:
        raise BudgetExceededError("subsample enumeration refused", count=count, cap=max_enumeration)
    if not structures:
        raise ConfigurationError("at least one structure is required")
    probabilities = np.array([p for _, p in structures], dtype=float)
    if np.any(probabilities < 0) or abs(probabilities.sum() - 1.0) > 1e-9:
        raise ConfigurationError("structure probabilities must be nonnegative and sum to 1")

    kernel = np.zeros((n, n))
    for (structure, probability), weight in zip(structures, probabilities):
        leaves = structure.apply(points)
        same_leaf = (leaves[:, None] == leaves[None, :]).astype(float)
        accumulated = np.zeros((n, n))
        for members in itertools.combinations(range(n), subsample_size):
            in_subsample = np.zeros(n)
            in_subsample[list(members)] = 1.0
            counts = np.bincount(leaves[list(members)], minlength=structure.leaf_count)[leaves]
            row_weights = np.divide(1.0, counts, out=np.zeros(n), where=counts > 0)
            accumulated += same_leaf * in_subsample[None, :] * row_weights[:, None]
        kernel += weight * accumulated / count

    return KernelEstimate(
        matrix=kernel,
        replications=count * len(structures),
        mode=KernelMode.EXHAUSTIVE,
        asymmetry=float(np.max(np.abs(kernel - kernel.T))),
    )


def _kernel_matrix(K: Union[KernelEstimate, np.ndarray]) -> np.ndarray:
    matrix = K.matrix if isinstance(K, KernelEstimate) else np.asarray(K, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionError(f"kernel must be square, got shape {matrix.shape}")
    return matrix


def verify_kernel_properties(K: Union[KernelEstimate, np.ndarray], tol: float = 1e-9) -> KernelPropertyReport:
    matrix = _kernel_matrix(K)
    asymmetry = float(np.max(np.abs(matrix - matrix.T)))
    min_entry = float(matrix.min())
    min_eigenvalue = float(np.linalg.eigvalsh(0.5 * (matrix + matrix.T)).min())
    max_column = float(matrix.sum(axis=0).max())
    max_row = float(matrix.sum(axis=1).max())
    spectral = float(np.linalg.norm(matrix, 2))

    report = KernelPropertyReport(
        tolerance=tol,
        max_asymmetry=PropertyCheck(name="max_asymmetry", value=asymmetry, limit=tol, passed=asymmetry <= tol),
        min_entry=PropertyCheck(name="min_entry", value=min_entry, limit=-tol, passed=min_entry >= -tol),
        min_eigenvalue=PropertyCheck(
            name="min_eigenvalue", value=min_eigenvalue, limit=-tol, passed=min_eigenvalue >= -tol
        ),
        max_column_sum=PropertyCheck(
            name="max_column_sum", value=max_column, limit=1 + tol, passed=max_column <= 1 + tol
        ),
        max_row_sum=PropertyCheck(name="max_row_sum", value=max_row, limit=1 + tol, passed=max_row <= 1 + tol),
        spectral_norm=PropertyCheck(name="spectral_norm", value=spectral, limit=1 + tol, passed=spectral <= 1 + tol),
    )
    for check in report.checks:
        if not check.passed:
            report.notes.append(f"{check.name}={check.value:.6g} violates limit {check.limit:.6g}")
    return report


class KernelRidgeSolver:
    """
    Factors I/lambda + K once and reuses the factor for the fixed point and
    for any number of predictions.

    The system matrix is positive definite whenever ||K|| <= 1 < 1/lambda, so a
    symmetric kernel gets a Cholesky factor; a kernel that is not symmetric
    falls back to LU with a warning.
    """

    def __init__(self, K: Union[KernelEstimate, np.ndarray], lambda_: float) -> None:
        matrix = _kernel_matrix(K)
        if not 0 < lambda_ < 1:
            raise ConfigurationError("lambda must lie in (0, 1)")
        n = matrix.shape[0]
        if n > MAX_DIRECT_SOLVE:
            raise BudgetExceededError("direct ridge solve refused", count=n, cap=MAX_DIRECT_SOLVE)

        self._kernel = matrix
        self._lambda = lambda_
        system = matrix + np.eye(n) / lambda_
        asymmetry = float(np.max(np.abs(matrix - matrix.T))) if n else 0.0
        self._symmetric = asymmetry <= 1e-10
        if self._symmetric:
            self._factor = linalg.cho_factor(system, lower=True)
        else:
            logger.warning("Kernel is not symmetric (max asymmetry %.3g); solving with LU", asymmetry)
            self._factor = linalg.lu_factor(system)

    @property
    def n(self) -> int:
        return int(self._kernel.shape[0])

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self._symmetric:
            return linalg.cho_solve(self._factor, rhs)
        return linalg.lu_solve(self._factor, rhs)

    def _check_vector(self, Y: np.ndarray) -> np.ndarray:
        vector = np.asarray(Y, dtype=float)
        if vector.shape != (self.n,):
            raise DimensionError(f"expected a vector of length {self.n}, got shape {vector.shape}")
        return vector

    def fixed_point(self, Y: np.ndarray) -> FixedPoint:
        responses = self._check_vector(Y)
        y_star = self.solve(self._kernel @ responses)
        residual = y_star - self._lambda * (self._kernel @ (responses - y_star))
        return FixedPoint(y_star=y_star, lambda_=self._lambda, residual_norm=float(np.linalg.norm(residual)))

    def dual_coefficients(self, Y: np.ndarray) -> np.ndarray:
        """v with (I/lambda + K) v = Y."""
        return self.solve(self._check_vector(Y))

    def predict(self, k_x: np.ndarray, Y: np.ndarray) -> Union[float, np.ndarray]:
        weights = np.asarray(k_x, dtype=float)
        if weights.shape[-1] != self.n:
            raise DimensionError(f"k_x must have length {self.n}")
        values = weights @ self.dual_coefficients(Y)
        return float(values) if weights.ndim == 1 else values


def fixed_point(K: Union[KernelEstimate, np.ndarray], Y: np.ndarray, lambda_: float) -> FixedPoint:
    return KernelRidgeSolver(K, lambda_).fixed_point(Y)


def krr_predict(
    k_x: np.ndarray, K: Union[KernelEstimate, np.ndarray], Y: np.ndarray, lambda_: float
) -> Union[float, np.ndarray]:
    """k_x^T (I/lambda + K)^{-1} Y through a solve against Y; rows of a matrix k_x are separate queries."""
    return KernelRidgeSolver(K, lambda_).predict(k_x, Y)


def neumann_inverse(K: Union[KernelEstimate, np.ndarray], lambda_: float, terms: int = 200) -> np.ndarray:
    """lambda * sum_j (-lambda K)^j truncated after `terms` terms; equals (I/lambda + K)^{-1} when ||K|| <= 1."""
    matrix = _kernel_matrix(K)
    n = matrix.shape[0]
    step = -lambda_ * matrix
    term = np.eye(n)
    total = np.eye(n)
    for _ in range(1, terms):
        term = term @ step
        total += term
    return lambda_ * total


def missing_leaf_probability(n: int, leaf_size: int, subsample_size: int) -> float:
    """
    Probability that a uniformly drawn subsample of the given size misses
    every point of a leaf: C(n - leaf_size, s) / C(n, s), in log space.
    """
    if not 0 <= leaf_size <= n or not 0 <= subsample_size <= n:
        raise ConfigurationError("leaf_size and subsample_size must lie in [0, n]")
    if subsample_size > n - leaf_size:
        return 0.0
    log_p = (
        gammaln(n - leaf_size + 1)
        - gammaln(n - leaf_size - subsample_size + 1)
        - gammaln(n + 1)
        + gammaln(n - subsample_size + 1)
    )
    return float(np.exp(log_p))


def exhaustive_structures(structures: List[TreeStructure]) -> List[Tuple[TreeStructure, float]]:
    """Equal-probability structure list for the exhaustive oracle."""
    weight = 1.0 / len(structures)
    return [(structure, weight) for structure in structures]
