"""Finite-dimensional counterparts: grid Laplacians, Dirichlet restrictions and penalties.

Operators act on the nodes of a uniform grid strictly inside a box; the
Laplacian is the (2m+1)-point stencil for -Delta with the box boundary as a
Dirichlet truncation. Vectors are compared in the cell-measure norm
(dx^m * sum v_i^2)^(1/2), which approximates the L^2 norm.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import expm_multiply

from kac_lab.common.cleaners import as_point
from kac_lab.exceptions import GeometryError, SolverConvergenceError
from kac_lab.geometry import Region
from kac_lab.settings.base import KRYLOV_MAX_DIM, SEMIGROUP_TOL

logger = logging.getLogger(__name__)

DEFECT_COLUMNS = ["n", "defect_inside", "defect_outside"]


@dataclass(frozen=True, eq=False)
class GridSpec:
    lo: np.ndarray
    hi: np.ndarray
    spacing: float
    interior_mask: np.ndarray
    penalty_mask: np.ndarray

    @property
    def dimension(self) -> int:
        return self.lo.shape[0]

    @property
    def shape(self):
        return tuple(int(round((h - l) / self.spacing)) - 1 for l, h in zip(self.lo, self.hi))

    @property
    def axes(self) -> List[np.ndarray]:
        return [l + self.spacing * np.arange(1, n + 1) for l, n in zip(self.lo, self.shape)]

    @property
    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_measure(self) -> float:
        return self.spacing ** self.dimension

    def norm(self, v: np.ndarray) -> float:
        return float(np.sqrt(self.cell_measure * np.sum(np.abs(v) ** 2)))

    def nearest_node(self, x) -> int:
        x = as_point(x, self.dimension)
        return int(np.argmin(np.linalg.norm(self.nodes - x, axis=-1)))

    def with_interior(self, interior_mask: np.ndarray) -> "GridSpec":
        interior_mask = np.asarray(interior_mask, dtype=bool)
        return GridSpec(self.lo, self.hi, self.spacing, interior_mask, ~interior_mask)


def build_grid(lo, hi, spacing: float, region: Optional[Region] = None) -> GridSpec:
    """Uniform grid strictly inside the box [lo, hi].

    The penalty mask is the set of nodes in the open complement of the region,
    so nodes lying on a barrier stay unpenalized.
    """
    lo, hi = as_point(lo), as_point(hi)
    if lo.shape[0] not in (1, 2):
        raise GeometryError("Grids are one- or two-dimensional")
    if spacing <= 0 or not np.all(hi > lo):
        raise GeometryError("Degenerate grid: spacing {} on [{}, {}]".format(spacing, lo, hi))
    counts = np.round((hi - lo) / spacing).astype(int) - 1
    if np.any(counts < 3):
        raise GeometryError("Need at least 3 nodes per axis, got {}".format(counts.tolist()))
    empty = np.zeros(int(np.prod(counts)), dtype=bool)
    grid = GridSpec(lo, hi, float(spacing), ~empty, empty)
    if region is not None:
        grid = grid.with_interior(~region.complement_interior(grid.nodes))
    return grid


@dataclass(frozen=True, eq=False)
class SparseSymmetricOperator:
    matrix: sparse.csr_matrix
    grid: Optional[GridSpec] = None
    nodes: Optional[np.ndarray] = None
    label: str = "A"

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def symmetry_defect(self) -> float:
        diff = abs(self.matrix - self.matrix.T)
        return float(diff.max()) if diff.nnz else 0.0

    def is_symmetric(self) -> bool:
        scale = max(float(abs(self.matrix).max()) if self.matrix.nnz else 0.0, 1.0)
        return self.symmetry_defect() < 1e-14 * scale

    def quadratic_form(self, f: np.ndarray) -> float:
        return float(np.real(np.vdot(f, self.matrix @ f)))

    def norm(self, v: np.ndarray) -> float:
        if self.grid is None:
            return float(np.linalg.norm(v))
        return self.grid.norm(v)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def _laplacian_1d(n: int, spacing: float) -> sparse.csr_matrix:
    ones = np.ones(n)
    return sparse.diags([-ones[1:], 2 * ones, -ones[1:]], [-1, 0, 1], format="csr") / spacing ** 2


def build_laplacian(grid: GridSpec) -> SparseSymmetricOperator:
    """-Delta on the grid nodes, Dirichlet-truncated at the outer box."""
    shape = grid.shape
    if any(n < 3 for n in shape):
        raise GeometryError("Need at least 3 nodes per axis, got {}".format(list(shape)))
    if len(shape) == 1:
        matrix = _laplacian_1d(shape[0], grid.spacing)
    else:
        nx, ny = shape
        matrix = sparse.kron(_laplacian_1d(nx, grid.spacing), sparse.identity(ny)) + sparse.kron(
            sparse.identity(nx), _laplacian_1d(ny, grid.spacing)
        )
    return SparseSymmetricOperator(sparse.csr_matrix(matrix), grid, np.arange(grid.size), "laplacian")


def dirichlet_restriction(L: SparseSymmetricOperator, grid: GridSpec) -> SparseSymmetricOperator:
    """Principal submatrix on the interior nodes."""
    index = np.flatnonzero(grid.interior_mask)
    if index.size == 0:
        raise GeometryError("Dirichlet restriction of an empty interior")
    matrix = L.matrix[index][:, index]
    return SparseSymmetricOperator(sparse.csr_matrix(matrix), grid, index, "dirichlet")


def penalty_diagonal(grid: GridSpec) -> sparse.csr_matrix:
    return sparse.diags(grid.penalty_mask.astype(float), format="csr")


def penalize(L: SparseSymmetricOperator, grid: GridSpec, n: float) -> SparseSymmetricOperator:
    """L + n * diag(penalty_mask)."""
    if n < 0:
        raise ValueError("Penalty must be nonnegative, got {}".format(n))
    matrix = L.matrix + n * penalty_diagonal(grid)
    return SparseSymmetricOperator(sparse.csr_matrix(matrix), grid, L.nodes, "penalized(n={:g})".format(n))


def _lanczos_expm(matrix, f: np.ndarray, t: float, tol: float, max_dim: int, check_every: int = 5):
    """exp(-t A) f by Lanczos with full reorthogonalization.

    Stops when the a-posteriori estimate beta_m |e_m^T exp(-t T_m) e_1| falls
    below tol, or on a happy breakdown.
    """
    size = f.shape[0]
    norm_f = np.linalg.norm(f)
    if norm_f == 0.0:
        return np.zeros_like(f), 0.0
    max_dim = min(max_dim, size)
    basis = np.zeros((size, max_dim + 1), dtype=f.dtype)
    basis[:, 0] = f / norm_f
    alpha: List[float] = []
    beta: List[float] = []
    scale = max(abs(matrix).max(), 1.0)
    for j in range(max_dim):
        w = matrix @ basis[:, j]
        a = float(np.real(np.vdot(basis[:, j], w)))
        w = w - a * basis[:, j]
        if j > 0:
            w = w - beta[j - 1] * basis[:, j - 1]
        w = w - basis[:, : j + 1] @ (np.conj(basis[:, : j + 1]).T @ w)
        b = float(np.linalg.norm(w))
        alpha.append(a)
        m = j + 1
        breakdown = b <= 1e-13 * scale
        if breakdown or m == max_dim or m % check_every == 0:
            evals, evecs = eigh_tridiagonal(np.array(alpha), np.array(beta[: m - 1]))
            y = evecs @ (np.exp(-t * evals) * evecs[0, :])
            estimate = 0.0 if breakdown else b * abs(y[-1])
            if estimate <= tol:
                return norm_f * (basis[:, :m] @ y), estimate
        beta.append(b)
        basis[:, j + 1] = w / b
    raise SolverConvergenceError(
        "Lanczos did not reach tolerance {:g} within {} iterations (estimate {:g})".format(tol, max_dim, estimate)
    )


def apply_semigroup(
    A: SparseSymmetricOperator,
    f: np.ndarray,
    t: float,
    tol: float = SEMIGROUP_TOL,
    method: str = "lanczos",
    certify: bool = False,
    max_dim: int = KRYLOV_MAX_DIM,
) -> np.ndarray:
    """exp(-t A) f with ||error|| <= tol ||f||.

    ``lanczos`` certifies itself by its a-posteriori estimate; ``expm_multiply``
    is SciPy's scaling-and-Taylor scheme; ``dense`` diagonalizes A. With
    ``certify`` the Lanczos result is also checked against ``expm_multiply``.
    """
    if t < 0 or tol <= 0:
        raise ValueError("Need t >= 0 and tol > 0, got t={}, tol={}".format(t, tol))
    if not A.is_symmetric():
        raise ValueError("apply_semigroup needs a symmetric operator (defect {:g})".format(A.symmetry_defect()))
    f = np.asarray(f)
    if t == 0:
        return f.copy()
    if method == "dense":
        w, Q = np.linalg.eigh(A.toarray())
        return Q @ (np.exp(-t * w) * (Q.T @ f))
    if method == "expm_multiply":
        return expm_multiply(-t * A.matrix, f)
    if method != "lanczos":
        raise ValueError("Unknown semigroup method {!r}".format(method))
    result, estimate = _lanczos_expm(A.matrix, f, t, tol, max_dim)
    logger.debug("Lanczos exp(-%g A) on %d unknowns: estimate %.2g", t, A.dimension, estimate)
    if certify:
        other = expm_multiply(-t * A.matrix, f)
        gap = np.linalg.norm(result - other)
        if gap > 10 * tol * max(np.linalg.norm(f), 1e-300):
            raise SolverConvergenceError("Lanczos and expm_multiply disagree by {:g}".format(gap))
    return result


@dataclass
class DefectTable:
    rows: List[Dict[str, float]] = field(default_factory=list)
    threshold: float = 1e-3
    tol: float = 1e-8

    @property
    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=DEFECT_COLUMNS)

    @property
    def defects(self) -> np.ndarray:
        return np.array([row["defect_inside"] for row in self.rows])

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.defects) <= self.tol))

    @property
    def converged(self) -> bool:
        return bool(self.defects[-1] < self.threshold)

    @property
    def passed(self) -> bool:
        return self.monotone and self.converged

    @property
    def rate_constant(self) -> float:
        """C in d(n) <= C / sqrt(n), fitted at the smallest positive n."""
        for row in self.rows:
            if row["n"] > 0:
                return row["defect_inside"] * np.sqrt(row["n"])
        return float("nan")

    def to_csv(self, path) -> None:
        self.frame.to_csv(path, index=False)


def _vector(f: Union[np.ndarray, Callable], grid: GridSpec) -> np.ndarray:
    if callable(f):
        return np.asarray(f(grid.nodes))
    return np.asarray(f)


def _increasing_defects(L, grid, t, f, n_sequence, tol, threshold, method) -> DefectTable:
    inside = grid.interior_mask
    limit = np.zeros_like(f)
    if np.any(inside):
        limit[inside] = apply_semigroup(dirichlet_restriction(L, grid), f[inside], t, tol, method)
    table = DefectTable(threshold=threshold, tol=max(tol * grid.norm(f), 1e-14))
    for n in n_sequence:
        u = apply_semigroup(penalize(L, grid, n), f, t, tol, method)
        row = {
            "n": float(n),
            "defect_inside": grid.norm((u - limit)[inside]),
            "defect_outside": grid.norm(u[~inside]),
        }
        logger.info("n=%g: defect inside %.3e, outside %.3e", n, row["defect_inside"], row["defect_outside"])
        table.rows.append(row)
    return table


def penalization_limit_check(
    grid: GridSpec,
    t: float,
    f: Union[np.ndarray, Callable],
    n_sequence: Sequence[float],
    tol: float = SEMIGROUP_TOL,
    threshold: float = 1e-3,
    method: str = "lanczos",
) -> DefectTable:
    """||P exp(-t(L + nD)) f - exp(-t L_Omega) P f|| and ||(1 - P) exp(-t(L + nD)) f|| over n."""
    if t <= 0:
        raise ValueError("Need t > 0, got {}".format(t))
    L = build_laplacian(grid)
    table = _increasing_defects(L, grid, t, _vector(f, grid), n_sequence, tol, threshold, method)
    if not table.passed:
        logger.warning("Penalization limit check failed: monotone=%s converged=%s", table.monotone, table.converged)
    return table


def monotone_form_limit_check(
    L: SparseSymmetricOperator,
    D: np.ndarray,
    t: float,
    f: Union[np.ndarray, Callable],
    direction: str,
    n_sequence: Sequence[float],
    masks: Optional[Callable[[float], np.ndarray]] = None,
    tol: float = SEMIGROUP_TOL,
    threshold: float = 1e-3,
    method: str = "lanczos",
) -> DefectTable:
    """Strong semigroup limits of monotone form sequences on a grid.

    ``increasing``: Q_n = L + n diag(D), limit exp(-t L_Omega) on the nodes
    where D vanishes. ``decreasing``: Q_n = L restricted to ``masks(n)``, a
    growing family of interior masks inside the limit mask (D == 0).
    """
    grid = L.grid
    if grid is None:
        raise GeometryError("Monotone limit checks need an operator built on a grid")
    D = np.asarray(D, dtype=bool)
    grid = grid.with_interior(~D)
    f = _vector(f, grid)
    if direction == "increasing":
        return _increasing_defects(L, grid, t, f, n_sequence, tol, threshold, method)
    if direction != "decreasing":
        raise ValueError("direction must be 'increasing' or 'decreasing', got {!r}".format(direction))
    if masks is None:
        raise GeometryError("The decreasing case needs the exhaustion masks")

    inside = grid.interior_mask
    limit = np.zeros_like(f)
    limit[inside] = apply_semigroup(dirichlet_restriction(L, grid), f[inside], t, tol, method)
    table = DefectTable(threshold=threshold, tol=max(tol * grid.norm(f), 1e-14))
    previous = None
    for n in n_sequence:
        mask = np.asarray(masks(n), dtype=bool)
        if np.any(mask & ~inside) or (previous is not None and np.any(previous & ~mask)):
            raise GeometryError("Exhaustion masks are not nested at n={}".format(n))
        u = np.zeros_like(f)
        if np.any(mask):
            level = grid.with_interior(mask)
            u[mask] = apply_semigroup(dirichlet_restriction(L, level), f[mask], t, tol, method)
        table.rows.append(
            {
                "n": float(n),
                "defect_inside": grid.norm((u - limit)[inside]),
                "defect_outside": grid.norm(u[~inside]),
            }
        )
        previous = mask
    return table


def trotter_defect(
    L: SparseSymmetricOperator,
    D: np.ndarray,
    n: float,
    t: float,
    f: np.ndarray,
    K: int,
    tol: float = SEMIGROUP_TOL,
) -> float:
    """||exp(-t(L + nD)) f - (exp(-(t/K) L) exp(-(t/K) n D))^K f||."""
    D = np.asarray(D, dtype=float)
    exact = apply_semigroup(
        SparseSymmetricOperator(sparse.csr_matrix(L.matrix + n * sparse.diags(D)), L.grid), f, t, tol
    )
    v = np.asarray(f, dtype=float)
    damping = np.exp(-(t / K) * n * D)
    for _ in range(K):
        v = apply_semigroup(L, damping * v, t / K, tol)
    return L.norm(exact - v)


def export_coordinates(A: SparseSymmetricOperator, path) -> None:
    """Write the operator as plain-text (row, col, value) lines."""
    coo = A.matrix.tocoo()
    with open(path, "w") as f:
        for row, col, value in zip(coo.row, coo.col, coo.data):
            f.write("{} {} {:.17g}\n".format(row, col, value))
