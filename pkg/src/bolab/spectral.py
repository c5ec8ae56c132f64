"""Dense discretization, eigen-analysis, and constrained coercivity.

A multiplier-plus-potential operator on n grid points becomes an n x n
matrix through the FFT of the identity; with the uniform quadrature
weight, matrix symmetry and L2 self-adjointness coincide, so plain
symmetric eigensolvers apply.  Constrained Rayleigh quotients are
computed exactly on the orthogonal complement of the constraint span
(null-space basis + dense (generalized) eigensolve).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, null_space

from .errors import ConfigurationError, UsageError
from .grid import Field, Grid
from .operators import OperatorSpec
from .soliton import profile, scaled_profile

DENSE_BUDGET = 4096


@dataclass
class DenseOperator:
    """Matrix form of an operator kind on a specific grid."""

    matrix: np.ndarray
    grid: Grid
    spec: OperatorSpec
    symmetrized: bool = False

    def symmetrize(self) -> "DenseOperator":
        m = self.matrix
        asym = np.linalg.norm(m - m.T)
        scale = np.linalg.norm(m)
        if asym > 1e-10 * scale:
            raise UsageError(
                f"operator is not numerically symmetric (defect {asym/scale:.2e})")
        return DenseOperator(0.5 * (m + m.T), self.grid, self.spec, symmetrized=True)


@dataclass
class EigenReport:
    """Discrete spectrum below the continuum threshold."""

    discrete_eigenvalues: list
    continuum_edge: float
    eigenvector_fields: list
    edge_ambiguous: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


def _multiplier_matrix(grid: Grid, rfft_symbol) -> np.ndarray:
    """Dense matrix of a Fourier multiplier via FFT of the identity."""
    n = grid.n_points
    sym = np.asarray(rfft_symbol, dtype=complex).copy()
    sym[-1] = sym[-1].real
    spec = np.fft.rfft(np.eye(n), axis=0)
    return np.fft.irfft(sym[:, None] * spec, n=n, axis=0)


def discretize(spec: OperatorSpec, grid: Grid) -> DenseOperator:
    """Assemble the dense matrix of a symmetric operator kind."""
    if grid.n_points > DENSE_BUDGET:
        raise ConfigurationError(
            f"dense discretization capped at n = {DENSE_BUDGET}, got {grid.n_points}")
    xi = grid.rfft_wavenumbers
    y = grid.nodes
    if spec.kind == "linearized":
        m = np.eye(grid.n_points) + _multiplier_matrix(grid, xi) - np.diag(profile(y))
    elif spec.kind == "linearized_scaled":
        c = spec.c
        m = (c * np.eye(grid.n_points) + _multiplier_matrix(grid, xi)
             - np.diag(c * profile(c * y)))
    elif spec.kind == "virial":
        m = (2.0 * _multiplier_matrix(grid, xi) + np.eye(grid.n_points)
             - np.diag(scaled_profile(y)))
    else:
        raise ConfigurationError(
            f"dense discretization supports symmetric kinds only, got {spec.kind!r}")
    return DenseOperator(m, grid, spec)


def sobolev_gram_matrix(grid: Grid, s: float) -> np.ndarray:
    """Dense Gram matrix of the H^s inner product: multiplier <xi>^{2s}."""
    xi = grid.rfft_wavenumbers
    m = _multiplier_matrix(grid, (1.0 + xi ** 2) ** s)
    return 0.5 * (m + m.T)


def spectrum_below_continuum(op: DenseOperator, threshold: float,
                             margin: float = 0.1) -> EigenReport:
    """Isolated eigenvalues below threshold - margin, with L2-normalized eigenvectors.

    Eigenvalues inside [threshold - margin, threshold + margin] are
    reported as edge-ambiguous; they cannot be told apart from the
    discretized continuum at finite resolution.  A warning is attached
    when no clear spectral gap separates the discrete set from the rest.
    """
    if not op.symmetrized:
        op = op.symmetrize()
    vals, vecs = np.linalg.eigh(op.matrix)
    keep = vals < threshold - margin
    idx = np.nonzero(keep)[0]
    scale = 1.0 / math.sqrt(op.grid.spacing)   # unit L2 norm on the grid
    fields = []
    for i in idx:
        v = vecs[:, i] * scale
        j = np.argmax(np.abs(v))
        if v[j] < 0:
            v = -v
        fields.append(Field(op.grid, v))
    ambiguous = [float(v) for v in vals if threshold - margin <= v <= threshold + margin]
    warnings = []
    if idx.size:
        nxt = vals[idx[-1] + 1] if idx[-1] + 1 < vals.size else np.inf
        gap = nxt - vals[idx[-1]]
        if gap < margin / 2:
            warnings.append(
                f"no clear spectral gap at threshold {threshold}: gap {gap:.3e}")
    return EigenReport(
        discrete_eigenvalues=[float(v) for v in vals[keep]],
        continuum_edge=float(threshold),
        eigenvector_fields=fields,
        edge_ambiguous=ambiguous,
        warnings=warnings,
    )


def parity_restriction(op: DenseOperator, parity: str):
    """Restrict a symmetric operator matrix to the odd or even subspace.

    Returns (reduced_matrix, basis) with basis columns orthonormal in
    sample coordinates; reduced = basis.T @ M @ basis.
    """
    if parity not in ("odd", "even"):
        raise UsageError(f"parity must be 'odd' or 'even', got {parity!r}")
    n = op.grid.n_points
    refl = (n - np.arange(n)) % n        # j -> index of -y_j
    cols = []
    s = 1.0 / math.sqrt(2.0)
    for j in range(1, n // 2):
        e = np.zeros(n)
        if parity == "odd":
            e[j], e[refl[j]] = s, -s
        else:
            e[j], e[refl[j]] = s, s
        cols.append(e)
    if parity == "even":
        for j in (0, n // 2):            # fixed points of the reflection
            e = np.zeros(n)
            e[j] = 1.0
            cols.append(e)
    basis = np.stack(cols, axis=1)
    reduced = basis.T @ op.matrix @ basis
    return reduced, basis


_NORM_EXPONENT = {"L2": 0.0, "Hhalf": 0.5, "H1": 1.0}


def constrained_min_rayleigh(op: DenseOperator, constraints, norm: str = "L2") -> float:
    """Minimum of <op f, f>/||f||_norm^2 over f L2-orthogonal to the constraints.

    The constraint complement is built explicitly (null space of the
    constraint Gram system) and the reduced pencil is solved densely;
    norms other than L2 enter through the <xi>^{2s} Gram matrix.
    """
    if norm not in _NORM_EXPONENT:
        raise UsageError(f"norm must be one of {sorted(_NORM_EXPONENT)}, got {norm!r}")
    if not op.symmetrized:
        op = op.symmetrize()
    cols = []
    for c in constraints:
        v = c.values if isinstance(c, Field) else np.asarray(c, dtype=float)
        cols.append(v)
    cmat = np.stack(cols, axis=1)
    gram = cmat.T @ cmat
    if np.linalg.cond(gram) > 1e12:
        raise UsageError("constraint Gram matrix is numerically singular")
    z = null_space(cmat.T)
    a_red = z.T @ op.matrix @ z
    a_red = 0.5 * (a_red + a_red.T)
    s = _NORM_EXPONENT[norm]
    if s == 0.0:
        vals = eigh(a_red, eigvals_only=True, subset_by_index=[0, 0])
    else:
        b = sobolev_gram_matrix(op.grid, s)
        b_red = z.T @ b @ z
        b_red = 0.5 * (b_red + b_red.T)
        vals = eigh(a_red, b_red, eigvals_only=True, subset_by_index=[0, 0])
    return float(vals[0])


def angle_lemma_bound(mu1: float, mu_perp: float, e1: Field, f: Field) -> float:
    """Quadratic-form lower bound mu_perp - (mu_perp - mu1) * sin^2(beta).

    e1 is the extremal eigenfunction, f the constraint direction;
    cos(beta) is their L2 alignment.  Inputs are normalized internally.
    """
    from .grid import inner as _inner, l2_norm as _l2
    n1, n2 = _l2(e1), _l2(f)
    if n1 <= 0 or n2 <= 0:
        raise UsageError("angle bound needs nonzero e1 and f")
    cosb = _inner(e1, f) / (n1 * n2)
    sin2 = 1.0 - cosb * cosb
    return float(mu_perp - (mu_perp - mu1) * sin2)
