"""Lowest eigenpairs of symmetric pencils A v = lambda M v."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError

DENSE_LIMIT = 5000
CLUSTER_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, M-orthonormal
    clusters: list
    residuals: np.ndarray

    def __len__(self):
        return self.eigenvalues.size

    def cluster_of(self, j: int) -> list:
        """Indices (0-based) of the cluster containing eigenvalue ``j``."""
        for c in self.clusters:
            if j in c:
                return c
        raise IndexError(j)


def cluster_multiplicity(eigenvalues, rel_tol: float = CLUSTER_RTOL) -> list:
    """Greedy grouping of an ascending list into numerically equal runs."""
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size == 0:
        return []
    clusters = [[0]]
    for i in range(1, lam.size):
        if lam[i] - lam[i - 1] <= rel_tol * max(1.0, abs(lam[i - 1])):
            clusters[-1].append(i)
        else:
            clusters.append([i])
    return clusters


def fix_sign(v) -> np.ndarray:
    """Make the entry of largest magnitude (first one on ties) positive."""
    v = np.asarray(v, dtype=float)
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v.copy()


def backward_errors(A, M, lam, V) -> np.ndarray:
    """Normwise backward error ||A v - lam M v|| / ((||A|| + |lam| ||M||) ||v||)."""
    na = spla.norm(A, np.inf) if sp.issparse(A) else np.linalg.norm(A, np.inf)
    nm = spla.norm(M, np.inf) if sp.issparse(M) else np.linalg.norm(M, np.inf)
    R = A @ V - (M @ V) * lam[None, :]
    return np.linalg.norm(R, axis=0) / ((na + np.abs(lam) * nm) * np.linalg.norm(V, axis=0))


def _rayleigh_ritz(A, M, V):
    """Re-solve the pencil on span(V): exact M-orthonormality within clusters."""
    a = V.T @ (A @ V)
    m = V.T @ (M @ V)
    a = 0.5 * (a + a.T)
    m = 0.5 * (m + m.T)
    lam, c = sla.eigh(a, m)
    return lam, V @ c


def solve_generalized(
    A,
    M,
    k: int,
    tol: float = 1e-10,
    seed: int = 0,
    method: str = "auto",
    shift: float = -1.0,
    maxiter: int | None = None,
) -> Spectrum:
    """Lowest ``k`` eigenpairs of A v = lambda M v.

    Dense LAPACK for up to ``DENSE_LIMIT`` unknowns, shift-invert Lanczos
    (ARPACK, M inner product) above. ``shift`` must lie below the spectrum;
    the default works for any positive semi-definite A. Eigenvectors are
    M-orthonormal and sign-fixed with :func:`fix_sign`.
    """
    n = A.shape[0]
    if not 1 <= k <= n:
        raise SolverError(f"k must lie in [1, {n}], got {k}")
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "shift-invert"
    if method == "dense":
        Ad = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
        Md = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
        try:
            lam, V = sla.eigh(Ad, Md, subset_by_index=[0, k - 1])
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SolverError(f"dense eigensolve failed: {exc}") from exc
    elif method == "shift-invert":
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(n)
        # a few extra vectors keep clusters at the top of the window whole
        nev = min(n - 1, k + 4)
        try:
            lam, V = spla.eigsh(
                A.tocsc(), k=nev, M=M.tocsc(), sigma=shift, which="LM",
                v0=v0, tol=tol * 1e-2, maxiter=maxiter,
            )
        except spla.ArpackNoConvergence as exc:
            res = None
            if exc.eigenvalues.size:
                res = backward_errors(A, M, exc.eigenvalues, exc.eigenvectors)
            raise SolverError("shift-invert Lanczos did not converge", residuals=res) from exc
        order = np.argsort(lam)
        lam, V = _rayleigh_ritz(A, M, V[:, order])
        lam, V = lam[:k], V[:, :k]
    else:
        raise SolverError(f"unknown method {method!r}")
    V = np.column_stack([fix_sign(V[:, i]) for i in range(k)])
    res = backward_errors(A, M, lam, V)
    bad = res > tol * (1.0 + np.abs(lam))
    if np.any(bad):
        raise SolverError(
            f"eigenpairs {np.flatnonzero(bad).tolist()} exceed the residual bound", residuals=res
        )
    return Spectrum(
        eigenvalues=np.asarray(lam),
        eigenvectors=V,
        clusters=cluster_multiplicity(lam),
        residuals=res,
    )


def solve_pencil(pencil, k: int, **kwargs) -> Spectrum:
    return solve_generalized(pencil.A, pencil.M, k, **kwargs)
