"""Feasibility solver for the stabilizing right-inverse condition.

A right-inverse of X making Z X^dagger stable exists iff some Theta with
X Theta symmetric makes the block matrix

    [[X Theta, Z Theta], [Theta^T Z^T, X Theta]]

positive definite; X^dagger is then Theta (X Theta)^{-1}.  Optional
equality constraints C_k Theta = 0 restrict the admissible right-inverses
(they carry requirements such as output zeroing or coupling rejection).

The search runs as a phase-I concave maximization: the smallest
eigenvalue of the block matrix is concave in Theta, all linear
constraints (symmetry and equalities) are eliminated once through an
orthonormal null-space parametrization, and projected supergradient
ascent with a 1/sqrt(k) step schedule maximizes the eigenvalue over a
Frobenius ball.  Multi-start uses one deterministic warm start along the
least-squares right-inverse direction plus seeded Gaussian draws; results
merge by best margin with earlier starts winning ties.  "Not found" means
no feasible point was located within the bound and iteration budget; it
is never a proof of infeasibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .model import DimensionError, rank_from_singular_values

__all__ = [
    "LmiProblem",
    "LmiSolution",
    "ThetaCheck",
    "block_matrix",
    "solve_lmi",
    "check_theta",
]

# Ascent tuning.  The step length lives in coefficient space where the
# ball has radius 1, so it does not depend on the data scale.
_ALPHA0 = 0.25
_STALL_EVERY = 250
_STALL_RTOL = 1e-3
_SKIP_RATIO = 0.05


@dataclass(frozen=True, eq=False)
class LmiProblem:
    """Data of one feasibility instance.

    X and Z are n x tau with tau >= n; each equality constraint is a
    matrix C with tau columns imposing C Theta = 0.  rho bounds the
    Frobenius norm of Theta, margin is the acceptance threshold on the
    smallest block eigenvalue.
    """

    X: np.ndarray
    Z: np.ndarray
    equality_constraints: tuple[np.ndarray, ...] = ()
    rho: float = 1e3
    margin: float = 1e-6

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        Z = np.array(self.Z, dtype=float)
        if X.ndim != 2 or Z.shape != X.shape:
            raise DimensionError(
                f"X and Z must be 2-d with equal shapes, got {X.shape} and {Z.shape}"
            )
        n, tau = X.shape
        if tau < n:
            raise DimensionError(f"X must have tau >= n, got shape {X.shape}")
        constraints = []
        for k, C in enumerate(self.equality_constraints):
            C = np.array(C, dtype=float)
            if C.ndim != 2 or C.shape[1] != tau:
                raise DimensionError(
                    f"equality constraint {k} must have {tau} columns, got shape {C.shape}"
                )
            constraints.append(C)
        if not (self.rho > 0 and self.margin > 0):
            raise ValueError("rho and margin must be positive")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "equality_constraints", tuple(constraints))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def tau(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True, eq=False)
class LmiSolution:
    """Search outcome.  min_eig is the best achieved block eigenvalue.

    When found is False, Theta and X_dagger are None and min_eig reports
    how close the search got (a value <= margin).
    """

    found: bool
    Theta: np.ndarray | None
    min_eig: float
    X_dagger: np.ndarray | None
    iterations: int


@dataclass(frozen=True, eq=False)
class ThetaCheck:
    """Verification of a candidate Theta against one instance."""

    symmetry_residual: float
    equality_residuals: tuple[float, ...]
    min_eig: float
    X_dagger: np.ndarray | None


def block_matrix(X, Z, Theta) -> np.ndarray:
    """Assemble the 2n x 2n feasibility block for a candidate Theta."""
    P = X @ Theta
    Q = Z @ Theta
    return np.block([[P, Q], [Q.T, P]])


def _block_min_eig(X, Z, Theta) -> float:
    # The block is symmetric only up to the symmetry residual of X Theta;
    # symmetrizing keeps solver and checker numerically identical.
    B = block_matrix(X, Z, Theta)
    return float(np.linalg.eigvalsh(0.5 * (B + B.T))[0])


def _constraint_null_basis(problem: LmiProblem) -> np.ndarray:
    """Orthonormal basis of {vec Theta : X Theta symmetric, C_k Theta = 0}."""
    n, tau = problem.n, problem.tau
    dim = tau * n
    rows = []
    if n > 1:
        P = np.kron(np.eye(n), problem.X)
        sym = []
        for j in range(n):
            for i in range(j):
                sym.append(P[i + j * n] - P[j + i * n])
        rows.append(np.array(sym))
    for C in problem.equality_constraints:
        rows.append(np.kron(np.eye(n), C))
    if not rows:
        return np.eye(dim)
    A = np.vstack(rows)
    return scipy.linalg.null_space(A)


def _ascend(G, c0, iters, two_n):
    """Projected supergradient ascent on the unit coefficient ball.

    Returns the best smallest eigenvalue seen, its coefficient vector,
    the eigenvalue ratio at that point and the iterations consumed.
    """
    c = c0.copy()
    best_lam = -np.inf
    best_c = c0.copy()
    best_ratio = -np.inf
    last_best = -np.inf
    used = 0
    for k in range(1, iters + 1):
        used = k
        M = (G @ c).reshape((two_n, two_n), order="F")
        w, V = np.linalg.eigh(M)
        lam = w[0]
        if lam > best_lam:
            best_lam = lam
            best_c[:] = c
            if w[-1] > 0.0:
                best_ratio = lam / w[-1]
        if k % _STALL_EVERY == 0:
            if best_lam - last_best <= max(1e-14, _STALL_RTOL * abs(best_lam)):
                break
            last_best = best_lam
        v = V[:, 0]
        g = G.T @ np.outer(v, v).ravel(order="F")
        gn = np.linalg.norm(g)
        if gn == 0.0:
            break
        c += (_ALPHA0 / math.sqrt(k)) * (g / gn)
        nc = np.linalg.norm(c)
        if nc > 1.0:
            c /= nc
    return best_lam, best_c, best_ratio, used


def _riccati_start(problem: LmiProblem, basis: np.ndarray) -> np.ndarray | None:
    """Coefficient vector of a Lyapunov-shaped start, when one exists.

    A right-inverse respecting the equality constraints is steered by a
    discrete Riccati design acting on the free directions; Theta0 is
    that right-inverse times the Lyapunov certificate of its closed
    loop, which is strictly feasible whenever the design succeeds.
    """
    X, Z = problem.X, problem.Z
    n = problem.n
    stacked = np.vstack([X] + list(problem.equality_constraints))
    rhs = np.vstack(
        [np.eye(n)]
        + [np.zeros((C.shape[0], n)) for C in problem.equality_constraints]
    )
    Xp, *_ = np.linalg.lstsq(stacked, rhs, rcond=None)
    if np.linalg.norm(stacked @ Xp - rhs) > 1e-8 * (1.0 + math.sqrt(n)):
        return None
    N = scipy.linalg.null_space(stacked)
    candidates = []
    if N.shape[1]:
        A0, B0 = Z @ Xp, Z @ N
        try:
            P = scipy.linalg.solve_discrete_are(
                A0, B0, np.eye(n), np.eye(B0.shape[1])
            )
            F = -np.linalg.solve(B0.T @ P @ B0 + np.eye(B0.shape[1]), B0.T @ P @ A0)
            candidates.append(Xp + N @ F)
        except (np.linalg.LinAlgError, ValueError):
            pass
    candidates.append(Xp)
    for X_dag in candidates:
        A_cl = Z @ X_dag
        if np.abs(np.linalg.eigvals(A_cl)).max() >= 1.0 - 1e-9:
            continue
        P_cl = scipy.linalg.solve_discrete_lyapunov(A_cl, np.eye(n))
        c = basis.T @ (X_dag @ P_cl).ravel(order="F")
        norm = np.linalg.norm(c)
        if np.isfinite(norm) and norm > 1e-12:
            return c / norm
    return None


def _not_found(min_eig: float, iterations: int) -> LmiSolution:
    return LmiSolution(
        found=False, Theta=None, min_eig=min_eig, X_dagger=None, iterations=iterations
    )


def solve_lmi(
    problem: LmiProblem,
    budget: int = 20000,
    n_starts: int = 5,
    seed: int = 0,
) -> LmiSolution:
    """Search for a feasible Theta.

    The budget is the total iteration count, split evenly across the
    starts.  The first start projects the transpose of X (the
    least-squares right-inverse direction) onto the constraint subspace,
    the second is Riccati-shaped when that design goes through, and the
    remaining starts draw Gaussian coefficients from seeded generators,
    so the whole search is deterministic for a given seed.  The returned
    Theta is rescaled to Frobenius norm rho, which leaves X_dagger
    unchanged and maximizes the eigenvalue margin within the bound.
    """
    X, Z = problem.X, problem.Z
    n, tau = problem.n, problem.tau
    s = np.linalg.svd(X, compute_uv=False)
    if rank_from_singular_values(s, X.shape) < n:
        return _not_found(min_eig=-np.inf, iterations=0)

    basis = _constraint_null_basis(problem)
    d = basis.shape[1]
    if d == 0:
        # Only Theta = 0 satisfies the constraints; never feasible.
        return _not_found(min_eig=0.0, iterations=0)

    two_n = 2 * n
    G = np.empty((two_n * two_n, d))
    for j in range(d):
        Theta_j = basis[:, j].reshape((tau, n), order="F")
        G[:, j] = block_matrix(X, Z, Theta_j).ravel(order="F")

    starts = []
    warm = basis.T @ X.T.ravel(order="F")
    warm_norm = np.linalg.norm(warm)
    if warm_norm > 1e-12 * (1.0 + np.linalg.norm(X)):
        starts.append(warm / warm_norm)
    riccati = _riccati_start(problem, basis)
    if riccati is not None:
        starts.append(riccati)
    j = 0
    while len(starts) < n_starts:
        rng = np.random.default_rng([seed, j])
        draw = rng.standard_normal(d)
        starts.append(draw / np.linalg.norm(draw))
        j += 1

    per_start = max(1, budget // n_starts)
    feas_unit = problem.margin / problem.rho
    best_lam = -np.inf
    best_c = None
    total_used = 0
    for c0 in starts:
        lam, c, ratio, used = _ascend(G, c0, per_start, two_n)
        total_used += used
        if lam > best_lam:
            best_lam, best_c = lam, c
            best_ratio = ratio
        # A strictly feasible point with a healthy eigenvalue ratio is
        # good enough; later starts cannot change the decision.
        if best_lam > feas_unit and best_ratio >= _SKIP_RATIO:
            break

    if best_c is None or np.linalg.norm(best_c) < 1e-14:
        return _not_found(min_eig=min(best_lam, 0.0), iterations=total_used)

    scale = problem.rho / np.linalg.norm(best_c)
    Theta = (basis @ (best_c * scale)).reshape((tau, n), order="F")
    min_eig = _block_min_eig(X, Z, Theta)
    if min_eig < problem.margin:
        return _not_found(min_eig=min_eig, iterations=total_used)
    P = X @ Theta
    X_dagger = np.linalg.solve(P.T, Theta.T).T
    return LmiSolution(
        found=True,
        Theta=Theta,
        min_eig=min_eig,
        X_dagger=X_dagger,
        iterations=total_used,
    )


def check_theta(problem: LmiProblem, Theta) -> ThetaCheck:
    """Evaluate a candidate Theta: residuals, margin and right-inverse.

    X_dagger is returned only when X Theta is invertible; a candidate
    with min_eig <= 0 fails feasibility regardless.
    """
    Theta = np.asarray(Theta, dtype=float)
    if Theta.shape != (problem.tau, problem.n):
        raise DimensionError(
            f"Theta must have shape ({problem.tau}, {problem.n}), got {Theta.shape}"
        )
    P = problem.X @ Theta
    symmetry_residual = float(np.linalg.norm(P - P.T))
    equality_residuals = tuple(
        float(np.linalg.norm(C @ Theta)) for C in problem.equality_constraints
    )
    min_eig = _block_min_eig(problem.X, problem.Z, Theta)
    s = np.linalg.svd(P, compute_uv=False)
    if s.size and s[-1] > 1e-12 * max(1.0, s[0]):
        X_dagger = np.linalg.solve(P.T, Theta.T).T
    else:
        X_dagger = None
    return ThetaCheck(
        symmetry_residual=symmetry_residual,
        equality_residuals=equality_residuals,
        min_eig=min_eig,
        X_dagger=X_dagger,
    )
