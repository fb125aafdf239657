"""Model-based analysis primitives.

Spectral classification, the Sylvester equation, the classical regulator
equations and the gain-assembly identity.  These operate on explicit
system matrices; the data-driven layer reduces to them once a member of
the compatible family is fixed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .model import DimensionError, NonFiniteError

__all__ = [
    "AntiStabilityError",
    "SingularOperatorError",
    "SpectralInfo",
    "spectral_info",
    "vec",
    "unvec",
    "solve_sylvester",
    "RegulationCheck",
    "check_output_regulated",
    "ClassicalRegulator",
    "solve_classical_regulator",
    "assemble_gains",
]


class AntiStabilityError(ValueError):
    """The exosystem matrix is not anti-stable."""


class SingularOperatorError(np.linalg.LinAlgError):
    """The vectorized equation operator is singular within tolerance."""


def vec(M: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(M).ravel(order="F")


def unvec(v: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Inverse of vec for the given matrix shape."""
    return np.asarray(v).reshape(shape, order="F")


def _square(name: str, M) -> np.ndarray:
    arr = np.asarray(M, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class SpectralInfo:
    """Eigenvalues and their position relative to the unit circle."""

    eigenvalues: np.ndarray
    spectral_radius: float
    is_stable: bool
    is_anti_stable: bool


def spectral_info(M, margin: float = 1e-9) -> SpectralInfo:
    """Classify the spectrum of a square matrix.

    Eigenvalues come from the real Schur form: 1x1 diagonal blocks give
    real eigenvalues, 2x2 blocks give complex pairs.  A matrix is stable
    when its spectral radius is below 1 - margin and anti-stable when
    every eigenvalue modulus is at least 1 - margin.
    """
    M = _square("M", M)
    n = M.shape[0]
    if n == 0:
        return SpectralInfo(np.array([], dtype=complex), 0.0, True, True)
    T, _ = scipy.linalg.schur(M, output="real")
    eigs = []
    i = 0
    while i < n:
        if i + 1 < n and T[i + 1, i] != 0.0:
            a, b = T[i, i], T[i, i + 1]
            c, d = T[i + 1, i], T[i + 1, i + 1]
            mean = 0.5 * (a + d)
            root = np.sqrt(complex(0.25 * (a - d) ** 2 + b * c))
            eigs.extend([mean + root, mean - root])
            i += 2
        else:
            eigs.append(complex(T[i, i]))
            i += 1
    eigenvalues = np.array(eigs)
    moduli = np.abs(eigenvalues)
    radius = float(moduli.max())
    return SpectralInfo(
        eigenvalues=eigenvalues,
        spectral_radius=radius,
        is_stable=bool(radius < 1.0 - margin),
        is_anti_stable=bool(moduli.min() >= 1.0 - margin),
    )


def sylvester_operator(A1: np.ndarray, A2: np.ndarray) -> np.ndarray:
    """Matrix of T -> T A1 - A2 T acting on vec(T)."""
    n1 = A1.shape[0]
    n2 = A2.shape[0]
    return np.kron(A1.T, np.eye(n2)) - np.kron(np.eye(n1), A2)


def solve_sylvester(A1, A2, A3, rtol: float = 1e-9) -> np.ndarray:
    """Solve T A1 - A2 T = A3 for T.

    The equation is vectorized to (A1^T kron I - I kron A2) vec(T) =
    vec(A3) and solved densely.  Raises SingularOperatorError when the
    spectra of A1 and A2 intersect within tolerance, which makes the
    operator singular.
    """
    A1 = _square("A1", A1)
    A2 = _square("A2", A2)
    A3 = np.asarray(A3, dtype=float)
    n1, n2 = A1.shape[0], A2.shape[0]
    if A3.shape != (n2, n1):
        raise DimensionError(f"A3 must have shape ({n2}, {n1}), got {A3.shape}")
    L = sylvester_operator(A1, A2)
    s = np.linalg.svd(L, compute_uv=False)
    if s.size == 0 or s[-1] <= rtol * max(1.0, s[0]):
        raise SingularOperatorError(
            "spectra of A1 and A2 intersect within tolerance; "
            "the Sylvester operator is singular"
        )
    T = unvec(np.linalg.solve(L, vec(A3)), (n2, n1))
    return T


@dataclass(frozen=True, eq=False)
class RegulationCheck:
    """Outcome of the output-regulation test for a fixed closed loop."""

    regulated: bool
    T: np.ndarray | None
    output_residual: float | None


def check_output_regulated(
    A1, A2, A3, D1, D2, margin: float = 1e-9, tol: float = 1e-8
) -> RegulationCheck:
    """Decide output regulation for explicit matrices.

    Requires A1 anti-stable (raises AntiStabilityError otherwise).  The
    interconnection is regulated iff A2 is stable and the unique solution
    T of T A1 - A2 T = A3 satisfies D1 + D2 T = 0 within tolerance.
    """
    if not spectral_info(A1, margin).is_anti_stable:
        raise AntiStabilityError(
            "A1 must be anti-stable (all eigenvalue moduli >= 1)"
        )
    if not spectral_info(A2, margin).is_stable:
        return RegulationCheck(regulated=False, T=None, output_residual=None)
    D1 = np.asarray(D1, dtype=float)
    D2 = np.asarray(D2, dtype=float)
    T = solve_sylvester(A1, A2, A3)
    residual = float(np.linalg.norm(D1 + D2 @ T))
    regulated = residual <= tol * (1.0 + float(np.linalg.norm(D1)))
    return RegulationCheck(regulated=regulated, T=T, output_residual=residual)


@dataclass(frozen=True, eq=False)
class ClassicalRegulator:
    """Least-squares solution of the model-based regulator equations."""

    feasible: bool
    T: np.ndarray
    V: np.ndarray
    residual: float


def solve_classical_regulator(
    A1, A2, B2, A3, D1, D2, E, tol: float = 1e-8
) -> ClassicalRegulator:
    """Solve T A1 - A2 T - B2 V = A3,  D1 + D2 T + E V = 0 for (T, V).

    Both equations are vectorized, stacked and solved by least squares;
    the pair is reported infeasible when the residual exceeds
    tol * (1 + ||rhs||).  Requires A1 anti-stable.
    """
    A1 = _square("A1", A1)
    A2 = _square("A2", A2)
    if not spectral_info(A1).is_anti_stable:
        raise AntiStabilityError(
            "A1 must be anti-stable (all eigenvalue moduli >= 1)"
        )
    B2 = np.asarray(B2, dtype=float)
    A3 = np.asarray(A3, dtype=float)
    D1 = np.asarray(D1, dtype=float)
    D2 = np.asarray(D2, dtype=float)
    E = np.asarray(E, dtype=float)
    n1, n2, m = A1.shape[0], A2.shape[0], B2.shape[1]
    I1 = np.eye(n1)
    top = np.hstack([sylvester_operator(A1, A2), -np.kron(I1, B2)])
    bottom = np.hstack([np.kron(I1, D2), np.kron(I1, E)])
    lhs = np.vstack([top, bottom])
    rhs = np.concatenate([vec(A3), -vec(D1)])
    sol, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    residual = float(np.linalg.norm(lhs @ sol - rhs))
    T = unvec(sol[: n1 * n2], (n2, n1))
    V = unvec(sol[n1 * n2 :], (m, n1))
    feasible = residual <= tol * (1.0 + float(np.linalg.norm(rhs)))
    return ClassicalRegulator(feasible=feasible, T=T, V=V, residual=residual)


def assemble_gains(T, V, K2) -> np.ndarray:
    """Exosystem gain K1 = -K2 T + V from a regulator-equation pair."""
    T = np.asarray(T, dtype=float)
    V = np.asarray(V, dtype=float)
    K2 = np.asarray(K2, dtype=float)
    if K2.shape[1] != T.shape[0]:
        raise DimensionError(
            f"K2 has {K2.shape[1]} columns but T has {T.shape[0]} rows"
        )
    if V.shape != (K2.shape[0], T.shape[1]):
        raise DimensionError(
            f"V must have shape ({K2.shape[0]}, {T.shape[1]}), got {V.shape}"
        )
    return -K2 @ T + V
