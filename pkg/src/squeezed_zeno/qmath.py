"""Small dense complex linear algebra used by every propagation path.

Conventions fixed here and relied on everywhere else:

* ``|0> = (1, 0)`` is the *upper* (excited) level, ``|1> = (0, 1)`` the lower one,
  so ``sigma_minus = |1><0|`` and ``sigma_z = diag(1, -1)``.
* Two-qubit states are ordered ``|00>, |01>, |10>, |11>`` with qubit 1 as the
  left tensor factor.
* Density matrices are vectorized by column stacking: element ``(i, j)`` goes to
  index ``j * dim + i``, hence ``vec(A @ rho @ B) = kron(B.T, A) @ vec(rho)``.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
NORM_TOL = 1e-12

# drift below this is left alone, above it is corrected, above DRIFT_ERROR it is a bug
DRIFT_FIX = 1e-12
DRIFT_ERROR = 1e-8

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T.copy()
IDENTITY_2 = np.eye(2, dtype=complex)


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a square complex array, rejecting NaN/Inf."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def density_matrix(rho, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate ``rho`` as a density matrix of dimension 2 or 4 and return it."""
    rho = as_matrix(rho, "density matrix")
    if rho.shape[0] not in (2, 4):
        raise ValueError(f"density matrix must be 2x2 or 4x4, got {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > TRACE_TOL:
        raise ValueError(f"density matrix trace {np.trace(rho).real:.3g} != 1")
    if np.real(np.diag(rho)).min() < -tol:
        raise ValueError("density matrix has negative populations")
    return rho


def pure_state(psi, tol: float = NORM_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.shape[0] not in (2, 4):
        raise ValueError(f"pure state must be a vector of length 2 or 4, got {psi.shape}")
    if abs(np.linalg.norm(psi) - 1) > tol:
        raise ValueError(f"pure state norm {np.linalg.norm(psi):.15g} != 1")
    return psi


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def vectorize(rho) -> np.ndarray:
    rho = np.asarray(rho)
    return rho.reshape(-1, order="F").copy()


def devectorize(v) -> np.ndarray:
    v = np.asarray(v)
    dim = int(round(np.sqrt(v.shape[-1])))
    if dim * dim != v.shape[-1]:
        raise ValueError(f"vector length {v.shape[-1]} is not a perfect square")
    return v.reshape(dim, dim, order="F").copy()


def superop_sandwich(A, B) -> np.ndarray:
    """Superoperator of ``rho -> A @ rho @ B`` in the column-stacking convention."""
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")
    return np.kron(B.T, A)


def matrix_exponential(M, s: float = 1.0) -> np.ndarray:
    """exp(s * M) by scaling and squaring with a diagonal Pade approximant."""
    M = as_matrix(M, "M")
    if not np.isfinite(s):
        raise ValueError(f"scale factor must be finite, got {s}")
    if s == 0:
        return np.eye(M.shape[0], dtype=complex)
    out = scipy.linalg.expm(s * M)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("matrix exponential overflowed")
    return out


def stabilize(rho: np.ndarray) -> np.ndarray:
    """Remove floating-point Hermiticity and trace drift from a propagated state.

    Drift up to ``DRIFT_FIX`` is left alone; drift beyond ``DRIFT_ERROR`` raises,
    since it signals a broken generator rather than rounding.
    """
    herm = np.abs(rho - rho.conj().T).max()
    tr = np.trace(rho)
    drift = max(herm, abs(tr - 1))
    if drift > DRIFT_ERROR:
        raise FloatingPointError(f"state drifted by {drift:.3g}; generator is not trace/Hermiticity preserving")
    if drift > DRIFT_FIX:
        rho = 0.5 * (rho + rho.conj().T)
        rho = rho / np.trace(rho).real
    return rho


def kron(*ops) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out
