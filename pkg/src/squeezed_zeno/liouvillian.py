"""Lindblad generators for qubits in a broadband squeezed-vacuum reservoir."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .qmath import (
    IDENTITY_2,
    SIGMA_MINUS,
    SIGMA_PLUS,
    devectorize,
    kron,
    matrix_exponential,
    superop_sandwich,
    vectorize,
)


@dataclass(frozen=True)
class BathParams:
    """Reservoir parameters.

    ``N = sinh(r)**2`` is the squeezed photon number and ``eta`` the squeezing
    phase; ``M = sqrt(N (N + 1))`` follows. Rates are in units of ``gamma``.
    """

    gamma: float = 1.0
    N: float = 0.0
    eta: float = 0.0

    def __post_init__(self):
        for name in ("gamma", "N", "eta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.N < 0:
            raise ValueError(f"N must be non-negative, got {self.N}")

    @property
    def M(self) -> float:
        return math.sqrt(self.N * (self.N + 1))


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """A superoperator acting on column-stacked density matrices."""

    dim: int
    matrix: np.ndarray = field(repr=False)
    params: BathParams

    def __post_init__(self):
        if self.matrix.shape != (self.dim**2, self.dim**2):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match dim {self.dim}")
        self.matrix.setflags(write=False)

    def apply(self, rho) -> np.ndarray:
        return devectorize(self.matrix @ vectorize(rho))

    def propagator(self, tau: float) -> np.ndarray:
        return matrix_exponential(self.matrix, tau)


def dissipator(L, rate: float = 1.0) -> np.ndarray:
    """rate/2 * (2 L rho L^+ - L^+ L rho - rho L^+ L) as a superoperator."""
    L = np.asarray(L, dtype=complex)
    Ld = L.conj().T
    LdL = Ld @ L
    eye = np.eye(L.shape[0], dtype=complex)
    return 0.5 * rate * (2 * superop_sandwich(L, Ld) - superop_sandwich(LdL, eye) - superop_sandwich(eye, LdL))


def _three_term(A, B, C=None) -> np.ndarray:
    # 2 A rho B - (B A) rho - rho (B A), with B A the "number-like" product
    C = B @ A if C is None else C
    eye = np.eye(A.shape[0], dtype=complex)
    return 2 * superop_sandwich(A, B) - superop_sandwich(C, eye) - superop_sandwich(eye, C)


def jump_operator(params: BathParams) -> np.ndarray:
    """L = sqrt(N+1) sigma_- - sqrt(N) e^{i eta} sigma_+."""
    return math.sqrt(params.N + 1) * SIGMA_MINUS - math.sqrt(params.N) * np.exp(1j * params.eta) * SIGMA_PLUS


def build_single_qubit(params: BathParams) -> Liouvillian:
    """Single-qubit generator in Lindblad form with the squeezed jump operator."""
    if not isinstance(params, BathParams):
        raise TypeError("params must be BathParams")
    return Liouvillian(2, dissipator(jump_operator(params), params.gamma), params)


def build_single_qubit_expanded(params: BathParams) -> np.ndarray:
    """The same generator written out term by term (decay, pumping and the two
    phase-sensitive ``sigma rho sigma`` terms). Kept as an independent cross-check."""
    g, N, M, eta = params.gamma, params.N, params.M, params.eta
    sm, sp = SIGMA_MINUS, SIGMA_PLUS
    return (
        0.5 * g * (N + 1) * _three_term(sm, sp)
        + 0.5 * g * N * _three_term(sp, sm)
        - g * M * np.exp(1j * eta) * superop_sandwich(sp, sp)
        - g * M * np.exp(-1j * eta) * superop_sandwich(sm, sm)
    )


def collective_operators() -> tuple[np.ndarray, np.ndarray]:
    """S_- and S_+ for two qubits sharing one reservoir."""
    s_minus = kron(SIGMA_MINUS, IDENTITY_2) + kron(IDENTITY_2, SIGMA_MINUS)
    return s_minus, s_minus.conj().T.copy()


def build_two_qubit(params: BathParams) -> Liouvillian:
    """Collective two-qubit generator.

    The squeezing terms keep the full three-term form
    ``2 S rho S - S S rho - rho S S``; ``S_+ S_+`` does not vanish for two qubits.
    """
    if not isinstance(params, BathParams):
        raise TypeError("params must be BathParams")
    g, N, M, eta = params.gamma, params.N, params.M, params.eta
    sm, sp = collective_operators()
    matrix = (
        0.5 * g * (N + 1) * _three_term(sm, sp)
        + 0.5 * g * N * _three_term(sp, sm)
        - 0.5 * g * M * np.exp(1j * eta) * _three_term(sp, sp)
        - 0.5 * g * M * np.exp(-1j * eta) * _three_term(sm, sm)
    )
    return Liouvillian(4, matrix, params)


@lru_cache(maxsize=64)
def cached_propagator(system: str, params: BathParams, tau: float) -> np.ndarray:
    """exp(L tau) keyed by (system, bath, tau); the generator is angle independent."""
    if system == "one_qubit":
        gen = build_single_qubit(params)
    elif system == "two_qubit":
        gen = build_two_qubit(params)
    else:
        raise ValueError(f"unknown system {system!r}")
    prop = gen.propagator(tau)
    prop.setflags(write=False)
    return prop
