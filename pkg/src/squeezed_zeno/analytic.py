"""Closed-form Zeno-limit results, used both as a fast evaluator and as an
oracle for the finite-n simulation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .liouvillian import BathParams
from .measurement import BlochDirection, principal_angle


@dataclass(frozen=True)
class ZenoRates:
    c1: float
    c2: float

    @property
    def gap(self) -> float:
        return self.c2 - self.c1


@dataclass(frozen=True)
class ZenoPoint:
    theta: float
    phi: float
    kind: Literal["zeno", "anti_zeno"]

    @property
    def direction(self) -> BlochDirection:
        return BlochDirection(self.theta, self.phi)


@dataclass(frozen=True)
class ClosedSystemRate:
    epsilon: float

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"epsilon is a variance and cannot be negative, got {self.epsilon}")


def _angles(direction):
    if isinstance(direction, BlochDirection):
        return direction.theta, direction.phi
    theta, phi = direction
    return np.asarray(theta, dtype=float), np.asarray(phi, dtype=float)


def _parts(params: BathParams, direction):
    # c1 = -A - B - C and c2 = A - B + C with the three pieces below
    theta, phi = _angles(direction)
    g, N, M = params.gamma, params.N, params.M
    ct = np.cos(theta)
    A = 0.5 * g * (N + 0.5) * (1 + ct**2)
    B = 0.5 * g * ct
    C = 0.5 * g * M * np.sin(theta) ** 2 * np.cos(2 * phi + params.eta)
    return A, B, C


def c1(params: BathParams, direction):
    """Zeno-limit decay rate <psi_1| L{|psi_1><psi_1|} |psi_1>.

    ``direction`` is a BlochDirection or a (theta, phi) pair of floats/arrays.
    """
    A, B, C = _parts(params, direction)
    return -A - B - C


def c2(params: BathParams, direction):
    """Return rate <psi_1| L{|psi_2><psi_2|} |psi_1> into the initial state."""
    A, B, C = _parts(params, direction)
    return A - B + C


def rates(params: BathParams, direction) -> ZenoRates:
    return ZenoRates(float(c1(params, direction)), float(c2(params, direction)))


def survival_selective_limit(params: BathParams, direction, t):
    return np.exp(c1(params, direction) * t)


def survival_nonselective_limit(params: BathParams, direction, t):
    """Solution of dP/dt + (c2 - c1) P = c2 with P(0) = 1.

    Written as 1 + c1/(c2-c1) * (1 - e^{-(c2-c1) t}) so that t = 0 and c1 = 0
    give exactly 1.
    """
    a, b = c1(params, direction), c2(params, direction)
    gap = b - a
    return 1 + (a / gap) * -np.expm1(-gap * np.asarray(t, dtype=float))


def survival_nonselective_stationary(params: BathParams, direction):
    a, b = c1(params, direction), c2(params, direction)
    return b / (b - a)


def zeno_cos_theta(params: BathParams) -> float:
    # (N - M)/(N + M) rewritten so that N = 0 is regular
    return -1.0 / (2 * (params.N + params.M + 0.5))


def zeno_points(params: BathParams) -> list[ZenoPoint]:
    """The two total-Zeno directions (c1 = 0) followed by their antipodes (c2 = 0)."""
    theta = math.acos(zeno_cos_theta(params))
    phi1 = (math.pi - params.eta) / 2
    zeno = [
        ZenoPoint(theta, principal_angle(phi1), "zeno"),
        ZenoPoint(theta, principal_angle(phi1 + math.pi), "zeno"),
    ]
    anti = [ZenoPoint(math.pi - z.theta, principal_angle(math.pi + z.phi), "anti_zeno") for z in zeno]
    return zeno + anti


def q1(params: BathParams, alpha, beta):
    """Zeno-limit rate for the two-qubit initial state Psi_1(alpha, beta)."""
    g, N, M = params.gamma, params.N, params.M
    return -g * (2 * N + 1 + np.cos(alpha) - 2 * M * np.sin(alpha) * np.cos(beta + params.eta))


def q3(params: BathParams, delta, chi):
    """Zeno-limit rate for the two-qubit initial state Psi_3(delta, chi)."""
    return -params.gamma * (2 * params.N + 1) * (np.sin(delta) * np.cos(chi) + 1)


def q1_maximizer(params: BathParams) -> tuple[float, float]:
    """(alpha, beta) where q1 reaches its maximum of zero."""
    return math.acos(-1.0 / (2 * params.N + 1)), principal_angle(-params.eta)


def dfzs_states(params: BathParams) -> tuple[np.ndarray, np.ndarray]:
    """The two decoherence-free Zeno states of the collective bath.

    (N|00> + M e^{-i eta}|11>)/sqrt(N^2 + M^2) is written with amplitudes
    sqrt(N/(2N+1)) and sqrt((N+1)/(2N+1)), which is the same state and stays
    defined at N = 0.
    """
    N = params.N
    psi1 = np.zeros(4, dtype=complex)
    psi1[0] = math.sqrt(N / (2 * N + 1))
    psi1[3] = math.sqrt((N + 1) / (2 * N + 1)) * np.exp(-1j * params.eta)
    singlet = np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)
    return psi1, singlet


def closed_system_epsilon(H, psi) -> ClosedSystemRate:
    """Energy variance <H^2> - <H>^2 (hbar = 1)."""
    H = np.asarray(H, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if np.abs(H - H.conj().T).max() > 1e-12:
        raise ValueError("H must be Hermitian")
    Hpsi = H @ psi
    mean = np.real(psi.conj() @ Hpsi)
    mean_sq = np.real(Hpsi.conj() @ Hpsi)
    return ClosedSystemRate(max(mean_sq - mean**2, 0.0))


def closed_system_survival(epsilon, n: int, t: float) -> float:
    """(1 - eps (t/n)^2)^n for n short-time projective checks, base floored at 0."""
    eps = epsilon.epsilon if isinstance(epsilon, ClosedSystemRate) else float(epsilon)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    base = max(1.0 - eps * (t / n) ** 2, 0.0)
    return base**n
