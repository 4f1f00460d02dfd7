"""Projective measurements and the finite-n Zeno iteration.

Both measurement modes are driven by one batched kernel so that a single point
query and a full parameter grid produce bit-identical numbers: the kernel only
uses elementwise real arithmetic, never BLAS reductions across the batch.

Basis states are numbered from 1, matching the physics labels psi_1, psi_2 and
Psi_1 .. Psi_4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np

from .liouvillian import Liouvillian
from .qmath import DRIFT_ERROR, DRIFT_FIX, devectorize, projector

CHUNK = 4096
Mode = Literal["selective", "nonselective"]

TWO_PI = 2 * math.pi


def principal_angle(x: float) -> float:
    """Reduce an azimuthal angle to [-pi/2, 3pi/2)."""
    return (x + math.pi / 2) % TWO_PI - math.pi / 2


@dataclass(frozen=True)
class BlochDirection:
    theta: float
    phi: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValueError("Bloch angles must be finite")
        object.__setattr__(self, "theta", min(max(float(self.theta), 0.0), math.pi))
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)

    @property
    def unit_vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])

    def inverted(self) -> "BlochDirection":
        """The antipodal direction (pi - theta, pi + phi)."""
        return BlochDirection(math.pi - self.theta, math.pi + self.phi)


@dataclass(frozen=True)
class TwoQubitBasisParams:
    alpha: float
    beta: float
    delta: float
    chi: float

    def __post_init__(self):
        for name in ("alpha", "beta", "delta", "chi"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        for name in ("alpha", "delta"):
            v = getattr(self, name)
            if v < -1e-12 or v > math.pi + 1e-12:
                raise ValueError(f"{name} must lie in [0, pi], got {v}")
            object.__setattr__(self, name, min(max(float(v), 0.0), math.pi))
        object.__setattr__(self, "beta", principal_angle(float(self.beta)))
        object.__setattr__(self, "chi", principal_angle(float(self.chi)))


@dataclass(frozen=True, eq=False)
class MeasurementBasis:
    """Orthonormal basis; ``states[:, k]`` is basis state ``k + 1``."""

    states: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.states, dtype=complex)
        if U.ndim != 2 or U.shape[0] != U.shape[1] or U.shape[0] not in (2, 4):
            raise ValueError(f"basis must be 2x2 or 4x4, got {U.shape}")
        if np.abs(U.conj().T @ U - np.eye(U.shape[0])).max() > 1e-12:
            raise ValueError("basis states are not orthonormal")
        U.setflags(write=False)
        object.__setattr__(self, "states", U)

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    def state(self, index: int) -> np.ndarray:
        _check_index(index, self.dim)
        return self.states[:, index - 1].copy()

    @property
    def projectors(self) -> list[np.ndarray]:
        return [projector(self.states[:, k]) for k in range(self.dim)]


@dataclass(frozen=True)
class ZenoSchedule:
    total_time: float
    n: int
    mode: Mode = "nonselective"

    def __post_init__(self):
        if not (math.isfinite(self.total_time) and self.total_time > 0):
            raise ValueError(f"total_time must be positive, got {self.total_time}")
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be an integer >= 1, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if self.mode not in ("selective", "nonselective"):
            raise ValueError(f"unknown measurement mode {self.mode!r}")

    @property
    def tau(self) -> float:
        return self.total_time / self.n


@dataclass
class SurvivalResult:
    probability: float
    final_state: np.ndarray
    per_step: Optional[np.ndarray] = None

    @property
    def reported(self) -> float:
        return min(max(self.probability, 0.0), 1.0)


def _check_index(index: int, dim: int):
    if isinstance(index, bool) or int(index) != index or not 1 <= index <= dim:
        raise ValueError(f"initial index must be in 1..{dim}, got {index}")


def bloch_states(theta, phi) -> np.ndarray:
    """Eigenbases of sigma.mu for arrays of angles, shape (..., 2, 2), states as columns."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    e = np.exp(1j * phi)
    U = np.empty(np.broadcast(theta, phi).shape + (2, 2), dtype=complex)
    U[..., 0, 0] = c
    U[..., 1, 0] = s * e
    U[..., 0, 1] = -s
    U[..., 1, 1] = c * e
    return U


def two_qubit_states(alpha, beta, delta, chi) -> np.ndarray:
    """The four-state basis for arrays of angles, shape (..., 4, 4), states as columns."""
    alpha, beta, delta, chi = (np.asarray(x, dtype=float) for x in (alpha, beta, delta, chi))
    shape = np.broadcast(alpha, beta, delta, chi).shape
    ca, sa, eb = np.cos(alpha / 2), np.sin(alpha / 2), np.exp(1j * beta)
    cd, sd, ec = np.cos(delta / 2), np.sin(delta / 2), np.exp(1j * chi)
    U = np.zeros(shape + (4, 4), dtype=complex)
    # rows: |00>, |01>, |10>, |11>
    U[..., 0, 0] = ca
    U[..., 3, 0] = sa * eb
    U[..., 0, 1] = -sa
    U[..., 3, 1] = ca * eb
    U[..., 1, 2] = cd
    U[..., 2, 2] = sd * ec
    U[..., 1, 3] = -sd
    U[..., 2, 3] = cd * ec
    return U


def bloch_basis(direction: BlochDirection) -> MeasurementBasis:
    return MeasurementBasis(bloch_states(direction.theta, direction.phi))


def two_qubit_basis(p: TwoQubitBasisParams) -> MeasurementBasis:
    return MeasurementBasis(two_qubit_states(p.alpha, p.beta, p.delta, p.chi))


def nonselective_project(basis: MeasurementBasis, rho) -> np.ndarray:
    """rho -> sum_i P_i rho P_i."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (basis.dim, basis.dim):
        raise ValueError(f"state of shape {rho.shape} does not match basis dimension {basis.dim}")
    return sum(P @ rho @ P for P in basis.projectors)


def _kernels(prop: np.ndarray, U: np.ndarray):
    """Per-point tables for a batch of bases ``U`` of shape (B, d, d).

    Returns real/imag parts of vec(P_k) and of e^{L tau} vec(P_k), laid out as
    (k, d*d, B) with the batch axis last. Everything below is elementwise real
    arithmetic, so a point's result does not depend on its position in the batch.
    """
    ur = np.ascontiguousarray(np.moveaxis(U.real, 0, -1))  # ur[i, k, b]
    ui = np.ascontiguousarray(np.moveaxis(U.imag, 0, -1))
    d, _, B = ur.shape
    # vec(P_k)[j*d + i] = U[i, k] conj(U[j, k])
    Pr = np.empty((d, d * d, B))
    Pi = np.empty((d, d * d, B))
    for j in range(d):
        for i in range(d):
            Pr[:, j * d + i] = ur[i] * ur[j] + ui[i] * ui[j]
            Pi[:, j * d + i] = ui[i] * ur[j] - ur[i] * ui[j]
    Gr = np.zeros((d, d * d, B))
    Gi = np.zeros((d, d * d, B))
    pr, pim = prop.real, prop.imag
    for j in range(d * d):
        a = pr[:, j][None, :, None]
        c = pim[:, j][None, :, None]
        xr = Pr[:, None, j, :]
        xi = Pi[:, None, j, :]
        Gr += a * xr - c * xi
        Gi += a * xi + c * xr
    return Pr, Pi, Gr, Gi


def _step(p: np.ndarray, Pr, Pi, Gr, Gi) -> np.ndarray:
    """Propagate rho = sum_k p_k P_k over one interval and read <m|rho|m>."""
    d = p.shape[0]
    vr = p[0] * Gr[0]
    vi = p[0] * Gi[0]
    for k in range(1, d):
        vr += p[k] * Gr[k]
        vi += p[k] * Gi[k]
    # <m|rho|m> = Re(conj(vec P_m) . vec rho)
    out = Pr[:, 0] * vr[0] + Pi[:, 0] * vi[0]
    for i in range(1, d * d):
        out += Pr[:, i] * vr[i] + Pi[:, i] * vi[i]
    return out


def _check_drift(p: np.ndarray) -> np.ndarray:
    total = p.sum(axis=0)
    drift = np.abs(total - 1)
    worst = drift.max()
    if worst > DRIFT_ERROR:
        raise FloatingPointError(f"trace drifted by {worst:.3g}; generator is not trace preserving")
    if worst > DRIFT_FIX:
        fix = drift > DRIFT_FIX
        p = p.copy()
        p[:, fix] /= total[fix]
    return p


def _one_hot(d: int, B: int, index: int) -> np.ndarray:
    p = np.zeros((d, B))
    p[index - 1] = 1.0
    return p


def _selective_chunk(prop: np.ndarray, U: np.ndarray, index: int) -> np.ndarray:
    tables = _kernels(prop, U)
    return _step(_one_hot(U.shape[-1], U.shape[0], index), *tables)[index - 1]


def _nonselective_chunk(prop: np.ndarray, U: np.ndarray, index: int, n: int, record: bool):
    Pr, Pi, Gr, Gi = tables = _kernels(prop, U)
    d, B = U.shape[-1], U.shape[0]
    p = _one_hot(d, B, index)
    steps = np.empty((n, B)) if record else None
    for k in range(n):
        p = _check_drift(_step(p, *tables))
        if record:
            steps[k] = p[index - 1]
    # projected state sum_k p_k P_k, vectorized
    final = np.einsum("kb,kmb->bm", p, Pr) + 1j * np.einsum("kb,kmb->bm", p, Pi)
    return p[index - 1].copy(), final, steps


def power_survival(s: np.ndarray, n: int) -> np.ndarray:
    """s**n evaluated in log space; exact zero stays zero."""
    s = np.asarray(s, dtype=float)
    if n == 1:
        return s.copy()
    out = np.where(s > 0, np.exp(n * np.log(np.where(s > 0, s, 1.0))), 0.0)
    neg = s < 0
    if np.any(neg):
        out[neg] = s[neg] ** n
    return out


def _chunks(total: int):
    for start in range(0, total, CHUNK):
        yield start, min(start + CHUNK, total)


def selective_step_batch(prop: np.ndarray, states: np.ndarray, index: int) -> np.ndarray:
    """Single-interval survival <psi|e^{L tau}{|psi><psi|}|psi> for a batch of bases."""
    _check_index(index, states.shape[-1])
    out = np.empty(states.shape[0])
    for a, b in _chunks(states.shape[0]):
        out[a:b] = _selective_chunk(prop, states[a:b], index)
    return out


def nonselective_batch(prop: np.ndarray, states: np.ndarray, index: int, n: int, record: bool = False):
    """Iterate (propagate, then measure non-selectively) n times for a batch of bases.

    Returns (survival, final vectorized states, per-step survival or None).
    """
    _check_index(index, states.shape[-1])
    B, d = states.shape[0], states.shape[-1]
    surv = np.empty(B)
    finals = np.empty((B, d * d), dtype=complex)
    steps = np.empty((n, B)) if record else None
    for a, b in _chunks(B):
        s, v, st = _nonselective_chunk(prop, states[a:b], index, n, record)
        surv[a:b] = s
        finals[a:b] = v
        if record:
            steps[:, a:b] = st
    return surv, finals, steps


def _validate(L: Liouvillian, basis: MeasurementBasis, index: int):
    if L.dim != basis.dim:
        raise ValueError(f"generator dimension {L.dim} does not match basis dimension {basis.dim}")
    _check_index(index, basis.dim)


def survival_selective(
    L: Liouvillian,
    basis: MeasurementBasis,
    initial_index: int,
    sched: ZenoSchedule,
    per_step: bool = False,
    propagator: Optional[np.ndarray] = None,
) -> SurvivalResult:
    """Post-selected survival s**n; every successful measurement re-prepares the state."""
    _validate(L, basis, initial_index)
    prop = L.propagator(sched.tau) if propagator is None else propagator
    s = selective_step_batch(prop, basis.states[None], initial_index)
    prob = float(power_survival(s, sched.n)[0])
    steps = None
    if per_step:
        steps = np.array([power_survival(s, k)[0] for k in range(1, sched.n + 1)])
    return SurvivalResult(prob, projector(basis.state(initial_index)), steps)


def survival_nonselective(
    L: Liouvillian,
    basis: MeasurementBasis,
    initial_index: int,
    sched: ZenoSchedule,
    per_step: bool = False,
    propagator: Optional[np.ndarray] = None,
) -> SurvivalResult:
    """Survival after n rounds of free evolution followed by a non-selective measurement."""
    _validate(L, basis, initial_index)
    prop = L.propagator(sched.tau) if propagator is None else propagator
    surv, finals, steps = nonselective_batch(prop, basis.states[None], initial_index, sched.n, per_step)
    return SurvivalResult(float(surv[0]), devectorize(finals[0]), None if steps is None else steps[:, 0])


def survival(L, basis, initial_index, sched: ZenoSchedule, **kw) -> SurvivalResult:
    fn = survival_selective if sched.mode == "selective" else survival_nonselective
    return fn(L, basis, initial_index, sched, **kw)


def expectation_sandwich(L: Liouvillian, bra, ket) -> float:
    """<bra| L{|ket><ket|} |bra>, real for a Hermiticity-preserving generator."""
    bra = np.asarray(bra, dtype=complex)
    return float(np.real(bra.conj() @ L.apply(projector(ket)) @ bra))
