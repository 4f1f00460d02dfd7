import numpy as np
import pytest


def random_density_matrix(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_unitary(rng, dim):
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def rk4(f, rho, t, steps):
    """Classical fixed-step Runge-Kutta on the density matrix itself."""
    h = t / steps
    for _ in range(steps):
        k1 = f(rho)
        k2 = f(rho + 0.5 * h * k1)
        k3 = f(rho + 0.5 * h * k2)
        k4 = f(rho + h * k3)
        rho = rho + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


def master_equation(p):
    """Right-hand side of the four-term squeezed-bath equation with plain 2x2 products."""
    from squeezed_zeno.qmath import SIGMA_MINUS as sm, SIGMA_PLUS as sp

    g, N, M, eta = p.gamma, p.N, p.M, p.eta

    def f(rho):
        return (
            0.5 * g * (N + 1) * (2 * sm @ rho @ sp - sp @ sm @ rho - rho @ sp @ sm)
            + 0.5 * g * N * (2 * sp @ rho @ sm - sm @ sp @ rho - rho @ sm @ sp)
            - g * M * np.exp(1j * eta) * sp @ rho @ sp
            - g * M * np.exp(-1j * eta) * sm @ rho @ sm
        )

    return f


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
