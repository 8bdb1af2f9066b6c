"""Dense density-matrix integrator used as a small-dimension oracle.

Integrates the full master equation with momentum-lowering Lindblad
operators (rate g^2 = -ln gamma) using fixed-step classical RK4 between the
exact unitary kick conjugations. Memory is O(N^2), so it is capped at test
scale; the trajectory engine is the production backend.
"""

from __future__ import annotations

import math

import numpy as np

from .model import ModelParams
from .quantum import HilbertSpec, _to_momentum, _to_position, kick_phase

MAX_ORACLE_DIM = 64


def jump_operators(g: float, spec: HilbertSpec) -> tuple[np.ndarray, np.ndarray]:
    """Dense L1 (lowers n >= 1) and L2 (raises n <= -1), both toward n = 0."""
    m = spec.half
    dim = spec.dim
    l1 = np.zeros((dim, dim), dtype=complex)
    l2 = np.zeros((dim, dim), dtype=complex)
    for n in range(1, m + 1):
        l1[n - 1 + m, n + m] = g * math.sqrt(n)
        l2[-n + 1 + m, -n + m] = g * math.sqrt(n)
    return l1, l2


def kick_unitary(params: ModelParams, spec: HilbertSpec) -> np.ndarray:
    """Kick operator as a dense matrix in the momentum basis."""
    if params.kick_K == 0.0:
        return np.eye(spec.dim, dtype=complex)
    eye = np.eye(spec.dim, dtype=complex)
    psi = np.fft.ifft(np.fft.ifftshift(eye, axes=0), norm="ortho", axis=0)
    psi *= kick_phase(params, spec)[:, None]
    return np.fft.fftshift(np.fft.fft(psi, norm="ortho", axis=0), axes=0)


def _check_density(rho: np.ndarray, dim: int):
    if rho.shape != (dim, dim):
        raise ValueError(f"density matrix shape {rho.shape} does not match dimension {dim}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ValueError("input is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-8:
        raise ValueError(f"input trace {np.trace(rho).real} is not 1")
    if np.min(np.linalg.eigvalsh(rho)) < -1e-8:
        raise ValueError("input is not positive semidefinite")


def dense_lindblad_oracle(
    rho0: np.ndarray, params: ModelParams, spec: HilbertSpec, periods: int, dt: float
) -> np.ndarray:
    """Evolve a density matrix over `periods` kick periods.

    Each period applies the exact kick conjugation, then RK4 over the unit
    flight with the free Hamiltonian tau*n^2/2 and the damping dissipator.
    Preserves trace to 1e-8 and Hermiticity to 1e-10 over test horizons.
    """
    if spec.dim > MAX_ORACLE_DIM:
        raise ValueError(f"oracle is limited to dimension <= {MAX_ORACLE_DIM}, got {spec.dim}")
    if not (0.0 < dt <= 1e-3):
        raise ValueError(f"dt must lie in (0, 1e-3], got {dt}")
    if params.gamma <= 0.0:
        raise ValueError("gamma = 0 (overdamped limit) is not supported")
    if periods < 0:
        raise ValueError(f"periods must be >= 0, got {periods}")
    _check_density(rho0, spec.dim)

    g2 = -math.log(params.gamma)
    g = math.sqrt(g2)
    hvec = 0.5 * params.tau * spec.n.astype(float) ** 2
    dvec = g2 * spec.absn.astype(float)
    l1, l2 = jump_operators(g, spec)
    l1d = l1.conj().T
    l2d = l2.conj().T
    u = kick_unitary(params, spec)
    ud = u.conj().T

    def rhs(rho):
        out = -1j * (hvec[:, None] * rho - rho * hvec[None, :])
        out -= 0.5 * (dvec[:, None] * rho + rho * dvec[None, :])
        out += l1 @ rho @ l1d
        out += l2 @ rho @ l2d
        return out

    n_steps = math.ceil(1.0 / dt)
    h = 1.0 / n_steps
    rho = rho0.astype(complex)
    for _ in range(periods):
        rho = u @ rho @ ud
        for _ in range(n_steps):
            k1 = rhs(rho)
            k2 = rhs(rho + 0.5 * h * k1)
            k3 = rhs(rho + 0.5 * h * k2)
            k4 = rhs(rho + h * k3)
            rho = rho + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    return rho


def momentum_expectation(rho: np.ndarray, spec: HilbertSpec) -> float:
    """tr(rho * n_hat)."""
    return float(np.real(np.diag(rho)) @ spec.n)


def diagonal_distribution(rho: np.ndarray) -> np.ndarray:
    """Real, clipped, normalized diagonal of a density matrix."""
    d = np.clip(np.real(np.diag(rho)), 0.0, None)
    return d / d.sum()
