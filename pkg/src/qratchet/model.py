"""Shared model parameters, the biharmonic kick, and grid definitions.

Everything downstream (classical map, quantum engine, sweeps) consumes the
immutable records defined here. The sweep axis "k" is the classical kick
amplitude K: classical dynamics depends on (K, gamma) only, while the quantum
kick phase strength is K / tau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_A = 0.5
DEFAULT_PHI = math.pi / 2


@dataclass(frozen=True)
class ModelParams:
    """Immutable physical parameters shared by both engines.

    kick_K   classical kick amplitude K (dimensionless, >= 0)
    gamma    dissipation, 0 <= gamma <= 1 (1 = conservative, 0 = overdamped)
    tau      effective Planck constant (> 0); classical results never use it
    a, phi   second-harmonic amplitude and phase of the kick
    """

    kick_K: float
    gamma: float
    tau: float
    a: float = DEFAULT_A
    phi: float = DEFAULT_PHI

    def __post_init__(self):
        if not (self.kick_K >= 0.0) or not math.isfinite(self.kick_K):
            raise ValueError(f"kick_K must be finite and >= 0, got {self.kick_K}")
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not (self.tau > 0.0) or not math.isfinite(self.tau):
            raise ValueError(f"tau must be finite and > 0, got {self.tau}")
        if not math.isfinite(self.a):
            raise ValueError(f"a must be finite, got {self.a}")
        if not math.isfinite(self.phi):
            raise ValueError(f"phi must be finite, got {self.phi}")

    @property
    def quantum_kick_strength(self) -> float:
        """Kick phase strength K / tau entering the quantum kick operator."""
        return self.kick_K / self.tau


def make_params(kick_K, gamma, tau, a=None, phi=None) -> ModelParams:
    """Validate raw fields into a ModelParams, applying the model defaults.

    a and phi default to 0.5 and pi/2 when omitted (passed as None).
    Raises ValueError naming the offending field.
    """
    return ModelParams(
        kick_K=float(kick_K),
        gamma=float(gamma),
        tau=float(tau),
        a=DEFAULT_A if a is None else float(a),
        phi=DEFAULT_PHI if phi is None else float(phi),
    )


def kick_force(x, params: ModelParams):
    """Momentum increment K*[sin(x) + a*sin(2x + phi)]; 2*pi periodic in x.

    Accepts scalars or arrays. Bounded by K*(1 + a) in magnitude.
    """
    return params.kick_K * (np.sin(x) + params.a * np.sin(2.0 * x + params.phi))


def potential(x, params: ModelParams):
    """Kick potential K*[cos(x) + (a/2)*cos(2x + phi)].

    Its negative x-derivative is kick_force; each kick in the train carries
    the same amplitude, so no kick index enters.
    """
    return params.kick_K * (np.cos(x) + 0.5 * params.a * np.cos(2.0 * x + params.phi))


@dataclass(frozen=True)
class GridSpec:
    """Uniform (k, gamma) sweep grid, endpoints included."""

    k_min: float
    k_max: float
    n_k: int
    gamma_min: float
    gamma_max: float
    n_gamma: int
    master_seed: int

    def __post_init__(self):
        if not (self.k_min < self.k_max):
            raise ValueError(f"k range must satisfy k_min < k_max, got [{self.k_min}, {self.k_max}]")
        if not (0.0 <= self.gamma_min < self.gamma_max <= 1.0):
            raise ValueError(
                f"gamma range must satisfy 0 <= gamma_min < gamma_max <= 1, got [{self.gamma_min}, {self.gamma_max}]"
            )
        if self.n_k < 1 or self.n_gamma < 1:
            raise ValueError(f"grid counts must be >= 1, got n_k={self.n_k}, n_gamma={self.n_gamma}")

    def k_values(self) -> np.ndarray:
        return np.linspace(self.k_min, self.k_max, self.n_k)

    def gamma_values(self) -> np.ndarray:
        return np.linspace(self.gamma_min, self.gamma_max, self.n_gamma)


@dataclass(frozen=True)
class MomentumDistribution:
    """Normalized probability over momentum cells.

    p          cell momentum values (tau*n for quantum, bin centers classically)
    prob       non-negative masses summing to 1
    edge_spill fraction of raw mass that fell outside the covered span and was
               folded into the edge cells (classical binning only)
    """

    p: np.ndarray
    prob: np.ndarray
    edge_spill: float = 0.0

    def __post_init__(self):
        if self.p.shape != self.prob.shape:
            raise ValueError("p and prob must have matching shapes")


# Default quantum basis dimensions keep the covered momentum span N*tau near
# 100 for the tabulated hbar_eff values; odd N keeps the ladder symmetric.
_DIM_TABLE = {0.411: 243, 0.137: 729, 0.068: 1459}


def default_dim(tau: float) -> int:
    """Default Hilbert-space dimension for a given tau (odd, N*tau ~ 100)."""
    for t, n in _DIM_TABLE.items():
        if abs(tau - t) < 1e-12:
            return n
    n = int(round(100.0 / tau))
    if n % 2 == 0:
        n += 1
    return max(n, 3)
