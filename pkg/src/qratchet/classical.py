"""Classical ensembles under the dissipative ratchet map.

The map in rescaled coordinates (p = tau*n, K = k*tau):

    p' = gamma*p + K*[sin(x) + a*sin(2x + phi)]
    x' = x + p'

Only (K, gamma) enter, so trajectories are identical for any tau. x is kept
unbounded; periodicity is used only inside the kick force.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .model import ModelParams, MomentumDistribution, kick_force

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ClassicalEnsemble:
    """Phase-space point cloud with its seed and step count for provenance."""

    x: np.ndarray
    p: np.ndarray
    seed: int
    steps_done: int = 0

    def __len__(self) -> int:
        return self.x.size


def sample_initial(count: int, seed: int) -> ClassicalEnsemble:
    """Uniform initial conditions: x in [0, 2*pi), p in [-pi, pi)."""
    if count < 1:
        raise ValueError(f"ensemble count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, TWO_PI, count)
    p = rng.uniform(-np.pi, np.pi, count)
    return ClassicalEnsemble(x=x, p=p, seed=int(seed))


def map_step(x, p, params: ModelParams):
    """One iteration of the dissipative map; works on scalars or arrays."""
    p_new = params.gamma * p + kick_force(x, params)
    x_new = x + p_new
    return x_new, p_new


def evolve_ensemble(ens: ClassicalEnsemble, params: ModelParams, steps: int) -> ClassicalEnsemble:
    """Advance every member by `steps` iterations; deterministic, count preserved."""
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    x = ens.x.copy()
    p = ens.p.copy()
    gamma = params.gamma
    K = params.kick_K
    a = params.a
    phi = params.phi
    for _ in range(steps):
        p *= gamma
        p += K * (np.sin(x) + a * np.sin(2.0 * x + phi))
        x += p
    return replace(ens, x=x, p=p, steps_done=ens.steps_done + steps)


def classical_current(ens: ClassicalEnsemble) -> float:
    """Ensemble-averaged momentum J_c = <p> at the current step."""
    if len(ens) == 0:
        raise ValueError("classical current of an empty ensemble is undefined")
    return float(np.mean(ens.p))


def discretize_momentum(ens: ClassicalEnsemble, n_bins: int, p_span: float) -> MomentumDistribution:
    """Histogram p over n_bins equal cells covering [-p_span/2, p_span/2).

    Out-of-span mass is folded into the edge cells and reported via
    edge_spill; a warning fires when the spilled fraction exceeds 1e-3.
    The returned distribution is normalized to 1.
    """
    if n_bins < 2:
        raise ValueError(f"n_bins must be >= 2, got {n_bins}")
    if not (p_span > 0.0):
        raise ValueError(f"p_span must be > 0, got {p_span}")
    half = 0.5 * p_span
    spill = float(np.mean((ens.p < -half) | (ens.p >= half)))
    if spill > 1e-3:
        warnings.warn(
            f"{spill:.3%} of the ensemble falls outside the [-{half:g}, {half:g}) span; "
            "mass folded into edge cells",
            stacklevel=2,
        )
    edges = np.linspace(-half, half, n_bins + 1)
    # clip folds out-of-range mass into the first/last cell
    clipped = np.clip(ens.p, -half, np.nextafter(half, -np.inf))
    counts, _ = np.histogram(clipped, bins=edges)
    prob = counts.astype(float) / counts.sum()
    centers = 0.5 * (edges[:-1] + edges[1:])
    return MomentumDistribution(p=centers, prob=prob, edge_spill=spill)


def find_period1_points(
    ens: ClassicalEnsemble, params: ModelParams, tol: float = 1e-9, settle: int = 256
) -> np.ndarray:
    """Momenta of ensemble members sitting on a period-1 attractor.

    A member is period-1 when one more map step returns (x mod 2*pi, p) to
    itself within tol. For such points the map structure forces p onto an
    integer multiple of 2*pi. Since the dynamics is 2*pi periodic in x, the
    states are first rebased into the principal cell and given `settle`
    extra steps there: at O(1) x the rounding floor sits far below tol,
    while at the large unbounded x of a long run it can mask convergence.
    """
    reb = replace(ens, x=np.remainder(ens.x, TWO_PI))
    if settle:
        reb = evolve_ensemble(reb, params, settle)
    x1, p1 = map_step(reb.x, reb.p, params)
    dp = np.abs(p1 - reb.p)
    dx = np.abs(np.remainder(x1 - reb.x + np.pi, TWO_PI) - np.pi)
    mask = (dp <= tol) & (dx <= tol)
    return reb.p[mask]
