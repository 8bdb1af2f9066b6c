"""Quantum-trajectory engine over a truncated momentum basis.

One period = instantaneous biharmonic kick (diagonal on the position grid,
reached by a unitary DFT) followed by a unit-duration dissipative flight.
The flight unravels the master equation with exact waiting times: the
no-jump generator tau*n^2/2 - (i/2)*g^2*|n| is diagonal in momentum, so the
survival norm Sum |c_n|^2 exp(-g^2 |n| s) is known in closed form and the
next jump time is a root solve, with no time-stepping error between jumps.
The damping rate g^2 = -ln(gamma) makes one flight contract <n> by exactly
gamma on one-signed support.

States are plain complex arrays in natural momentum order n = -M..M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams, MomentumDistribution, potential

# Fraction of the batch mass allowed near the truncation edge before a cell
# is flagged truncation-suspect.
EDGE_MASS_LIMIT = 1e-2


@dataclass(frozen=True, eq=False)
class HilbertSpec:
    """Odd-dimension momentum ladder n = -M..M with position grid x_j = 2*pi*j/N."""

    dim: int
    tau: float
    n: np.ndarray = field(init=False, repr=False)
    absn: np.ndarray = field(init=False, repr=False)
    x: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.dim < 3:
            raise ValueError(f"basis dimension must be >= 3, got {self.dim}")
        if self.dim % 2 == 0:
            raise ValueError(
                f"basis dimension must be odd so the ladder is symmetric about 0, got {self.dim}"
            )
        if not (self.tau > 0.0):
            raise ValueError(f"tau must be > 0, got {self.tau}")
        m = (self.dim - 1) // 2
        object.__setattr__(self, "n", np.arange(-m, m + 1))
        object.__setattr__(self, "absn", np.abs(self.n))
        object.__setattr__(self, "x", 2.0 * np.pi * np.arange(self.dim) / self.dim)

    @property
    def half(self) -> int:
        return (self.dim - 1) // 2

    def momentum_values(self) -> np.ndarray:
        return self.tau * self.n


def build_space(dim: int, tau: float) -> HilbertSpec:
    """Validated HilbertSpec constructor."""
    return HilbertSpec(dim=int(dim), tau=float(tau))


def initial_momentum_set(spec: HilbertSpec) -> np.ndarray:
    """Momentum indices n with tau*n in [-pi, pi), the initial-condition band."""
    lo = math.ceil(-np.pi / spec.tau)
    hi = math.ceil(np.pi / spec.tau) - 1
    if lo < -spec.half or hi > spec.half:
        raise ValueError(
            f"initial band [-pi, pi) needs |n| <= {max(-lo, hi)} but the basis holds |n| <= {spec.half}"
        )
    return np.arange(lo, hi + 1)


def sample_initial_state(spec: HilbertSpec, rng) -> np.ndarray:
    """Single momentum eigenstate |n0> with n0 uniform over the initial band.

    Over many trajectories this realizes the uniform incoherent mixture with
    <p0> = 0, the quantum counterpart of the classical initial ensemble.
    """
    rng = np.random.default_rng(rng)
    band = initial_momentum_set(spec)
    n0 = int(band[rng.integers(band.size)])
    state = np.zeros(spec.dim, dtype=complex)
    state[n0 + spec.half] = 1.0
    return state


def uniform_momentum_mixture(spec: HilbertSpec) -> np.ndarray:
    """Density matrix of the uniform mixture over the initial band."""
    band = initial_momentum_set(spec)
    rho = np.zeros((spec.dim, spec.dim), dtype=complex)
    idx = band + spec.half
    rho[idx, idx] = 1.0 / band.size
    return rho


def _to_position(c: np.ndarray) -> np.ndarray:
    return np.fft.ifft(np.fft.ifftshift(c), norm="ortho")


def _to_momentum(psi: np.ndarray) -> np.ndarray:
    return np.fft.fftshift(np.fft.fft(psi, norm="ortho"))


def kick_phase(params: ModelParams, spec: HilbertSpec) -> np.ndarray:
    """Diagonal kick factors exp(-i*V(x_j)/tau) on the position grid."""
    return np.exp(-1j * potential(spec.x, params) / params.tau)


def apply_kick(state: np.ndarray, params: ModelParams, spec: HilbertSpec) -> np.ndarray:
    """One kick: DFT to the position grid, phase multiply, DFT back. Unitary."""
    if params.kick_K == 0.0:
        return state.copy()
    return _to_momentum(_to_position(state) * kick_phase(params, spec))


def _solve_waiting_time(levels: np.ndarray, mass: np.ndarray, g2: float, horizon: float, r: float):
    """Root of Sum_m mass[m]*exp(-g2*levels[m]*s) = r on (0, horizon).

    The survival function is strictly decreasing wherever decaying mass
    exists, so the root is unique; safeguarded Newton inside a bisection
    bracket converges to 1e-12 relative. Returns None when the survival
    probability at the horizon still exceeds r (no jump this flight).
    """
    rates = g2 * levels
    surv_h = float(np.dot(mass, np.exp(-rates * horizon)))
    if surv_h >= r:
        return None
    lo, hi = 0.0, horizon
    s = 0.5 * horizon
    for _ in range(200):
        w = mass * np.exp(-rates * s)
        f = float(w.sum()) - r
        if f > 0.0:
            lo = s
        else:
            hi = s
        fp = -float(np.dot(rates, w))
        step_ok = fp < 0.0
        s_new = s - f / fp if step_ok else 0.5 * (lo + hi)
        if not (lo < s_new < hi):
            s_new = 0.5 * (lo + hi)
        if abs(s_new - s) <= 1e-12 * max(abs(s_new), 1e-300):
            return s_new
        s = s_new
    return s


def jump_waiting_time(state: np.ndarray, spec: HilbertSpec, g: float, horizon: float, r: float):
    """Exact waiting time until the next quantum jump, or None past the horizon.

    state must be normalized; r is a uniform draw in (0, 1). g = 0 or a state
    confined to n = 0 never jumps (the survival probability stays 1).
    """
    if not (0.0 < horizon <= 1.0):
        raise ValueError(f"horizon must lie in (0, 1], got {horizon}")
    if not (0.0 < r < 1.0):
        raise ValueError(f"r must lie in (0, 1), got {r}")
    if g < 0.0:
        raise ValueError(f"g must be >= 0, got {g}")
    if g == 0.0:
        return None
    w = np.abs(state) ** 2
    mass = np.bincount(spec.absn, weights=w, minlength=spec.half + 1)
    nz = mass > 0.0
    levels = np.nonzero(nz)[0].astype(float)
    return _solve_waiting_time(levels, mass[nz], g * g, horizon, r)


def apply_jump(state: np.ndarray, spec: HilbertSpec, rng) -> np.ndarray:
    """Apply one Lindblad jump, shifting support one cell toward n = 0.

    The branch is chosen with probability ||L_mu psi||^2 / sum, which is
    invariant under state rescaling, so a sub-normalized no-jump branch may
    be passed directly. The result is renormalized.
    """
    rng = np.random.default_rng(rng)
    m = spec.half
    w = np.abs(state) ** 2
    pos = np.arange(1, m + 1, dtype=float)
    u1 = float(np.dot(pos, w[m + 1 :]))
    u2 = float(np.dot(pos[::-1], w[:m]))
    total = u1 + u2
    if total <= 0.0:
        raise ValueError("jump requested from a dark state (no weight on n != 0)")
    out = np.zeros_like(state)
    if rng.random() * total < u1:
        out[m : 2 * m] = np.sqrt(pos) * state[m + 1 :]
    else:
        out[1 : m + 1] = np.sqrt(pos[::-1]) * state[:m]
    return out / np.linalg.norm(out)


class _CellEvolver:
    """Per-(params, spec) precomputation for repeated trajectory evolution."""

    def __init__(self, params: ModelParams, spec: HilbertSpec):
        if params.gamma <= 0.0:
            raise ValueError("gamma = 0 (overdamped limit) is not supported by the flight")
        self.params = params
        self.spec = spec
        self.g2 = -math.log(params.gamma)
        n = spec.n
        self.free_coef = -0.5j * params.tau * n.astype(float) ** 2
        self.decay_coef = self.free_coef - 0.5 * self.g2 * spec.absn
        self.kick_diag = None if params.kick_K == 0.0 else kick_phase(params, spec)
        self.pos_weights = np.arange(1, spec.half + 1, dtype=float)
        if self.g2 == 0.0:
            self.full_free = np.exp(self.free_coef)

    def kick(self, state: np.ndarray) -> np.ndarray:
        if self.kick_diag is None:
            return state
        return _to_momentum(_to_position(state) * self.kick_diag)

    def _jump(self, state: np.ndarray, rng) -> np.ndarray:
        m = self.spec.half
        w = np.abs(state) ** 2
        u1 = float(np.dot(self.pos_weights, w[m + 1 :]))
        u2 = float(np.dot(self.pos_weights[::-1], w[:m]))
        total = u1 + u2
        if total <= 0.0:
            raise ValueError("jump requested from a dark state (no weight on n != 0)")
        out = np.zeros_like(state)
        if rng.random() * total < u1:
            out[m : 2 * m] = np.sqrt(self.pos_weights) * state[m + 1 :]
        else:
            out[1 : m + 1] = np.sqrt(self.pos_weights[::-1]) * state[:m]
        return out / np.linalg.norm(out)

    def flight(self, state: np.ndarray, rng) -> np.ndarray:
        if self.g2 == 0.0:
            return state * self.full_free
        absn = self.spec.absn
        t_left = 1.0
        while True:
            w = np.abs(state) ** 2
            mass = np.bincount(absn, weights=w, minlength=self.spec.half + 1)
            nz = mass > 0.0
            levels = np.nonzero(nz)[0].astype(float)
            r = rng.random()
            if r <= 0.0:
                continue
            s = _solve_waiting_time(levels, mass[nz], self.g2, t_left, r)
            if s is None:
                state = state * np.exp(self.decay_coef * t_left)
                return state / np.linalg.norm(state)
            state = state * np.exp(self.decay_coef * s)
            state = self._jump(state, rng)
            t_left -= s

    def period(self, state: np.ndarray, rng) -> np.ndarray:
        return self.flight(self.kick(state), rng)


def dissipative_flight(state: np.ndarray, params: ModelParams, spec: HilbertSpec, rng) -> np.ndarray:
    """One unit-duration flight: no-jump decay segments punctuated by jumps.

    For gamma = 1 this reduces to the unitary free rotation. gamma = 0 is
    rejected (the jump rate diverges).
    """
    rng = np.random.default_rng(rng)
    return _CellEvolver(params, spec).flight(state, rng)


def evolve_trajectory(
    state: np.ndarray, params: ModelParams, spec: HilbertSpec, periods: int, rng
) -> np.ndarray:
    """Repeat [kick then flight] `periods` times."""
    if periods < 0:
        raise ValueError(f"periods must be >= 0, got {periods}")
    rng = np.random.default_rng(rng)
    ev = _CellEvolver(params, spec)
    state = state.copy()
    for _ in range(periods):
        state = ev.period(state, rng)
    return state


@dataclass
class TrajectoryBatch:
    """Monte Carlo accumulator for the diagonal of the density operator.

    diag / diag_sq hold per-cell sums of |c_n|^2 and |c_n|^4 across
    trajectories; j_sum / j_sq_sum the per-trajectory currents, for standard
    errors. edge_mass is the largest fraction any single trajectory placed in
    the outer 10% of momentum cells (truncation diagnostic).
    """

    spec: HilbertSpec
    count: int
    seed: int
    periods: int
    diag: np.ndarray
    diag_sq: np.ndarray
    j_sum: float
    j_sq_sum: float
    edge_mass: float

    @property
    def truncation_suspect(self) -> bool:
        return self.edge_mass > EDGE_MASS_LIMIT


def run_batch(
    params: ModelParams, spec: HilbertSpec, periods: int, count: int, seed: int
) -> TrajectoryBatch:
    """Run `count` independent trajectories and accumulate in index order.

    Trajectory i uses the generator seeded by (seed, i), so the batch is a
    pure function of its arguments regardless of scheduling elsewhere.
    """
    if count < 1:
        raise ValueError(f"trajectory count must be >= 1, got {count}")
    ev = _CellEvolver(params, spec)
    pvals = spec.momentum_values()
    edge_sel = spec.absn > 0.9 * spec.half
    diag = np.zeros(spec.dim)
    diag_sq = np.zeros(spec.dim)
    j_sum = 0.0
    j_sq_sum = 0.0
    edge = 0.0
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        state = sample_initial_state(spec, rng)
        for _ in range(periods):
            state = ev.period(state, rng)
        w = np.abs(state) ** 2
        diag += w
        diag_sq += w * w
        j = float(np.dot(pvals, w))
        j_sum += j
        j_sq_sum += j * j
        edge = max(edge, float(w[edge_sel].sum()))
    return TrajectoryBatch(
        spec=spec,
        count=count,
        seed=int(seed),
        periods=periods,
        diag=diag,
        diag_sq=diag_sq,
        j_sum=j_sum,
        j_sq_sum=j_sq_sum,
        edge_mass=edge,
    )


def batch_distribution(batch: TrajectoryBatch) -> MomentumDistribution:
    """Normalized accumulated diagonal."""
    prob = batch.diag / batch.diag.sum()
    return MomentumDistribution(p=batch.spec.momentum_values(), prob=prob)


def quantum_current(dist: MomentumDistribution) -> float:
    """Average momentum J = Sum p_i * P_i."""
    return float(np.dot(dist.p, dist.prob))


def batch_current_stderr(batch: TrajectoryBatch) -> float:
    """Standard error of the batch-averaged current across trajectories."""
    if batch.count < 2:
        return 0.0
    var = (batch.j_sq_sum - batch.j_sum**2 / batch.count) / (batch.count - 1)
    return math.sqrt(max(var, 0.0) / batch.count)


def batch_cell_stderr(batch: TrajectoryBatch) -> np.ndarray:
    """Per-cell standard error of the averaged diagonal."""
    if batch.count < 2:
        return np.zeros(batch.spec.dim)
    mean = batch.diag / batch.count
    var = (batch.diag_sq - batch.count * mean**2) / (batch.count - 1)
    return np.sqrt(np.maximum(var, 0.0) / batch.count)


def batch_tv_noise(batch: TrajectoryBatch) -> float:
    """Monte Carlo noise scale for the total-variation distance.

    Half the summed per-cell standard errors: the scale on which the TV
    distance to the true diagonal fluctuates at this trajectory count.
    """
    return 0.5 * float(batch_cell_stderr(batch).sum())
