"""Grid planning, deterministic execution, checkpointing and resume.

An artifact on disk is a '#'-prefixed key=value header followed by one
whitespace-delimited record per completed cell. Records are appended as
cells finish (checkpoint granularity = one cell) and the file is rewritten
in canonical (i_gamma, i_k) order once the grid is complete, so finished
artifacts are byte-identical for any worker count, excluding the wall-time
column. Resume derives the completion set by scanning records.
"""

from __future__ import annotations

import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .analysis import participation_ratio
from .classical import classical_current, discretize_momentum, evolve_ensemble, sample_initial
from .model import GridSpec, ModelParams
from .quantum import (
    batch_current_stderr,
    batch_distribution,
    build_space,
    quantum_current,
    run_batch,
)

ARTIFACT_MAGIC = "qratchet sweep artifact v1"
COLUMNS = "i_k i_gamma k gamma J eta stderr_J edge_mass_flag status wall_time_s"

_MASK64 = (1 << 64) - 1
# splitmix64 constants
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

ENGINE_TAGS = {"classical": 0xC1A55, "quantum": 0x9BA27}


def _mix64(z: int) -> int:
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def cell_seed(master_seed: int, i_k: int, i_gamma: int, engine: str) -> int:
    """Stable 64-bit per-cell seed; order-sensitive in all inputs."""
    h = _mix64(master_seed & _MASK64)
    h = _mix64(h ^ (i_k & _MASK64))
    h = _mix64(h ^ (i_gamma & _MASK64))
    h = _mix64(h ^ ENGINE_TAGS[engine])
    return h


@dataclass(frozen=True)
class EngineConfig:
    """Everything beyond the grid needed to recompute a cell bit-identically."""

    engine: str
    tau: float
    dim: int
    trajectories: int
    ensemble: int
    steps: int
    periods: int
    a: float
    phi: float
    strict_truncation: bool = False

    def __post_init__(self):
        if self.engine not in ENGINE_TAGS:
            raise ValueError(f"engine must be one of {sorted(ENGINE_TAGS)}, got {self.engine!r}")


@dataclass(frozen=True)
class CellTask:
    i_k: int
    i_gamma: int
    k: float
    gamma: float
    seed: int
    config: EngineConfig


@dataclass(frozen=True)
class CellResult:
    i_k: int
    i_gamma: int
    k: float
    gamma: float
    J: float
    eta: float
    stderr_J: float
    edge_flag: int
    status: str
    wall_time_s: float

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def plan_grid(grid: GridSpec, config: EngineConfig) -> list[CellTask]:
    """All cell tasks in canonical (i_gamma, i_k) order with derived seeds."""
    ks = grid.k_values()
    gs = grid.gamma_values()
    tasks = []
    for i_g, gamma in enumerate(gs):
        for i_k, k in enumerate(ks):
            tasks.append(
                CellTask(
                    i_k=i_k,
                    i_gamma=i_g,
                    k=float(k),
                    gamma=float(gamma),
                    seed=cell_seed(grid.master_seed, i_k, i_g, config.engine),
                    config=config,
                )
            )
    return tasks


def _classical_cell(task: CellTask) -> tuple[float, float, float, int]:
    cfg = task.config
    params = ModelParams(kick_K=task.k, gamma=task.gamma, tau=cfg.tau, a=cfg.a, phi=cfg.phi)
    ens = sample_initial(cfg.ensemble, task.seed)
    ens = evolve_ensemble(ens, params, cfg.steps)
    current = classical_current(ens)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        dist = discretize_momentum(ens, cfg.dim, cfg.dim * cfg.tau)
    eta = participation_ratio(dist)
    edge = int(dist.edge_spill > 1e-3)
    return current, eta, math.nan, edge


def _quantum_cell(task: CellTask) -> tuple[float, float, float, int]:
    cfg = task.config
    params = ModelParams(kick_K=task.k, gamma=task.gamma, tau=cfg.tau, a=cfg.a, phi=cfg.phi)
    space = build_space(cfg.dim, cfg.tau)
    batch = run_batch(params, space, cfg.periods, cfg.trajectories, task.seed)
    dist = batch_distribution(batch)
    current = quantum_current(dist)
    eta = participation_ratio(dist)
    stderr = batch_current_stderr(batch)
    edge = int(batch.truncation_suspect)
    return current, eta, stderr, edge


def run_cell(task: CellTask) -> CellResult:
    """Compute one grid cell; failures become status='error' records."""
    t0 = time.perf_counter()
    try:
        if task.config.engine == "classical":
            current, eta, stderr, edge = _classical_cell(task)
        else:
            current, eta, stderr, edge = _quantum_cell(task)
        status = "ok"
        if task.config.strict_truncation and edge:
            status = "error"
    except Exception:
        current = eta = stderr = math.nan
        edge = 0
        status = "error"
    return CellResult(
        i_k=task.i_k,
        i_gamma=task.i_gamma,
        k=task.k,
        gamma=task.gamma,
        J=current,
        eta=eta,
        stderr_J=stderr,
        edge_flag=edge,
        status=status,
        wall_time_s=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# artifact file format

_GRID_KEYS = ("k_min", "k_max", "n_k", "gamma_min", "gamma_max", "n_gamma", "master_seed")
_CONFIG_KEYS = (
    "engine",
    "tau",
    "dim",
    "trajectories",
    "ensemble",
    "steps",
    "periods",
    "a",
    "phi",
    "strict_truncation",
)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def artifact_header_lines(grid: GridSpec, config: EngineConfig) -> list[str]:
    lines = [f"# {ARTIFACT_MAGIC}", f"# version = {__version__}"]
    for key in _GRID_KEYS:
        lines.append(f"# {key} = {_fmt(getattr(grid, key))}")
    for key in _CONFIG_KEYS:
        lines.append(f"# {key} = {_fmt(getattr(config, key))}")
    lines.append(f"# columns: {COLUMNS}")
    return lines


def format_record(r: CellResult) -> str:
    return (
        f"{r.i_k} {r.i_gamma} {r.k:.17g} {r.gamma:.17g} {r.J:.17g} {r.eta:.17g} "
        f"{r.stderr_J:.17g} {r.edge_flag} {r.status} {r.wall_time_s:.3f}"
    )


def parse_record(line: str) -> CellResult:
    parts = line.split()
    if len(parts) != 10:
        raise ValueError(f"malformed record: {line!r}")
    return CellResult(
        i_k=int(parts[0]),
        i_gamma=int(parts[1]),
        k=float(parts[2]),
        gamma=float(parts[3]),
        J=float(parts[4]),
        eta=float(parts[5]),
        stderr_J=float(parts[6]),
        edge_flag=int(parts[7]),
        status=parts[8],
        wall_time_s=float(parts[9]),
    )


@dataclass
class SweepArtifact:
    """In-memory view of an artifact file."""

    grid: GridSpec
    config: EngineConfig
    cells: dict[tuple[int, int], CellResult]
    path: Path

    @property
    def completed(self) -> set[tuple[int, int]]:
        return set(self.cells)

    @property
    def is_complete(self) -> bool:
        return len(self.cells) == self.grid.n_k * self.grid.n_gamma

    @property
    def n_failed(self) -> int:
        return sum(1 for r in self.cells.values() if not r.ok)

    def tag(self) -> str:
        if self.config.engine == "classical":
            return "classical"
        return f"quantum_tau{self.config.tau:g}"


def _parse_header(lines: list[str], path: Path) -> tuple[GridSpec, EngineConfig]:
    kv = {}
    for line in lines:
        body = line[1:].strip()
        if "=" in body:
            key, _, val = body.partition("=")
            kv[key.strip()] = val.strip()
    try:
        grid = GridSpec(
            k_min=float(kv["k_min"]),
            k_max=float(kv["k_max"]),
            n_k=int(kv["n_k"]),
            gamma_min=float(kv["gamma_min"]),
            gamma_max=float(kv["gamma_max"]),
            n_gamma=int(kv["n_gamma"]),
            master_seed=int(kv["master_seed"]),
        )
        config = EngineConfig(
            engine=kv["engine"],
            tau=float(kv["tau"]),
            dim=int(kv["dim"]),
            trajectories=int(kv["trajectories"]),
            ensemble=int(kv["ensemble"]),
            steps=int(kv["steps"]),
            periods=int(kv["periods"]),
            a=float(kv["a"]),
            phi=float(kv["phi"]),
            strict_truncation=kv["strict_truncation"] == "true",
        )
    except KeyError as exc:
        raise ValueError(f"artifact {path} header lacks key {exc}") from exc
    return grid, config


def load_artifact(path) -> SweepArtifact:
    """Parse an artifact, validating every record against its own header."""
    path = Path(path)
    header_lines = []
    records = []
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if first != f"# {ARTIFACT_MAGIC}":
            raise ValueError(f"{path} is not a sweep artifact (bad magic line)")
        header_lines.append(first)
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                header_lines.append(line)
            else:
                records.append(parse_record(line))
    grid, config = _parse_header(header_lines, path)
    ks = grid.k_values()
    gs = grid.gamma_values()
    cells = {}
    for rec in records:
        if not (0 <= rec.i_k < grid.n_k and 0 <= rec.i_gamma < grid.n_gamma):
            raise ValueError(f"record indices ({rec.i_k}, {rec.i_gamma}) outside the header grid")
        if rec.k != ks[rec.i_k] or rec.gamma != gs[rec.i_gamma]:
            raise ValueError(
                f"record at ({rec.i_k}, {rec.i_gamma}) does not match the header grid "
                "(artifact edited or mixed?)"
            )
        cells[(rec.i_k, rec.i_gamma)] = rec
    return SweepArtifact(grid=grid, config=config, cells=cells, path=path)


def write_new_artifact(path, grid: GridSpec, config: EngineConfig):
    path = Path(path)
    if path.exists():
        raise FileExistsError(f"{path} already exists; resume it or remove it first")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(artifact_header_lines(grid, config)) + "\n")
        fh.flush()
        os.fsync(fh.fileno())


def append_record(path, result: CellResult):
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(format_record(result) + "\n")
        fh.flush()
        os.fsync(fh.fileno())


def _canonicalize(art: SweepArtifact):
    """Rewrite the file with records sorted by (i_gamma, i_k)."""
    tmp = art.path.with_suffix(art.path.suffix + ".tmp")
    keys = sorted(art.cells, key=lambda ij: (ij[1], ij[0]))
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("\n".join(artifact_header_lines(art.grid, art.config)) + "\n")
        for key in keys:
            fh.write(format_record(art.cells[key]) + "\n")
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, art.path)


# ---------------------------------------------------------------------------
# execution


def _print_progress(done: int, total: int, started: float):
    elapsed = time.perf_counter() - started
    eta = elapsed / done * (total - done) if done else float("inf")
    print(f"[{done}/{total}] cells done, elapsed {elapsed:.1f}s, ETA {eta:.1f}s", file=sys.stderr)


def _execute(tasks, path, jobs, total_cells, done_already, stop_after=None, progress=False):
    """Run tasks, appending a record per completion. Returns records written."""
    if stop_after is not None:
        tasks = tasks[:stop_after]
    started = time.perf_counter()
    done = done_already
    written = []
    if jobs <= 1 or len(tasks) <= 1:
        for task in tasks:
            res = run_cell(task)
            append_record(path, res)
            written.append(res)
            done += 1
            if progress:
                _print_progress(done, total_cells, started)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(run_cell, t): t for t in tasks}
            for fut in as_completed(futures):
                res = fut.result()
                append_record(path, res)
                written.append(res)
                done += 1
                if progress:
                    _print_progress(done, total_cells, started)
    return written


def run_sweep(
    grid: GridSpec,
    config: EngineConfig,
    path,
    jobs: int = 1,
    stop_after: int | None = None,
    progress: bool = False,
) -> SweepArtifact:
    """Execute a fresh sweep, checkpointing after every completed cell.

    The finished artifact is a pure function of (grid, config): worker count
    and completion order only influence the wall-time column. stop_after
    ends the run after that many cells (used to exercise resume).
    """
    path = Path(path)
    tasks = plan_grid(grid, config)
    write_new_artifact(path, grid, config)
    _execute(tasks, path, jobs, len(tasks), 0, stop_after=stop_after, progress=progress)
    art = load_artifact(path)
    if art.is_complete:
        _canonicalize(art)
    return load_artifact(path)


def resume(path, jobs: int = 1, stop_after: int | None = None, progress: bool = False) -> SweepArtifact:
    """Complete an interrupted sweep; already-recorded cells are never redone."""
    art = load_artifact(path)
    tasks = [t for t in plan_grid(art.grid, art.config) if (t.i_k, t.i_gamma) not in art.cells]
    if tasks:
        _execute(
            tasks,
            path,
            jobs,
            art.grid.n_k * art.grid.n_gamma,
            len(art.cells),
            stop_after=stop_after,
            progress=progress,
        )
        art = load_artifact(path)
    if art.is_complete:
        _canonicalize(art)
    return load_artifact(path)
