"""Command-line front end: point runs, sweeps, resume, and analysis.

Subcommands: point, sweep, resume, analyze. Configuration comes from flags
and/or a key=value config file (flags win); the full effective configuration
and seeds are reproduced in the header of every output file, so any output
can be regenerated from its own header. Exit codes: 0 success, 2 config
error, 3 partial sweep failure, 4 missing data.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    eta_bin_edges,
    eta_histogram,
    eta_vs_current,
    heatmap_export,
    load_heatmap,
    participation_ratio,
    transversal_cut,
    write_cut_table,
    write_eta_vs_j_table,
    write_hist_table,
)
from .classical import classical_current, discretize_momentum, evolve_ensemble, sample_initial
from .model import GridSpec, default_dim, make_params
from .quantum import (
    batch_current_stderr,
    batch_distribution,
    build_space,
    quantum_current,
    run_batch,
)
from .sweep import EngineConfig, artifact_header_lines, load_artifact, resume, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3
EXIT_MISSING = 4

DEFAULTS = {
    "engine": "classical",
    "k": None,
    "gamma": None,
    "k_range": None,
    "gamma_range": None,
    "tau": 0.411,
    "dim": None,
    "trajectories": 200,
    "ensemble": 10000,
    "steps": 10000,
    "periods": 50,
    "seed": 12345,
    "jobs": 1,
    "out": ".",
    "strict_truncation": False,
    "emit_plots": False,
    "a": None,
    "phi": None,
}


def _parse_range(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"range must be MIN:MAX:COUNT, got {text!r}")
    return float(parts[0]), float(parts[1]), int(parts[2])


def _parse_bool(text: str) -> bool:
    val = text.strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"cannot parse boolean from {text!r}")


def read_config_file(path) -> dict[str, str]:
    """Plain key=value lines; '#' comments and blank lines ignored."""
    out = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line is not key=value: {raw!r}")
        key, _, val = line.partition("=")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


_CONVERTERS = {
    "engine": str,
    "k": float,
    "gamma": float,
    "k_range": _parse_range,
    "gamma_range": _parse_range,
    "tau": float,
    "dim": int,
    "trajectories": int,
    "ensemble": int,
    "steps": int,
    "periods": int,
    "seed": int,
    "jobs": int,
    "out": str,
    "strict_truncation": _parse_bool,
    "emit_plots": _parse_bool,
    "a": float,
    "phi": float,
}


@dataclass
class RunConfig:
    """Effective configuration of one invocation, after flag/file merging."""

    command: str
    engine: str
    k: float | None
    gamma: float | None
    k_range: tuple | None
    gamma_range: tuple | None
    tau: float
    dim: int
    trajectories: int
    ensemble: int
    steps: int
    periods: int
    seed: int
    jobs: int
    out: str
    strict_truncation: bool
    emit_plots: bool
    a: float
    phi: float

    def header_lines(self) -> list[str]:
        """Provenance block: everything that influences the produced numbers."""
        lines = [f"# version = {__version__}", f"# command = {self.command}"]
        keys = (
            "engine",
            "k",
            "gamma",
            "k_range",
            "gamma_range",
            "tau",
            "dim",
            "trajectories",
            "ensemble",
            "steps",
            "periods",
            "seed",
            "strict_truncation",
            "a",
            "phi",
        )
        for key in keys:
            val = getattr(self, key)
            if val is None:
                continue
            if isinstance(val, bool):
                val = "true" if val else "false"
            elif isinstance(val, float):
                val = f"{val:.17g}"
            elif isinstance(val, tuple):
                val = f"{val[0]:g}:{val[1]:g}:{val[2]}"
            lines.append(f"# {key} = {val}")
        return lines


def merge_config(args: argparse.Namespace, command: str) -> RunConfig:
    file_cfg = {}
    if getattr(args, "config", None):
        file_cfg = read_config_file(args.config)
    values = {}
    for name, conv in _CONVERTERS.items():
        flag_val = getattr(args, name, None)
        if flag_val is not None:
            values[name] = flag_val
        elif name in file_cfg:
            values[name] = conv(file_cfg[name])
        else:
            values[name] = DEFAULTS[name]
    if values["dim"] is None:
        values["dim"] = default_dim(values["tau"])
    params_probe = make_params(
        kick_K=0.0, gamma=0.5, tau=values["tau"], a=values["a"], phi=values["phi"]
    )
    values["a"] = params_probe.a
    values["phi"] = params_probe.phi
    return RunConfig(command=command, **values)


def _engine_config(cfg: RunConfig) -> EngineConfig:
    return EngineConfig(
        engine=cfg.engine,
        tau=cfg.tau,
        dim=cfg.dim,
        trajectories=cfg.trajectories,
        ensemble=cfg.ensemble,
        steps=cfg.steps,
        periods=cfg.periods,
        a=cfg.a,
        phi=cfg.phi,
        strict_truncation=cfg.strict_truncation,
    )


def _write_lines(path: Path, lines: list[str]):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# subcommands


def cmd_point(cfg: RunConfig) -> int:
    if cfg.k is None or cfg.gamma is None:
        print("point requires --k and --gamma", file=sys.stderr)
        return EXIT_CONFIG
    try:
        params = make_params(cfg.k, cfg.gamma, cfg.tau, cfg.a, cfg.phi)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.out)
    header = [f"# qratchet point run v1"] + cfg.header_lines()
    edge_flag = 0
    try:
        if cfg.engine == "classical":
            ens = sample_initial(cfg.ensemble, cfg.seed)
            ens = evolve_ensemble(ens, params, cfg.steps)
            current = classical_current(ens)
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                dist = discretize_momentum(ens, cfg.dim, cfg.dim * cfg.tau)
            eta = participation_ratio(dist)
            stderr = math.nan
            edge_flag = int(dist.edge_spill > 1e-3)
            cloud = [*header, "# columns: x_mod_2pi p"]
            cloud += [
                f"{x % (2 * math.pi):.17g} {p:.17g}" for x, p in zip(ens.x, ens.p)
            ]
            _write_lines(out / "point_cloud.txt", cloud)
            index = np.arange(dist.p.size)
        else:
            space = build_space(cfg.dim, cfg.tau)
            batch = run_batch(params, space, cfg.periods, cfg.trajectories, cfg.seed)
            dist = batch_distribution(batch)
            current = quantum_current(dist)
            eta = participation_ratio(dist)
            stderr = batch_current_stderr(batch)
            edge_flag = int(batch.truncation_suspect)
            index = space.n
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG

    summary = [*header]
    summary.append(f"J = {current:.17g}")
    summary.append(f"eta = {eta:.17g}")
    summary.append(f"stderr_J = {stderr:.17g}")
    summary.append(f"edge_mass_flag = {edge_flag}")
    _write_lines(out / "point_summary.txt", summary)

    dump = [*header, "# columns: n p P"]
    dump += [f"{i} {p:.17g} {q:.17g}" for i, p, q in zip(index, dist.p, dist.prob)]
    _write_lines(out / "point_distribution.txt", dump)

    if cfg.emit_plots:
        from .plots import plot_distribution

        plot_distribution(
            dist.p, dist.prob, out / "point_distribution.png",
            title=f"{cfg.engine}: k={cfg.k:g}, gamma={cfg.gamma:g}",
        )
    print(f"J = {current:.6g}  eta = {eta:.6g}  (written to {out})")
    if cfg.strict_truncation and edge_flag:
        print("truncation-suspect: edge mass exceeded threshold", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _artifact_path(cfg: RunConfig) -> Path:
    if cfg.engine == "classical":
        name = "sweep_classical.txt"
    else:
        name = f"sweep_quantum_tau{cfg.tau:g}.txt"
    return Path(cfg.out) / name


def cmd_sweep(cfg: RunConfig) -> int:
    if cfg.k_range is None or cfg.gamma_range is None:
        print("sweep requires --k-range and --gamma-range", file=sys.stderr)
        return EXIT_CONFIG
    try:
        grid = GridSpec(
            k_min=cfg.k_range[0],
            k_max=cfg.k_range[1],
            n_k=cfg.k_range[2],
            gamma_min=cfg.gamma_range[0],
            gamma_max=cfg.gamma_range[1],
            n_gamma=cfg.gamma_range[2],
            master_seed=cfg.seed,
        )
        config = _engine_config(cfg)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    path = _artifact_path(cfg)
    try:
        art = run_sweep(grid, config, path, jobs=cfg.jobs, progress=True)
    except FileExistsError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    print(f"sweep artifact: {path} ({len(art.cells)} cells, {art.n_failed} failed)")
    if cfg.emit_plots:
        data_path = heatmap_export(art, Path(cfg.out) / f"heatmap_{art.tag()}.txt")
        grid_data = load_heatmap(data_path)
        from .plots import plot_heatmap

        plot_heatmap(
            grid_data["k_axis"], grid_data["gamma_axis"], grid_data["J"], grid_data["eta"],
            Path(cfg.out) / f"heatmap_{art.tag()}.png", title=art.tag(),
        )
    return EXIT_PARTIAL if art.n_failed else EXIT_OK


def cmd_resume(args: argparse.Namespace) -> int:
    path = Path(args.artifact)
    if not path.exists():
        print(f"artifact not found: {path}", file=sys.stderr)
        return EXIT_MISSING
    jobs = args.jobs if args.jobs is not None else 1
    try:
        art = resume(path, jobs=jobs, progress=True)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    print(f"resumed artifact: {path} ({len(art.cells)} cells, {art.n_failed} failed)")
    return EXIT_PARTIAL if art.n_failed else EXIT_OK


def _source_lines(artifacts: dict) -> list[str]:
    lines = []
    for tag, art in artifacts.items():
        for line in artifact_header_lines(art.grid, art.config)[1:]:
            lines.append(f"# {tag}.{line[2:]}")
    return lines


def _load_artifacts(paths) -> dict:
    arts = {}
    for p in paths:
        art = load_artifact(p)
        tag = art.tag()
        suffix = 2
        while tag in arts:
            tag = f"{art.tag()}_{suffix}"
            suffix += 1
        arts[tag] = art
    return arts


def cmd_analyze(args: argparse.Namespace) -> int:
    out = Path(args.out if args.out is not None else DEFAULTS["out"])
    out.mkdir(parents=True, exist_ok=True)
    emit_plots = bool(args.emit_plots)
    try:
        arts = _load_artifacts(args.artifacts)
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_MISSING
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    provenance = _source_lines(arts)

    if args.mode == "heatmap":
        for tag, art in arts.items():
            data_path = heatmap_export(art, out / f"heatmap_{tag}.txt")
            print(f"wrote {data_path}")
            if emit_plots:
                grid_data = load_heatmap(data_path)
                from .plots import plot_heatmap

                plot_heatmap(
                    grid_data["k_axis"], grid_data["gamma_axis"], grid_data["J"],
                    grid_data["eta"], out / f"heatmap_{tag}.png", title=tag,
                )
        return EXIT_OK

    if args.mode == "hist":
        edges = eta_bin_edges()
        columns = {}
        for tag, art in arts.items():
            columns[tag] = eta_histogram(art.cells.values(), source=tag).counts
        path = write_hist_table(out / "eta_hist.txt", edges, columns, provenance)
        print(f"wrote {path}")
        if emit_plots:
            from .plots import plot_eta_hist

            plot_eta_hist(edges, columns, out / "eta_hist.png")
        return EXIT_OK

    if args.mode == "cut":
        if args.gamma is None:
            print("cut mode requires --gamma", file=sys.stderr)
            return EXIT_CONFIG
        k_ref = None
        columns = {}
        for tag, art in arts.items():
            try:
                k, series = transversal_cut(art, args.gamma)
            except ValueError as exc:
                print(str(exc), file=sys.stderr)
                return EXIT_MISSING
            if k_ref is None:
                k_ref = k
            elif k.size != k_ref.size or not np.array_equal(k, k_ref):
                print("artifacts have different k grids; cut cannot be merged", file=sys.stderr)
                return EXIT_CONFIG
            columns[tag] = series
        path = write_cut_table(out / f"cut_gamma{args.gamma:g}.txt", k_ref, columns, args.gamma, provenance)
        print(f"wrote {path}")
        if emit_plots:
            from .plots import plot_cut

            plot_cut(k_ref, columns, args.gamma, out / f"cut_gamma{args.gamma:g}.png")
        return EXIT_OK

    if args.mode == "eta-vs-j":
        tables = {}
        for tag, art in arts.items():
            rows = eta_vs_current(art.cells.values())
            tables[tag] = rows
            path = write_eta_vs_j_table(out / f"eta_vs_J_{tag}.txt", rows, tag, provenance)
            print(f"wrote {path}")
        if emit_plots:
            from .plots import plot_eta_vs_j

            plot_eta_vs_j(tables, out / "eta_vs_J.png")
        return EXIT_OK

    print(f"unknown analyze mode {args.mode!r}", file=sys.stderr)
    return EXIT_CONFIG


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument("--config", metavar="PATH", help="key=value config file; flags override it")
    sub.add_argument("--engine", choices=("classical", "quantum"), default=None,
                     help=f"simulation engine (default {DEFAULTS['engine']})")
    sub.add_argument("--k", type=float, default=None, help="kick amplitude K for point runs")
    sub.add_argument("--gamma", type=float, default=None, help="dissipation for point runs")
    sub.add_argument("--k-range", type=_parse_range, default=None, metavar="MIN:MAX:COUNT",
                     help="k axis of a sweep grid")
    sub.add_argument("--gamma-range", type=_parse_range, default=None, metavar="MIN:MAX:COUNT",
                     help="gamma axis of a sweep grid")
    sub.add_argument("--tau", type=float, default=None,
                     help=f"effective Planck constant (default {DEFAULTS['tau']})")
    sub.add_argument("--dim", type=int, default=None, metavar="N",
                     help="basis dimension / classical bin count (default: odd N with N*tau ~ 100)")
    sub.add_argument("--trajectories", type=int, default=None,
                     help=f"quantum trajectories per cell (default {DEFAULTS['trajectories']})")
    sub.add_argument("--ensemble", type=int, default=None,
                     help=f"classical initial conditions per cell (default {DEFAULTS['ensemble']})")
    sub.add_argument("--steps", type=int, default=None,
                     help=f"classical map steps (default {DEFAULTS['steps']})")
    sub.add_argument("--periods", type=int, default=None,
                     help=f"quantum kick periods (default {DEFAULTS['periods']})")
    sub.add_argument("--seed", type=int, default=None,
                     help=f"master seed (default {DEFAULTS['seed']})")
    sub.add_argument("--jobs", type=int, default=None,
                     help=f"parallel workers for sweeps (default {DEFAULTS['jobs']})")
    sub.add_argument("--out", metavar="DIR", default=None,
                     help=f"output directory (default {DEFAULTS['out']!r})")
    sub.add_argument("--strict-truncation", action="store_true", default=None,
                     help="escalate truncation-suspect cells to failures")
    sub.add_argument("--emit-plots", action="store_true", default=None,
                     help="render matplotlib figures next to the data files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qratchet",
        description="Dissipative biharmonic kicked-rotor ratchet: point runs, parameter sweeps, analysis.",
    )
    parser.add_argument("--version", action="version", version=f"qratchet {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p_point = subs.add_parser("point", help="run a single (k, gamma) cell and dump its distribution")
    _add_common(p_point)

    p_sweep = subs.add_parser("sweep", help="run a (k, gamma) grid into a checkpointed artifact")
    _add_common(p_sweep)

    p_resume = subs.add_parser("resume", help="complete an interrupted sweep artifact")
    p_resume.add_argument("artifact", help="path to the sweep artifact")
    p_resume.add_argument("--jobs", type=int, default=None)
    p_resume.add_argument("--config", metavar="PATH", help=argparse.SUPPRESS)

    p_an = subs.add_parser("analyze", help="derive tables (and plots) from sweep artifacts")
    p_an.add_argument("mode", choices=("heatmap", "hist", "cut", "eta-vs-j"))
    p_an.add_argument("artifacts", nargs="+", help="sweep artifact paths")
    p_an.add_argument("--gamma", type=float, default=None, help="row for cut mode")
    p_an.add_argument("--out", metavar="DIR", default=None)
    p_an.add_argument("--emit-plots", action="store_true", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "point":
            return cmd_point(merge_config(args, "point"))
        if args.command == "sweep":
            return cmd_sweep(merge_config(args, "sweep"))
        if args.command == "resume":
            return cmd_resume(args)
        if args.command == "analyze":
            return cmd_analyze(args)
    except (ValueError, OSError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
