"""Analysis of sweep artifacts: participation ratios, histograms, cuts, heatmaps.

Everything here is a pure function of its inputs; rerunning on the same
artifact reproduces the same tables bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import MomentumDistribution


def participation_ratio(dist: MomentumDistribution) -> float:
    """eta = (Sum_i P_i^2)^-1 / N, the occupied fraction of momentum cells.

    1/N for a single occupied cell, 1 for the uniform distribution.
    """
    prob = np.asarray(dist.prob, dtype=float)
    if prob.size == 0 or not np.any(prob > 0.0):
        raise ValueError("participation ratio of an all-zero distribution is undefined")
    if np.any(prob < 0.0):
        raise ValueError("distribution has negative mass")
    total = prob.sum()
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"distribution mass {total} is not normalized")
    eta = 1.0 / (prob.size * float(np.dot(prob, prob)))
    return min(eta, 1.0)


def eta_bin_edges(n_bins: int = 50) -> np.ndarray:
    """Uniform bins on [0, 0.5] resolving the low-eta peak, plus one overflow bin to 1."""
    return np.concatenate([np.linspace(0.0, 0.5, n_bins + 1), [1.0]])


@dataclass(frozen=True)
class EtaHistogram:
    edges: np.ndarray
    counts: np.ndarray
    source: str

    def mass_below(self, threshold: float) -> float:
        """Histogram mass in bins entirely below threshold."""
        sel = self.edges[1:] <= threshold
        return float(self.counts[sel].sum())

    def mass_above(self, threshold: float) -> float:
        sel = self.edges[:-1] >= threshold
        return float(self.counts[sel].sum())


def eta_histogram(cells, n_bins: int = 50, source: str = "") -> EtaHistogram:
    """Unit-normalized histogram of per-cell eta over completed cells."""
    etas = np.array([c.eta for c in cells if c.status == "ok" and np.isfinite(c.eta)])
    if etas.size == 0:
        raise ValueError("no completed cells to histogram")
    edges = eta_bin_edges(n_bins)
    counts, _ = np.histogram(np.clip(etas, 0.0, 1.0), bins=edges)
    return EtaHistogram(edges=edges, counts=counts / counts.sum(), source=source)


def eta_vs_current(cells) -> np.ndarray:
    """(J, eta) rows sorted by J, ties broken by (i_k, i_gamma)."""
    rows = [
        (c.J, c.eta, c.i_k, c.i_gamma)
        for c in cells
        if c.status == "ok" and np.isfinite(c.J) and np.isfinite(c.eta)
    ]
    rows.sort(key=lambda r: (r[0], r[2], r[3]))
    return np.array([(j, eta) for j, eta, _, _ in rows]).reshape(-1, 2)


def transversal_cut(artifact, gamma_value: float, atol: float = 1e-9):
    """Fixed-gamma slice: (k values, J series) along one grid row.

    Missing or failed cells appear as NaN. Raises with the available rows
    listed when gamma_value is not on the grid.
    """
    gammas = artifact.grid.gamma_values()
    matches = np.nonzero(np.abs(gammas - gamma_value) <= atol)[0]
    if matches.size == 0:
        rows = ", ".join(f"{g:.6g}" for g in gammas)
        raise ValueError(f"gamma={gamma_value:g} is not a grid row; available rows: {rows}")
    i_g = int(matches[0])
    ks = artifact.grid.k_values()
    series = np.full(ks.size, np.nan)
    for i_k in range(ks.size):
        cell = artifact.cells.get((i_k, i_g))
        if cell is not None and cell.ok:
            series[i_k] = cell.J
    return ks, series


def cut_eta_series(artifact, gamma_value: float, atol: float = 1e-9) -> np.ndarray:
    """eta along a fixed-gamma row (same row lookup as transversal_cut)."""
    gammas = artifact.grid.gamma_values()
    matches = np.nonzero(np.abs(gammas - gamma_value) <= atol)[0]
    if matches.size == 0:
        rows = ", ".join(f"{g:.6g}" for g in gammas)
        raise ValueError(f"gamma={gamma_value:g} is not a grid row; available rows: {rows}")
    i_g = int(matches[0])
    out = np.full(artifact.grid.n_k, np.nan)
    for i_k in range(artifact.grid.n_k):
        cell = artifact.cells.get((i_k, i_g))
        if cell is not None and cell.ok:
            out[i_k] = cell.eta
    return out


# ---------------------------------------------------------------------------
# delimited-text exports

HEATMAP_MAGIC = "qratchet heatmap v1"


def _provenance_lines(artifact) -> list[str]:
    from .sweep import artifact_header_lines

    return [
        line if line.startswith("# ") else f"# {line}"
        for line in artifact_header_lines(artifact.grid, artifact.config)[1:]
    ]


def heatmap_export(artifact, path) -> Path:
    """Write the (k, gamma) -> (J, eta) grid as delimited text.

    Every grid cell gets a row in row-major (gamma outer) order; cells that
    are missing or failed carry the NaN sentinel, never zero.
    """
    if not artifact.cells:
        raise ValueError("artifact has no completed cells to export")
    path = Path(path)
    ks = artifact.grid.k_values()
    gs = artifact.grid.gamma_values()
    lines = [f"# {HEATMAP_MAGIC}"]
    lines += _provenance_lines(artifact)
    lines.append("# missing_value = nan")
    lines.append("# k_axis = " + " ".join(f"{v:.17g}" for v in ks))
    lines.append("# gamma_axis = " + " ".join(f"{v:.17g}" for v in gs))
    lines.append("# columns: i_k i_gamma k gamma J eta")
    for i_g, gamma in enumerate(gs):
        for i_k, k in enumerate(ks):
            cell = artifact.cells.get((i_k, i_g))
            if cell is not None and cell.ok:
                j_val, eta_val = cell.J, cell.eta
            else:
                j_val = eta_val = np.nan
            lines.append(f"{i_k} {i_g} {k:.17g} {gamma:.17g} {j_val:.17g} {eta_val:.17g}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_heatmap(path) -> dict:
    """Parse a heatmap file back into axis vectors and 2-D value grids."""
    path = Path(path)
    k_axis = gamma_axis = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if first != f"# {HEATMAP_MAGIC}":
            raise ValueError(f"{path} is not a heatmap export")
        for raw in fh:
            line = raw.rstrip("\n")
            if line.startswith("# k_axis = "):
                k_axis = np.array([float(v) for v in line.split("=", 1)[1].split()])
            elif line.startswith("# gamma_axis = "):
                gamma_axis = np.array([float(v) for v in line.split("=", 1)[1].split()])
            elif line.startswith("#") or not line:
                continue
            else:
                rows.append(line.split())
    if k_axis is None or gamma_axis is None:
        raise ValueError(f"{path} lacks axis vectors")
    j_grid = np.full((gamma_axis.size, k_axis.size), np.nan)
    eta_grid = np.full((gamma_axis.size, k_axis.size), np.nan)
    for parts in rows:
        i_k, i_g = int(parts[0]), int(parts[1])
        j_grid[i_g, i_k] = float(parts[4])
        eta_grid[i_g, i_k] = float(parts[5])
    return {"k_axis": k_axis, "gamma_axis": gamma_axis, "J": j_grid, "eta": eta_grid}


def write_hist_table(path, edges: np.ndarray, columns: dict[str, np.ndarray], provenance: list[str]) -> Path:
    """Comparative eta histogram table: one mass column per source."""
    path = Path(path)
    tags = list(columns)
    lines = ["# qratchet eta histogram v1"]
    lines += provenance
    lines.append("# columns: bin_lo bin_hi " + " ".join(f"mass_{t}" for t in tags))
    for i in range(edges.size - 1):
        vals = " ".join(f"{columns[t][i]:.17g}" for t in tags)
        lines.append(f"{edges[i]:.17g} {edges[i + 1]:.17g} {vals}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_cut_table(path, k: np.ndarray, columns: dict[str, np.ndarray], gamma_value: float, provenance: list[str]) -> Path:
    """Merged transversal cut: k column plus one J column per source artifact."""
    path = Path(path)
    tags = list(columns)
    lines = ["# qratchet transversal cut v1", f"# gamma = {gamma_value:.17g}"]
    lines += provenance
    lines.append("# columns: k " + " ".join(f"J_{t}" for t in tags))
    for i in range(k.size):
        vals = " ".join(f"{columns[t][i]:.17g}" for t in tags)
        lines.append(f"{k[i]:.17g} {vals}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_eta_vs_j_table(path, rows: np.ndarray, source: str, provenance: list[str]) -> Path:
    path = Path(path)
    lines = ["# qratchet eta vs current v1", f"# source = {source}"]
    lines += provenance
    lines.append("# columns: J eta")
    for j_val, eta_val in rows:
        lines.append(f"{j_val:.17g} {eta_val:.17g}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
