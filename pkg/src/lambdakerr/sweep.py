"""Time sweeps, distribution snapshots and oracle verification runs."""

from __future__ import annotations

import io
import math
from decimal import Decimal
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import entropic, observables
from .blocks import FockBlock, solve_block
from .config import RunConfig
from .oracle import VerificationReport, verify_block
from .state import SystemState, atomic_density, evolve, norm

COLUMNS = {
    "inversion": ("W",),
    "vn_entropy": ("S_vn",),
    "linear_entropy": ("S_lin",),
    "number_phase": ("E_n", "E_phi"),
    "quadrature": ("E_x", "E_p"),
}
COLUMN_ORDER = ("tau", "W", "S_vn", "S_lin", "E_n", "E_phi", "E_x", "E_p")

# test hook: maps each BlockSolution before verification (sensitivity canary)
SOLUTION_HOOK = None


def format_value(x: float) -> str:
    """Nine significant digits, trailing zeros kept, in fixed (positional) notation."""
    s = format(Decimal(f"{float(x):.8e}"), "f")
    return s[1:] if s.startswith("-") and float(s) == 0.0 else s


def tau_grid(cfg: RunConfig) -> np.ndarray:
    return np.linspace(0.0, cfg.tau_max, cfg.tau_steps)


def header(cfg: RunConfig) -> list[str]:
    selected = {c for m in cfg.measures for c in COLUMNS[m]}
    return [c for c in COLUMN_ORDER if c == "tau" or c in selected]


def measure_state(state: SystemState, cfg: RunConfig) -> dict[str, float]:
    """All selected measures for one state."""
    out = {"tau": state.time}
    m = set(cfg.measures)
    if m & {"inversion", "vn_entropy", "linear_entropy"}:
        rho = atomic_density(state)
        if "inversion" in m:
            out["W"] = observables.inversion(rho)
        if "vn_entropy" in m:
            out["S_vn"] = observables.von_neumann_entropy(observables.atomic_eigenvalues(rho))
        if "linear_entropy" in m:
            out["S_lin"] = observables.linear_entropy(rho)
    if "number_phase" in m:
        r_n, r_phi = entropic.number_phase(state, entropic.PhaseGrid(cfg.phase_points))
        out["E_n"], out["E_phi"] = entropic.number_phase_squeezing(r_n, r_phi)
    if "quadrature" in m:
        dx, dp = entropic.position_momentum(state, cfg.quad_points, cfg.coherent().alpha2)
        out["E_x"], out["E_p"] = entropic.quadrature_squeezing(dx, dp)
    for k, v in out.items():
        if not math.isfinite(v):
            raise FloatingPointError(f"{k} is not finite at tau={state.time}")
    return out


def simulate_rows(cfg: RunConfig, workers: int = 1) -> list[dict[str, float]]:
    eff, spec, trunc = cfg.effective(), cfg.coherent(), cfg.truncation()

    def one(tau):
        return measure_state(evolve(eff, spec, trunc, float(tau)), cfg)

    taus = tau_grid(cfg)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(one, taus))
    else:
        rows = [one(t) for t in taus]
    return sorted(rows, key=lambda r: r["tau"])


def write_csv(rows, columns, fh) -> None:
    fh.write(",".join(columns) + "\n")
    for r in rows:
        fh.write(",".join(format_value(r[c]) for c in columns) + "\n")


def simulate(cfg: RunConfig, fh=None, workers: int = 1) -> str | None:
    """Write the time series CSV to ``fh``, or return it as a string."""
    rows = simulate_rows(cfg, workers)
    buf = fh if fh is not None else io.StringIO()
    write_csv(rows, header(cfg), buf)
    return None if fh is not None else buf.getvalue()


PHASE_MASS_TOL = 1e-6
QUADRATURE_MASS_TOL = 1e-8


def _check_mass(mass: float, state: SystemState, tol: float, kind: str) -> None:
    defect = abs(mass - norm(state))
    if not defect <= tol:
        raise FloatingPointError(f"{kind} distribution mass off by {defect:.3e} (tolerance {tol:g})")


def snapshot_rows(cfg: RunConfig, tau: float, kind: str):
    """Columns and rows of a distribution snapshot at ``tau``."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    state = evolve(cfg.effective(), cfg.coherent(), cfg.truncation(), tau)
    if kind == "phase":
        grid = entropic.PhaseGrid(cfg.phase_points)
        p = entropic.phase_distribution(state, grid)
        _check_mass(p.sum() * grid.weight, state, PHASE_MASS_TOL, kind)
        th = grid.nodes
        t1, t2 = np.meshgrid(th, th, indexing="ij")
        return ("theta1", "theta2", "P"), zip(t1.ravel(), t2.ravel(), p.ravel())
    if kind in ("position", "momentum"):
        grid = entropic.QuadratureGrid.auto(state, cfg.coherent().alpha2, cfg.quad_points, kind)
        p = entropic.quadrature_distribution(state, grid)
        _check_mass(entropic.integrate(p, grid), state, QUADRATURE_MASS_TOL, kind)
        return ("u", "P"), zip(grid.nodes, p)
    raise ValueError(f"unknown snapshot kind {kind!r}")


def snapshot(cfg: RunConfig, tau: float, kind: str, fh=None) -> str | None:
    columns, rows = snapshot_rows(cfg, tau, kind)
    buf = fh if fh is not None else io.StringIO()
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(format_value(x) for x in r) + "\n")
    return None if fh is not None else buf.getvalue()


def verification_blocks(cfg: RunConfig) -> list[FockBlock]:
    """Representative blocks: vacuum, one photon, the mean, two sigma above it, and the cutoff."""
    trunc = cfg.truncation()

    def picks(mean, cap):
        vals = {0, 1, int(mean), int(mean + 2 * math.sqrt(mean)), cap}
        return sorted(v for v in vals if 0 <= v <= cap)

    return [
        FockBlock(i, j)
        for i in picks(cfg.alpha1_sq, trunc.n1_max)
        for j in picks(cfg.alpha2_sq, trunc.n2_max)
    ]


@dataclass
class VerificationRun:
    reports: list[VerificationReport]
    tol: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    @property
    def first_failure(self) -> VerificationReport | None:
        return next((r for r in self.reports if not r.passed), None)


def verify(cfg: RunConfig, tol: float = 1e-8, tau_max: float | None = None) -> VerificationRun:
    """Closed form against RK4 on a set of blocks, over ``[0, tau_max]``."""
    t = np.linspace(0.0, tau_max if tau_max is not None else cfg.tau_max, cfg.tau_steps)
    eff = cfg.effective()
    reports = []
    for b in verification_blocks(cfg):
        sol = solve_block(eff, b)
        if SOLUTION_HOOK is not None:
            sol = SOLUTION_HOOK(sol)
        reports.append(verify_block(eff, b, t, tol, solution=sol))
    return VerificationRun(reports, tol)
