"""(s, omega) sweeps: one continuation chain per s, each cell analyzed end to end."""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field
from functools import partial
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError, FracNLSError
from .grid import PeriodicGrid
from .krein import DEFAULT_FD_STEP, KreinReport, analyze_wave
from .wave import DEFAULT_N_MODES, SolverConfig, continue_in_omega, solve_wave

log = logging.getLogger(__name__)

WORKERS_ENV = "FRACNLS_WORKERS"
COLUMNS = ("omega", "norm_sq", "v_odd", "v_even", "n_L1", "z_L1", "n_L2", "z_L2", "verdict")
FAILED = "failed"


@dataclass
class ChainResult:
    s: float
    rows: list
    reports: list = dc_field(default_factory=list)

    @property
    def failed(self) -> bool:
        return any(r["verdict"] == FAILED for r in self.rows)


def omega_grid(omega_min: float, omega_max: float, step: float) -> np.ndarray:
    """Inclusive, evenly stepped frequencies; rounding keeps the values reproducible."""
    if not step > 0:
        raise DomainError("omega step must be positive")
    if omega_max < omega_min:
        raise DomainError(f"empty omega range [{omega_min}, {omega_max}]")
    if not omega_min > 1.0:
        raise DomainError("omega range must lie above 1")
    n = int(math.floor((omega_max - omega_min) / step + 1e-9))
    return np.round(omega_min + step * np.arange(n + 1), 12)


def _row(report: KreinReport, norm_sq: float) -> dict:
    oc = report.operator_counts
    return {
        "omega": report.omega,
        "norm_sq": norm_sq,
        "v_odd": report.v_odd,
        "v_even": report.v_even,
        "n_L1": oc["L1_odd"]["n_neg"] + oc["L1_even"]["n_neg"],
        "z_L1": oc["L1_odd"]["n_zero"] + oc["L1_even"]["n_zero"],
        "n_L2": oc["L2_odd"]["n_neg"] + oc["L2_even"]["n_neg"],
        "z_L2": oc["L2_odd"]["n_zero"] + oc["L2_even"]["n_zero"],
        "verdict": report.verdict,
    }


def run_chain(
    s: float,
    omegas: Sequence[float],
    cfg: SolverConfig | None = None,
    n_modes: int = DEFAULT_N_MODES,
    cutoff: int | None = None,
    kernel_tol: float | None = None,
    fd_step: float | None = DEFAULT_FD_STEP,
    keep_waves: bool = False,
) -> ChainResult:
    """Continue along increasing ``omegas`` at fixed ``s``; failed cells are marked, not fatal."""
    cfg = cfg or SolverConfig()
    grid = PeriodicGrid(n_modes)
    prev = None
    result = ChainResult(s=float(s), rows=[])
    for omega in omegas:
        omega = float(omega)
        try:
            if prev is None:
                wave = solve_wave(s, omega, cfg, grid)
            else:
                wave = continue_in_omega(s, [omega], cfg, start=prev).final
            report = analyze_wave(wave, cfg, cutoff, kernel_tol, fd_step)
        except FracNLSError as exc:
            log.warning("s=%g omega=%g failed in %s: %s", s, omega, exc.stage, exc)
            row = {c: math.nan for c in COLUMNS}
            row.update(omega=omega, verdict=FAILED, error=f"{exc.stage}: {exc}")
            result.rows.append(row)
            result.reports.append(None)
            continue
        prev = wave
        row = _row(report, wave.norm_sq)
        if keep_waves:
            row["wave"] = wave
        result.rows.append(row)
        result.reports.append(report)
    return result


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def run_sweep(s_list: Sequence[float], omegas: Sequence[float], workers: int | None = None, **kwargs):
    """Run one chain per ``s``; chains run in parallel processes when ``workers > 1``.

    Results come back in ``s_list`` order regardless of scheduling.
    """
    workers = worker_count() if workers is None else workers
    job = partial(_chain_job, omegas=list(omegas), kwargs=kwargs)
    if workers > 1 and len(s_list) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(s_list))) as pool:
            return list(pool.map(job, s_list))
    return [job(s) for s in s_list]


def _chain_job(s, omegas, kwargs):
    return run_chain(s, omegas, **kwargs)


def write_chain_csv(result: ChainResult, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in result.rows:
            w.writerow([_fmt(row[c]) for c in COLUMNS])
    return path


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    return f"{float(v):.17g}"
