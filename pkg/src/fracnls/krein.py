"""V-matrix entries, Krein index bookkeeping and the stability verdict.

With ``L = diag(L1, L2)`` and kernel generators ``(phi', 0)`` (even) and ``(0, phi)`` (odd),
``V`` is diagonal:

* ``v_odd  = (L1^{-1} phi, phi)``   (odd sector), equal to ``1/2 d/domega ||phi||^2``
* ``v_even = (L2^{-1} phi', phi')`` (even sector)

The Hamiltonian Krein index ``k_r + k_c + k_-`` equals ``n(L) - n(V)`` in each invariant
subspace; ``k_c`` and ``k_-`` are even, so an odd difference forces a real unstable eigenvalue.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field as dc_field, replace
from typing import Mapping

import numpy as np

from .errors import CountInconsistencyError, DomainError
from .grid import PeriodicGrid, derivative, inner_product
from .linops import (
    LinearizedOperator,
    SpectrumReport,
    default_cutoff,
    eig_counts,
    solve_sector,
)
from .wave import DEFAULT_N_MODES, SolverConfig, WaveProfile, newton_solve, solve_wave

SPECTRALLY_UNSTABLE = "spectrally_unstable"
INCONCLUSIVE = "inconclusive"
STABLE_CANDIDATE = "stable_candidate"

DEFAULT_FD_STEP = 1e-3

__all__ = [
    "KreinReport",
    "v_odd",
    "v_even",
    "v_odd_solve",
    "v_even_solve",
    "krein_verdict",
    "dnorm_domega",
    "sector_counts",
    "analyze_wave",
    "SPECTRALLY_UNSTABLE",
    "INCONCLUSIVE",
    "STABLE_CANDIDATE",
]


def v_odd_solve(wave: WaveProfile, cutoff: int | None = None):
    """Solve ``L1 chi = phi`` in the odd sector; returns ``((chi, phi), solution)``."""
    sol = solve_sector(LinearizedOperator("L1", wave, "odd"), wave.field, cutoff)
    return inner_product(sol.solution, wave.field), sol


def v_even_solve(wave: WaveProfile, cutoff: int | None = None):
    """Solve ``L2 beta = phi'`` in the even sector; returns ``((beta, phi'), solution)``."""
    dphi = derivative(wave.field)
    sol = solve_sector(LinearizedOperator("L2", wave, "even"), dphi, cutoff)
    return inner_product(sol.solution, dphi), sol


def v_odd(wave: WaveProfile, cutoff: int | None = None) -> float:
    return v_odd_solve(wave, cutoff)[0]


def v_even(wave: WaveProfile, cutoff: int | None = None) -> float:
    return v_even_solve(wave, cutoff)[0]


def dnorm_domega(
    s: float,
    omega: float,
    h: float = DEFAULT_FD_STEP,
    cfg: SolverConfig | None = None,
    wave: WaveProfile | None = None,
    n_modes: int | None = None,
) -> float:
    """Centered difference ``(||phi(omega+h)||^2 - ||phi(omega-h)||^2) / (4h)``.

    Both endpoint waves are Newton-converged from the wave at ``omega`` (solved here
    unless ``wave`` is given).
    """
    cfg = cfg or SolverConfig()
    if not h > 0:
        raise DomainError("finite-difference step must be positive")
    if not omega - h > 1.0 + h:
        raise DomainError(f"omega - h = {omega - h} too close to the bifurcation point 1")
    if wave is None:
        wave = solve_wave(s, omega, cfg, PeriodicGrid(n_modes or DEFAULT_N_MODES))
    plus = newton_solve(wave.field, omega + h, s, cfg)
    minus = newton_solve(wave.field, omega - h, s, cfg)
    return (plus.norm_sq - minus.norm_sq) / (4.0 * h)


def sector_counts(
    wave: WaveProfile, kernel_tol: float | None = None, cutoff: int | None = None
) -> dict:
    """Spectrum reports keyed by ``(kind, parity)`` for both operators and sectors."""
    return {
        (kind, parity): eig_counts(LinearizedOperator(kind, wave, parity), kernel_tol, cutoff)
        for kind in ("L1", "L2")
        for parity in ("odd", "even")
    }


@dataclass(frozen=True)
class KreinReport:
    s: float
    omega: float
    v_odd: float
    v_even: float
    n_L_odd: int
    n_L_even: int
    n_L_full: int
    n_V_odd: int
    n_V_even: int
    n_V_full: int
    diff_odd: int
    diff_even: int
    diff_full: int
    verdict: str
    dnorm_domega: float | None = None
    operator_counts: dict = dc_field(default_factory=dict)
    diagnostics: dict = dc_field(default_factory=dict)
    provenance: dict = dc_field(default_factory=dict)

    def to_record(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_record(), indent=1, sort_keys=True, default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def krein_verdict(
    wave: WaveProfile,
    counts: Mapping,
    v_odd: float,
    v_even: float,
    dnorm: float | None = None,
    provenance: dict | None = None,
) -> KreinReport:
    """Combine sector counts with the signs of ``V`` into a verdict.

    ``counts`` maps ``(kind, parity)`` to :class:`SpectrumReport` (or plain ``n_neg``
    integers) for ``kind`` in ``L1, L2`` and ``parity`` in ``odd, even``; optional
    ``"full"`` entries are checked for additivity.
    """

    def n_neg(key):
        c = counts[key]
        return c.n_neg if isinstance(c, SpectrumReport) else int(c)

    n_odd = n_neg(("L1", "odd")) + n_neg(("L2", "odd"))
    n_even = n_neg(("L1", "even")) + n_neg(("L2", "even"))
    n_full = n_odd + n_even
    for kind in ("L1", "L2"):
        if (kind, "full") in counts:
            full = n_neg((kind, "full"))
            if full != n_neg((kind, "odd")) + n_neg((kind, "even")):
                raise CountInconsistencyError(
                    f"n({kind}) = {full} differs from the sum of its sector counts"
                )

    nv_odd = int(v_odd < 0)
    nv_even = int(v_even < 0)
    diffs = (n_odd - nv_odd, n_even - nv_even, n_full - nv_odd - nv_even)
    if any(d % 2 for d in diffs):
        verdict = SPECTRALLY_UNSTABLE
    elif diffs[2] == 0:
        verdict = STABLE_CANDIDATE
    else:
        verdict = INCONCLUSIVE

    op_counts = {}
    for (kind, parity), c in counts.items():
        if isinstance(c, SpectrumReport):
            op_counts[f"{kind}_{parity}"] = {"n_neg": c.n_neg, "n_zero": c.n_zero}
    return KreinReport(
        s=wave.s,
        omega=wave.omega,
        v_odd=float(v_odd),
        v_even=float(v_even),
        n_L_odd=n_odd,
        n_L_even=n_even,
        n_L_full=n_full,
        n_V_odd=nv_odd,
        n_V_even=nv_even,
        n_V_full=nv_odd + nv_even,
        diff_odd=diffs[0],
        diff_even=diffs[1],
        diff_full=diffs[2],
        verdict=verdict,
        dnorm_domega=None if dnorm is None else float(dnorm),
        operator_counts=op_counts,
        provenance=dict(provenance or {}),
    )


def analyze_wave(
    wave: WaveProfile,
    cfg: SolverConfig | None = None,
    cutoff: int | None = None,
    kernel_tol: float | None = None,
    fd_step: float | None = DEFAULT_FD_STEP,
) -> KreinReport:
    """Full pipeline on a converged wave: sector spectra, V entries, FD cross-check, verdict.

    ``fd_step=None`` skips the finite-difference derivative.
    """
    cfg = cfg or SolverConfig()
    m_max = default_cutoff(wave.grid) if cutoff is None else cutoff
    counts = sector_counts(wave, kernel_tol, m_max)
    vo, sol_odd = v_odd_solve(wave, m_max)
    ve, sol_even = v_even_solve(wave, m_max)
    dphi = derivative(wave.field)
    dn = None
    if fd_step is not None:
        dn = dnorm_domega(wave.s, wave.omega, fd_step, cfg, wave=wave)

    # V is diagonal: the mixed entries pair an odd with an even function
    cross_scale = math.sqrt(abs(vo * ve)) or 1.0
    diagnostics = {
        "v_cross_chi_dphi": inner_product(sol_odd.solution, dphi) / cross_scale,
        "v_cross_beta_phi": inner_product(sol_even.solution, wave.field) / cross_scale,
        "solve_residual_odd": sol_odd.residual,
        "solve_residual_even": sol_even.residual,
        "rcond_odd": sol_odd.rcond,
        "rcond_even": sol_even.rcond,
        "fd_relative_gap": None if dn is None else abs(vo - dn) / abs(vo),
        "warnings": [w for c in counts.values() for w in c.warnings],
    }
    report = krein_verdict(
        wave,
        counts,
        vo,
        ve,
        dn,
        provenance={
            "n_modes": wave.grid.n_modes,
            "basis_cutoff": m_max,
            "kernel_tol": {f"{k}_{p}": c.kernel_tol for (k, p), c in counts.items()},
            "newton_tol": cfg.newton_tol,
            "gmres_tol": cfg.gmres_tol,
            "fd_step": fd_step,
            "newton_iters": wave.newton_iters,
            "residual_norm": wave.residual_norm,
        },
    )
    return replace(report, diagnostics=diagnostics)
