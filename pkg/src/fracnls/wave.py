"""Odd two-lobe standing waves of ``(-Delta)^s phi - omega phi + phi^3 = 0``.

Newton's method on the grid values, with every Jacobian solve done matrix-free by
preconditioned GMRES inside the odd subspace. The full Jacobian ``L1`` has ``phi'``
(an even function) in its kernel, so the restriction is what makes each step well posed.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import fft as sfft
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import (
    ContinuationError,
    ConvergenceError,
    DomainError,
    ShapeError,
    TrivialSolutionError,
)
from .grid import PeriodicGrid, RealField, check_exponent, derivative, inner_product

log = logging.getLogger(__name__)

DEFAULT_N_MODES = 4096
# normalized overlap below which a continuation step counts as a branch jump
BRANCH_OVERLAP_MIN = 0.9

__all__ = [
    "DEFAULT_N_MODES",
    "SolverConfig",
    "WaveProfile",
    "ContinuationRun",
    "LobeCertificate",
    "check_wave_exponent",
    "stokes_seed",
    "stokes_amplitude",
    "residual",
    "newton_solve",
    "continue_in_omega",
    "omega_path",
    "solve_wave",
    "lobe_check",
]


@dataclass(frozen=True)
class SolverConfig:
    """Newton-Krylov settings. ``newton_tol`` bounds the max-norm of the residual."""

    newton_tol: float = 1e-6
    max_newton_iters: int = 50
    gmres_tol: float = 1e-8
    gmres_restart: int = 60
    gmres_maxiter: int = 20
    dealias: bool = False
    seed_trust_omega: float = 1.2
    omega_step: float = 0.25
    max_halvings: int = 6
    zero_threshold: float = 1e-8

    def __post_init__(self):
        for name in ("newton_tol", "gmres_tol", "omega_step", "zero_threshold"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        for name in ("max_newton_iters", "gmres_restart", "gmres_maxiter"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be >= 1")
        if self.max_halvings < 0:
            raise DomainError("max_halvings must be >= 0")
        if not self.seed_trust_omega > 1.0:
            raise DomainError("seed_trust_omega must exceed 1")


@dataclass(frozen=True, eq=False)
class WaveProfile:
    field: RealField
    s: float
    omega: float
    residual_norm: float
    newton_iters: int
    parity: str = "odd"
    residual_history: tuple = dc_field(default=(), repr=False)

    @property
    def grid(self) -> PeriodicGrid:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    @property
    def norm_sq(self) -> float:
        return inner_product(self.field, self.field)

    def to_record(self) -> dict:
        return {
            "s": self.s,
            "omega": self.omega,
            "n_modes": self.grid.n_modes,
            "residual_norm": self.residual_norm,
            "newton_iters": self.newton_iters,
            "values": [float(v) for v in self.values],
        }

    @classmethod
    def from_record(cls, record: dict) -> "WaveProfile":
        grid = PeriodicGrid(int(record["n_modes"]))
        return cls(
            field=RealField(grid, np.asarray(record["values"], dtype=float)),
            s=float(record["s"]),
            omega=float(record["omega"]),
            residual_norm=float(record["residual_norm"]),
            newton_iters=int(record.get("newton_iters", 0)),
        )

    def write_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_record(), indent=1) + "\n")
        return path

    def write_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "phi"])
            for x, v in zip(self.grid.points, self.values):
                w.writerow([f"{x:.17g}", f"{v:.17g}"])
        return path


@dataclass(frozen=True, eq=False)
class ContinuationRun:
    s: float
    omegas: np.ndarray
    profiles: tuple
    norms: np.ndarray

    @property
    def norms_increasing(self) -> bool:
        return bool(np.all(np.diff(self.norms) > 0))

    @property
    def final(self) -> WaveProfile:
        return self.profiles[-1]


def check_wave_exponent(s: float) -> float:
    s = check_exponent(s)
    if s <= 0.25:
        raise DomainError(f"s={s!r}: odd waves are only constructed for s in (1/4, 1]")
    return s


def _check_omega(omega: float) -> float:
    omega = float(omega)
    if not omega > 1.0:
        raise DomainError(
            f"omega={omega!r}: for omega <= 1 only the zero solution exists"
        )
    return omega


def stokes_amplitude(omega: float) -> float:
    """Invert ``omega = 1 + 3 a^2 / 4``."""
    return math.sqrt(4.0 * (_check_omega(omega) - 1.0) / 3.0)


def stokes_seed(omega: float, s: float, grid: PeriodicGrid) -> RealField:
    """Two-term small-amplitude wave ``a sin x + a^3 sin 3x / (4 (3^{2s} - 1))``."""
    s = check_wave_exponent(s)
    a = stokes_amplitude(omega)
    c3 = a**3 / (4.0 * (3.0 ** (2.0 * s) - 1.0))
    x = grid.points
    return RealField(grid, a * np.sin(x) + c3 * np.sin(3.0 * x))


def _cube(values: np.ndarray, grid: PeriodicGrid, dealias: bool) -> np.ndarray:
    if not dealias:
        return values**3
    n = grid.n_modes
    r = sfft.rfft(values)
    r[-1] = 0.0
    padded = np.zeros(n + 1, dtype=complex)
    padded[: n // 2 + 1] = r
    fine = sfft.irfft(padded, n=2 * n) * 2.0
    r3 = sfft.rfft(fine**3)[: n // 2 + 1] / 2.0
    r3[-1] = 0.0
    return sfft.irfft(r3, n=n)


def _odd(values: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    return 0.5 * (values - values[grid.reflection])


def _residual_values(values, grid, symbol, omega, dealias=False) -> np.ndarray:
    return grid.apply_symbol(values, symbol) - omega * values + _cube(values, grid, dealias)


def residual(phi: RealField, omega: float, s: float, dealias: bool = False) -> RealField:
    """Physical-space residual ``(-Delta)^s phi - omega phi + phi^3``."""
    grid = phi.grid
    return RealField(grid, _residual_values(phi.values, grid, grid.frac_symbol(s), omega, dealias))


def newton_solve(
    seed: RealField, omega: float, s: float, cfg: SolverConfig | None = None
) -> WaveProfile:
    """Newton-GMRES solve for the odd wave at ``(s, omega)`` starting from ``seed``.

    Raises :class:`TrivialSolutionError` if an iterate falls below
    ``cfg.zero_threshold`` in max-norm and :class:`ConvergenceError` if the residual
    has not dropped below ``cfg.newton_tol`` after ``cfg.max_newton_iters`` steps.
    """
    cfg = cfg or SolverConfig()
    s = check_wave_exponent(s)
    omega = float(omega)
    grid = seed.grid
    n = grid.n_modes
    symbol = grid.frac_symbol(s)
    shifted = symbol - omega
    precond_symbol = 1.0 / (symbol + 1.0 + omega)
    phi = _odd(np.array(seed.values, dtype=float), grid)
    history = []

    precond = LinearOperator(
        (n, n), matvec=lambda v: grid.apply_symbol(np.ravel(v), precond_symbol), dtype=float
    )

    for it in range(cfg.max_newton_iters + 1):
        amp = float(np.max(np.abs(phi)))
        if not np.isfinite(amp):
            raise ConvergenceError(f"Newton diverged at iteration {it}", history)
        if amp < cfg.zero_threshold:
            raise TrivialSolutionError(
                f"iteration collapsed to the zero solution (max|phi|={amp:.3g}) "
                f"at omega={omega}",
                history,
            )
        res = _odd(_residual_values(phi, grid, symbol, omega, cfg.dealias), grid)
        rnorm = float(np.max(np.abs(res)))
        history.append(rnorm)
        if rnorm <= cfg.newton_tol:
            return WaveProfile(
                field=RealField(grid, phi),
                s=s,
                omega=omega,
                residual_norm=rnorm,
                newton_iters=it,
                residual_history=tuple(history),
            )
        if it == cfg.max_newton_iters:
            break
        potential = 3.0 * phi**2

        def jac(v, potential=potential):
            v = np.ravel(v)
            return _odd(grid.apply_symbol(v, shifted) + potential * v, grid)

        jac_op = LinearOperator((n, n), matvec=jac, dtype=float)
        delta, info = gmres(
            jac_op,
            res,
            rtol=cfg.gmres_tol,
            atol=0.0,
            restart=cfg.gmres_restart,
            maxiter=cfg.gmres_maxiter,
            M=precond,
        )
        if info < 0:
            raise ConvergenceError(f"GMRES breakdown (info={info})", history)
        phi = _odd(phi - delta, grid)

    raise ConvergenceError(
        f"Newton did not converge in {cfg.max_newton_iters} iterations at "
        f"s={s}, omega={omega}; last residual {history[-1]:.3e}",
        history,
    )


def continue_in_omega(
    s: float,
    omega_targets: Sequence[float],
    cfg: SolverConfig | None = None,
    grid: PeriodicGrid | None = None,
    start: WaveProfile | None = None,
) -> ContinuationRun:
    """Follow the odd branch through increasing ``omega_targets``.

    The first solve is seeded by :func:`stokes_seed` (or by ``start``); later solves
    reuse the previous converged profile. A failed step is split in half, recursively,
    up to ``cfg.max_halvings`` times.
    """
    cfg = cfg or SolverConfig()
    s = check_wave_exponent(s)
    targets = np.asarray(omega_targets, dtype=float)
    if targets.ndim != 1 or targets.size == 0:
        raise DomainError("omega_targets must be a non-empty 1-d sequence")
    if np.any(np.diff(targets) <= 0):
        raise DomainError("omega_targets must be strictly increasing")
    if start is not None:
        grid = start.grid
    grid = grid or PeriodicGrid(DEFAULT_N_MODES)

    if start is None:
        first = float(targets[0])
        _check_omega(first)
        if first > cfg.seed_trust_omega:
            raise DomainError(
                f"first target omega={first} lies outside the seed trust region "
                f"(omega <= {cfg.seed_trust_omega})"
            )
        try:
            prev = newton_solve(stokes_seed(first, s, grid), first, s, cfg)
        except ConvergenceError as exc:
            raise ContinuationError(
                f"continuation failed at omega={first}: {exc}", first, exc.residual_history
            ) from exc
        profiles = [prev]
        rest = targets[1:]
    else:
        prev = start
        profiles = []
        rest = targets

    for target in rest:
        prev = _advance(prev, float(target), s, cfg, depth=0)
        profiles.append(prev)

    norms = np.array([p.norm_sq for p in profiles])
    run = ContinuationRun(
        s=s, omegas=np.array([p.omega for p in profiles]), profiles=tuple(profiles), norms=norms
    )
    if not run.norms_increasing:
        log.warning("||phi||^2 is not strictly increasing along the s=%g chain", s)
    return run


def _branch_overlap(a: WaveProfile, b: WaveProfile) -> float:
    va, vb = a.values, b.values
    denom = float(np.linalg.norm(va) * np.linalg.norm(vb))
    return float(np.dot(va, vb)) / denom if denom > 0 else 0.0


def _advance(prev: WaveProfile, target: float, s: float, cfg: SolverConfig, depth: int):
    try:
        nxt = newton_solve(prev.field, target, s, cfg)
        # a long step can converge onto -phi or another branch; treat that as a failed step
        if _branch_overlap(prev, nxt) < BRANCH_OVERLAP_MIN:
            raise ConvergenceError(
                f"step {prev.omega:g} -> {target:g} left the branch "
                f"(overlap {_branch_overlap(prev, nxt):.3f})",
                nxt.residual_history,
            )
        return nxt
    except ConvergenceError as exc:
        if depth >= cfg.max_halvings:
            raise ContinuationError(
                f"continuation failed at omega={target} after {depth} step halvings: {exc}",
                target,
                exc.residual_history,
            ) from exc
        mid = 0.5 * (prev.omega + target)
        log.debug("halving continuation step: %g -> %g -> %g", prev.omega, mid, target)
        halfway = _advance(prev, mid, s, cfg, depth + 1)
        return _advance(halfway, target, s, cfg, depth + 1)


def omega_path(omega: float, cfg: SolverConfig | None = None) -> np.ndarray:
    """Frequencies leading from the seed trust region up to ``omega``."""
    cfg = cfg or SolverConfig()
    omega = _check_omega(omega)
    first = min(omega, cfg.seed_trust_omega)
    if omega == first:
        return np.array([omega])
    n_steps = int(math.ceil((omega - first) / cfg.omega_step - 1e-12))
    return np.linspace(first, omega, n_steps + 1)


def solve_wave(
    s: float, omega: float, cfg: SolverConfig | None = None, grid: PeriodicGrid | None = None
) -> WaveProfile:
    """Converged odd wave at a single ``(s, omega)``, continuing from the seed region if needed.

    For ``omega <= 1`` a small ``sin x`` probe is iterated; it collapses to zero and the
    resulting :class:`TrivialSolutionError` is the diagnosis.
    """
    cfg = cfg or SolverConfig()
    grid = grid or PeriodicGrid(DEFAULT_N_MODES)
    s = check_wave_exponent(s)
    if not float(omega) > 1.0:
        probe = RealField(grid, 0.1 * np.sin(grid.points))
        return newton_solve(probe, omega, s, cfg)
    return continue_in_omega(s, omega_path(omega, cfg), cfg, grid).final


@dataclass(frozen=True)
class LobeCertificate:
    n_critical: int
    x_max: float
    x_min: float
    certified: bool


def lobe_check(phi, atol: float | None = None) -> LobeCertificate:
    """Certify a two-lobe shape: one maximum near ``pi/2``, one minimum near ``-pi/2``.

    Critical points are counted as cyclic sign changes of the spectral derivative on the
    grid. ``atol`` defaults to two grid spacings. Raises :class:`ShapeError` otherwise.
    """
    profile = phi
    field = phi.field if isinstance(phi, WaveProfile) else phi
    grid = field.grid
    atol = 2.0 * grid.spacing if atol is None else atol

    d = derivative(field).values
    scale = np.max(np.abs(d))
    if scale == 0.0:
        raise ShapeError("profile is constant", profile, 0)
    signs = np.sign(np.where(np.abs(d) <= 1e-10 * scale, 0.0, d))
    signs = signs[signs != 0]
    n_critical = int(np.count_nonzero(signs != np.roll(signs, 1)))

    x = grid.points
    x_max = float(x[np.argmax(field.values)])
    x_min = float(x[np.argmin(field.values)])
    if n_critical != 2:
        raise ShapeError(
            f"expected 2 critical points, found {n_critical}", profile, n_critical
        )
    if abs(x_max - np.pi / 2) > atol or abs(x_min + np.pi / 2) > atol:
        raise ShapeError(
            f"extrema at x_max={x_max:.6f}, x_min={x_min:.6f}, expected +-pi/2",
            profile,
            n_critical,
        )
    return LobeCertificate(n_critical=n_critical, x_max=x_max, x_min=x_min, certified=True)
