"""Linearized operators ``L1 = (-Delta)^s - omega + 3 phi^2`` and ``L2 = (-Delta)^s - omega + phi^2``.

Dense finite sections are built in the orthonormal parity bases

* odd:  ``sin(m x) / sqrt(pi)``, ``m = 1..M``
* even: ``1 / sqrt(2 pi)``, ``cos(m x) / sqrt(pi)``, ``m = 1..M``

The potential block is a Toeplitz -/+ Hankel combination of the discrete cosine moments
of the potential, so matrix entries coincide with trapezoidal inner products on the grid.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Literal

import numpy as np
import scipy.linalg as sla
from scipy import fft as sfft

from .errors import DomainError, GridMismatchError, NumericalError, ParityError
from .grid import PeriodicGrid, RealField, cosine_moments, parity_project
from .wave import WaveProfile

Kind = Literal["L1", "L2"]
SectorParity = Literal["odd", "even"]

KERNEL_TOL_FACTOR = 1e-4
MAX_CONDITION = 1e12
N_KEEP = 12
# size of the partial eigensolve; widened to the full spectrum when too small
N_LOWEST = 24

__all__ = [
    "LinearizedOperator",
    "SpectrumReport",
    "SectorSolution",
    "AmbiguousKernelWarning",
    "apply",
    "assemble",
    "eig_counts",
    "default_cutoff",
    "max_cutoff",
    "default_kernel_tol",
    "to_basis",
    "from_basis",
    "solve_sector",
]


class AmbiguousKernelWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class LinearizedOperator:
    kind: Kind
    wave: WaveProfile
    parity: str = "full"

    def __post_init__(self):
        if self.kind not in ("L1", "L2"):
            raise DomainError(f"kind must be 'L1' or 'L2', got {self.kind!r}")
        if self.parity not in ("full", "odd", "even"):
            raise DomainError(f"parity must be full/odd/even, got {self.parity!r}")

    @property
    def grid(self) -> PeriodicGrid:
        return self.wave.grid

    @property
    def potential(self) -> np.ndarray:
        coef = 3.0 if self.kind == "L1" else 1.0
        return coef * self.wave.values**2

    def restrict(self, parity: str) -> "LinearizedOperator":
        return LinearizedOperator(self.kind, self.wave, parity)


def default_cutoff(grid: PeriodicGrid) -> int:
    return grid.n_modes // 4


def max_cutoff(grid: PeriodicGrid) -> int:
    # sin(N/2 x) vanishes on the grid and cos(N/2 x) is not normalized like the rest
    return grid.n_modes // 2 - 1


def _check_cutoff(grid: PeriodicGrid, cutoff: int | None) -> int:
    m = default_cutoff(grid) if cutoff is None else int(cutoff)
    if not 1 <= m <= max_cutoff(grid):
        raise DomainError(f"basis cutoff {m} outside [1, {max_cutoff(grid)}]")
    return m


def default_kernel_tol(op: LinearizedOperator) -> float:
    """``1e-4 * (omega + max potential)``: the size of the bounded part of the operator."""
    return KERNEL_TOL_FACTOR * (abs(op.wave.omega) + float(np.max(op.potential)))


def apply(op: LinearizedOperator, f: RealField) -> RealField:
    """Matrix-free action of ``op`` on ``f``; parity-restricted operators demand pure input."""
    grid = op.grid
    if f.grid != grid:
        raise GridMismatchError("field and wave live on different grids")
    v = f.values
    if op.parity != "full":
        defect = np.max(np.abs(v - parity_project(f, op.parity).values))
        if defect > 1e-10 * max(np.max(np.abs(v)), 1e-300):
            raise ParityError(f"input is not {op.parity} (defect {defect:.3e})")
    out = grid.apply_symbol(v, grid.frac_symbol(op.wave.s)) - op.wave.omega * v + op.potential * v
    result = RealField(grid, out)
    if op.parity != "full":
        result = parity_project(result, op.parity)
    return result


def _moments(op: LinearizedOperator, upto: int) -> np.ndarray:
    grid = op.grid
    n = grid.n_modes
    d = cosine_moments(op.potential, grid)
    if upto <= n // 2:
        return d[: upto + 1]
    # cos(k x_j) = cos((N-k) x_j) on the grid
    k = np.arange(upto + 1)
    return d[np.where(k <= n // 2, k, n - k)]


def assemble(op: LinearizedOperator, cutoff: int | None = None) -> np.ndarray:
    """Dense symmetric matrix ``A_mn = (op e_n, e_m)`` in the parity basis of ``op``."""
    if op.parity not in ("odd", "even"):
        raise DomainError("assemble needs parity 'odd' or 'even'; full counts add over sectors")
    m_max = _check_cutoff(op.grid, cutoff)
    s, omega = op.wave.s, op.wave.omega
    d = _moments(op, 2 * m_max)
    m = np.arange(1, m_max + 1)
    diff = np.abs(m[:, None] - m[None, :])
    summ = m[:, None] + m[None, :]
    if op.parity == "odd":
        a = 0.5 * (d[diff] - d[summ])
        a[np.diag_indices(m_max)] += m.astype(float) ** (2 * s) - omega
        return a
    a = np.empty((m_max + 1, m_max + 1))
    a[1:, 1:] = 0.5 * (d[diff] + d[summ])
    a[1:, 1:][np.diag_indices(m_max)] += m.astype(float) ** (2 * s) - omega
    a[0, 0] = 0.5 * d[0] - omega
    a[0, 1:] = a[1:, 0] = d[1 : m_max + 1] / np.sqrt(2.0)
    return a


def _phase(m: np.ndarray) -> np.ndarray:
    return np.where(m % 2 == 0, 1.0, -1.0)


def to_basis(f: RealField, parity: str, cutoff: int) -> np.ndarray:
    """Coefficients ``(f, e_m)`` in the orthonormal parity basis."""
    grid = f.grid
    r = sfft.rfft(f.values)
    m = np.arange(cutoff + 1)
    rx = _phase(m) * r[: cutoff + 1]  # sum_j f_j e^{-i m x_j}
    h = grid.spacing
    if parity == "odd":
        return -h * rx[1:].imag / np.sqrt(np.pi)
    if parity == "even":
        out = h * rx.real / np.sqrt(np.pi)
        out[0] = h * rx[0].real / np.sqrt(2.0 * np.pi)
        return out
    raise DomainError(f"parity must be odd or even, got {parity!r}")


def from_basis(coefs: np.ndarray, grid: PeriodicGrid, parity: str) -> RealField:
    """Synthesize ``sum_m c_m e_m`` on the grid."""
    n = grid.n_modes
    r = np.zeros(n // 2 + 1, dtype=complex)
    if parity == "odd":
        m = np.arange(1, len(coefs) + 1)
        r[m] = (n / 2) * coefs * (-1j) * _phase(m) / np.sqrt(np.pi)
    elif parity == "even":
        m = np.arange(1, len(coefs))
        r[0] = n * coefs[0] / np.sqrt(2.0 * np.pi)
        r[m] = (n / 2) * coefs[1:] * _phase(m) / np.sqrt(np.pi)
    else:
        raise DomainError(f"parity must be odd or even, got {parity!r}")
    return RealField(grid, sfft.irfft(r, n=n))


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    """Counts for one operator; ``eigenvalues`` holds the lowest part of the spectrum."""

    kind: str
    parity: str
    s: float
    omega: float
    eigenvalues: np.ndarray
    n_neg: int
    n_zero: int
    kernel_tol: float
    basis_dim: int
    cutoff: int
    kernel_fields: tuple = dc_field(default=(), repr=False)
    warnings: tuple = ()

    def to_record(self, n_keep: int = N_KEEP) -> dict:
        return {
            "kind": self.kind,
            "parity": self.parity,
            "s": self.s,
            "omega": self.omega,
            "kernel_tol": self.kernel_tol,
            "eigenvalues": [float(v) for v in self.eigenvalues[:n_keep]],
            "n_neg": self.n_neg,
            "n_zero": self.n_zero,
        }

    def to_json(self, n_keep: int = N_KEEP) -> str:
        return json.dumps(self.to_record(n_keep))


def _lowest_eigenpairs(a, ceiling):
    """Lowest eigenpairs of ``a``, enough of them to pass ``ceiling``."""
    dim = len(a)
    if dim > 2 * N_LOWEST:
        evals, evecs = sla.eigh(a, subset_by_index=(0, N_LOWEST - 1), driver="evr")
        if evals[-1] > ceiling:
            return evals, evecs
    return sla.eigh(a)


def _sector_spectrum(op, cutoff, kernel_tol):
    a = assemble(op, cutoff)
    try:
        # counts only need the spectrum up to the ambiguity band above kernel_tol
        evals, evecs = _lowest_eigenpairs(a, 10.0 * kernel_tol)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigensolver failed for {op.kind}/{op.parity}: {exc}") from exc
    kernel = np.abs(evals) <= kernel_tol
    fields = tuple(from_basis(evecs[:, i], op.grid, op.parity) for i in np.flatnonzero(kernel))
    return evals, int(np.count_nonzero(evals < -kernel_tol)), int(np.count_nonzero(kernel)), fields


def eig_counts(
    op: LinearizedOperator, kernel_tol: float | None = None, cutoff: int | None = None
) -> SpectrumReport:
    """Negative and kernel counts of ``op``; a ``full`` operator sums its two sectors.

    Eigenvalues within a factor of ten of ``kernel_tol`` (either side) make the
    classification ambiguous; that is reported through ``warnings`` and an
    :class:`AmbiguousKernelWarning`.
    """
    tol = default_kernel_tol(op) if kernel_tol is None else float(kernel_tol)
    if not tol > 0:
        raise DomainError("kernel_tol must be positive")
    m_max = _check_cutoff(op.grid, cutoff)
    sectors = ("odd", "even") if op.parity == "full" else (op.parity,)
    evals, n_neg, n_zero, fields, dim = [], 0, 0, [], 0
    for parity in sectors:
        e, nn, nz, kf = _sector_spectrum(op.restrict(parity), m_max, tol)
        evals.append(e)
        n_neg += nn
        n_zero += nz
        fields.extend(kf)
        dim += m_max + (parity == "even")
    evals = np.sort(np.concatenate(evals))
    mag = np.abs(evals)
    notes = []
    close = evals[(mag >= tol / 10) & (mag <= tol * 10)]
    if close.size:
        msg = (
            f"{op.kind}/{op.parity}: eigenvalue(s) {np.array2string(close, precision=3)} "
            f"within a factor 10 of kernel_tol={tol:.3e}"
        )
        notes.append(msg)
        warnings.warn(msg, AmbiguousKernelWarning, stacklevel=2)
    return SpectrumReport(
        kind=op.kind,
        parity=op.parity,
        s=op.wave.s,
        omega=op.wave.omega,
        eigenvalues=evals,
        n_neg=n_neg,
        n_zero=n_zero,
        kernel_tol=tol,
        basis_dim=dim,
        cutoff=m_max,
        kernel_fields=tuple(fields),
        warnings=tuple(notes),
    )


@dataclass(frozen=True, eq=False)
class SectorSolution:
    solution: RealField
    residual: float
    rcond: float


def solve_sector(op: LinearizedOperator, rhs: RealField, cutoff: int | None = None) -> SectorSolution:
    """Solve ``op u = rhs`` inside one parity sector by Bunch-Kaufman factorization.

    The sector matrices are indefinite, hence the symmetric-indefinite factorization.
    Raises :class:`NumericalError` when the condition estimate exceeds 1e12.
    """
    if op.parity not in ("odd", "even"):
        raise DomainError("solve_sector needs a parity-restricted operator")
    m_max = _check_cutoff(op.grid, cutoff)
    a = assemble(op, m_max)
    b = to_basis(rhs, op.parity, m_max)
    sytrf, sytrs, sycon = sla.get_lapack_funcs(("sytrf", "sytrs", "sycon"), (a,))
    lu, ipiv, info = sytrf(a, lower=True)
    if info != 0:
        raise NumericalError(f"{op.kind}/{op.parity} sector matrix is singular (sytrf info={info})")
    anorm = np.linalg.norm(a, 1)
    rcond, info = sycon(lu, ipiv, anorm, lower=True)
    if info != 0 or rcond * MAX_CONDITION < 1.0:
        raise NumericalError(
            f"{op.kind}/{op.parity} sector is near-singular (condition estimate {1 / max(rcond, 1e-300):.3e})"
        )
    c, info = sytrs(lu, ipiv, b, lower=True)
    if info != 0:
        raise NumericalError(f"sytrs failed (info={info})")
    res = float(np.linalg.norm(a @ c - b) / max(np.linalg.norm(b), 1e-300))
    return SectorSolution(solution=from_basis(c, op.grid, op.parity), residual=res, rcond=float(rcond))
