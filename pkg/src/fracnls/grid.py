"""Uniform periodic grid on [-pi, pi) and the Fourier-multiplier machinery built on it.

All transforms are real-to-complex (``scipy.fft.rfft``), so multipliers are stored
on the non-negative wavenumbers ``0..N/2``. The grid starts at ``x0 = -pi``; a
diagonal multiplier is insensitive to that phase, but explicit Fourier
coefficients (``fourier_coefficients``) carry it so that ``f(x) = sum c_xi e^{i xi x}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np
from scipy import fft as sfft

from .errors import DomainError, GridMismatchError

Parity = Literal["odd", "even"]

__all__ = [
    "PeriodicGrid",
    "RealField",
    "frac_laplacian",
    "derivative",
    "inner_product",
    "parity_project",
    "fourier_coefficients",
    "check_exponent",
]


def check_exponent(s: float) -> float:
    s = float(s)
    if not (0.0 < s <= 1.0):
        raise DomainError(f"fractional exponent s={s!r} must lie in (0, 1]")
    return s


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PeriodicGrid:
    """Collocation grid ``x_j = -pi + 2 pi j / N`` with ``N`` a power of two, ``N >= 16``."""

    n_modes: int

    def __post_init__(self):
        n = self.n_modes
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise DomainError(f"n_modes must be an integer, got {n!r}")
        if n < 16 or n & (n - 1):
            raise DomainError(f"n_modes must be a power of two >= 16, got {n}")
        object.__setattr__(self, "n_modes", int(n))

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.n_modes

    @cached_property
    def points(self) -> np.ndarray:
        return _readonly(-np.pi + self.spacing * np.arange(self.n_modes))

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers in ``fft`` ordering; the set is ``{-N/2, ..., N/2-1}``."""
        return _readonly(np.fft.fftfreq(self.n_modes, d=1.0 / self.n_modes).astype(np.int64))

    @cached_property
    def rwavenumbers(self) -> np.ndarray:
        """Wavenumbers ``0..N/2`` matching the ``rfft`` layout (last entry is Nyquist)."""
        return _readonly(np.arange(self.n_modes // 2 + 1, dtype=np.int64))

    @cached_property
    def reflection(self) -> np.ndarray:
        """Index map ``j -> j'`` with ``x_j' = -x_j`` modulo the period."""
        return _readonly((-np.arange(self.n_modes)) % self.n_modes)

    @cached_property
    def _phase(self) -> np.ndarray:
        # e^{i xi pi} = (-1)^xi, converts index-based DFT coefficients to the x-frame
        return _readonly(np.where(self.rwavenumbers % 2 == 0, 1.0, -1.0))

    def frac_symbol(self, s: float) -> np.ndarray:
        """``|xi|^{2s}`` on the rfft wavenumbers; the Nyquist entry is kept."""
        s = check_exponent(s)
        return np.abs(self.rwavenumbers).astype(float) ** (2.0 * s)

    def derivative_symbol(self) -> np.ndarray:
        sym = 1j * self.rwavenumbers.astype(float)
        sym[-1] = 0.0  # unpaired Nyquist mode
        return sym

    def apply_symbol(self, values: np.ndarray, symbol: np.ndarray) -> np.ndarray:
        """Apply a Fourier multiplier given on the rfft wavenumbers to real samples."""
        return sfft.irfft(symbol * sfft.rfft(values), n=self.n_modes)

    def field(self, values) -> "RealField":
        return RealField(self, values)

    def sample(self, func) -> "RealField":
        return RealField(self, func(self.points))

    def zeros(self) -> "RealField":
        return RealField(self, np.zeros(self.n_modes))


@dataclass(frozen=True, eq=False)
class RealField:
    """Real samples of a 2pi-periodic function on a :class:`PeriodicGrid`."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_modes,):
            raise GridMismatchError(
                f"field has shape {v.shape}, grid expects ({self.grid.n_modes},)"
            )
        object.__setattr__(self, "values", _readonly(v))

    def _other(self, other):
        if isinstance(other, RealField):
            if other.grid != self.grid:
                raise GridMismatchError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return RealField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return RealField(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return RealField(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return RealField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return RealField(self.grid, -self.values)

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def norm(self) -> float:
        return float(np.sqrt(inner_product(self, self)))


def _same_grid(f: RealField, g: RealField) -> None:
    if f.grid != g.grid:
        raise GridMismatchError(
            f"grid mismatch: N={f.grid.n_modes} vs N={g.grid.n_modes}"
        )


def frac_laplacian(f: RealField, s: float) -> RealField:
    """Fractional Laplacian ``(-Delta)^s``: multiply mode ``xi`` by ``|xi|^{2s}``."""
    symbol = f.grid.frac_symbol(s)
    return RealField(f.grid, f.grid.apply_symbol(f.values, symbol))


def derivative(f: RealField) -> RealField:
    """Spectral derivative ``i xi f_hat`` with the Nyquist coefficient dropped."""
    return RealField(f.grid, f.grid.apply_symbol(f.values, f.grid.derivative_symbol()))


def inner_product(f: RealField, g: RealField) -> float:
    """Trapezoidal approximation of ``int_{-pi}^{pi} f g dx``."""
    _same_grid(f, g)
    return float(f.grid.spacing * np.dot(f.values, g.values))


def parity_project(f: RealField, parity: Parity) -> RealField:
    """Return ``(f(x) - f(-x))/2`` for ``"odd"`` or ``(f(x) + f(-x))/2`` for ``"even"``."""
    reflected = f.values[f.grid.reflection]
    if parity == "odd":
        return RealField(f.grid, 0.5 * (f.values - reflected))
    if parity == "even":
        return RealField(f.grid, 0.5 * (f.values + reflected))
    raise DomainError(f"parity must be 'odd' or 'even', got {parity!r}")


def fourier_coefficients(f: RealField) -> np.ndarray:
    """Complex coefficients ``c_xi`` (fft ordering) with ``f(x_j) = sum_xi c_xi e^{i xi x_j}``."""
    grid = f.grid
    c = sfft.fft(f.values) / grid.n_modes
    return c * np.where(grid.wavenumbers % 2 == 0, 1.0, -1.0)


def cosine_moments(values: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    """Discrete moments ``D_k = (2/N) sum_j v_j cos(k x_j)`` for ``k = 0..N/2``.

    These reproduce trapezoidal integrals ``(1/pi) int v cos(kx) dx`` exactly on the grid,
    which is what the parity-basis assembly in :mod:`fracnls.linops` needs.
    """
    r = sfft.rfft(values)
    return 2.0 * (r.real * grid._phase) / grid.n_modes
