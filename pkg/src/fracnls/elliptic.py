"""Complete elliptic integral ``K(k)`` and Jacobi ``sn(u, k)``, modulus convention.

Only what the exact ``s = 1`` wave ``eta * sn(2 K x / pi, k)`` needs. ``K`` comes from the
arithmetic-geometric mean and ``sn`` from the descending Landen (Gauss) transformation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .grid import PeriodicGrid, RealField

__all__ = [
    "EllipticParams",
    "agm",
    "complete_k",
    "jacobi_sn",
    "omega_of_k",
    "eta_of_k",
    "k_of_omega",
    "exact_profile",
]

K_BRACKET_HI = 1.0 - 1e-12
_LANDEN_STOP = 1e-14


def _check_modulus(k: float) -> float:
    k = float(k)
    if not (0.0 <= k < 1.0):
        raise DomainError(f"elliptic modulus k={k!r} must lie in [0, 1)")
    return k


def _complementary(k: float) -> float:
    return math.sqrt((1.0 - k) * (1.0 + k))


def agm(a: float, b: float) -> float:
    """Arithmetic-geometric mean of two positive numbers."""
    for _ in range(64):
        if abs(a - b) <= 4.0 * np.finfo(float).eps * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 0.5 * (a + b)


def complete_k(k: float) -> float:
    """Complete elliptic integral of the first kind, ``K(k) = pi / (2 AGM(1, k'))``."""
    k = _check_modulus(k)
    return math.pi / (2.0 * agm(1.0, _complementary(k)))


def _landen_moduli(k: float) -> list[float]:
    # k_{n+1} = (1 - k_n') / (1 + k_n'), written without cancellation
    moduli = []
    while k >= _LANDEN_STOP:
        kp = _complementary(k)
        k = k * k / ((1.0 + kp) ** 2)
        moduli.append(k)
    return moduli


def jacobi_sn(u, k: float):
    """Jacobi elliptic sine ``sn(u, k)``; accepts scalars or arrays for ``u``.

    Descends ``k -> k_1 -> ...`` until the modulus drops below 1e-14, evaluates ``sin``
    there, and climbs back with ``sn = (1 + k1) sn1 / (1 + k1 sn1^2)``.
    """
    k = _check_modulus(k)
    u = np.asarray(u, dtype=float)
    moduli = _landen_moduli(k)
    scale = 1.0
    for kn in moduli:
        scale *= 1.0 + kn
    sn = np.sin(u / scale)
    for kn in reversed(moduli):
        sn = (1.0 + kn) * sn / (1.0 + kn * sn * sn)
    return sn if sn.ndim else float(sn)


def omega_of_k(k: float) -> float:
    """Frequency ``4 (1 + k^2) K(k)^2 / pi^2`` of the exact ``s = 1`` wave."""
    big_k = complete_k(k)
    return 4.0 * (1.0 + k * k) * big_k * big_k / math.pi**2


def eta_of_k(k: float) -> float:
    """Amplitude ``2 sqrt(2) k K(k) / pi``."""
    return 2.0 * math.sqrt(2.0) * k * complete_k(k) / math.pi


def k_of_omega(omega: float, tol: float = 1e-12) -> float:
    """Invert :func:`omega_of_k` by bisection on ``(0, 1 - 1e-12)``."""
    omega = float(omega)
    if not omega > 1.0:
        raise DomainError(
            f"omega={omega!r}: for omega <= 1 only the zero solution exists"
        )
    lo, hi = 0.0, K_BRACKET_HI
    if omega_of_k(hi) < omega:
        raise DomainError(f"omega={omega!r} exceeds the representable range of k")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if omega_of_k(mid) < omega:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class EllipticParams:
    k: float
    big_k: float
    eta: float
    omega: float

    @classmethod
    def from_k(cls, k: float) -> "EllipticParams":
        k = _check_modulus(k)
        big_k = complete_k(k)
        return cls(
            k=k,
            big_k=big_k,
            eta=2.0 * math.sqrt(2.0) * k * big_k / math.pi,
            omega=4.0 * (1.0 + k * k) * big_k * big_k / math.pi**2,
        )

    @classmethod
    def from_omega(cls, omega: float) -> "EllipticParams":
        return cls.from_k(k_of_omega(omega))

    def sample(self, x) -> np.ndarray:
        return self.eta * jacobi_sn(2.0 * self.big_k * np.asarray(x) / math.pi, self.k)


def exact_profile(omega: float, grid: PeriodicGrid):
    """Exact odd standing wave for ``s = 1`` at frequency ``omega > 1``, sampled on ``grid``."""
    from .wave import WaveProfile, residual

    params = EllipticParams.from_omega(omega)
    field = RealField(grid, params.sample(grid.points))
    res = residual(field, omega, 1.0)
    return WaveProfile(
        field=field,
        s=1.0,
        omega=float(omega),
        residual_norm=res.max_norm(),
        newton_iters=0,
    )
