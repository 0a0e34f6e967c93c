"""Uniaxial spin Hamiltonian ``H = -D Sz^2 - B.S`` in the Sz eigenbasis.

Units are hbar = k_B = 1. Public functions take the physical level index
``m`` in ``{-S, ..., S}``; arrays are stored with ``i = m + S``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


def _as_spin(S) -> float:
    two_s = 2 * Fraction(S).limit_denominator(4)
    if two_s.denominator != 1 or two_s < 1 or abs(float(two_s) - 2 * float(S)) > 1e-12:
        raise ValueError(f"spin magnitude must be a positive half-integer, got {S!r}")
    return float(two_s) / 2


def _check_level(S: float, m, lo: float | None = None) -> float:
    lo = -S if lo is None else lo
    m = float(m)
    if not (lo - 1e-12 <= m <= S + 1e-12) or abs((m + S) - round(m + S)) > 1e-12:
        raise ValueError(f"level index {m} outside [{lo}, {S}] for S={S}")
    return m


def ladder_factor(S, m) -> float:
    """Return ``sqrt(S(S+1) - m(m+1))``, the matrix element ``<m+1|S+|m>``.

    Accepts ``m`` from ``-S-1`` to ``S``; both ends give 0.
    """
    S = _as_spin(S)
    m = _check_level(S, m, lo=-S - 1)
    return float(np.sqrt(max(S * (S + 1) - m * (m + 1), 0.0)))


@dataclass(frozen=True)
class LevelIndexMap:
    """Bijection between physical ``m`` and storage index ``i = m + S``."""

    S: float

    @property
    def size(self) -> int:
        return int(round(2 * self.S)) + 1

    def index(self, m) -> int:
        i = float(m) + self.S
        if abs(i - round(i)) > 1e-12 or not 0 <= round(i) < self.size:
            raise ValueError(f"level index {m} outside range for S={self.S}")
        return int(round(i))

    def level(self, i: int) -> float:
        if not 0 <= i < self.size:
            raise ValueError(f"storage index {i} outside [0, {self.size - 1}]")
        return i - self.S

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.size) - self.S


@dataclass(frozen=True)
class SpinModel:
    """Spin ``S`` with anisotropy ``D``, static field ``B`` and temperature ``T``.

    Parameters
    ----------
    S : float
        Spin magnitude, a positive half-integer.
    D : float
        Uniaxial anisotropy constant (>= 0); wells at ``m = +-S``.
    B : tuple of float
        Static field ``(Bx, By, Bz)`` in energy units per unit spin.
    T : float
        Temperature (> 0).
    """

    S: float
    D: float
    B: tuple[float, float, float] = (0.0, 0.0, 0.0)
    T: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "S", _as_spin(self.S))
        b = tuple(float(x) for x in self.B)
        if len(b) != 3:
            raise ValueError("B must have three components (Bx, By, Bz)")
        object.__setattr__(self, "B", b)
        if self.D < 0:
            raise ValueError(f"anisotropy D must be >= 0, got {self.D}")
        if not self.T > 0:
            raise ValueError(f"temperature T must be > 0, got {self.T}")

    @classmethod
    def from_reduced(cls, S, sigma: float, T: float, xi: float = 0.0,
                     field_direction=(0.0, 0.0, 1.0)) -> "SpinModel":
        """Build from ``sigma = D S^2 / T`` and ``xi = S |B| / T`` at fixed T."""
        S = _as_spin(S)
        direction = np.asarray(field_direction, dtype=float)
        norm = np.linalg.norm(direction)
        if norm == 0:
            raise ValueError("field direction must be nonzero")
        B = direction / norm * (xi * T / S)
        return cls(S=S, D=sigma * T / S**2, B=tuple(B), T=T)

    @property
    def dim(self) -> int:
        return int(round(2 * self.S)) + 1

    @property
    def index_map(self) -> LevelIndexMap:
        return LevelIndexMap(self.S)

    @property
    def levels(self) -> np.ndarray:
        """Physical level indices ``-S .. S`` in storage order."""
        return np.arange(self.dim) - self.S

    @property
    def sigma(self) -> float:
        return self.D * self.S**2 / self.T

    @property
    def xi(self) -> float:
        return self.S * float(np.linalg.norm(self.B)) / self.T

    @property
    def B_plus(self) -> complex:
        return complex(self.B[0], self.B[1])

    @property
    def B_minus(self) -> complex:
        return complex(self.B[0], -self.B[1])

    @property
    def has_transverse_field(self) -> bool:
        return self.B[0] != 0.0 or self.B[1] != 0.0

    @property
    def chi0(self) -> float:
        """Scale ``S(S+1)/T`` used for reduced susceptibilities."""
        return self.S * (self.S + 1) / self.T

    @property
    def anisotropy_frequency(self) -> float:
        """``2 D S``, the scale for reduced frequencies."""
        return 2 * self.D * self.S

    def energies(self) -> np.ndarray:
        """Diagonal level energies ``-D m^2 - Bz m`` in storage order."""
        m = self.levels
        return -self.D * m**2 - self.B[2] * m

    def ladder_factors(self) -> np.ndarray:
        """``l_m`` for ``m = -S .. S`` in storage order (last entry is 0)."""
        m = self.levels
        return np.sqrt(np.maximum(self.S * (self.S + 1) - m * (m + 1), 0.0))

    def boltzmann(self) -> np.ndarray:
        """Equilibrium populations of the diagonal Hamiltonian."""
        e = self.energies()
        w = np.exp(-(e - e.min()) / self.T)
        return w / w.sum()


def level_energy(model: SpinModel, m) -> float:
    m = _check_level(model.S, m)
    return -model.D * m**2 - model.B[2] * m


def transition_frequency(model: SpinModel, n, m) -> float:
    """``Delta_nm = eps_n - eps_m``."""
    return level_energy(model, n) - level_energy(model, m)


def sx_matrix_elements(model: SpinModel) -> list[tuple[float, float, float]]:
    """Nonzero elements ``(m, m', <m|Sx|m'>)`` of ``Sx`` in the Sz basis."""
    out = []
    for m, lm in zip(model.levels[:-1], model.ladder_factors()[:-1]):
        out.append((float(m), float(m + 1), lm / 2))
        out.append((float(m + 1), float(m), lm / 2))
    return out


def spin_matrices(S) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense ``(Sx, Sy, Sz)`` in storage order (row/column ``i = m + S``)."""
    S = _as_spin(S)
    m = np.arange(int(round(2 * S)) + 1) - S
    lm = np.sqrt(np.maximum(S * (S + 1) - m * (m + 1), 0.0))
    splus = np.diag(lm[:-1], k=-1).astype(complex)  # <m+1|S+|m>
    sminus = splus.conj().T
    return (splus + sminus) / 2, (splus - sminus) / 2j, np.diag(m).astype(complex)
