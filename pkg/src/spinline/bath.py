"""Spin-bath coupling, spectral densities and Redfield coefficients.

The coupling operator is ``F = eta+ {v(Sz), S-} + eta- {v(Sz), S+}`` with
``v`` either constant (1/2) or ``Sz``. Its only nonzero matrix elements are

    F_{m-1,m} = L_{m,m-1},   L_{m,m-1} = eta+ [v(m) + v(m-1)] l_{m-1}

(times ``D`` when the anisotropy prefactor is on). Rates come from a pure
power-law spectral density ``J(w) = lambda w^s`` through

    W(Delta) = J(Delta) n(Delta) + J(-Delta) (n(-Delta) + 1).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .spin import SpinModel, _check_level

# below this |Delta|/T the Bose factor is replaced by its series
SMALL_RATIO = 1e-8


class VKind(str, enum.Enum):
    CONSTANT = "constant"
    LINEAR_IN_SZ = "linear"


@dataclass(frozen=True)
class BathSpec:
    """Power-law bath ``J(w) = lam * w**s`` at temperature ``T``."""

    s: int = 3
    lam: float = 0.0
    T: float = 1.0

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 1 or self.s % 2 == 0:
            raise ValueError(f"bath exponent must be a positive odd integer, got {self.s}")
        object.__setattr__(self, "s", int(self.s))
        if self.lam < 0:
            raise ValueError(f"coupling strength must be >= 0, got {self.lam}")
        if not self.T > 0:
            raise ValueError(f"temperature must be > 0, got {self.T}")


@dataclass(frozen=True)
class CouplingSpec:
    """Structure of the spin part of the spin-bath interaction.

    ``anisotropy_prefactor`` multiplies every amplitude by ``D`` (phonon
    convention, so relaxation scales as ``lam D^2 L^2``).
    """

    v_kind: VKind = VKind.LINEAR_IN_SZ
    eta_plus: float = 1.0
    eta_minus: float = 1.0
    anisotropy_prefactor: bool = True

    def __post_init__(self):
        object.__setattr__(self, "v_kind", VKind(self.v_kind))
        if not np.isclose(complex(self.eta_minus), np.conj(complex(self.eta_plus)),
                          rtol=1e-14, atol=0.0):
            raise ValueError("eta_minus must equal conj(eta_plus) for a Hermitian coupling")

    @classmethod
    def phonon(cls) -> "CouplingSpec":
        return cls(VKind.LINEAR_IN_SZ, 1.0, 1.0, True)

    @classmethod
    def bilinear(cls) -> "CouplingSpec":
        """``F = (S- + S+)/2``, used by the electron-hole and hybrid models."""
        return cls(VKind.CONSTANT, 0.5, 0.5, False)

    def v(self, m):
        m = np.asarray(m, dtype=float)
        if self.v_kind is VKind.CONSTANT:
            return np.full_like(m, 0.5)
        return m


def spectral_density(bath: BathSpec, omega):
    """``lam * omega**s`` for ``omega > 0`` and 0 otherwise."""
    w = np.asarray(omega, dtype=float)
    out = np.where(w > 0, bath.lam * np.abs(w) ** bath.s, 0.0)
    return out if out.ndim else float(out)


def bose(omega, T):
    """Bose occupation ``1 / (exp(omega/T) - 1)``; diverges at ``omega = 0``."""
    return 1.0 / np.expm1(np.asarray(omega, dtype=float) / T)


def rate(bath: BathSpec, delta):
    """Rate function ``W(Delta)`` (vectorised).

    For odd ``s`` both branches collapse to ``lam Delta^s / expm1(Delta/T)``;
    near ``Delta = 0`` the series ``lam T Delta^(s-1) (1 - x/2)`` with
    ``x = Delta/T`` is used, giving the limit ``lam T`` for Ohmic baths.
    """
    d = np.asarray(delta, dtype=float)
    x = d / bath.T
    small = np.abs(x) < SMALL_RATIO
    safe_x = np.where(small, 1.0, x)
    with np.errstate(over="ignore"):
        # exp overflow far above T correctly sends the absorption rate to 0
        regular = bath.lam * d**bath.s / np.expm1(safe_x)
    series = bath.lam * bath.T * d ** (bath.s - 1) * (1.0 - x / 2)
    out = np.where(small, series, regular)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class CouplingElements:
    """Amplitudes ``L_{m+1,m}`` for each lower level ``m = -S .. S``.

    ``lowered[i]`` is ``L_{m+1,m}`` with ``m = i - S``; the last entry
    (``m = S``) is zero because ``l_S = 0``.
    """

    S: float
    lowered: np.ndarray

    def __call__(self, m, m_prime) -> complex:
        """``L_{m,m'}``; zero unless ``|m - m'| = 1``. Only the ordering
        with the first index above the second appears in ``F``."""
        if abs(m - m_prime) != 1:
            return 0.0
        lo = min(m, m_prime)
        if not (-self.S - 1e-12 <= lo <= self.S + 1e-12):
            return 0.0
        return self.lowered[int(round(lo + self.S))]


def coupling_elements(model: SpinModel, cpl: CouplingSpec) -> CouplingElements:
    m = model.levels
    amp = cpl.eta_plus * (cpl.v(m + 1) + cpl.v(m)) * model.ladder_factors()
    if cpl.anisotropy_prefactor:
        amp = amp * model.D
    return CouplingElements(model.S, np.asarray(amp, dtype=complex))


def coupling_matrix(model: SpinModel, cpl: CouplingSpec) -> np.ndarray:
    """Dense ``F`` assembled from ``L`` (storage order)."""
    L = coupling_elements(model, cpl).lowered
    F = np.zeros((model.dim, model.dim), dtype=complex)
    idx = np.arange(model.dim - 1)
    F[idx, idx + 1] = L[:-1]          # F_{m, m+1} = L_{m+1, m}
    F[idx + 1, idx] = L[:-1].conj()   # F_{m+1, m} = L*_{m+1, m}
    return F


@dataclass(frozen=True)
class RedfieldCoefficients:
    """Coefficients of one Redfield row ``R_n^m``.

    ``lower`` multiplies ``X_{n-1}^{m-1}``, ``upper`` multiplies
    ``X_{n+1}^{m+1}``; ``loss_terms`` are the four nonnegative pieces whose
    negated sum multiplies ``X_n^m``.
    """

    lower: complex
    loss_terms: tuple[float, float, float, float]
    upper: complex

    @property
    def diagonal(self) -> float:
        return -sum(self.loss_terms)


def redfield_coefficients(model: SpinModel, cpl: CouplingSpec, bath: BathSpec,
                          n, m) -> RedfieldCoefficients:
    n = _check_level(model.S, n)
    m = _check_level(model.S, m)
    L = coupling_elements(model, cpl)
    eps = model.energies()
    S = model.S

    def e(k):
        # energies beyond the ladder only ever multiply a vanishing L
        k = min(max(k, -S), S)
        return eps[int(round(k + S))]

    def W(a, b):
        return rate(bath, e(a) - e(b))

    Ln_dn, Lm_dn = L(n, n - 1), L(m, m - 1)
    Ln_up, Lm_up = L(n + 1, n), L(m + 1, m)
    lower = Ln_dn * np.conj(Lm_dn) * (W(n, n - 1) + W(m, m - 1))
    loss = (
        abs(Ln_up) ** 2 * W(n + 1, n),
        abs(Lm_up) ** 2 * W(m + 1, m),
        abs(Ln_dn) ** 2 * W(n - 1, n),
        abs(Lm_dn) ** 2 * W(m - 1, m),
    )
    upper = np.conj(Ln_up) * Lm_up * (W(n, n + 1) + W(m, m + 1))
    return RedfieldCoefficients(complex(lower), tuple(float(x) for x in loss), complex(upper))


def redfield_tables(model: SpinModel, cpl: CouplingSpec, bath: BathSpec,
                    extended: bool = False):
    """Vectorised Redfield coefficients over all ``(n, m)``.

    Returns ``(lower, diagonal, upper)`` arrays indexed ``[n + S, m + S]``.
    With ``extended=True`` the diagonal is summed and returned in
    ``np.longdouble``; the gain entries are built from the same rounded
    products ``|L|^2 W`` as the loss pieces, so population columns sum to
    zero up to extended-precision rounding.
    """
    L = coupling_elements(model, cpl).lowered           # L_{k+1,k}
    eps = model.energies()
    N = model.dim
    gap = np.zeros(N)
    gap[:-1] = eps[1:] - eps[:-1]                        # Delta_{k+1,k}
    w_up = rate(bath, gap) * (np.arange(N) < N - 1)      # W_{k+1,k}
    w_dn = rate(bath, -gap) * (np.arange(N) < N - 1)     # W_{k,k+1}
    L2 = (L * L.conj()).real

    # quantities attached to the pair (k, k-1), indexed by k
    L_below = np.concatenate([[0.0], L[:-1]])            # L_{k,k-1}
    w_below_up = np.concatenate([[0.0], w_up[:-1]])      # W_{k,k-1}

    g_up = L2 * w_up                                     # |L_{k+1,k}|^2 W_{k+1,k}
    g_dn = L2 * w_dn                                     # |L_{k+1,k}|^2 W_{k,k+1}
    g_dn_below = np.concatenate([[0.0], g_dn[:-1]])      # |L_{k,k-1}|^2 W_{k-1,k}
    if extended:
        loss_1 = g_up.astype(np.longdouble) + g_dn_below.astype(np.longdouble)
    else:
        loss_1 = g_up + g_dn_below
    diagonal = -(loss_1[:, None] + loss_1[None, :])
    lower = (L_below[:, None] * L_below.conj()[None, :]
             * (w_below_up[:, None] + w_below_up[None, :]))
    upper = (L.conj()[:, None] * L[None, :] * (w_dn[:, None] + w_dn[None, :]))
    # population gains: exactly twice the matching loss pieces
    k = np.arange(N)
    lower[k, k] = 2 * np.concatenate([[0.0], g_up[:-1]])
    upper[k, k] = 2 * g_dn
    return lower, diagonal, upper
