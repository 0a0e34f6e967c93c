"""Classical zero-damping line-shape of a uniaxial spin and distances to it.

In reduced units ``u = Omega / (2DS)`` and ``chi / chi0`` the curve is

    g(u) = C(sigma) u (1 - u^2) exp(sigma u^2),   0 <= u <= 1,

and zero above ``u = 1``. The constant is fixed by the sum rule
``(2/pi) int_0^1 g(u)/u du = <1 - z^2>/2`` (the classical scaled transverse
susceptibility, averaged with weight ``exp(sigma z^2)`` on ``[0, 1]``), which
gives ``C = (pi/4) / int_0^1 exp(sigma z^2) dz``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import dawsn


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    return sigma


def _log_partition(sigma: float) -> float:
    # int_0^1 exp(sigma z^2) dz = exp(sigma) dawsn(sqrt sigma) / sqrt sigma
    r = np.sqrt(sigma)
    return sigma + np.log(dawsn(r) / r)


def normalization(sigma: float) -> float:
    """``C(sigma) = (pi/4) / int_0^1 exp(sigma z^2) dz``."""
    sigma = _check_sigma(sigma)
    return float(np.pi / 4 * np.exp(-_log_partition(sigma)))


def classical_susceptibility(sigma: float) -> float:
    """``<1 - z^2>/2``: scaled isothermal transverse susceptibility.

    Uses ``<z^2> = 1/(2 sigma) (exp(sigma)/Z - 1)`` with ``Z`` the
    partition integral, from integrating ``z * (z exp(sigma z^2))`` by parts.
    """
    sigma = _check_sigma(sigma)
    z2 = (np.exp(-(_log_partition(sigma) - sigma)) - 1) / (2 * sigma)
    return float((1 - z2) / 2)


def gekht_lineshape(sigma: float, u):
    """Scaled absorption ``chi''/chi0`` of the dampingless classical spin.

    Parameters
    ----------
    sigma : float
        Barrier over temperature, ``D S^2 / T`` (> 0).
    u : float or array_like
        Reduced frequency ``Omega / (2DS)`` (>= 0).
    """
    sigma = _check_sigma(sigma)
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0):
        raise ValueError("reduced frequency must be >= 0")
    inside = u_arr <= 1
    uc = np.where(inside, u_arr, 0.0)
    # C exp(sigma u^2), written to stay finite for large sigma
    r = np.sqrt(sigma)
    weight = np.pi / 4 * r / dawsn(r) * np.exp(sigma * (uc**2 - 1))
    out = np.where(inside, weight * uc * (1 - uc**2), 0.0)
    return out if out.ndim else float(out)


def peak_location(sigma: float) -> float:
    """Interior maximum of ``u (1 - u^2) exp(sigma u^2)`` on ``(0, 1)``.

    Setting the log-derivative to zero gives
    ``2 sigma u^4 + (3 - 2 sigma) u^2 - 1 = 0``.
    """
    sigma = _check_sigma(sigma)
    a, b = 2 * sigma, 3 - 2 * sigma
    x = 2.0 / (b + np.sqrt(b * b + 4 * a))     # positive root for u^2, stable form
    return float(np.sqrt(x))


@dataclass(frozen=True, eq=False)
class ClassicalCurve:
    """Classical line-shape sampled on a reduced-frequency grid."""

    sigma: float
    u: np.ndarray
    values: np.ndarray

    @classmethod
    def sample(cls, sigma: float, u) -> "ClassicalCurve":
        u = np.asarray(u, dtype=float)
        return cls(_check_sigma(sigma), u, np.asarray(gekht_lineshape(sigma, u)))

    def sum_rule(self) -> float:
        """``(2/pi) int g(u)/u du`` by trapezoid over the sampled grid."""
        u = self.u[self.u > 0]
        g = self.values[self.u > 0] / u
        return float(2 / np.pi * (trapezoid(g, u) + g[0] * u[0]))


def relative_l2(u, quantum, sigma: float, window) -> float:
    """``||q - g|| / ||g||`` over ``window`` by trapezoid.

    The common grid is the spectrum's own points inside the window plus the
    two window ends, where ``q`` is linearly interpolated. ``u`` must be
    strictly increasing and cover ``window``.
    """
    u = np.asarray(u, dtype=float)
    q = np.asarray(quantum, dtype=float)
    a, b = (float(x) for x in window)
    if not 0 < a < b:
        raise ValueError(f"window must satisfy 0 < a < b, got {window}")
    if u.size < 2 or a < u[0] - 1e-12 * b or b > u[-1] + 1e-12 * b:
        lo, hi = (u[0], u[-1]) if u.size else (np.nan, np.nan)
        raise ValueError(f"window [{a}, {b}] is not covered by the spectrum grid [{lo}, {hi}]")
    inside = (u > a) & (u < b)
    uu = np.concatenate([[a], u[inside], [b]])
    qq = np.concatenate([[np.interp(a, u, q)], q[inside], [np.interp(b, u, q)]])
    g = gekht_lineshape(sigma, uu)
    norm = trapezoid(g**2, uu)
    if norm <= 0:
        raise ValueError("classical curve vanishes on the window")
    return float(np.sqrt(trapezoid((qq - g) ** 2, uu) / norm))


def crossover_distance(spec, sigma: float | None = None, window=(0.5, 1.1)) -> float:
    """Relative L2 distance of scaled ``chi''`` to the classical curve.

    ``sigma`` defaults to the spectrum's own ``D S^2 / T``.
    """
    if spec.model is None:
        raise ValueError("spectrum carries no model, cannot form reduced units")
    sigma = spec.model.sigma if sigma is None else sigma
    return relative_l2(spec.u, spec.chi_scaled.imag, sigma, window)
