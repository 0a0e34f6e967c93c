"""Transverse AC susceptibility from the linearised master equation.

A drive ``Bx(t) = b exp(-i Omega t)`` enters through ``B+ = B- = b``. Writing
``c = c0 + b c1 exp(-i Omega t)`` and keeping first order in ``b``,

    (Q0 + i Omega) c1 = -f,     f = P c0,

where ``Q0`` is the drive-free generator and ``P`` the transverse-field
operator at unit amplitude. The susceptibility is ``chi = Tr(rho1 Sx)``;
with ``H' = -b Sx`` this makes ``chi'(0)`` the isothermal susceptibility.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .bath import BathSpec, CouplingSpec
from .mcf import ShiftedSystem, SolverError, solve_shifted, stationary_state
from .recurrence import BlockSystem, apply_generator, build_blocks, drive_blocks
from .spin import SpinModel, spin_matrices, sx_matrix_elements

_DRIVES = {"x": (1.0 + 0j, 1.0 + 0j), "y": (1j, -1j)}


class SweepError(RuntimeError):
    """A frequency point failed; ``partial`` holds the entries computed so far."""

    def __init__(self, message, omega, partial):
        self.omega = omega
        self.partial = partial
        super().__init__(message)


class CoverageWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Susceptibility samples ``chi(omega)`` on a strictly increasing grid."""

    omega: np.ndarray
    chi: np.ndarray
    model: SpinModel | None = None
    coupling: CouplingSpec | None = None
    bath: BathSpec | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float).reshape(-1)
        chi = np.asarray(self.chi, dtype=complex).reshape(-1)
        if omega.shape != chi.shape:
            raise ValueError("omega and chi must have the same length")
        if omega.size > 1 and np.any(np.diff(omega) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "chi", chi)

    def __len__(self):
        return self.omega.size

    @property
    def u(self) -> np.ndarray:
        """Reduced frequency ``Omega / (2 D S)``."""
        return self.omega / self.model.anisotropy_frequency

    @property
    def chi_scaled(self) -> np.ndarray:
        """``chi / chi0`` with ``chi0 = S(S+1)/T``."""
        return self.chi / self.model.chi0

    def passivity_violation(self) -> float:
        """Most negative ``chi''`` relative to ``max chi''`` (0 if none)."""
        if not len(self):
            return 0.0
        im = self.chi.imag
        top = im.max()
        return float(max(0.0, -im.min() / top)) if top > 0 else float(max(0.0, -im.min()))


def default_grid(model: SpinModel, count: int = 600, u_max: float = 1.2) -> np.ndarray:
    """``count`` uniform points on ``Omega / (2DS)`` in ``(0, u_max]``."""
    return model.anisotropy_frequency * u_max * np.arange(1, count + 1) / count


class LinearResponse:
    """Cached drive-free generator, equilibrium state and forcing for one model.

    Parameters
    ----------
    model, coupling, bath
        Spin, coupling structure and bath.
    axis : {"x", "y"}
        Direction of the weak AC drive and of the measured moment.
    """

    def __init__(self, model: SpinModel, coupling: CouplingSpec, bath: BathSpec,
                 axis: str = "x"):
        if axis not in _DRIVES:
            raise ValueError(f"drive axis must be 'x' or 'y', got {axis!r}")
        self.model, self.coupling, self.bath, self.axis = model, coupling, bath, axis
        self.blocks = build_blocks(model, coupling, bath)
        self.c0 = stationary_state(self.blocks)
        bp, bm = _DRIVES[axis]
        self.forcing = apply_generator(drive_blocks(model, bp, bm), self.c0)
        sx, sy, _ = spin_matrices(model.S)
        self._observable = sx if axis == "x" else sy
        self._reduced = self._sector_blocks() if self.blocks.sector_conserving else None

    # -- systems -----------------------------------------------------------
    def system(self, omega: float) -> ShiftedSystem:
        """``(Q0 + i Omega) c1 = -f`` in full block form."""
        return ShiftedSystem(self.blocks, 1j * omega, -self.forcing)

    def _sector_blocks(self):
        """Project onto components with ``n - m = +-1``.

        With a longitudinal static field the generator conserves ``n - m``
        and the forcing lives on ``n - m = +-1``, so the projection is exact.
        Each projected block is 2x2: slot 0 holds ``m = n - 1``, slot 1
        holds ``m = n + 1``. Slots outside the ladder become inert dummies.
        """
        N = self.model.dim
        offsets = np.array([1, -1])                  # n - m per slot
        i = np.arange(N)
        cols = i[:, None] - offsets[None, :]         # storage m per (n, slot)
        valid = (cols >= 0) & (cols < N)
        cc = np.clip(cols, 0, N - 1)
        sub = np.zeros((N, 2, 2), dtype=complex)
        diag = np.zeros((N, 2, 2), dtype=complex)
        sup = np.zeros((N, 2, 2), dtype=complex)
        for a in range(2):
            for b in range(2):
                diag[:, a, b] = self.blocks.diag[i, cc[:, a], cc[:, b]]
                sub[1:, a, b] = self.blocks.sub[i[1:], cc[1:, a], cc[:-1, b]]
                sup[:-1, a, b] = self.blocks.sup[i[:-1], cc[:-1, a], cc[1:, b]]
        both = valid[:, :, None] & valid[:, None, :]
        sub[1:] *= valid[1:, :, None] & valid[:-1, None, :]
        sup[:-1] *= valid[:-1, :, None] & valid[1:, None, :]
        diag *= both
        f = np.where(valid, self.forcing[i[:, None], cc], 0.0)
        mask = np.zeros((N, N), dtype=bool)
        mask[i[:, None].repeat(2, 1)[valid], cols[valid]] = True
        leak = np.abs(np.where(mask, 0.0, self.forcing)).max()
        if leak > 1e-12 * max(np.abs(self.forcing).max(), 1e-300):
            raise AssertionError("forcing has support outside the n - m = +-1 sectors")
        return sub, diag, sup, f, valid, cc

    def _solve_reduced(self, omega: float, direction: str) -> np.ndarray:
        sub, diag, sup, f, valid, cc = self._reduced
        z = 1j * omega
        d = diag.copy()
        # dummies: unit pivot after the shift, zero source, decoupled
        for a in range(2):
            d[~valid[:, a], a, a] = 1.0 - z
        red = solve_shifted(ShiftedSystem(BlockSystem(sub, d, sup), z, -f), direction)
        N = self.model.dim
        c1 = np.zeros((N, N), dtype=complex)
        rows = np.repeat(np.arange(N)[:, None], 2, axis=1)
        c1[rows[valid], cc[valid]] = red[valid]
        return c1

    # -- solutions ---------------------------------------------------------
    def first_order(self, omega: float, method: str = "auto",
                    direction: str = "descending") -> np.ndarray:
        """First-order coefficient set ``c1`` at drive frequency ``omega``.

        ``method="sector"`` solves the exact ``n - m = +-1`` projection;
        ``"full"`` runs the continued fraction on full blocks; ``"auto"``
        picks the projection whenever it is exact.
        """
        if method not in ("auto", "full", "sector"):
            raise ValueError(f"unknown method {method!r}")
        use_sector = method == "sector" or (method == "auto" and self._reduced is not None)
        if use_sector and self._reduced is None:
            raise ValueError("sector projection requires a longitudinal static field")
        try:
            if use_sector:
                return self._solve_reduced(omega, direction)
            return solve_shifted(self.system(omega), direction)
        except SolverError as exc:
            exc.omega = omega
            raise SolverError(f"{exc} at Omega={omega:g}", exc.block_index, omega) from exc

    def observable(self, c: np.ndarray) -> complex:
        """``Tr(rho A)`` for the drive-axis moment, with ``rho[m, n] = c[n, m]``."""
        if self.axis == "x":
            idx = self.model.index_map.index
            return complex(sum(v * c[idx(m), idx(mp)] for m, mp, v in sx_matrix_elements(self.model)))
        return complex(np.sum(c * self._observable))

    def chi(self, omega: float, method: str = "auto", direction: str = "descending") -> complex:
        return self.observable(self.first_order(omega, method, direction))

    def sweep(self, grid, method: str = "auto", workers: int | None = None) -> Spectrum:
        grid = np.asarray(grid, dtype=float).reshape(-1)
        if grid.size > 1 and np.any(np.diff(grid) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        if grid.size and grid[0] < 0:
            raise ValueError("frequencies must be >= 0")
        values = np.empty(grid.size, dtype=complex)

        def point(k):
            return self.chi(grid[k], method)

        done = 0
        try:
            if workers and workers > 1:
                with ThreadPoolExecutor(workers) as pool:
                    for k, v in enumerate(pool.map(point, range(grid.size))):
                        values[k] = v
                        done = k + 1
            else:
                for k in range(grid.size):
                    values[k] = point(k)
                    done = k + 1
        except SolverError as exc:
            partial = Spectrum(grid[:done], values[:done], self.model, self.coupling, self.bath)
            err = SweepError(f"sweep failed after {done} of {grid.size} points: {exc}",
                             exc.omega, partial)
            err.block_index = exc.block_index
            raise err from exc
        return Spectrum(grid, values, self.model, self.coupling, self.bath,
                        meta=fingerprint(self.model, self.coupling, self.bath))


def fingerprint(model: SpinModel, coupling: CouplingSpec, bath: BathSpec) -> dict:
    return {
        "S": model.S, "D": model.D, "B": list(model.B), "T": model.T,
        "sigma": model.sigma, "xi": model.xi,
        "v_kind": coupling.v_kind.value, "eta_plus": coupling.eta_plus,
        "anisotropy_prefactor": coupling.anisotropy_prefactor,
        "s": bath.s, "lambda": bath.lam,
    }


def linear_response_system(model, cpl, bath, omega) -> ShiftedSystem:
    return LinearResponse(model, cpl, bath).system(omega)


def susceptibility(model, cpl, bath, omega, method: str = "auto") -> complex:
    if omega < 0:
        raise ValueError("susceptibility is defined here for Omega >= 0")
    return LinearResponse(model, cpl, bath).chi(omega, method)


def sweep(model, cpl, bath, grid, method: str = "auto", workers: int | None = None) -> Spectrum:
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size == 0:
        return Spectrum(grid, np.zeros(0, complex), model, cpl, bath)
    return LinearResponse(model, cpl, bath).sweep(grid, method, workers)


def thermodynamic_susceptibility(model: SpinModel, axis: str = "x") -> float:
    """Isothermal transverse susceptibility from the static Hamiltonian.

    Non-degenerate pairs contribute ``|A_nm|^2 (p_m - p_n)/(e_n - e_m)``;
    degenerate pairs (including ``n = m``) the Curie term ``|A_nm|^2 p_m / T``,
    minus ``<A>^2 / T``.
    """
    sx, sy, sz = spin_matrices(model.S)
    H = -model.D * sz @ sz - model.B[0] * sx - model.B[1] * sy - model.B[2] * sz
    e, V = np.linalg.eigh(H)
    A = V.conj().T @ (sx if axis == "x" else sy) @ V
    w = np.exp(-(e - e.min()) / model.T)
    p = w / w.sum()
    A2 = np.abs(A) ** 2
    de = e[:, None] - e[None, :]                      # e_n - e_m
    degenerate = np.abs(de) <= 1e-12 * max(1.0, np.abs(e).max())
    safe = np.where(degenerate, 1.0, de)
    regular = np.where(degenerate, 0.0, A2 * (p[None, :] - p[:, None]) / safe)
    curie = np.where(degenerate, A2 * p[None, :] / model.T, 0.0)
    mean = np.sum(p * np.diag(A).real)
    return float(regular.sum() + curie.sum() - mean**2 / model.T)


def static_susceptibility_check(model, cpl, bath, omega0: float | None = None,
                                response: LinearResponse | None = None):
    """Return ``(chi'(omega0), chi_thermo)`` with ``omega0`` far below every line.

    ``response`` reuses an already prepared :class:`LinearResponse`.
    """
    if bath.lam <= 0:
        raise ValueError("static check needs lambda > 0")
    if omega0 is None:
        scale = model.D if model.D > 0 else max(abs(model.B[2]), model.T)
        omega0 = 1e-4 * scale
    lr = response if response is not None else LinearResponse(model, cpl, bath)
    return lr.chi(omega0).real, thermodynamic_susceptibility(model, lr.axis)


@dataclass(frozen=True)
class SumRule:
    """Kramers-Kronig integral with a flag for a grid that misses part of ``chi''``."""

    value: float
    truncated: bool

    def __float__(self):
        return self.value


def sum_rule(spec: Spectrum, coverage_tol: float = 1e-3) -> SumRule:
    """``(2/pi) int chi''(Omega)/Omega dOmega`` by the trapezoidal rule.

    The segment from 0 to the first grid point uses ``chi'' ~ Omega``.
    If ``chi''`` at the top of the grid exceeds ``coverage_tol`` times its
    maximum, the result is flagged as truncated and a
    :class:`CoverageWarning` is issued.
    """
    w = spec.omega
    im = spec.chi.imag
    keep = w > 0
    w, im = w[keep], im[keep]
    if w.size == 0:
        return SumRule(0.0, False)
    g = im / w
    total = trapezoid(g, w) if w.size > 1 else 0.0
    total += g[0] * w[0]
    peak = np.abs(im).max()
    truncated = bool(peak > 0 and abs(im[-1]) > coverage_tol * peak)
    if truncated:
        warnings.warn("chi'' has not decayed at the top of the grid; "
                      "sum rule is likely truncated", CoverageWarning, stacklevel=2)
    return SumRule(float(2 / np.pi * total), truncated)


def line_widths(blocks: BlockSystem) -> tuple[np.ndarray, np.ndarray]:
    """Adjacent-level transition frequencies and their Redfield linewidths.

    Returns ``(|Delta_{m,m+1}|, gamma)`` for ``m = -S .. S-1``, where gamma
    is the loss rate of the coherence ``rho_{m,m+1}``.
    """
    model = blocks.model
    eps = model.energies()
    N = model.dim
    k = np.arange(N - 1)
    gamma = -blocks.diag[k + 1, k, k].real
    return np.abs(eps[k] - eps[k + 1]), gamma


def resonance_grid(blocks: BlockSystem, per_line: int = 400, background: int = 2000,
                   u_max: float = 1.2, half_span: float = 30.0) -> np.ndarray:
    """Frequency grid adapted to Lorentzian lines of the generator.

    Around every transition ``Delta`` with linewidth ``gamma`` the points
    ``Delta + gamma tan(theta)`` (``theta`` uniform) resolve the peak at any
    width; a uniform background covers the rest up to ``u_max * 2DS``.
    """
    model = blocks.model
    top = u_max * model.anisotropy_frequency if model.D > 0 else 2 * abs(model.B[2])
    pts = [top * np.arange(1, background + 1) / background]
    for delta, gamma in zip(*line_widths(blocks)):
        if delta <= 0 or gamma <= 0:
            continue
        theta = np.linspace(-np.arctan(half_span), np.arctan(half_span), per_line)
        pts.append(delta + gamma * np.tan(theta))
    grid = np.unique(np.concatenate(pts))
    grid = grid[(grid > 0) & (grid <= top)]
    keep = np.concatenate([[True], np.diff(grid) > 1e-12 * grid[1:]])
    return grid[keep]


@dataclass(frozen=True)
class Peak:
    location: float
    height: float
    fwhm: float


def ground_transition(model: SpinModel) -> float:
    """Frequency of the line leaving the most populated level towards the barrier."""
    p = model.boltzmann()
    k = int(np.flatnonzero(p >= p.max() * (1 - 1e-12))[-1])
    j = k - 1 if k > (model.dim - 1) / 2 else k + 1
    eps = model.energies()
    return float(abs(eps[k] - eps[j]))


def peak_profile(response: LinearResponse, center: float, half_window: float,
                 scan: int = 201, with_width: bool = True) -> Peak:
    """Locate the ``chi''`` maximum near ``center`` and measure its FWHM.

    A coarse scan over ``center +- half_window`` is refined by a bounded
    scalar search; half-maximum crossings are then bracketed by stepping
    outwards and solved with Brent's method.
    """
    from scipy.optimize import brentq, minimize_scalar

    def im(w):
        return response.chi(w).imag

    lo, hi = max(center - half_window, 0.0), center + half_window
    ws = np.linspace(lo, hi, scan)[1:] if lo == 0.0 else np.linspace(lo, hi, scan)
    vals = np.array([im(w) for w in ws])
    k = int(np.argmax(vals))
    a, b = ws[max(k - 1, 0)], ws[min(k + 1, ws.size - 1)]
    res = minimize_scalar(lambda w: -im(w), bounds=(a, b), method="bounded",
                          options={"xatol": 1e-10 * max(center, 1e-300)})
    loc, height = (res.x, -res.fun) if -res.fun >= vals[k] else (ws[k], vals[k])
    if not with_width:
        return Peak(float(loc), float(height), float("nan"))

    half = height / 2
    step = (hi - lo) / (scan - 1)

    def crossing(sign):
        inner, outer = loc, loc + sign * step
        while im(outer) > half:
            inner, outer = outer, outer + sign * step
            if outer <= 0 or abs(outer - loc) > 4 * half_window:
                raise ValueError("peak does not fall to half maximum inside the search range")
        return brentq(lambda w: im(w) - half, min(inner, outer), max(inner, outer),
                      xtol=1e-12 * center)

    return Peak(float(loc), float(height), float(crossing(1) - crossing(-1)))


def local_maxima(spec: Spectrum) -> np.ndarray:
    """Grid frequencies where ``chi''`` exceeds both neighbours."""
    im = spec.chi.imag
    if im.size < 3:
        return np.zeros(0)
    k = np.flatnonzero((im[1:-1] > im[:-2]) & (im[1:-1] > im[2:])) + 1
    return spec.omega[k]


class MatchError(RuntimeError):
    pass


def ground_line_height(model: SpinModel, coupling: CouplingSpec, bath: BathSpec) -> float:
    """``chi''`` at the ground-state transition frequency.

    Evaluated at the line's locus rather than at a searched maximum: once
    neighbouring lines overlap the maximum drifts or disappears, while the
    value at the locus stays defined and decreases monotonically with ``lam``.
    """
    return LinearResponse(model, coupling, bath).chi(ground_transition(model)).imag


def match_lambda(model: SpinModel, coupling: CouplingSpec, s: int, target: float,
                 lam0: float, rtol: float = 1e-4, maxiter: int = 50) -> float:
    """``lam`` giving a ground-state line of height ``target``.

    Secant iteration on ``log lam`` for ``log(h(lam) / target)``. The second
    starting point assumes ``h ~ 1/lam``, which holds for an isolated line.
    """
    from scipy.optimize import root_scalar

    if not target > 0 or not lam0 > 0:
        raise MatchError("target height and starting lam must be positive")

    def f(x):
        return np.log(ground_line_height(model, coupling, BathSpec(s, np.exp(x), model.T)) / target)

    x0 = np.log(lam0)
    f0 = f(x0)
    if abs(f0) <= rtol / 2:
        return float(lam0)
    res = root_scalar(f, x0=x0, x1=x0 + f0, method="secant", xtol=1e-9, maxiter=maxiter)
    lam = float(np.exp(res.root))
    err = abs(np.expm1(f(res.root)))
    if not res.converged or err > rtol:
        raise MatchError(f"lambda search did not reach rtol={rtol} (relative height error {err:.3g})")
    return lam
