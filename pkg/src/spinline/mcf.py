"""Matrix continued-fraction solution of shifted block-tridiagonal systems.

For ``(z I + Q) c = f`` the descending sweep eliminates from ``n = S``
downwards, storing propagators ``P_n`` and offsets ``a_n`` with

    c_n = P_n c_{n-1} + a_n,
    P_n = -(Q_nn + z + Q_{n,n+1} P_{n+1})^{-1} Q_{n,n-1},

and back-substitutes from ``n = -S``. The ascending sweep is the mirror
image. The spin ladder terminates at ``n = +-S`` so no truncation index is
needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .recurrence import BlockSystem, apply_generator, trace_view

PIVOT_GROWTH_LIMIT = 1e12


class SolverError(RuntimeError):
    """Singular or ill-conditioned pivot block during elimination."""

    def __init__(self, message: str, block_index: int | None = None, omega=None):
        self.block_index = block_index
        self.omega = omega
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class ShiftedSystem:
    blocks: BlockSystem
    shift: complex
    source: np.ndarray


def _factor(A: np.ndarray, i: int, offset: float):
    # rows are equilibrated first so the pivot ratio compares like with like
    scale = np.abs(A).max(axis=1)
    if not np.all(scale > 0):
        raise SolverError(f"pivot block n={i - offset:g} has an empty row", block_index=i)
    rs = 1.0 / scale
    lu, piv = sla.lu_factor(A * rs[:, None], check_finite=False)
    d = np.abs(np.diag(lu))
    dmax, dmin = d.max(), d.min()
    if not np.isfinite(dmax) or dmin == 0.0 or dmax > PIVOT_GROWTH_LIMIT * dmin:
        growth = np.inf if dmin == 0.0 else dmax / dmin
        raise SolverError(
            f"pivot block n={i - offset:g} is singular or ill-conditioned "
            f"(pivot ratio {growth:.3g})", block_index=i)
    return lu, piv, rs


def solve_shifted(sys: ShiftedSystem, direction: str = "descending") -> np.ndarray:
    """Solve ``sub[n] c_{n-1} + (diag[n] + z) c_n + sup[n] c_{n+1} = f_n``.

    Parameters
    ----------
    sys : ShiftedSystem
        Blocks, scalar shift ``z`` and source ``f`` of shape ``(nb, k)``.
    direction : {"descending", "ascending"}
        Which boundary the elimination starts from.

    Returns
    -------
    ndarray
        Solution ``c`` with the shape of the source.
    """
    blocks = sys.blocks
    nb, k = blocks.nblocks, blocks.block_size
    f = np.asarray(sys.source, dtype=complex)
    if f.shape != (nb, k):
        raise ValueError(f"source has shape {f.shape}, expected {(nb, k)}")
    if direction == "descending":
        order = range(nb - 1, -1, -1)
        ahead, behind = blocks.sup, blocks.sub
        step = 1
    elif direction == "ascending":
        order = range(nb)
        ahead, behind = blocks.sub, blocks.sup
        step = -1
    else:
        raise ValueError(f"unknown sweep direction {direction!r}")

    offset = (nb - 1) / 2
    shift = sys.shift * np.eye(k)
    prop = np.zeros((nb, k, k), dtype=complex)
    acc = np.zeros((nb, k), dtype=complex)
    first = True
    for i in order:
        A = blocks.diag[i] + shift
        rhs = f[i].copy()
        if not first:
            j = i + step
            A = A + ahead[i] @ prop[j]
            rhs -= ahead[i] @ acc[j]
        first = False
        lu, piv, rs = _factor(A, i, offset)
        acc[i] = sla.lu_solve((lu, piv), rs * rhs, check_finite=False)
        if 0 <= i - step < nb:
            prop[i] = -sla.lu_solve((lu, piv), rs[:, None] * behind[i], check_finite=False)

    c = np.zeros((nb, k), dtype=complex)
    back = list(order)[::-1]
    c[back[0]] = acc[back[0]]
    for i in back[1:]:
        c[i] = prop[i] @ c[i - step] + acc[i]
    return c


class StationaryStateError(RuntimeError):
    pass


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a):
    c = 134217729.0 * a  # 2**27 + 1
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _sum2(terms):
    """Cascaded compensated sum (Ogita-Rump-Oishi), twice-working-precision accurate."""
    s = np.zeros_like(terms[0])
    comp = np.zeros_like(terms[0])
    for t in terms:
        s, e = _two_sum(s, t)
        comp += e
    return s + comp


def _band_residual(blocks: BlockSystem, c: np.ndarray, f: np.ndarray) -> np.ndarray:
    """``f - Q c`` in double-double accuracy for blocks with tridiagonal bands.

    A stationary state of a double-well ladder is extremely sensitive to
    residual errors that do not conserve probability (they have to drain
    through the barrier), so plain double or even extended precision is not
    enough at large S.
    """
    nb, k = blocks.nblocks, blocks.block_size
    cpad = np.zeros((nb + 2, k + 2), dtype=complex)
    cpad[1:-1, 1:-1] = c
    rows = np.arange(k)
    coeffs, values = [], []
    for arr, di in ((blocks.sub, -1), (blocks.diag, 0), (blocks.sup, 1)):
        for dm in (-1, 0, 1):
            cols = rows + dm
            ok = (cols >= 0) & (cols < k)
            band = np.zeros((nb, k), dtype=complex)
            band[:, ok] = arr[:, rows[ok], cols[ok]]
            coeffs.append(band)
            values.append(cpad[1 + di:nb + 1 + di, 1 + dm:k + 1 + dm])
    if blocks.diag_lo is not None:
        coeffs.append(blocks.diag_lo.astype(complex))
        values.append(c)

    re_terms, im_terms = [f.real.copy()], [f.imag.copy()]
    for a, v in zip(coeffs, values):
        for x, y, sign, target in ((a.real, v.real, -1, re_terms), (a.imag, v.imag, 1, re_terms),
                                   (a.real, v.imag, -1, im_terms), (a.imag, v.real, -1, im_terms)):
            p, e = _two_prod(x, y)
            target.extend((sign * p, sign * e))
    return _sum2(re_terms) + 1j * _sum2(im_terms)


def _is_banded(blocks: BlockSystem) -> bool:
    k = blocks.block_size
    i = np.arange(k)
    outside = np.abs(i[:, None] - i[None, :]) > 1
    return not any(np.any(arr[:, outside]) for arr in (blocks.sub, blocks.diag, blocks.sup))


def _residual_extended(blocks: BlockSystem, c: np.ndarray, f: np.ndarray) -> np.ndarray:
    """``f - Q c`` accumulated in extended precision, one block row at a time."""
    ext = np.clongdouble
    c_ext = c.astype(ext)
    r = f.astype(ext)
    nb = blocks.nblocks
    if blocks.diag_lo is not None:
        r -= blocks.diag_lo.astype(ext) * c_ext
    for i in range(nb):
        r[i] -= blocks.diag[i].astype(ext) @ c_ext[i]
        if i > 0:
            r[i] -= blocks.sub[i].astype(ext) @ c_ext[i - 1]
        if i < nb - 1:
            r[i] -= blocks.sup[i].astype(ext) @ c_ext[i + 1]
    return r.astype(complex)


def stationary_state(blocks: BlockSystem, check: bool = True, refine: int = 4) -> np.ndarray:
    """Trace-normalised null vector of the generator.

    The population equation of the most populated level is replaced by the
    pinning condition ``(c_n)_n = 1`` (a single diagonal entry, so the block
    structure survives); the solution is then rescaled to unit trace. This
    is legitimate because the population equations sum to zero, which makes
    any one of them redundant. The sweep starts at the pinned block so the
    population chain is eliminated away from the fixed value, which avoids
    cancellation between large downhill and small uphill rates.
    """
    model, bath = blocks.model, blocks.bath
    if model is None or bath is None:
        raise StationaryStateError("stationary_state needs blocks built from a model and bath")
    if bath.lam == 0:
        raise StationaryStateError("no unique stationary state without bath coupling (lambda = 0)")
    N = blocks.block_size
    p = model.boltzmann()
    pin = int(np.flatnonzero(p >= p.max() * (1 - 1e-12))[-1])
    direction = "descending" if pin >= (N - 1) / 2 else "ascending"

    sub, diag, sup = blocks.sub.copy(), blocks.diag.copy(), blocks.sup.copy()
    sub[pin, pin, :] = 0
    sup[pin, pin, :] = 0
    diag[pin, pin, :] = 0
    diag[pin, pin, pin] = 1.0
    lo = None
    if blocks.diag_lo is not None:
        lo = blocks.diag_lo.copy()
        lo[pin, pin] = 0.0
    pinned = BlockSystem(sub, diag, sup, diag_lo=lo)
    f = np.zeros((N, N), dtype=complex)
    f[pin, pin] = 1.0
    try:
        c = solve_shifted(ShiftedSystem(pinned, 0.0, f), direction)
        # Elimination across a barrier loses relative accuracy in the far
        # well; refinement against an accurate residual restores it.
        residual = _band_residual if _is_banded(pinned) else _residual_extended
        for _ in range(refine):
            delta = solve_shifted(
                ShiftedSystem(pinned, 0.0, residual(pinned, c, f)), direction)
            c += delta
            if np.abs(delta).max() <= 1e-16 * np.abs(c).max():
                break
    except SolverError as exc:
        raise StationaryStateError(
            f"generator has more than one zero mode ({exc})") from exc
    c /= trace_view(c)

    if check:
        scale = max(np.abs(blocks.diag).max(), np.abs(blocks.sub).max(),
                    np.abs(blocks.sup).max())
        resid = np.abs(apply_generator(blocks, c)).max()
        if resid > 1e-11 * scale:
            raise StationaryStateError(f"stationary residual {resid:.3g} exceeds tolerance")
        if blocks.sector_conserving:
            off = np.abs(c - np.diag(np.diag(c))).max()
            if off > 1e-12:
                raise StationaryStateError(f"coherences {off:.3g} should vanish")
            p = np.diag(c).real
            pb = model.boltzmann()
            dev = np.max(np.abs(p - pb) / pb)
            if dev > 1e-10:
                raise StationaryStateError(f"populations deviate from Boltzmann by {dev:.3g}")
    return c
