"""Block-tridiagonal form of the spin master equation.

The coefficient vectors are ``(c_n)_m = <X_n^m> = rho_{mn}`` and the master
equation reads

    dc_n/dt = Q_{n,n-1} c_{n-1} + Q_{n,n} c_n + Q_{n,n+1} c_{n+1},

with ``n`` the block (outer) index and ``m`` the component (inner) index.
Coefficient sets are stored as arrays ``c[n + S, m + S]``; the flat layout
``c.ravel()`` puts ``(n, m)`` at ``(n + S)(2S + 1) + (m + S)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bath import BathSpec, CouplingSpec, redfield_tables
from .spin import SpinModel


@dataclass(frozen=True, eq=False)
class BlockSystem:
    """Blocks ``sub[i] = Q_{n,n-1}``, ``diag[i] = Q_{n,n}``, ``sup[i] = Q_{n,n+1}``.

    Arrays have shape ``(N, N, N)`` with ``N = 2S + 1`` and ``i = n + S``.
    ``sub[0]`` and ``sup[-1]`` are zero (no blocks outside the ladder).
    ``diag_lo`` optionally holds the rounding remainder of the diagonal
    entries of each ``diag[i]`` (shape ``(N, N)``), used only for
    extended-precision residuals.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    model: SpinModel | None = None
    coupling: CouplingSpec | None = None
    bath: BathSpec | None = None
    b_plus: complex = 0j
    b_minus: complex = 0j
    meta: dict = field(default_factory=dict)
    diag_lo: np.ndarray | None = None

    def __post_init__(self):
        shapes = {self.sub.shape, self.diag.shape, self.sup.shape}
        if len(shapes) != 1:
            raise ValueError(f"block arrays disagree in shape: {sorted(shapes)}")
        (shape,) = shapes
        if len(shape) != 3 or shape[1] != shape[2]:
            raise ValueError(f"blocks must have shape (nblocks, k, k), got {shape}")

    @property
    def nblocks(self) -> int:
        return self.diag.shape[0]

    @property
    def block_size(self) -> int:
        return self.diag.shape[1]

    @property
    def sector_conserving(self) -> bool:
        """True when no transverse term is present, so ``n - m`` is conserved."""
        return self.b_plus == 0 and self.b_minus == 0 and self.meta.get("physical", False)

    def dense(self) -> np.ndarray:
        """Assemble the full matrix acting on ``c.ravel()``."""
        nb, k = self.nblocks, self.block_size
        Q = np.zeros((nb * k, nb * k), dtype=complex)
        for i in range(nb):
            r = slice(i * k, (i + 1) * k)
            Q[r, r] = self.diag[i]
            if i > 0:
                Q[r, (i - 1) * k:i * k] = self.sub[i]
            if i < nb - 1:
                Q[r, (i + 1) * k:(i + 2) * k] = self.sup[i]
        return Q


def _empty(N):
    return np.zeros((N, N, N), dtype=complex)


def drive_blocks(model: SpinModel, b_plus: complex, b_minus: complex) -> BlockSystem:
    """Blocks of the transverse-field terms alone.

    Encodes ``(i/2) B+ (l_m X_n^{m+1} - l_{n-1} X_{n-1}^m)
    + (i/2) B- (l_{m-1} X_n^{m-1} - l_n X_{n+1}^m)``.
    """
    N = model.dim
    lad = model.ladder_factors()          # l_k at index k + S
    sub, diag, sup = _empty(N), _empty(N), _empty(N)
    k = np.arange(N - 1)
    # in-block shifts of m: Q_{n,n}^{m,m+1} and Q_{n,n}^{m+1,m}
    diag[:, k, k + 1] += 0.5j * b_plus * lad[k]
    diag[:, k + 1, k] += 0.5j * b_minus * lad[k]
    # block shifts of n at fixed m
    eye = np.eye(N)
    sub[1:] += (-0.5j * b_plus * lad[:-1])[:, None, None] * eye
    sup[:-1] += (-0.5j * b_minus * lad[:-1])[:, None, None] * eye
    return BlockSystem(sub, diag, sup, model=model, b_plus=b_plus, b_minus=b_minus)


def build_blocks(model: SpinModel, cpl: CouplingSpec, bath: BathSpec,
                 transverse_drive: tuple[complex, complex] = (0j, 0j)) -> BlockSystem:
    """Assemble the generator blocks for precession, transverse fields and relaxation.

    ``transverse_drive`` is added to the static ``(B+, B-)`` of ``model``.
    """
    if not np.isclose(model.T, bath.T, rtol=1e-14, atol=0.0):
        raise ValueError(f"model and bath temperatures differ ({model.T} vs {bath.T})")
    if len(transverse_drive) != 2:
        raise ValueError("transverse_drive must be a pair (B+, B-)")
    N = model.dim
    b_plus = model.B_plus + complex(transverse_drive[0])
    b_minus = model.B_minus + complex(transverse_drive[1])
    drive = drive_blocks(model, b_plus, b_minus)
    sub, diag, sup = drive.sub.copy(), drive.diag.copy(), drive.sup.copy()

    eps = model.energies()
    lower, loss_ext, upper = redfield_tables(model, cpl, bath, extended=True)
    loss = loss_ext.astype(float)
    i = np.arange(N)
    # X_n^m: i Delta_nm plus the Redfield loss, on the diagonal of block n
    diag[:, i, i] += 1j * (eps[:, None] - eps[None, :]) + loss
    # gain terms (n, m) <- (n-1, m-1) and (n, m) <- (n+1, m+1)
    k = np.arange(1, N)
    sub[1:, k, k - 1] += lower[1:, 1:]
    k = np.arange(N - 1)
    sup[:-1, k, k + 1] += upper[:-1, :-1]
    return BlockSystem(sub, diag, sup, model=model, coupling=cpl, bath=bath,
                       b_plus=b_plus, b_minus=b_minus, meta={"physical": True},
                       diag_lo=(loss_ext - loss).astype(float))


def apply_generator(blocks: BlockSystem, c: np.ndarray) -> np.ndarray:
    """Right-hand side ``Q c`` of the recurrence for ``c`` of shape ``(nb, k)``."""
    c = np.asarray(c)
    if c.shape != (blocks.nblocks, blocks.block_size):
        raise ValueError(f"coefficient set has shape {c.shape}, expected "
                         f"{(blocks.nblocks, blocks.block_size)}")
    out = np.einsum("nij,nj->ni", blocks.diag, c)
    out[1:] += np.einsum("nij,nj->ni", blocks.sub[1:], c[:-1])
    out[:-1] += np.einsum("nij,nj->ni", blocks.sup[:-1], c[1:])
    return out


def trace_view(c: np.ndarray) -> complex:
    """``Tr rho = sum_m (c_m)_m``."""
    return complex(np.trace(c))


def density_matrix(c: np.ndarray) -> np.ndarray:
    """``rho[m, n] = (c_n)_m``."""
    return np.asarray(c).T


def coefficients_from_density(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).T.copy()


def sector_mask(N: int, sectors) -> np.ndarray:
    """Boolean mask of components ``(n, m)`` with ``n - m`` in ``sectors``."""
    i = np.arange(N)
    diff = i[:, None] - i[None, :]
    return np.isin(diff, list(sectors))
