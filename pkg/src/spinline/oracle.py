"""Dense reference generator and brute-force solves for small spins.

The dense matrix acts on the flat coefficient vector, index
``(n, m) -> (n + S)(2S + 1) + (m + S)``, which is the column-major
vectorisation of ``rho``. The unitary part is therefore built with
Kronecker products, ``vec(A rho B) = (B^T kron A) vec(rho)``, and the
relaxation rows are wired one ``(n, m)`` at a time from the scalar Redfield
coefficients. Nothing here reuses the block assembly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .bath import BathSpec, CouplingSpec, redfield_coefficients
from .spin import SpinModel, spin_matrices

DEFAULT_S_CAP = 8


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class DenseLiouvillian:
    matrix: np.ndarray
    S: float

    @property
    def dim(self) -> int:
        return int(round(2 * self.S)) + 1

    def flat_index(self, n, m) -> int:
        return int(round((n + self.S) * self.dim + (m + self.S)))


def _commutator_superop(A: np.ndarray) -> np.ndarray:
    """``-i [A, rho]`` on the column-major ``vec(rho)``."""
    eye = np.eye(A.shape[0])
    return -1j * (np.kron(eye, A) - np.kron(A.T, eye))


def _check_cap(model: SpinModel, s_cap: float):
    if model.S > s_cap:
        raise OracleError(f"dense oracle refuses S={model.S:g} above cap {s_cap:g}")


def build_dense(model: SpinModel, cpl: CouplingSpec, bath: BathSpec,
                drive: tuple[complex, complex] = (0j, 0j),
                s_cap: float = DEFAULT_S_CAP) -> DenseLiouvillian:
    """Dense generator for the static field plus an extra ``(B+, B-)`` term."""
    _check_cap(model, s_cap)
    S, N = model.S, model.dim
    sx, sy, sz = spin_matrices(S)
    splus, sminus = sx + 1j * sy, sx - 1j * sy
    bp = model.B_plus + complex(drive[0])
    bm = model.B_minus + complex(drive[1])
    H = -model.D * sz @ sz - model.B[2] * sz - 0.5 * (bp * sminus + bm * splus)
    Q = _commutator_superop(H)

    dense = DenseLiouvillian(Q, S)
    if bath.lam > 0:
        levels = [k - S for k in range(N)]
        for n in levels:
            for m in levels:
                r = redfield_coefficients(model, cpl, bath, n, m)
                row = dense.flat_index(n, m)
                Q[row, row] += r.diagonal
                if n - 1 >= -S and m - 1 >= -S:
                    Q[row, dense.flat_index(n - 1, m - 1)] += r.lower
                if n + 1 <= S and m + 1 <= S:
                    Q[row, dense.flat_index(n + 1, m + 1)] += r.upper
    return dense


def perturbation(model: SpinModel, axis: str = "x") -> np.ndarray:
    """Superoperator of ``H' = -A`` (unit drive along ``axis``)."""
    sx, sy, _ = spin_matrices(model.S)
    return _commutator_superop(-(sx if axis == "x" else sy))


def dense_stationary(dense: DenseLiouvillian, refine: int = 3) -> np.ndarray:
    """Unit-trace null vector of the dense generator.

    One population row is replaced by the trace functional and the system
    is solved by LU with a few steps of refinement against an
    extended-precision residual.
    """
    Q = dense.matrix
    N = dense.dim
    diag_idx = [k * N + k for k in range(N)]
    A = Q.copy()
    row = diag_idx[N - 1]
    A[row, :] = 0.0
    A[row, diag_idx] = 1.0
    b = np.zeros(N * N, dtype=complex)
    b[row] = 1.0
    lu = sla.lu_factor(A, check_finite=False)
    x = sla.lu_solve(lu, b, check_finite=False)
    A_ext = A.astype(np.clongdouble)
    for _ in range(refine):
        r = (b.astype(np.clongdouble) - A_ext @ x.astype(np.clongdouble)).astype(complex)
        x = x + sla.lu_solve(lu, r, check_finite=False)
    return x.reshape(N, N)


class OracleResponse:
    """Dense linear response for one model; caches generator and forcing."""

    def __init__(self, model: SpinModel, cpl: CouplingSpec, bath: BathSpec,
                 axis: str = "x", s_cap: float = DEFAULT_S_CAP):
        self.model = model
        self.dense = build_dense(model, cpl, bath, s_cap=s_cap)
        self.c0 = dense_stationary(self.dense)
        self.forcing = perturbation(model, axis) @ self.c0.ravel()
        sx, sy, _ = spin_matrices(model.S)
        self._obs = sx if axis == "x" else sy

    def first_order(self, omega: float) -> np.ndarray:
        N = self.dense.dim
        A = self.dense.matrix + 1j * omega * np.eye(N * N)
        try:
            x = sla.solve(A, -self.forcing, check_finite=False)
        except sla.LinAlgError as exc:
            raise OracleError(f"singular dense system at Omega={omega:g}") from exc
        return x.reshape(N, N)

    def chi(self, omega: float) -> complex:
        rho = self.first_order(omega).T
        return complex(np.trace(rho @ self._obs))


def oracle_susceptibility(model, cpl, bath, omega, s_cap: float = DEFAULT_S_CAP) -> complex:
    return OracleResponse(model, cpl, bath, s_cap=s_cap).chi(omega)


def oracle_sweep(model, cpl, bath, grid, s_cap: float = DEFAULT_S_CAP):
    from .response import Spectrum

    grid = np.asarray(grid, dtype=float)
    ref = OracleResponse(model, cpl, bath, s_cap=s_cap)
    return Spectrum(grid, np.array([ref.chi(w) for w in grid]), model, cpl, bath)


@dataclass(frozen=True)
class DeviationReport:
    max_relative: float
    mean_relative: float
    omega_at_max: float
    points: int

    def as_dict(self) -> dict:
        return {"max_relative": self.max_relative, "mean_relative": self.mean_relative,
                "omega_at_max": self.omega_at_max, "points": self.points}


def compare(a, b) -> DeviationReport:
    """Pointwise ``|a - b| / |a|`` over two spectra on the same grid."""
    if a.omega.shape != b.omega.shape or not np.array_equal(a.omega, b.omega):
        raise ValueError("spectra are sampled on different grids")
    if len(a) == 0:
        return DeviationReport(0.0, 0.0, float("nan"), 0)
    ref = np.where(np.abs(a.chi) > 0, np.abs(a.chi), np.abs(b.chi))
    diff = np.abs(a.chi - b.chi)
    rel = np.where(diff == 0, 0.0, diff / np.where(ref > 0, ref, 1.0))
    k = int(np.argmax(rel))
    return DeviationReport(float(rel.max()), float(rel.mean()), float(a.omega[k]), len(a))
