import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinline.bath import BathSpec, CouplingSpec
from spinline.oracle import build_dense
from spinline.recurrence import (apply_generator, build_blocks, coefficients_from_density,
                                 density_matrix, drive_blocks, sector_mask, trace_view)
from spinline.spin import SpinModel, spin_matrices


def _commutator(A):
    eye = np.eye(A.shape[0])
    return -1j * (np.kron(eye, A) - np.kron(A.T, eye))


def test_flat_layout_is_column_major_rho():
    rho = np.arange(9).reshape(3, 3) + 1j
    c = coefficients_from_density(rho)
    assert np.array_equal(c.ravel(), rho.ravel(order="F"))
    assert np.array_equal(density_matrix(c), rho)
    assert trace_view(c) == np.trace(rho)


@given(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
       st.sampled_from([0.5, 1, 2.5]))
def test_drive_blocks_match_commutator(bp, S):
    m = SpinModel(S, 0.0)
    sx, sy, _ = spin_matrices(S)
    splus, sminus = sx + 1j * sy, sx - 1j * sy
    bm = np.conj(bp)
    H = -0.5 * (bp * sminus + bm * splus)
    assert np.allclose(drive_blocks(m, bp, bm).dense(), _commutator(H), atol=1e-13)


def test_zero_coupling_is_pure_precession():
    m = SpinModel(2, 0.3, (0, 0, 0.1), 1.0)
    Q = build_blocks(m, CouplingSpec.phonon(), BathSpec(3, 0.0, 1.0)).dense()
    eps = m.energies()
    expected = 1j * (eps[:, None] - eps[None, :]).ravel()
    assert np.allclose(Q, np.diag(expected))


@pytest.mark.parametrize("S,B", [(1, (0, 0, 0)), (2.5, (0.1, -0.2, 0.3)), (4, (0, 0, 0.2))])
def test_blocks_match_dense_oracle(S, B):
    m = SpinModel(S, 0.4, B, 0.8)
    c, b = CouplingSpec.phonon(), BathSpec(3, 0.05, 0.8)
    Qb = build_blocks(m, c, b).dense()
    Qd = build_dense(m, c, b).matrix
    assert np.abs(Qb - Qd).max() <= 1e-14 * np.abs(Qd).max()


@settings(max_examples=25)
@given(st.integers(0, 2**31 - 1))
def test_apply_generator_matches_dense(seed):
    rng = np.random.default_rng(seed)
    m = SpinModel(2, 0.5, (0.3, 0.1, 0.2), 1.5)
    blocks = build_blocks(m, CouplingSpec.bilinear(), BathSpec(1, 0.02, 1.5))
    c = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    assert np.allclose(apply_generator(blocks, c).ravel(), blocks.dense() @ c.ravel(), atol=1e-13)


@pytest.mark.parametrize("B", [(0, 0, 0), (0.2, 0.1, 0.05)])
def test_trace_is_conserved(B):
    m = SpinModel(3, 0.3, B, 1.0)
    Q = build_blocks(m, CouplingSpec.phonon(), BathSpec(3, 0.1, 1.0)).dense()
    N = m.dim
    trace_row = np.zeros(N * N)
    trace_row[[k * N + k for k in range(N)]] = 1
    assert np.abs(trace_row @ Q).max() <= 1e-13 * np.abs(Q).max()


def test_sector_structure():
    m = SpinModel(3, 0.3, (0, 0, 0.1), 1.0)
    blocks = build_blocks(m, CouplingSpec.phonon(), BathSpec(3, 0.1, 1.0))
    assert blocks.sector_conserving
    Q = blocks.dense()
    N = m.dim
    diff = (np.arange(N)[:, None] - np.arange(N)[None, :]).ravel()
    coupled = np.abs(Q) > 0
    assert np.all(diff[:, None] == diff[None, :], where=coupled)
    assert not build_blocks(SpinModel(3, 0.3, (0.1, 0, 0)), CouplingSpec.phonon(),
                            BathSpec(3, 0.1, 1.0)).sector_conserving


def test_sector_mask():
    mask = sector_mask(3, [1, -1])
    assert mask.sum() == 4 and not mask.diagonal().any()


def test_temperature_mismatch_rejected():
    with pytest.raises(ValueError):
        build_blocks(SpinModel(1, 0.1, T=1.0), CouplingSpec.phonon(), BathSpec(3, 0.1, 2.0))


def test_apply_generator_shape_check():
    blocks = build_blocks(SpinModel(1, 0.1), CouplingSpec.phonon(), BathSpec(3, 0.1, 1.0))
    with pytest.raises(ValueError):
        apply_generator(blocks, np.zeros((2, 2)))
