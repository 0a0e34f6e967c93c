import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinline.bath import BathSpec, CouplingSpec
from spinline.mcf import (ShiftedSystem, SolverError, StationaryStateError, solve_shifted,
                          stationary_state)
from spinline.presets import preset
from spinline.recurrence import BlockSystem, apply_generator, build_blocks
from spinline.spin import SpinModel


def _random_system(rng, nb, k):
    sub = rng.normal(size=(nb, k, k)) + 1j * rng.normal(size=(nb, k, k))
    sup = rng.normal(size=(nb, k, k)) + 1j * rng.normal(size=(nb, k, k))
    diag = rng.normal(size=(nb, k, k)) + 1j * rng.normal(size=(nb, k, k))
    diag += 4 * k * np.eye(k)  # diagonally dominant, well conditioned
    sub[0] = 0
    sup[-1] = 0
    return BlockSystem(sub, diag, sup)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 7), st.integers(1, 5),
       st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False))
def test_solve_matches_dense(seed, nb, k, z):
    rng = np.random.default_rng(seed)
    blocks = _random_system(rng, nb, k)
    f = rng.normal(size=(nb, k)) + 1j * rng.normal(size=(nb, k))
    A = blocks.dense() + z * np.eye(nb * k)
    ref = np.linalg.solve(A, f.ravel())
    for direction in ("descending", "ascending"):
        x = solve_shifted(ShiftedSystem(blocks, z, f), direction)
        assert np.allclose(x.ravel(), ref, rtol=1e-11, atol=1e-12 * np.abs(ref).max())


def test_physical_system_matches_dense():
    m = SpinModel.from_reduced(6, 5.0, 10.0)
    blocks = build_blocks(m, CouplingSpec.phonon(), BathSpec(3, 3e-8, 10.0))
    rng = np.random.default_rng(1)
    f = rng.normal(size=(13, 13)) + 0j
    z = -0.5j
    ref = np.linalg.solve(blocks.dense() + z * np.eye(169), f.ravel())
    x = solve_shifted(ShiftedSystem(blocks, z, f))
    assert np.abs(x.ravel() - ref).max() <= 1e-10 * np.abs(ref).max()


def test_singular_pivot_raises():
    k = 2
    diag = np.zeros((3, k, k), dtype=complex)
    blocks = BlockSystem(np.zeros_like(diag), diag, np.zeros_like(diag))
    with pytest.raises(SolverError) as info:
        solve_shifted(ShiftedSystem(blocks, 0.0, np.ones((3, k))))
    assert info.value.block_index is not None


def test_bad_arguments():
    blocks = _random_system(np.random.default_rng(0), 2, 2)
    with pytest.raises(ValueError):
        solve_shifted(ShiftedSystem(blocks, 0.0, np.ones((3, 2))))
    with pytest.raises(ValueError):
        solve_shifted(ShiftedSystem(blocks, 0.0, np.ones((2, 2))), "sideways")


def test_stationary_state_needs_coupling():
    blocks = build_blocks(SpinModel(2, 0.1), CouplingSpec.phonon(), BathSpec(3, 0.0, 1.0))
    with pytest.raises(StationaryStateError):
        stationary_state(blocks)


@pytest.mark.parametrize("S,sigma,T,lam", [(1, 1.0, 1.0, 0.1), (10, 5.0, 10.0, 3e-8),
                                           (10, 10.0, 10.0, 3e-8), (50, 1.0, 1.0, 0.5)])
def test_stationary_state_is_boltzmann(S, sigma, T, lam):
    m = SpinModel.from_reduced(S, sigma, T, xi=0.2)
    c = stationary_state(build_blocks(m, CouplingSpec.phonon(), BathSpec(3, lam, T)))
    p = np.diag(c).real
    assert np.max(np.abs(p / m.boltzmann() - 1)) <= 1e-10
    assert np.abs(c - np.diag(np.diag(c))).max() <= 1e-12
    assert abs(np.trace(c) - 1) <= 1e-14


def test_stationary_state_with_transverse_field():
    m = SpinModel(3, 0.3, (0.1, 0.05, 0.02), 0.7)
    blocks = build_blocks(m, CouplingSpec.phonon(), BathSpec(3, 0.2, 0.7))
    c = stationary_state(blocks)
    assert np.abs(apply_generator(blocks, c)).max() <= 1e-13
    rho = c.T
    assert np.allclose(rho, rho.conj().T, atol=1e-13)
    assert np.all(np.linalg.eigvalsh(rho) > 0)


def test_phonon_coupling_leaves_spin_half_undamped():
    # v(m) = m gives L = (1/2 - 1/2) l = 0, so populations never relax
    blocks = build_blocks(SpinModel(0.5, 0.0, (0, 0, 0.3)), CouplingSpec.phonon(),
                          BathSpec(3, 0.1, 1.0))
    with pytest.raises(StationaryStateError):
        stationary_state(blocks)


def test_electron_hole_preset_equilibrium():
    cfg = preset("fig3")[2]
    c = stationary_state(build_blocks(cfg.model(), cfg.coupling_spec(), cfg.bath(5e-4)))
    assert np.max(np.abs(np.diag(c).real / cfg.model().boltzmann() - 1)) <= 1e-10
