import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinline.spin import (LevelIndexMap, SpinModel, ladder_factor, level_energy, spin_matrices,
                           sx_matrix_elements, transition_frequency)


def test_ladder_factor_examples():
    assert ladder_factor(10, 0) == pytest.approx(np.sqrt(110), rel=1e-15)
    assert ladder_factor(10, 10) == 0.0
    assert ladder_factor(10, -11) == 0.0
    assert ladder_factor(0.5, -0.5) == pytest.approx(1.0)


def test_ladder_factor_rejects_out_of_range():
    with pytest.raises(ValueError):
        ladder_factor(2, 3)
    with pytest.raises(ValueError):
        ladder_factor(2, 0.5)


@pytest.mark.parametrize("S", [0, -1, 0.3, 1.25])
def test_invalid_spin(S):
    with pytest.raises(ValueError):
        SpinModel(S, 1.0)


def test_model_validation():
    with pytest.raises(ValueError):
        SpinModel(1, -0.1)
    with pytest.raises(ValueError):
        SpinModel(1, 0.1, T=0)
    with pytest.raises(ValueError):
        SpinModel(1, 0.1, B=(0, 0))


@given(st.sampled_from([0.5, 1, 1.5, 2, 7, 10.5]))
def test_index_map_bijection(S):
    imap = LevelIndexMap(S)
    for i in range(imap.size):
        assert imap.index(imap.level(i)) == i
    with pytest.raises(ValueError):
        imap.index(S + 1)


def test_energies_and_transitions():
    m = SpinModel(10, 0.5, (0, 0, 0.2), 10.0)
    assert level_energy(m, 3) == pytest.approx(-0.5 * 9 - 0.6)
    # adjacent transitions of the zero-field ladder are D(2m+1)
    z = SpinModel(10, 0.5, T=10.0)
    for k in range(10):
        assert abs(transition_frequency(z, k, k + 1)) == pytest.approx(0.5 * (2 * k + 1))


def test_from_reduced():
    m = SpinModel.from_reduced(10, 5.0, 10.0, xi=2.0, field_direction=(1, 0, 0))
    assert m.D == pytest.approx(0.5)
    assert m.sigma == pytest.approx(5.0)
    assert m.xi == pytest.approx(2.0)
    assert m.B[0] == pytest.approx(2.0) and m.B[2] == 0
    assert m.has_transverse_field


@given(st.sampled_from([0.5, 1, 1.5, 3, 4.5]))
def test_spin_matrices_algebra(S):
    sx, sy, sz = spin_matrices(S)
    N = sx.shape[0]
    assert np.allclose(sx @ sy - sy @ sx, 1j * sz, atol=1e-12)
    casimir = sx @ sx + sy @ sy + sz @ sz
    assert np.allclose(casimir, S * (S + 1) * np.eye(N), atol=1e-12)


def test_sx_elements_match_dense():
    m = SpinModel(3, 0.2)
    sx = spin_matrices(3)[0]
    dense = np.zeros_like(sx)
    for a, b, v in sx_matrix_elements(m):
        dense[m.index_map.index(a), m.index_map.index(b)] = v
    assert np.allclose(dense, sx, atol=1e-15)


def test_boltzmann_normalised_and_symmetric():
    p = SpinModel(4, 0.3, T=0.7).boltzmann()
    assert p.sum() == pytest.approx(1.0)
    assert np.allclose(p, p[::-1])
