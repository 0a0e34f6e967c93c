import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinline.bath import (BathSpec, CouplingSpec, coupling_elements, coupling_matrix, rate,
                           redfield_coefficients, redfield_tables, spectral_density)
from spinline.spin import SpinModel, spin_matrices


def test_spectral_density_examples():
    assert spectral_density(BathSpec(1, 2.0), 3.0) == 6.0
    assert spectral_density(BathSpec(3, 1.0), -1.0) == 0.0
    assert spectral_density(BathSpec(3, 1.0), 2.0) == 8.0


def test_bath_validation():
    for bad in ({"s": 2}, {"s": 0}, {"lam": -1}, {"T": 0}):
        with pytest.raises(ValueError):
            BathSpec(**bad)


def test_rate_limits():
    assert rate(BathSpec(1, 1.0, 1.0), 0.0) == pytest.approx(1.0)
    assert rate(BathSpec(1, 2.0, 3.0), 1e-12) == pytest.approx(6.0)
    assert rate(BathSpec(3, 1.0, 1.0), 0.0) == 0.0


def test_rate_against_high_precision():
    # W(1) = J(1) n(1) with T=2
    expected = float(1 / (mp.e ** mp.mpf("0.5") - 1))
    assert rate(BathSpec(3, 1.0, 2.0), 1.0) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(1.541494, rel=1e-6)


@settings(max_examples=300)
@given(st.floats(1e-6, 50), st.floats(1e-3, 20), st.sampled_from([1, 3]))
def test_detailed_balance_property(delta, T, s):
    b = BathSpec(s, 1.0, T)
    ratio = rate(b, delta) / rate(b, -delta)
    assert ratio == pytest.approx(np.exp(-delta / T), rel=1e-13, abs=1e-300)


@given(st.floats(-30, 30), st.sampled_from([1, 3]))
def test_rate_nonnegative(delta, s):
    assert rate(BathSpec(s, 0.7, 1.3), delta) >= 0


def test_rate_continuous_across_series_switch():
    b = BathSpec(1, 1.0, 1.0)
    assert rate(b, 0.99e-8) == pytest.approx(rate(b, 1.01e-8), rel=1e-7)


def test_coupling_elements_examples():
    m = SpinModel(10, 0.5, T=10.0)
    L = coupling_elements(m, CouplingSpec(anisotropy_prefactor=False))
    assert L(1, 0) == pytest.approx(np.sqrt(110))
    assert abs(L(0, -1)) == pytest.approx(np.sqrt(110))
    assert L(3, 1) == 0.0


def test_bilinear_is_sx():
    m = SpinModel(1, 0.3)
    F = coupling_matrix(m, CouplingSpec.bilinear())
    assert np.allclose(F, spin_matrices(1)[0], atol=1e-15)
    assert coupling_elements(m, CouplingSpec.bilinear())(1, 0) == pytest.approx(np.sqrt(2) / 2)


def test_eta_must_be_conjugate():
    with pytest.raises(ValueError):
        CouplingSpec(eta_plus=1.0, eta_minus=0.5)


@given(st.sampled_from([1, 2.5, 6, 10]))
def test_linear_coupling_structure(S):
    m = SpinModel(S, 0.4)
    L = coupling_elements(m, CouplingSpec(anisotropy_prefactor=False)).lowered
    lad = m.ladder_factors()
    for k, mm in enumerate(m.levels[:-1]):
        assert abs(L[k]) ** 2 == pytest.approx((2 * mm + 1) ** 2 * lad[k] ** 2, rel=1e-13, abs=1e-13)


def test_phonon_prefactor_scales_with_D():
    m = SpinModel(3, 0.25)
    a = coupling_elements(m, CouplingSpec.phonon()).lowered
    b = coupling_elements(m, CouplingSpec(anisotropy_prefactor=False)).lowered
    assert np.allclose(a, 0.25 * b)


def test_top_level_has_no_upper_term():
    m = SpinModel(2, 0.5, T=0.5)
    r = redfield_coefficients(m, CouplingSpec.phonon(), BathSpec(3, 1e-3, 0.5), 2, 2)
    assert r.upper == 0


def test_two_level_rates():
    h, T = 0.8, 0.5
    m = SpinModel(0.5, 0.0, (0, 0, h), T)
    bath = BathSpec(1, 0.1, T)
    up = redfield_coefficients(m, CouplingSpec.bilinear(), bath, 0.5, 0.5)
    dn = redfield_coefficients(m, CouplingSpec.bilinear(), bath, -0.5, -0.5)
    # gain of the ground level from below over its loss ratio is exp(h/T)
    assert (up.lower / 2) / (-up.diagonal / 2) == pytest.approx(np.exp(h / T), rel=1e-13)
    assert -dn.diagonal == pytest.approx(up.lower.real, rel=1e-14)


def _coefficient_oracle(S, D, T, lam, n, m):
    """Term-by-term evaluation in 30-digit arithmetic, phonon model, s=3."""
    mp.mp.dps = 30
    S, D, T, lam = (mp.mpf(x) for x in (S, D, T, lam))

    def eps(k):
        return -D * k * k

    def lad(k):
        return mp.sqrt(max(S * (S + 1) - k * (k + 1), 0))

    def L(a, b):  # a = b + 1
        if b < -S or a > S:
            return mp.mpf(0)
        return D * (a + b) * lad(b)

    def W(a, b):
        d = eps(a) - eps(b)
        if d == 0:
            return mp.mpf(0)
        return lam * d**3 / (mp.e ** (d / T) - 1)

    lower = L(n, n - 1) * L(m, m - 1) * (W(n, n - 1) + W(m, m - 1))
    loss = (L(n + 1, n) ** 2 * W(n + 1, n) + L(m + 1, m) ** 2 * W(m + 1, m)
            + L(n, n - 1) ** 2 * W(n - 1, n) + L(m, m - 1) ** 2 * W(m - 1, m))
    upper = L(n + 1, n) * L(m + 1, m) * (W(n, n + 1) + W(m, m + 1))
    return float(lower), float(-loss), float(upper)


def test_coefficient_table_against_oracle():
    S, D, T, lam = 1, 0.5, 0.5, 1e-3
    model = SpinModel(S, D, T=T)
    bath = BathSpec(3, lam, T)
    for n in (-1, 0, 1):
        for m in (-1, 0, 1):
            r = redfield_coefficients(model, CouplingSpec.phonon(), bath, n, m)
            lo, dg, up = _coefficient_oracle(S, D, T, lam, n, m)
            assert r.lower.real == pytest.approx(lo, rel=1e-13, abs=1e-18)
            assert r.diagonal == pytest.approx(dg, rel=1e-13, abs=1e-18)
            assert r.upper.real == pytest.approx(up, rel=1e-13, abs=1e-18)


@pytest.mark.parametrize("S,sigma,s,cpl", [(3, 2.0, 3, "phonon"), (4.5, 1.0, 1, "bilinear"),
                                           (10, 5.0, 3, "phonon")])
def test_tables_match_scalar_coefficients(S, sigma, s, cpl):
    m = SpinModel.from_reduced(S, sigma, 1.0, xi=0.3)
    c = getattr(CouplingSpec, cpl)()
    b = BathSpec(s, 0.01, 1.0)
    lower, diag, upper = redfield_tables(m, c, b)
    for i, n in enumerate(m.levels):
        for j, mm in enumerate(m.levels):
            r = redfield_coefficients(m, c, b, n, mm)
            scale = max(abs(r.lower), abs(r.diagonal), abs(r.upper), 1e-300)
            assert abs(lower[i, j] - r.lower) <= 1e-14 * scale
            assert abs(diag[i, j] - r.diagonal) <= 1e-14 * scale
            assert abs(upper[i, j] - r.upper) <= 1e-14 * scale


@pytest.mark.parametrize("S,sigma,T,s", [(2, 1.0, 1.0, 3), (10, 5.0, 10.0, 3), (7.5, 3.0, 0.5, 1)])
def test_pauli_matrix_conserves_and_fixes_boltzmann(S, sigma, T, s):
    m = SpinModel.from_reduced(S, sigma, T, xi=0.5)
    lower, diag, upper = redfield_tables(m, CouplingSpec.phonon(), BathSpec(s, 1e-2, T))
    N = m.dim
    k = np.arange(N)
    R = np.diag(diag[k, k].real)
    R[k[1:], k[1:] - 1] = lower[k[1:], k[1:]].real
    R[k[:-1], k[:-1] + 1] = upper[k[:-1], k[:-1]].real
    scale = np.abs(R).max()
    assert np.abs(R.sum(axis=0)).max() <= 1e-12 * scale
    p = m.boltzmann()
    assert np.abs(R @ p).max() <= 1e-12 * scale * p.max()
