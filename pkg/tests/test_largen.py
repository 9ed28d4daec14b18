import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from logwell import largen, numeric, wells
from logwell.errors import BasisTooSmall, DegenerateWell, MTooSmall, SeriesTooShort
from logwell.potential import PotentialSpec, validate
from logwell.wells import Well
from test_potential import FOUR_WELL, SIX_WELL, specs

K0_G10 = PotentialSpec(1.0, 100.0)
K1G0 = PotentialSpec(1.0, 0.0, ((1.0, 1.0),))


def quartic_well(c4, c2=1.0, c3=0.0):
    return Well.from_coeffs([0.0, 0.0, c2, c3, c4])


def y4_moment(n, omega):
    # <n|y^4|n> with y = (a + a^dagger)/sqrt(2 omega)
    return (6 * n * n + 6 * n + 3) / (4 * omega**2)


def test_leading_examples():
    w = wells.minimum_k0(K0_G10)
    assert largen.leading_energies(w, 0).energies[0] == pytest.approx(-359.103, abs=1e-3)
    ho = wells.central_well_g0(PotentialSpec(1.0))
    np.testing.assert_array_equal(largen.leading_energies(ho, 3).energies, [1, 3, 5, 7])
    central = wells.central_well_g0(K1G0)
    assert largen.leading_energies(central, 0).energies[0] == pytest.approx(math.sqrt(3))
    _, right = wells.offcentral_k1_g0(K1G0)
    assert largen.leading_energies(right, 0).energies[0] == pytest.approx(3.346, abs=1e-3)


def test_leading_spacing_exact():
    w = wells.find_minima(validate(FOUR_WELL))[2]
    E = largen.leading_energies(w, 6).energies
    assert np.all(np.diff(E) == pytest.approx(2 * math.sqrt(w.c2), rel=1e-15))


def test_degenerate_well():
    with pytest.raises(DegenerateWell):
        largen.leading_energies(Well.from_coeffs([0.0, 0.0, 0.0]), 2)


def test_ho_matrix_m2_diagonal():
    w = wells.find_minima(validate(SIX_WELL))[3]
    H = largen.ho_matrix(w, 2, 16)
    np.testing.assert_array_equal(H, np.diag(np.diag(H)))
    np.testing.assert_allclose(np.diag(H), w.value + (2 * np.arange(16) + 1) * math.sqrt(w.c2))


def test_ho_matrix_cubic_diagonal_unchanged():
    H0 = largen.ho_matrix(quartic_well(0.0), 3, 20)
    H = largen.ho_matrix(quartic_well(0.0, c3=0.3), 3, 20)
    np.testing.assert_array_equal(np.diag(H), np.diag(H0))


@pytest.mark.parametrize("omega", [1.0, 1.7])
def test_ho_matrix_quartic_diagonal(omega):
    eps = 0.01
    H = largen.ho_matrix(quartic_well(eps, c2=omega**2), 4, 24)
    shift = np.diag(H) - (2 * np.arange(24) + 1) * omega
    np.testing.assert_allclose(shift, eps * np.array([y4_moment(n, omega) for n in range(24)]), rtol=1e-12)


def test_ho_matrix_errors():
    w = quartic_well(0.1)
    with pytest.raises(BasisTooSmall):
        largen.ho_matrix(w, 4, 10, n_max=4)
    with pytest.raises(MTooSmall):
        largen.ho_matrix(w, 1, 64)


def test_matrix_m2_equals_leading():
    for spec in (K0_G10, K1G0, FOUR_WELL, SIX_WELL):
        for w in wells.find_minima(validate(spec)):
            a = largen.local_spectrum_matrix(w, 2, 32, 5).energies
            b = largen.leading_energies(w, 5).energies
            np.testing.assert_allclose(a, b, rtol=0, atol=1e-10 * max(1.0, abs(b[0])))


def test_matrix_close_to_grid_k0_g10():
    w = wells.find_minima(K0_G10)[1]
    E_mat = largen.local_spectrum_matrix(w, 4, 64).energies[0]
    E_num = numeric.solve(K0_G10, None, 4000, 1).eigenvalues[0]
    assert abs(E_mat - E_num) < 0.02


def test_basis_refinement_k0_g10():
    w = wells.find_minima(K0_G10)[1]
    a = largen.local_spectrum_matrix(w, 4, 64).energies[0]
    b = largen.local_spectrum_matrix(w, 4, 128).energies[0]
    assert abs(a - b) < 1e-8


@pytest.mark.parametrize("spec", [K0_G10, FOUR_WELL, PotentialSpec(1.0, 4.0)])
def test_variational_in_basis_size(spec):
    w = wells.find_minima(validate(spec))[-1]
    E = [largen.local_spectrum_matrix(w, 4, B).energies[0] for B in (8, 16, 32, 64, 128)]
    assert np.all(np.diff(E) <= 1e-12 * max(1.0, abs(E[0])))


def test_matrix_energies_increasing():
    w = wells.find_minima(validate(FOUR_WELL))[3]
    assert np.all(np.diff(largen.local_spectrum_matrix(w, 4, 64, 6).energies) > 0)


@given(specs(max_k=2))
def test_even_m_bounded_below(spec):
    for w in wells.find_minima(spec):
        c = w.taylor(4)
        if c[4] <= 0:
            continue
        y = np.linspace(-50, 50, 200001)
        poly = np.polynomial.polynomial.polyval(y, c)
        E = largen.local_spectrum_matrix(w, 4, 64, 3).energies
        assert np.all(E > poly.min())


def test_odd_m_flagged():
    w = quartic_well(0.0, c3=0.05)
    assert largen.local_spectrum_matrix(w, 3, 32).nonvariational
    assert not largen.local_spectrum_matrix(w, 4, 32).nonvariational


def test_rs_no_perturbation():
    w = Well.from_coeffs([0.5, 0.0, 2.0])
    E = largen.rs_series(w, 2, 4, 1)
    assert E[0] == pytest.approx(0.5 + 3 * math.sqrt(2))
    assert E[1:] == [0.0, 0.0, 0.0, 0.0]


def test_rs_quartic_first_order():
    w = quartic_well(0.2)
    H = largen.ho_matrix(w, 4, 64)
    for n in range(4):
        E = largen.rs_series(w, 4, 2, n)
        assert E[1] == pytest.approx(H[n, n] - (2 * n + 1), rel=1e-12)


def test_rs_cubic():
    c3 = 1e-3
    w = quartic_well(0.0, c3=c3)
    E = largen.rs_series(w, 3, 2, 0)
    assert E[1] == 0.0 and E[2] < 0
    # second order already matches the finite-basis eigenvalue up to O(c3^4)
    mat = largen.local_spectrum_matrix(w, 3, 64).energies[0]
    assert abs(mat - (E[0] + E[2])) < 10 * c3**4


def test_rs_errors():
    with pytest.raises(SeriesTooShort):
        largen.rs_series(quartic_well(0.1), 4, 0)
    with pytest.raises(BasisTooSmall):
        largen.rs_series(quartic_well(0.1), 4, 2, n=10, B=8)


@pytest.mark.parametrize("P", [1, 2, 3])
def test_rs_matrix_slope(P):
    taus = np.array([1e-1, 1e-2, 1e-3])
    err = []
    for tau in taus:
        w = quartic_well(tau)
        exact = largen.local_spectrum_matrix(w, 4, 64).energies[0]
        err.append(abs(exact - sum(largen.rs_series(w, 4, P, 0))))
    slope = np.polyfit(np.log(taus), np.log(err), 1)[0]
    assert slope >= P + 0.7


def test_rs_spectrum_partial_sums():
    w = wells.find_minima(K0_G10)[1]
    ls = largen.rs_spectrum(w, 4, 4, 2)
    for n in range(3):
        assert ls.partial_sums[n][-1] == pytest.approx(ls.energies[n])
        assert len(ls.series[n]) == 5
    mat = largen.local_spectrum_matrix(w, 4, 64, 2).energies
    np.testing.assert_allclose(ls.energies, mat, atol=1e-5)


@pytest.mark.parametrize(
    "increments,expected",
    [((1, 0.1, 0.01, 0.5, 2), 3), ((5, 4, 3, 2, 1), 5), ((1, 1, 1, 1), 1), ((1, -0.1, 0.01, -0.5), 3)],
)
def test_optimal_truncation(increments, expected):
    sums = np.cumsum((0.0,) + increments)
    assert largen.optimal_truncation(sums) == expected


def test_optimal_truncation_too_short():
    with pytest.raises(SeriesTooShort):
        largen.optimal_truncation([1.0, 2.0])


@given(st.floats(0.2, 5.0), st.floats(0.01, 2.0), st.integers(0, 5))
def test_rs_first_order_property(c2, c4, n):
    w = quartic_well(c4, c2=c2)
    E = largen.rs_series(w, 4, 1, n)
    assert E[1] == pytest.approx(c4 * y4_moment(n, math.sqrt(c2)), rel=1e-10)
