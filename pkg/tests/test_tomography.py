import math

import numpy as np
import pytest
from scipy import special

from fluxjc.hilbert import SpaceDims, SystemModel
from fluxjc.lindblad import CollapseSet
from fluxjc.tomography import (
    TruncationWarning,
    cavity_reduced,
    displacement_operator,
    full_displacement,
    line_cut_grid,
    make_grid,
    parity_diagonal,
    vacuum_reference,
    wigner_exact,
    wigner_measured,
)
from fluxjc.units import mhz_to_rad_ns

MODEL = SystemModel()


def _fock_rho(n, levels):
    rho = np.zeros((levels, levels), dtype=complex)
    rho[n, n] = 1.0
    return rho


def test_displacement_generates_coherent_state():
    # oracle: D(alpha)|0> has amplitudes e^{-|a|^2/2} a^n / sqrt(n!)
    alpha = 0.7 - 0.4j
    d = displacement_operator(25, alpha)
    psi = d[:, 0]
    for n in range(8):
        ref = (math.exp(-abs(alpha) ** 2 / 2.0) * alpha ** n
               / math.sqrt(math.factorial(n)))
        assert psi[n] == pytest.approx(ref, abs=1e-10)


def test_displacement_unitary_and_inverse():
    alpha = 1.1 + 0.3j
    d = displacement_operator(30, alpha)
    assert np.max(np.abs(d @ d.conj().T - np.eye(30))) < 1e-9
    dm = displacement_operator(30, -alpha)
    assert np.max(np.abs(d @ dm - np.eye(30))[:20, :20]) < 1e-9


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_wigner_exact_fock_laguerre_oracle(n):
    # closed form: W_raw(alpha) = (-1)^n e^{-2|a|^2} L_n(4 |a|^2)
    rho = _fock_rho(n, 30)
    for alpha in (0.0, 0.3, 0.9 - 0.5j, -1.2j):
        x = 4.0 * abs(alpha) ** 2
        ref = (-1.0) ** n * math.exp(-x / 2.0) * special.eval_laguerre(n, x)
        assert wigner_exact(rho, alpha) == pytest.approx(ref, abs=1e-9)


def test_wigner_conventions():
    rho = _fock_rho(0, 20)
    raw = wigner_exact(rho, 0.4)
    assert wigner_exact(rho, 0.4, "two_over_pi") == pytest.approx(
        2.0 / np.pi * raw
    )
    with pytest.raises(ValueError):
        wigner_exact(rho, 0.4, "density")


def test_truncation_warning():
    rho = _fock_rho(0, 6)
    with pytest.warns(TruncationWarning):
        wigner_exact(rho, 2.4)


def test_parity_diagonal():
    assert np.array_equal(parity_diagonal(4), [1.0, -1.0, 1.0, -1.0])


def test_make_grid_square_reading_order():
    g = make_grid("square", extent=1.0, n_points=3)
    assert g.shape == (9,)
    assert g[0] == pytest.approx(-1.0 - 1.0j)
    assert g[1] == pytest.approx(0.0 - 1.0j)  # row-major: real varies fastest
    assert g[-1] == pytest.approx(1.0 + 1.0j)
    with pytest.raises(ValueError):
        make_grid("hex")
    pts = make_grid("list", points=[0.5j, 1.0])
    assert np.array_equal(pts, np.array([0.5j, 1.0]))


def test_line_cut_grid():
    g = line_cut_grid(2.0, 5)
    assert np.allclose(g, [-2.0, -1.0, 0.0, 1.0, 2.0])


def test_cavity_reduced_partial_trace_oracle():
    dims = SpaceDims(4)
    rng = np.random.default_rng(3)
    m = rng.normal(size=(dims.dim, dims.dim)) + 1j * rng.normal(
        size=(dims.dim, dims.dim)
    )
    rho = m @ m.conj().T
    rho /= np.trace(rho)
    red = cavity_reduced(rho, dims)
    ref = np.zeros((4, 4), dtype=complex)
    for n in range(4):
        for mn in range(4):
            for s in range(2):
                ref[n, mn] += rho[dims.index(n, s), dims.index(mn, s)]
    assert np.max(np.abs(red - ref)) < 1e-12
    assert np.trace(red) == pytest.approx(1.0)


def test_full_displacement_acts_on_cavity_only():
    dims = SpaceDims(18)
    alpha = 0.6 + 0.2j
    rho_c = _fock_rho(1, dims.cavity_levels)
    rho = np.kron(rho_c, np.diag([1.0, 0.0])).astype(complex)
    d = full_displacement(dims, alpha)
    moved = cavity_reduced(d.conj().T @ rho @ d, dims)
    dc = displacement_operator(dims.cavity_levels, alpha)
    ref = dc.conj().T @ rho_c @ dc
    assert np.max(np.abs(moved - ref)) < 1e-12


def test_measured_parity_matches_exact_with_ideal_sequence():
    # instant pi/2 pulses, no decoherence, exact pi/chi wait: the Ramsey signal
    # is the displaced parity itself
    dims = SpaceDims(12)
    t_exact = np.pi / mhz_to_rad_ns(MODEL.chi_mhz)
    psi_c = np.zeros(dims.cavity_levels, dtype=complex)
    psi_c[0], psi_c[2] = 1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0)
    rho_c = np.outer(psi_c, psi_c.conj())
    rho = np.kron(rho_c, np.diag([1.0, 0.0])).astype(complex)
    for alpha in (0.0, 0.5, -0.3 + 0.4j):
        got = wigner_measured(
            rho, alpha, MODEL, dims,
            instant_pi2=True, parity_map_time_ns=t_exact,
        )
        ref = wigner_exact(rho_c, alpha)
        assert got == pytest.approx(ref, abs=1e-8)


def test_vacuum_reference_ideal_is_unity():
    dims = SpaceDims(8)
    t_exact = np.pi / mhz_to_rad_ns(MODEL.chi_mhz)
    ref = vacuum_reference(MODEL, dims, instant_pi2=True,
                           parity_map_time_ns=t_exact)
    assert ref == pytest.approx(1.0, abs=1e-9)


def test_short_parity_wait_reduces_contrast():
    # the device maps parity in 272 ns < pi/chi, washing out odd-photon signal
    dims = SpaceDims(8)
    rho = np.kron(_fock_rho(1, dims.cavity_levels),
                  np.diag([1.0, 0.0])).astype(complex)
    full = wigner_measured(
        rho, 0.0, MODEL, dims, instant_pi2=True,
        parity_map_time_ns=np.pi / mhz_to_rad_ns(MODEL.chi_mhz),
    )
    short = wigner_measured(rho, 0.0, MODEL, dims, instant_pi2=True)
    assert full == pytest.approx(-1.0, abs=1e-9)
    assert -1.0 < short < -0.5


def test_decoherence_lowers_vacuum_reference():
    from fluxjc.hilbert import build_operators

    dims = SpaceDims(6)
    ops = build_operators(dims)
    collapse = CollapseSet.from_model(ops, MODEL)
    lossy = vacuum_reference(MODEL, dims, collapse=collapse)
    ideal = vacuum_reference(MODEL, dims)
    assert lossy < ideal
    assert lossy > 0.6
