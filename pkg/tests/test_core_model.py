import math

import numpy as np
import pytest

from fluxbic.constants import CONSTANTS
from fluxbic.errors import GridTooNarrow, NonHermitianResult, UnitError
from fluxbic.operators import (
    HermitianOperator,
    build_charge_operator,
    build_flux_operators,
    build_hamiltonian,
    parity_operator,
    phase_grid_points,
)
from fluxbic.params import BasisKind, BasisSpec, CircuitParams, derive_params
from fluxbic.spectrum import diagonalize, find_potential_minima, spectral_result


def test_constants_identities():
    assert CONSTANTS.Phi0 == pytest.approx(CONSTANTS.h / (2 * CONSTANTS.e_charge), rel=1e-12)
    assert CONSTANTS.hbar == pytest.approx(CONSTANTS.h / (2 * math.pi), rel=1e-12)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(E_J=10.0, E_C=0.0, E_L=0.46),
        dict(E_J=10.0, E_C=3.6, E_L=-0.1),
        dict(E_J=10.0, E_C=3.6, E_L=0.46, Z_line=0.0),
        dict(E_J=10.0, E_C=3.6, E_L=0.46, T=-1e-3),
        dict(E_J=10.0, E_C=3.6, E_L=0.46, E_Cc=-0.2),
    ],
)
def test_circuit_params_rejects_bad_values(kwargs):
    with pytest.raises(UnitError):
        CircuitParams(**kwargs)


class TestDerivedParams:
    def test_uncoupled_limit(self):
        d = derive_params(CircuitParams(E_J=10.0, E_C=3.6, E_L=0.46, E_Cc=0.0))
        assert d.C_c == 0.0
        assert d.coupling_ratio == 0.0
        assert d.E_C_tilde == pytest.approx(3.6, rel=1e-12)

    def test_coupling_ratio_direct_arithmetic(self):
        # Oracle: C_f = e^2/(2 h E_C), C_c = e^2/(2 h E_Cc), ratio = C_c/(C_f+C_c).
        d = derive_params(CircuitParams(E_J=10.0, E_C=3.6, E_L=0.46, E_Cc=0.25))
        e, h = CONSTANTS.e_charge, CONSTANTS.h
        c_f = e**2 / (2 * h * 3.6e9)
        c_c = e**2 / (2 * h * 0.25e9)
        assert d.C_f == pytest.approx(c_f, rel=1e-12)
        assert d.C_c == pytest.approx(c_c, rel=1e-12)
        assert d.coupling_ratio == pytest.approx(c_c / (c_f + c_c), rel=1e-12)
        assert d.coupling_ratio == pytest.approx(0.935, abs=5e-4)

    @pytest.mark.parametrize("e_cc", [0.1, 0.25, 1.0, 10.0])
    def test_renormalized_charging_below_bare(self, e_cc):
        d = derive_params(CircuitParams(E_J=10.0, E_C=3.6, E_L=0.46, E_Cc=e_cc))
        assert d.E_C_tilde < 3.6
        assert 0.0 <= d.coupling_ratio < 1.0

    def test_current_scales(self):
        d = derive_params(CircuitParams(E_J=10.0, E_C=3.6, E_L=0.46))
        # L from E_L = (Phi0/2pi)^2 / L / h; I_0 = 2 pi E_J h / Phi0.
        L = (CONSTANTS.Phi0 / (2 * math.pi)) ** 2 / (CONSTANTS.h * 0.46e9)
        assert d.L == pytest.approx(L, rel=1e-12)
        assert d.I_p_prefactor == pytest.approx(CONSTANTS.Phi0 / (2 * math.pi * L), rel=1e-12)
        assert d.I_0 == pytest.approx(2 * math.pi * CONSTANTS.h * 10.0e9 / CONSTANTS.Phi0, rel=1e-12)


class TestBasisSpec:
    def test_minimum_dimension(self):
        with pytest.raises(UnitError):
            BasisSpec.ladder(8)

    def test_grid_too_narrow(self):
        with pytest.raises(GridTooNarrow):
            BasisSpec.grid(512, 2.5 * math.pi)

    def test_grid_is_reflection_symmetric(self):
        theta = phase_grid_points(BasisSpec.grid(400, 6 * math.pi))
        assert np.allclose(theta[::-1], -theta, atol=0.0)


class TestHamiltonian:
    @pytest.mark.parametrize("basis", [BasisSpec.grid(1024, 6 * math.pi), BasisSpec.ladder(64)])
    def test_harmonic_limit(self, basis):
        # E_J = 0: uniform level spacing sqrt(8 E_C E_L).
        params = CircuitParams(E_J=0.0, E_C=3.6, E_L=0.46)
        res = spectral_result(params, basis, k=6)
        gaps = np.diff(res.energies)
        assert np.allclose(gaps, math.sqrt(8 * 3.6 * 0.46), rtol=1e-6)

    def test_three_local_minima(self, three_well_params):
        minima = find_potential_minima(three_well_params)
        assert minima.count == 3

    def test_cross_basis_agreement(self, three_well_params):
        grid = spectral_result(three_well_params, BasisSpec.grid(2048, 6 * math.pi), k=6)
        ladder = spectral_result(three_well_params, BasisSpec.ladder(200), k=6)
        assert np.abs(grid.energies - ladder.energies).max() < 1e-6

    @pytest.mark.parametrize(
        "basis", [BasisSpec.grid(512, 6 * math.pi), BasisSpec.ladder(120)]
    )
    def test_hermiticity(self, three_well_params, basis):
        h = build_hamiltonian(three_well_params, basis)
        m = h.entries
        assert np.abs(m - m.conj().T).max() <= 1e-12 * np.abs(m).max()

    def test_gauge_equivalence(self):
        # Flux in the cosine vs in the inductive term: unitary equivalent.
        params = CircuitParams(E_J=10.0, E_C=3.6, E_L=0.46, phi_ext=0.23)
        wide = BasisSpec.grid(2048, 8 * math.pi)
        for basis in (wide, BasisSpec.ladder(200)):
            e_cos = diagonalize(build_hamiltonian(params, basis, "cosine"), 6, params).energies
            e_ind = diagonalize(build_hamiltonian(params, basis, "inductive"), 6, params).energies
            assert np.abs(e_cos - e_ind).max() < 1e-8

    def test_parity_commutes_at_symmetric_point(self, three_well_params):
        basis = BasisSpec.grid(512, 6 * math.pi)
        h = build_hamiltonian(three_well_params, basis).entries
        p = parity_operator(basis)
        assert np.abs(h @ p - p @ h).max() <= 1e-11 * np.abs(h).max()

    def test_non_hermitian_rejected(self):
        basis = BasisSpec.ladder(16)
        bad = np.triu(np.ones((16, 16)))
        with pytest.raises(NonHermitianResult):
            HermitianOperator(bad, basis, label="bad")


class TestChargeOperator:
    def test_ladder_commutator_interior(self, three_well_params):
        basis = BasisSpec.ladder(120)
        n = build_charge_operator(basis, three_well_params).entries
        theta = build_flux_operators(basis, three_well_params)[0].entries
        comm = theta @ n - n @ theta
        half = basis.dim // 2
        assert np.abs(comm[:half, :half] - 1j * np.eye(basis.dim)[:half, :half]).max() <= 1e-8

    def test_grid_commutator_on_low_states(self, three_well_params, three_well_grid, grid_basis):
        n = build_charge_operator(grid_basis, three_well_params).entries
        theta = build_flux_operators(grid_basis, three_well_params)[0].entries
        low = three_well_grid.states[:, :4]
        proj = low.conj().T @ (theta @ n - n @ theta) @ low
        assert np.abs(proj - 1j * np.eye(4)).max() <= 1e-8

    def test_parity_odd_on_grid(self, three_well_params, grid_basis):
        n = build_charge_operator(grid_basis, three_well_params).entries
        p = parity_operator(grid_basis)
        assert np.abs(p @ n @ p + n).max() <= 1e-12

    def test_ground_state_expectation_vanishes(self, three_well_params, three_well_grid, grid_basis):
        n = build_charge_operator(grid_basis, three_well_params).entries
        ground = three_well_grid.states[:, 0]
        assert abs(np.vdot(ground, n @ ground)) <= 1e-10


class TestFluxOperators:
    def test_grid_parities_and_pointwise_identity(self, three_well_params, grid_basis):
        theta, sin_t, cos_t = (op.entries for op in build_flux_operators(grid_basis, three_well_params))
        p = parity_operator(grid_basis)
        assert np.abs(p @ sin_t @ p + sin_t).max() <= 1e-12
        assert np.abs(p @ cos_t @ p - cos_t).max() <= 1e-12
        assert np.abs(sin_t @ sin_t + cos_t @ cos_t - np.eye(grid_basis.dim)).max() <= 1e-12

    def test_cross_basis_sine_matrix_elements(self, three_well_params, three_well_grid, three_well_ladder):
        # <i|sin theta|j> between the three lowest eigenstates, both bases.
        def elements(spec, params):
            sin_t = build_flux_operators(spec.basis, params)[1].entries
            low = spec.states[:, :3]
            return np.abs(low.conj().T @ sin_t @ low)

        g = elements(three_well_grid, three_well_params)
        l = elements(three_well_ladder, three_well_params)
        assert np.abs(g - l).max() < 1e-6
