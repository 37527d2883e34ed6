import math
from dataclasses import replace

import numpy as np
import pytest
import scipy.optimize

from fluxbic.errors import (
    AmbiguousParity,
    ConvergenceNotCertified,
    NoMinimumInRange,
    NoSideWells,
    NotConverged,
    StateTrackingLost,
)
from fluxbic.operators import build_charge_operator, build_flux_operators, build_hamiltonian
from fluxbic.params import BasisSpec, CircuitParams
from fluxbic.spectrum import (
    EVEN,
    ODD,
    UNDEFINED,
    check_convergence,
    diagonalize,
    find_avoided_crossing,
    find_potential_minima,
    label_states,
    spectral_result,
    track_states,
)


class TestDiagonalize:
    def test_parity_sequence_at_three_well_point(self, three_well_grid):
        # Ground even, first excited odd (|->), second excited even (|+>).
        assert three_well_grid.parities[:3] == (EVEN, ODD, EVEN)

    def test_harmonic_energies(self):
        params = CircuitParams(E_J=0.0, E_C=3.6, E_L=0.46)
        res = spectral_result(params, BasisSpec.ladder(80), k=6)
        expected = math.sqrt(8 * 3.6 * 0.46) * (np.arange(6) + 0.5)
        assert np.allclose(res.energies, expected, rtol=1e-6)

    def test_tunneling_suppression_with_mass(self, ladder_basis):
        light = spectral_result(
            CircuitParams(E_J=10.0, E_C=3.6, E_L=10.0 / 33.79), ladder_basis, k=4
        )
        heavy = spectral_result(
            CircuitParams(E_J=10.0, E_C=1.0, E_L=10.0 / 33.79), ladder_basis, k=4
        )
        gap_light = light.energies[2] - light.energies[1]
        gap_heavy = heavy.energies[2] - heavy.energies[1]
        assert gap_light / gap_heavy > 10.0

    def test_truncation_safety_margin(self, three_well_params):
        h = build_hamiltonian(three_well_params, BasisSpec.ladder(32))
        with pytest.raises(ValueError):
            diagonalize(h, 9, three_well_params)

    def test_eigen_residuals(self, three_well_grid, three_well_params, grid_basis):
        h = build_hamiltonian(three_well_params, grid_basis).entries
        scale = np.abs(h).max()
        for i in range(three_well_grid.k):
            v = three_well_grid.states[:, i]
            res = np.linalg.norm(h @ v - three_well_grid.energies[i] * v)
            assert res <= 1e-8 * scale

    def test_orthonormal_states(self, three_well_grid):
        overlap = three_well_grid.states.T @ three_well_grid.states
        assert np.abs(overlap - np.eye(three_well_grid.k)).max() <= 1e-10

    def test_parity_selection_rules(self, three_well_grid, three_well_params, grid_basis):
        # Same-parity matrix elements of the odd operators vanish.
        n = build_charge_operator(grid_basis, three_well_params).entries
        sin_t = build_flux_operators(grid_basis, three_well_params)[1].entries
        states, parities = three_well_grid.states, three_well_grid.parities
        for i in range(4):
            for j in range(4):
                if parities[i] == parities[j]:
                    assert abs(np.vdot(states[:, i], n @ states[:, j])) <= 1e-10
                    assert abs(np.vdot(states[:, i], sin_t @ states[:, j])) <= 1e-10

    def test_flux_periodicity_and_reflection(self, three_well_params, ladder_basis):
        base = spectral_result(three_well_params.with_phi_ext(0.13), ladder_basis, 6).energies
        shifted = spectral_result(three_well_params.with_phi_ext(1.13), ladder_basis, 6).energies
        mirrored = spectral_result(three_well_params.with_phi_ext(-0.13), ladder_basis, 6).energies
        assert np.abs(base - shifted).max() < 1e-8
        assert np.abs(base - mirrored).max() < 1e-8

    def test_ladder_error_decreases_with_dim(self, three_well_params):
        # The Josephson term is a function of the truncated theta matrix, so
        # refinement is not strictly variational; the truncation error itself
        # falls monotonically (and fast) toward the converged spectrum.
        ref = spectral_result(three_well_params, BasisSpec.ladder(300), k=6, label=False).energies
        errs = [
            np.abs(
                spectral_result(three_well_params, BasisSpec.ladder(dim), k=6, label=False).energies
                - ref
            ).max()
            for dim in (32, 48, 72, 120)
        ]
        assert errs[0] > errs[1] > errs[2] > errs[3]

    def test_grid_error_decreases_with_dim(self, three_well_params):
        ref = spectral_result(three_well_params, BasisSpec.ladder(300), k=6, label=False).energies
        errs = [
            np.abs(
                spectral_result(
                    three_well_params, BasisSpec.grid(dim, 6 * math.pi), k=6, label=False
                ).energies
                - ref
            ).max()
            for dim in (48, 64, 96)
        ]
        assert errs[0] > errs[1] > errs[2]


class TestConvergence:
    def test_harmonic_converges_at_first_rung(self):
        params = CircuitParams(E_J=0.0, E_C=3.6, E_L=0.46)
        ladder = [BasisSpec.ladder(d) for d in (64, 96, 128)]
        chosen = check_convergence(params, ladder, k=6, tol=1e-8)
        assert chosen.dim == 64
        assert chosen.certified_tol is not None and chosen.certified_tol < 1e-8

    def test_grid_converged_by_2048(self, three_well_params):
        ladder = [BasisSpec.grid(d, 6 * math.pi) for d in (1024, 2048, 3072)]
        chosen = check_convergence(three_well_params, ladder, k=6, tol=1e-8)
        assert chosen.dim <= 2048

    def test_under_resolved_ladder(self):
        params = CircuitParams(E_J=10.0, E_C=0.5, E_L=0.46)  # E_J/E_C = 20
        with pytest.raises(NotConverged):
            check_convergence(params, [BasisSpec.ladder(16), BasisSpec.ladder(24)], k=6, tol=1e-8)

    def test_certification_gate(self, three_well_params):
        basis = BasisSpec.ladder(120)
        h = build_hamiltonian(three_well_params, basis)
        with pytest.raises(ConvergenceNotCertified):
            diagonalize(h, 6, three_well_params, require_certified=True)
        certified = check_convergence(
            three_well_params, [basis, BasisSpec.ladder(180)], k=6, tol=1e-8
        )
        res = diagonalize(
            build_hamiltonian(three_well_params, certified), 6, three_well_params,
            require_certified=True,
        )
        assert res.tol_achieved == certified.certified_tol


class TestLabelStates:
    def test_three_well_labels(self, three_well_grid):
        assert three_well_grid.parities[:4] == (EVEN, ODD, EVEN, ODD)

    def test_broken_symmetry_is_undefined(self, three_well_params, ladder_basis):
        res = spectral_result(three_well_params.with_phi_ext(0.3), ladder_basis, k=4)
        assert res.parities == (UNDEFINED,) * 4

    def test_localized_superposition_is_ambiguous(self, three_well_grid):
        # Mixing the nearly degenerate |-> and |+> localizes the pair and
        # destroys the parity expectation.
        states = three_well_grid.states.copy()
        right = (states[:, 2] + states[:, 1]) / math.sqrt(2)
        left = (states[:, 2] - states[:, 1]) / math.sqrt(2)
        states[:, 1], states[:, 2] = right, left
        doctored = replace(three_well_grid, states=states)
        with pytest.raises(AmbiguousParity):
            label_states(doctored)


class TestPotentialMinima:
    def test_symmetric_locations(self, three_well_params):
        minima = find_potential_minima(three_well_params)
        left, center, right = minima.central_three()
        assert center == 0.0
        assert abs(left + right) <= 1e-10

    def test_side_well_against_root_oracle(self, three_well_params):
        # theta* solves E_L theta + E_J sin(theta) = 0 in (pi, 2 pi); the
        # sign-changing bracket (3pi/2, 2pi) isolates the minimum root.
        oracle = scipy.optimize.brentq(
            lambda t: 0.46 * t + 10.0 * math.sin(t), 1.5 * math.pi, 2 * math.pi, xtol=1e-13
        )
        minima = find_potential_minima(three_well_params)
        assert minima.central_three()[2] == pytest.approx(oracle, abs=1e-10)

    def test_gradient_vanishes_and_curvature_positive(self, three_well_params):
        from fluxbic.operators import potential_gradient

        minima = find_potential_minima(three_well_params)
        assert np.abs(potential_gradient(three_well_params, minima.locations)).max() <= 1e-10
        assert np.all(minima.curvatures > 0)

    @pytest.mark.parametrize("params", [
        CircuitParams(E_J=0.46, E_C=3.6, E_L=0.46),   # E_J/E_L = 1
        CircuitParams(E_J=0.0, E_C=3.6, E_L=0.46),
    ])
    def test_shallow_potential_has_no_side_wells(self, params):
        with pytest.raises(NoSideWells):
            find_potential_minima(params)


class TestAvoidedCrossing:
    def test_interior_minimum_in_odd_sector(self, ladder_basis):
        # The central-well excitation anticrosses the odd side-doublet
        # member; by energy order at the symmetric point that pair is the
        # first and third excited states.
        template = CircuitParams(E_J=10.0, E_C=1.0, E_L=0.46)
        crossing = find_avoided_crossing(
            template, "EJ_over_EC", np.linspace(7.5, 10.0, 11), (1, 3), ladder_basis
        )
        assert crossing.sweep_parameter_value == pytest.approx(8.71, abs=0.05)
        assert crossing.gap == pytest.approx(0.138, abs=0.01)

    def test_flat_gap_raises(self, ladder_basis):
        harmonic = CircuitParams(E_J=0.0, E_C=3.6, E_L=0.46)
        with pytest.raises(NoMinimumInRange):
            find_avoided_crossing(
                harmonic, "phi_ext", np.linspace(0.0, 0.4, 9), (1, 2), ladder_basis
            )

    def test_symmetric_point_is_the_gap_minimum(self, three_well_params, ladder_basis):
        crossing = find_avoided_crossing(
            three_well_params, "phi_ext", np.linspace(0.0, 1e-3, 9), (1, 2), ladder_basis
        )
        res = spectral_result(three_well_params, ladder_basis, k=4)
        assert crossing.sweep_parameter_value == 0.0
        assert crossing.gap == pytest.approx(res.energies[2] - res.energies[1], rel=1e-9)


class TestTrackStates:
    def test_small_bias_identity(self, three_well_params, ladder_basis):
        ref = spectral_result(three_well_params, ladder_basis, k=6)
        biased = spectral_result(three_well_params.with_phi_ext(1e-6), ladder_basis, k=6)
        assert track_states(ref, biased, (0, 1, 2, 3)) == {0: 0, 1: 1, 2: 2, 3: 3}

    def test_lost_between_unrelated_circuits(self, ladder_basis):
        ref = spectral_result(CircuitParams(E_J=0.0, E_C=3.6, E_L=0.46), ladder_basis, 6, label=False)
        target = spectral_result(CircuitParams(E_J=10.0, E_C=0.5, E_L=0.46), ladder_basis, 6, label=False)
        with pytest.raises(StateTrackingLost):
            track_states(ref, target, (2,))
