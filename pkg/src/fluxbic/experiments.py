"""Parameter-sweep orchestration, lifetime-table reproduction and the
Landau-Zener preparation-time estimate.

The lifetime table is evaluated with the conventions the source numbers
evidently follow (each recorded in dataset metadata and in the README):
the row's renormalized charging energy is the circuit's E_C, the coupling
charging energy fixes C_c by capacitance arithmetic, downward waveguide
columns are zero-temperature rates, 1/f up-rates use the classical
symmetric spectrum, and the lossy shunt capacitance is the fluxonium's
own (the coupler feeds the waveguide channel, which is counted
separately).
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from fluxbic.constants import CONSTANTS, EC_TILDE_CONVENTION, G0_CONVENTION
from fluxbic.errors import FluxbicError, UnitError
from fluxbic.operators import build_charge_operator, build_flux_operators
from fluxbic.params import BasisSpec, CircuitParams, derive_params
from fluxbic.qutrit import (
    TERM_COLUMN_NAMES,
    decompose_operator,
    gaussian_well_states,
    qutrit_basis_from_eigenstates,
)
from fluxbic.rates import (
    NoiseChannel,
    RateReport,
    bose_occupation,
    flux_operator_si,
    golden_rule_waveguide,
    noise_rate,
    persistent_current_operator,
    total_lifetime,
)
from fluxbic.spectrum import (
    check_convergence,
    find_potential_minima,
    spectral_result,
    track_states,
)

DEFAULT_LADDER_BASIS = BasisSpec.ladder(200)
DEFAULT_GRID_BASIS = BasisSpec.grid(1024)

# Qutrit level indices at the symmetric point: ground, |->, |+> and the
# mediating fourth level.
GROUND, MINUS, PLUS, THIRD = 0, 1, 2, 3


@dataclass(frozen=True)
class NoiseParams:
    """Environment parameters of the lifetime table."""

    A_phi0: float = 5e-6         # 1/f amplitude in Phi0 units
    Q_diel: float = 1.0 / 4e-6
    Q_ind: float = 8e9
    T: float = 0.015             # K
    bias_phi0: float | None = None  # flux bias of the biased columns; default A

    def bias(self) -> float:
        return self.A_phi0 if self.bias_phi0 is None else self.bias_phi0


def row_circuit(
    E_J: float,
    EJ_over_ECt: float,
    EJ_over_EL: float,
    coupling_EC: float = 0.25,
    Z_line: float = 50.0,
    T: float = 0.015,
) -> CircuitParams:
    """Circuit of one lifetime-table row.

    The row's renormalized charging energy E_J/EJ_over_ECt becomes the
    circuit's E_C; coupling_EC fixes the coupling capacitor.
    """
    return CircuitParams(
        E_J=E_J,
        E_C=E_J / EJ_over_ECt,
        E_L=E_J / EJ_over_EL,
        E_Cc=coupling_EC,
        Z_line=Z_line,
        T=T,
    )


def convention_metadata() -> dict[str, str]:
    """Convention strings echoed into every emitted dataset."""
    return {
        "E_C_tilde_convention": EC_TILDE_CONVENTION,
        "G0_convention": G0_CONVENTION,
        "table_bias_convention": "phi_ext = A (quasi-static 1/f amplitude)",
        "table_downward_convention": "zero-temperature emission rates",
        "one_over_f_up_convention": "classical symmetric spectrum S(-w) = S(w)",
        "loss_capacitance_convention": "fluxonium shunt C_f (coupler excluded)",
    }


def reproduce_table1(
    params: CircuitParams,
    noise: NoiseParams,
    basis: BasisSpec = DEFAULT_LADDER_BASIS,
) -> RateReport:
    """All decay channels of the protected state at one parameter point.

    Waveguide columns at zero bias and at the quasi-static bias, the 1/f,
    dielectric and inductive environment channels, and the aggregate T1.
    """
    derived = derive_params(params)
    # The coupler only sets the coupling ratio; loss operators and
    # spectral densities see the bare fluxonium.
    bare = derive_params(replace(params, E_Cc=0.0))
    spec = spectral_result(params.with_phi_ext(0.0), basis, k=6)
    n_op = build_charge_operator(basis, params)

    g_pm = golden_rule_waveguide(spec, n_op, PLUS, MINUS, derived, params.Z_line)
    g_3p = golden_rule_waveguide(spec, n_op, THIRD, PLUS, derived, params.Z_line)
    up_p3 = g_3p.rate * bose_occupation(g_3p.omega, noise.T)

    biased = spectral_result(params.with_phi_ext(noise.bias()), basis, k=6)
    mapping = track_states(spec, biased, (GROUND, MINUS, PLUS, THIRD))
    gb_p0 = golden_rule_waveguide(
        biased, n_op, mapping[PLUS], mapping[GROUND], derived, params.Z_line
    )
    gb_pm = golden_rule_waveguide(
        biased, n_op, mapping[PLUS], mapping[MINUS], derived, params.Z_line
    )
    gb_3p = golden_rule_waveguide(
        biased, n_op, mapping[THIRD], mapping[PLUS], derived, params.Z_line
    )
    up_p3_biased = gb_3p.rate * bose_occupation(gb_3p.omega, noise.T)

    i_p = persistent_current_operator(basis, params, bare)
    phi_op = flux_operator_si(basis, params)
    ch_flux = NoiseChannel.one_over_f(noise.A_phi0, noise.T)
    ch_diel = NoiseChannel.dielectric(noise.Q_diel, noise.T)
    ch_ind = NoiseChannel.inductive(noise.Q_ind, noise.T)

    rates = {
        "gamma_pm": g_pm.rate,
        "gamma_p3": up_p3,
        "gamma_p0_bias": gb_p0.rate,
        "gamma_pm_bias": gb_pm.rate,
        "gamma_p3_bias": up_p3_biased,
        # 1/f up-rate from the symmetric classical spectrum: numerically the
        # downward-pair rate at the same |omega|.
        "gamma_pm_flux": noise_rate(spec, i_p, ch_flux, PLUS, MINUS, bare).rate,
        "gamma_p3_flux": noise_rate(spec, i_p, ch_flux, THIRD, PLUS, bare).rate,
        "gamma_pm_diel": noise_rate(spec, phi_op, ch_diel, PLUS, MINUS, bare).rate,
        "gamma_p3_diel": noise_rate(spec, phi_op, ch_diel, PLUS, THIRD, bare).rate,
        "gamma_pm_ind": noise_rate(spec, phi_op, ch_ind, PLUS, MINUS, bare).rate,
        "gamma_p3_ind": noise_rate(spec, phi_op, ch_ind, PLUS, THIRD, bare).rate,
    }
    return RateReport(T1_ms=total_lifetime(rates), **rates)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    """One axis, ordered values, and named observables to evaluate."""

    template: CircuitParams
    axis: str
    values: tuple[float, ...]
    outputs: tuple[str, ...]
    noise: NoiseParams = field(default_factory=NoiseParams)
    basis: BasisSpec = DEFAULT_LADDER_BASIS
    grid_basis: BasisSpec = DEFAULT_GRID_BASIS
    certify: bool = True
    certify_tol: float = 1e-8

    def __post_init__(self):
        if self.axis not in SWEEP_AXES + ("EJ_over_ECt",):
            raise UnitError(f"unknown sweep axis {self.axis!r}")
        if len(self.values) == 0:
            raise UnitError("sweep.values must be nonempty")
        diffs = np.diff(np.asarray(self.values, dtype=float))
        if len(self.values) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise UnitError("sweep.values must be strictly monotone")


SWEEP_AXES = ("E_J", "E_C", "E_L", "E_Cc", "phi_ext", "T", "Z_line", "EJ_over_EC", "EJ_over_EL")

# Observable groups available to run_sweep.
SWEEP_OUTPUTS = (
    "energies",       # E0..E5 in GHz
    "gap_pm",         # E+ - E-
    "gap_p3",         # E3 - E+
    "a0",             # mediating-level overlap <3|L>, continuity-tracked
    "a1",             # <4|L>
    "qutrit_coeffs",  # spin-1 coefficients of H, n, sin(theta)
    "wg_rates",       # Gamma_pm, Gamma_m0 (zero-T waveguide)
    "wg_thermal",     # Gamma_p3_up at noise.T
    "bias_rate",      # Gamma_p0 at the biased point (phi_ext axis)
    "noise_rates",    # 1/f, dielectric, inductive channels out of |+>
)


def apply_sweep_axis(template: CircuitParams, axis: str, value: float) -> CircuitParams:
    if axis == "EJ_over_ECt":
        # Renormalized-charging axis of the rate figures: the row mapping
        # puts the renormalized energy in E_C directly.
        return replace(template, E_C=template.E_J / float(value))
    from fluxbic.spectrum import apply_axis

    return apply_axis(template, axis, value)


def _sweep_point(spec: SweepSpec, value: float, context: dict) -> dict:
    params = apply_sweep_axis(spec.template, spec.axis, value)
    row: dict = {spec.axis: float(value), "status": "ok"}
    needs_grid = bool({"a0", "a1"} & set(spec.outputs))
    basis = spec.basis
    if spec.certify:
        ladder = [replace(basis, dim=basis.dim), replace(basis, dim=int(basis.dim * 1.5))]
        basis = check_convergence(params, ladder, k=6, tol=spec.certify_tol)
    res = spectral_result(params, basis, k=6, require_certified=spec.certify, label=False)
    energies = res.energies
    derived = derive_params(params)
    bare = derive_params(replace(params, E_Cc=0.0))

    if "energies" in spec.outputs:
        row.update({f"E{i}": float(e) for i, e in enumerate(energies)})
    if "gap_pm" in spec.outputs:
        row["gap_pm"] = float(energies[PLUS] - energies[MINUS])
    if "gap_p3" in spec.outputs:
        row["gap_p3"] = float(energies[THIRD] - energies[PLUS])

    if needs_grid:
        gres = spectral_result(params, spec.grid_basis, k=6, label=False)
        # The mediating level is followed by character: every point tracks
        # against the states of the first sweep point, so past the level
        # anticrossing the overlap follows the diabatic (central-well) branch
        # instead of saturating on a side-doublet member.
        states = gres.states
        idx3, idx4 = THIRD, THIRD + 1
        ref = context.get("a0_reference")
        if ref is None:
            context["a0_reference"] = np.column_stack([states[:, idx3], states[:, idx4]])
        else:
            overlaps = np.abs(ref.T @ states)
            idx3 = int(np.argmax(overlaps[0]))
            idx4 = int(np.argmax(overlaps[1]))
        minima = find_potential_minima(params)
        wells = gaussian_well_states(params, minima, spec.grid_basis)
        row["a0"] = abs(float(states[:, idx3] @ wells.left))
        if "a1" in spec.outputs:
            row["a1"] = abs(float(states[:, idx4] @ wells.left))

    if "qutrit_coeffs" in spec.outputs:
        labeled = spectral_result(params, basis, k=6)
        qb = qutrit_basis_from_eigenstates(labeled)
        n_op = build_charge_operator(basis, params)
        _, sin_op, _ = build_flux_operators(basis, params)
        from fluxbic.operators import build_hamiltonian

        h_op = build_hamiltonian(params, basis)
        for op, tag in ((h_op, "H"), (n_op, "n"), (sin_op, "sin")):
            dec = decompose_operator(op, qb, label=tag)
            row.update(
                {
                    f"coeff_{tag}_{TERM_COLUMN_NAMES[name]}": c
                    for name, c in dec.coefficients.items()
                }
            )
            row[f"residual_{tag}"] = dec.residual

    if {"wg_rates", "wg_thermal", "bias_rate", "noise_rates"} & set(spec.outputs):
        labeled = spectral_result(params, basis, k=6)
        n_op = build_charge_operator(basis, params)
        if "wg_rates" in spec.outputs:
            row["Gamma_pm"] = golden_rule_waveguide(
                labeled, n_op, PLUS, MINUS, derived, params.Z_line
            ).rate
            row["Gamma_m0"] = golden_rule_waveguide(
                labeled, n_op, MINUS, GROUND, derived, params.Z_line
            ).rate
        if "wg_thermal" in spec.outputs:
            g3p = golden_rule_waveguide(labeled, n_op, THIRD, PLUS, derived, params.Z_line)
            row["Gamma_p3_up"] = g3p.rate * bose_occupation(g3p.omega, params.T)
        if "bias_rate" in spec.outputs:
            if params.phi_ext == 0.0:
                row["Gamma_p0_bias"] = 0.0
            else:
                sym = spectral_result(params.with_phi_ext(0.0), basis, k=6)
                mapping = track_states(sym, labeled, (GROUND, PLUS))
                row["Gamma_p0_bias"] = golden_rule_waveguide(
                    labeled, n_op, mapping[PLUS], mapping[GROUND], derived, params.Z_line
                ).rate
        if "noise_rates" in spec.outputs:
            i_p = persistent_current_operator(basis, params, bare)
            phi_op = flux_operator_si(basis, params)
            noise = spec.noise
            row["Gamma_pm_flux"] = noise_rate(
                labeled, i_p, NoiseChannel.one_over_f(noise.A_phi0, noise.T),
                PLUS, MINUS, bare,
            ).rate
            row["Gamma_pm_diel"] = noise_rate(
                labeled, phi_op, NoiseChannel.dielectric(noise.Q_diel, noise.T),
                PLUS, MINUS, bare,
            ).rate
            row["Gamma_pm_ind"] = noise_rate(
                labeled, phi_op, NoiseChannel.inductive(noise.Q_ind, noise.T),
                PLUS, MINUS, bare,
            ).rate
    return row


def worker_count() -> int:
    """Parallelism cap from FLUXBIC_THREADS (default 1: fully deterministic)."""
    raw = os.environ.get("FLUXBIC_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise UnitError(f"FLUXBIC_THREADS must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise UnitError(f"FLUXBIC_THREADS must be a positive integer, got {n}")
    return n


def run_sweep(spec: SweepSpec) -> list[dict]:
    """Evaluate the sweep; one row per value, in input order.

    Per-point failures are recorded in the row's status column instead of
    aborting the sweep.  The a0 observable is tracked sequentially and is
    therefore evaluated in order even when other points run in parallel.
    """
    context: dict = {}
    sequential = bool({"a0", "a1"} & set(spec.outputs))
    workers = 1 if sequential else worker_count()

    def evaluate(value: float) -> dict:
        try:
            return _sweep_point(spec, value, context)
        except FluxbicError as exc:
            return {spec.axis: float(value), "status": type(exc).__name__}

    if workers == 1:
        return [evaluate(v) for v in spec.values]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(evaluate, spec.values))


# ---------------------------------------------------------------------------
# State preparation estimate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PreparationEstimate:
    """Adiabatic return time after populating the state at a small bias."""

    delta_phi: float          # Phi0 units
    gap_a: float              # GHz, |+>/|-> splitting at zero flux
    delta_E: float            # GHz, |+> shift at the bias
    Gamma_LZ_per_ns: float    # non-adiabaticity exponent per ns of ramp
    t_adiabatic: float        # ns


def preparation_estimate(
    params: CircuitParams,
    delta_phi: float,
    target_leakage: float = 1e-2,
    basis: BasisSpec = DEFAULT_LADDER_BASIS,
) -> PreparationEstimate:
    """Landau-Zener bound on the flux-ramp time back to the symmetric point.

    The non-adiabatic loss exp(-2 pi Gamma_LZ) uses
    Gamma_LZ = a^2 dt / (hbar dE) with a the zero-flux splitting and dE
    the tracked shift of the protected state at the bias.
    """
    if delta_phi <= 0.0:
        raise UnitError("delta_phi must be > 0")
    if not 0.0 < target_leakage < 1.0:
        raise UnitError("target_leakage must be in (0, 1)")
    find_potential_minima(params.with_phi_ext(0.0)).central_three()  # NoSideWells guard
    sym = spectral_result(params.with_phi_ext(0.0), basis, k=6)
    biased = spectral_result(params.with_phi_ext(delta_phi), basis, k=6)
    mapping = track_states(sym, biased, (PLUS,))
    gap_a = float(sym.energies[PLUS] - sym.energies[MINUS])
    delta_e = float(biased.energies[mapping[PLUS]] - sym.energies[PLUS])
    # Gamma_LZ per second of ramp: 2 pi 1e9 a^2 / dE with energies in GHz.
    gamma_per_s = 2.0 * math.pi * 1e9 * gap_a**2 / delta_e
    t_s = math.log(1.0 / target_leakage) / (2.0 * math.pi * gamma_per_s)
    return PreparationEstimate(
        delta_phi=delta_phi,
        gap_a=gap_a,
        delta_E=delta_e,
        Gamma_LZ_per_ns=gamma_per_s * 1e-9,
        t_adiabatic=t_s * 1e9,
    )
