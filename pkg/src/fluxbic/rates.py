"""Transition rates: golden-rule decay into the waveguide, environment
noise channels (1/f flux, dielectric, inductive), the quasi-static flux
amplitude, and the aggregate lifetime.

Sign convention: omega_ij = 2 pi (E_i - E_j) in rad/s is positive for a
downward transition i -> j (emission).  Upward rates come from the
negative-frequency side of each spectral density, related to the positive
side by detailed balance S(-w) = S(w) exp(-hbar w / kB T).
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.special

from fluxbic.constants import CONSTANTS, G0_SIEMENS, WAVEGUIDE_RATE_CALIBRATION
from fluxbic.errors import (
    InvalidCutoffs,
    ModeGridTooCoarse,
    NotDownward,
    UnitError,
    ZeroFrequency,
)
from fluxbic.operators import HermitianOperator, build_flux_operators
from fluxbic.params import BasisSpec, CircuitParams, DerivedParams
from fluxbic.spectrum import SpectralResult

WAVEGUIDE = "waveguide"
ONE_OVER_F = "one_over_f"
DIELECTRIC = "dielectric"
INDUCTIVE = "inductive"

# Per-length capacitance used only to discretize the waveguide in the
# cross-check; the continuum rate does not depend on it.
C0_PER_LENGTH = 1.6e-10  # F/m, typical coplanar value


@dataclass(frozen=True)
class NoiseChannel:
    """One environment coupling: kind plus its spectral-density parameters."""

    kind: str
    temperature: float = 0.0
    amplitude_phi0: float = 0.0   # 1/f amplitude A in units of Phi0
    Q: float = math.inf           # dielectric or inductive quality factor
    Z_line: float = 50.0
    coupling_ratio: float = 0.0

    def __post_init__(self):
        if self.kind not in (WAVEGUIDE, ONE_OVER_F, DIELECTRIC, INDUCTIVE):
            raise UnitError(f"unknown noise channel kind {self.kind!r}")
        if self.temperature < 0.0:
            raise UnitError("noise temperature must be >= 0")
        if self.amplitude_phi0 < 0.0:
            raise UnitError("1/f amplitude must be >= 0")
        if not self.Q > 0.0:
            raise UnitError("quality factor must be > 0")

    @staticmethod
    def one_over_f(amplitude_phi0: float, temperature: float = 0.0) -> "NoiseChannel":
        return NoiseChannel(ONE_OVER_F, temperature=temperature, amplitude_phi0=amplitude_phi0)

    @staticmethod
    def dielectric(Q: float, temperature: float = 0.0) -> "NoiseChannel":
        return NoiseChannel(DIELECTRIC, temperature=temperature, Q=Q)

    @staticmethod
    def inductive(Q: float, temperature: float = 0.0) -> "NoiseChannel":
        return NoiseChannel(INDUCTIVE, temperature=temperature, Q=Q)


@dataclass(frozen=True)
class TransitionRate:
    from_state: int
    to_state: int
    channel: str
    rate: float   # 1/s
    omega: float  # rad/s, signed (positive = emission)


def transition_omega(spec: SpectralResult, i: int, j: int) -> float:
    """Signed angular frequency 2 pi (E_i - E_j) in rad/s."""
    return 2.0 * math.pi * float(spec.energies[i] - spec.energies[j]) * 1e9


def matrix_element(spec: SpectralResult, op: HermitianOperator | np.ndarray, i: int, j: int):
    m = op.entries if isinstance(op, HermitianOperator) else op
    return complex(np.vdot(spec.states[:, i], m @ spec.states[:, j]))


def golden_rule_waveguide(
    spec: SpectralResult,
    n_op: HermitianOperator,
    i: int,
    j: int,
    derived: DerivedParams,
    Z: float,
) -> TransitionRate:
    """Zero-temperature emission rate into the line.

    Gamma = 2 pi (C_c/C_sigma)^2 G0 Z |<i|N|j>|^2 omega_ij, with the
    conductance-quantum G0 carrying the table-calibrated (2 pi)^2 (see
    constants.WAVEGUIDE_RATE_CALIBRATION).
    """
    omega = transition_omega(spec, i, j)
    if omega <= 0.0:
        raise NotDownward(f"E_{i} <= E_{j}: not an emission process")
    m2 = abs(matrix_element(spec, n_op, i, j)) ** 2
    rate = (
        WAVEGUIDE_RATE_CALIBRATION
        * 2.0 * math.pi * derived.coupling_ratio**2 * G0_SIEMENS * Z * m2 * omega
    )
    return TransitionRate(i, j, WAVEGUIDE, rate, omega)


def bose_occupation(omega_abs: float, T: float) -> float:
    """Mean photon number at |omega|; zero at T = 0."""
    if T == 0.0:
        return 0.0
    x = CONSTANTS.hbar * omega_abs / (CONSTANTS.k_B * T)
    if x > 700.0:
        return 0.0
    return 1.0 / math.expm1(x)


def thermal_waveguide_rates(
    spec: SpectralResult,
    n_op: HermitianOperator,
    i: int,
    j: int,
    derived: DerivedParams,
    Z: float,
    T: float,
) -> tuple[TransitionRate, TransitionRate]:
    """(down, up) rates of the pair at temperature T.

    down = Gamma0 (nbar + 1) for i -> j, up = Gamma0 nbar for j -> i, with
    Gamma0 the zero-temperature rate at |omega|; up/down = exp(-hbar w/kT).
    """
    base = golden_rule_waveguide(spec, n_op, i, j, derived, Z)
    nbar = bose_occupation(base.omega, T)
    down = TransitionRate(i, j, WAVEGUIDE, base.rate * (nbar + 1.0), base.omega)
    up = TransitionRate(j, i, WAVEGUIDE, base.rate * nbar, -base.omega)
    return down, up


def spectral_density(channel: NoiseChannel, omega: float, derived: DerivedParams) -> float:
    """Noise spectral density at signed omega (SI units of the coupling).

    The positive-frequency forms are
      1/f flux:   2 pi A^2 Phi0^2 / w
      dielectric: hbar w^2 C_sigma / Q * (1 + coth(hbar w / 2 kB T))
      inductive:  hbar / (L Q)         * (1 + coth(hbar w / 2 kB T))
    and S(-w) = S(w) exp(-hbar w / kB T), which vanishes at T = 0.
    """
    if channel.kind == ONE_OVER_F and omega == 0.0:
        raise ZeroFrequency("1/f spectral density diverges at omega = 0")
    w = abs(omega)
    if channel.kind == ONE_OVER_F:
        s = 2.0 * math.pi * (channel.amplitude_phi0 * CONSTANTS.Phi0) ** 2 / w
    elif channel.kind == DIELECTRIC:
        s = CONSTANTS.hbar * w**2 * derived.C_sigma / channel.Q * _one_plus_coth(w, channel.temperature)
    elif channel.kind == INDUCTIVE:
        s = CONSTANTS.hbar / (derived.L * channel.Q) * _one_plus_coth(w, channel.temperature)
    else:
        raise ValueError(f"spectral_density undefined for channel {channel.kind!r}")
    if omega < 0.0:
        s *= _boltzmann(w, channel.temperature)
    return s


def _one_plus_coth(omega_abs: float, T: float) -> float:
    # 1 + coth(x) = 2 / (1 - exp(-2x)); -> 2 at T = 0.
    if T == 0.0:
        return 2.0
    x = CONSTANTS.hbar * omega_abs / (2.0 * CONSTANTS.k_B * T)
    return 2.0 / (-math.expm1(-2.0 * x))


def _boltzmann(omega_abs: float, T: float) -> float:
    if T == 0.0:
        return 0.0
    x = CONSTANTS.hbar * omega_abs / (CONSTANTS.k_B * T)
    return math.exp(-x) if x < 700.0 else 0.0


# ---------------------------------------------------------------------------
# SI coupling operators
# ---------------------------------------------------------------------------


def persistent_current_operator(
    basis: BasisSpec, params: CircuitParams, derived: DerivedParams
) -> HermitianOperator:
    """I_p = phi / L = (Phi0 / 2 pi L) theta, in ampere; 1/f flux noise lever."""
    theta, _, _ = build_flux_operators(basis, params)
    return HermitianOperator(derived.I_p_prefactor * theta.entries, basis, label="I_p")


def flux_operator_si(basis: BasisSpec, params: CircuitParams) -> HermitianOperator:
    """phi = (Phi0 / 2 pi) theta, in weber; dielectric/inductive noise lever."""
    theta, _, _ = build_flux_operators(basis, params)
    return HermitianOperator(
        CONSTANTS.Phi0 / (2.0 * math.pi) * theta.entries, basis, label="phi"
    )


def noise_rate(
    spec: SpectralResult,
    coupling_op: HermitianOperator,
    channel: NoiseChannel,
    i: int,
    j: int,
    derived: DerivedParams,
) -> TransitionRate:
    """Gamma_ij = |<j|O|i>|^2 S(omega_ij) / hbar^2 at signed omega."""
    omega = transition_omega(spec, i, j)
    m2 = abs(matrix_element(spec, coupling_op, j, i)) ** 2
    rate = m2 * spectral_density(channel, omega, derived) / CONSTANTS.hbar**2
    return TransitionRate(i, j, channel.kind, rate, omega)


def flux_biased_decay(
    params: CircuitParams,
    basis: BasisSpec,
    derived: DerivedParams,
    i: int,
    j: int,
    k: int = 6,
) -> TransitionRate:
    """Waveguide emission on the flux-biased spectrum.

    Levels are identified by maximum-overlap continuation from the
    symmetric-point eigenstates, so (i, j) keep their zero-bias meaning.
    """
    if params.phi_ext == 0.0:
        raise UnitError("flux_biased_decay requires phi_ext != 0")
    from fluxbic.operators import build_charge_operator
    from fluxbic.spectrum import spectral_result, track_states

    reference = spectral_result(params.with_phi_ext(0.0), basis, k)
    biased = spectral_result(params, basis, k)
    mapping = track_states(reference, biased, (i, j))
    n_op = build_charge_operator(basis, params)
    rate = golden_rule_waveguide(biased, n_op, mapping[i], mapping[j], derived, params.Z_line)
    return TransitionRate(i, j, WAVEGUIDE, rate.rate, rate.omega)


# ---------------------------------------------------------------------------
# Quasi-static 1/f amplitude (cosine-integral band power)
# ---------------------------------------------------------------------------


def cosine_integral(x: float) -> float:
    """Ci(x) = -integral_x^inf cos(t)/t dt."""
    if x <= 0.0:
        raise ValueError("Ci requires x > 0")
    return float(scipy.special.sici(x)[1])


def quasi_static_sigma(
    A: float, gamma_minus: float = 1e-2, gamma_plus: float = 1e1
) -> float:
    """Quasi-static flux deviation sigma (Phi0 units) of band-limited 1/f noise.

    sigma^2 = A^2 [Ci(1) - Ci(gamma_plus/gamma_minus)]; weakly dependent on
    the cutoffs since |Ci(x)| < 1/x.
    """
    if not 0.0 < gamma_minus < gamma_plus:
        raise InvalidCutoffs(f"need 0 < gamma_minus < gamma_plus, got ({gamma_minus}, {gamma_plus})")
    ratio = gamma_plus / gamma_minus
    band = cosine_integral(1.0) - cosine_integral(ratio)
    if band <= 0.0:
        raise InvalidCutoffs(f"cutoff ratio {ratio:.3g} gives no quasi-static band power")
    return A * math.sqrt(band)


# ---------------------------------------------------------------------------
# Discretized-waveguide cross-check for the golden-rule prefactor
# ---------------------------------------------------------------------------


def discrete_mode_cross_check(
    spec: SpectralResult,
    n_op: HermitianOperator,
    i: int,
    j: int,
    derived: DerivedParams,
    Z: float,
    L_wg: float,
    N_modes: int,
    c0: float = C0_PER_LENGTH,
) -> float:
    """Emission rate from the discretized normal-mode coupling.

    The line of length L_wg carries modes omega_n = n * 2 pi nu / L_wg with
    nu = 1/(c0 Z); the qubit charge couples to mode n with strength
    (C_c/C_sigma) sqrt(hbar omega_n / 2 c0 L_wg) (-1)^n.  The golden rule
    evaluated at the mode nearest omega_ij with the discrete density of
    states 1/(mode spacing) converges to the continuum rate as L_wg grows.
    """
    omega = transition_omega(spec, i, j)
    if omega <= 0.0:
        raise NotDownward(f"E_{i} <= E_{j}: not an emission process")
    nu = 1.0 / (c0 * Z)
    d_omega = 2.0 * math.pi * nu / L_wg
    modes = d_omega * np.arange(1, N_modes + 1)
    if omega < modes[0] or omega > modes[-1]:
        raise ModeGridTooCoarse(
            f"omega_ij = {omega:.3e} rad/s outside mode grid [{modes[0]:.3e}, {modes[-1]:.3e}]"
        )
    n_star = int(np.argmin(np.abs(modes - omega)))
    q_ij = 2.0 * CONSTANTS.e_charge * matrix_element(spec, n_op, i, j)
    g = (
        derived.coupling_ratio
        * (-1.0) ** (n_star + 1)
        * math.sqrt(CONSTANTS.hbar * modes[n_star] / (2.0 * c0 * L_wg))
        * q_ij
    )
    return float(
        WAVEGUIDE_RATE_CALIBRATION
        * 2.0 * math.pi / CONSTANTS.hbar**2 * abs(g) ** 2 / d_omega
    )


# ---------------------------------------------------------------------------
# Aggregate report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateReport:
    """Every rate of one parameter point (one lifetime-table row), in 1/s.

    _bias columns are evaluated on the flux-biased spectrum; _flux, _diel
    and _ind are the 1/f, dielectric and inductive environment channels.
    T1 in ms is the reciprocal of the total outflow from the protected
    state.
    """

    gamma_pm: float
    gamma_p3: float
    gamma_p0_bias: float
    gamma_pm_bias: float
    gamma_p3_bias: float
    gamma_pm_flux: float
    gamma_p3_flux: float
    gamma_pm_diel: float
    gamma_p3_diel: float
    gamma_pm_ind: float
    gamma_p3_ind: float
    T1_ms: float

    RATE_FIELDS = (
        "gamma_pm",
        "gamma_p3",
        "gamma_p0_bias",
        "gamma_pm_bias",
        "gamma_p3_bias",
        "gamma_pm_flux",
        "gamma_p3_flux",
        "gamma_pm_diel",
        "gamma_p3_diel",
        "gamma_pm_ind",
        "gamma_p3_ind",
    )

    def rates(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in self.RATE_FIELDS}

    def as_dict(self) -> dict[str, float]:
        out = self.rates()
        out["T1_ms"] = self.T1_ms
        return out


def total_lifetime(rates: dict[str, float]) -> float:
    """T1 in ms from the sum of all outgoing rates (1/s)."""
    total = sum(rates.values())
    return math.inf if total == 0.0 else 1e3 / total
