"""Circuit parameters, derived quantities and basis specifications.

All circuit energies are stored as frequencies (E/h, GHz); conversion to
SI happens only inside the rate formulas.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum

from fluxbic.constants import CONSTANTS
from fluxbic.errors import GridTooNarrow, UnitError

# e^2 / 2h in F * Hz: capacitance C = _E2_OVER_2H / (E_GHz * 1e9).
_E2_OVER_2H = CONSTANTS.e_charge**2 / (2.0 * CONSTANTS.h)


@dataclass(frozen=True)
class CircuitParams:
    """Fluxonium device, coupling and environment parameters.

    E_J, E_C, E_L, E_Cc are energies over h in GHz; phi_ext is the external
    flux as a fraction of Phi0; Z_line in ohm; T in kelvin.  E_Cc = 0 means
    no coupling capacitor.
    """

    E_J: float
    E_C: float
    E_L: float
    phi_ext: float = 0.0
    E_Cc: float = 0.0
    Z_line: float = 50.0
    T: float = 0.0

    def __post_init__(self):
        if not self.E_J >= 0.0:
            raise UnitError(f"circuit.E_J must be >= 0, got {self.E_J}")
        if not self.E_C > 0.0:
            raise UnitError(f"circuit.E_C must be > 0, got {self.E_C}")
        if not self.E_L > 0.0:
            raise UnitError(f"circuit.E_L must be > 0, got {self.E_L}")
        if not self.E_Cc >= 0.0:
            raise UnitError(f"circuit.E_Cc must be >= 0, got {self.E_Cc}")
        if not self.Z_line > 0.0:
            raise UnitError(f"circuit.Z_line must be > 0, got {self.Z_line}")
        if not self.T >= 0.0:
            raise UnitError(f"circuit.T must be >= 0, got {self.T}")

    def with_phi_ext(self, phi_ext: float) -> "CircuitParams":
        return replace(self, phi_ext=phi_ext)


@dataclass(frozen=True)
class DerivedParams:
    """SI-level quantities derived from a CircuitParams instance."""

    C_f: float              # F
    C_c: float              # F
    C_sigma: float          # F, C_f + C_c
    E_C_tilde: float        # GHz, e^2/(2 C_sigma)/h
    coupling_ratio: float   # C_c / C_sigma
    L: float                # H
    I_p_prefactor: float    # A per unit phase, Phi0/(2 pi L)
    I_0: float              # A, junction critical current 2 pi E_J h / Phi0


def derive_params(params: CircuitParams) -> DerivedParams:
    """Capacitances, inductance and current scales from circuit energies."""
    C_f = _E2_OVER_2H / (params.E_C * 1e9)
    C_c = 0.0 if params.E_Cc == 0.0 else _E2_OVER_2H / (params.E_Cc * 1e9)
    C_sigma = C_f + C_c
    E_C_tilde = _E2_OVER_2H / C_sigma / 1e9
    L = (CONSTANTS.Phi0 / (2.0 * math.pi)) ** 2 / (CONSTANTS.h * params.E_L * 1e9)
    return DerivedParams(
        C_f=C_f,
        C_c=C_c,
        C_sigma=C_sigma,
        E_C_tilde=E_C_tilde,
        coupling_ratio=C_c / C_sigma,
        L=L,
        I_p_prefactor=CONSTANTS.Phi0 / (2.0 * math.pi * L),
        I_0=2.0 * math.pi * CONSTANTS.h * params.E_J * 1e9 / CONSTANTS.Phi0,
    )


class BasisKind(Enum):
    PHASE_GRID = "phase_grid"
    OSCILLATOR_LADDER = "oscillator_ladder"


MIN_PHASE_HALFWIDTH = 3.0 * math.pi  # must contain all three potential wells


@dataclass(frozen=True)
class BasisSpec:
    """Numerical basis: uniform phase grid or harmonic-oscillator ladder.

    certified_tol is set by the convergence check; None means the basis has
    not been certified for any parameter point.
    """

    kind: BasisKind
    dim: int
    phase_halfwidth: float | None = None
    certified_tol: float | None = None

    def __post_init__(self):
        if self.dim < 16:
            raise UnitError(f"basis dim must be >= 16, got {self.dim}")
        if self.kind is BasisKind.PHASE_GRID:
            if self.phase_halfwidth is None:
                raise UnitError("phase grid requires phase_halfwidth")
            if self.phase_halfwidth < MIN_PHASE_HALFWIDTH:
                raise GridTooNarrow(
                    f"phase_halfwidth {self.phase_halfwidth:.3f} < 3*pi; grid must "
                    "contain all three potential wells"
                )
        elif self.phase_halfwidth is not None:
            raise UnitError("oscillator ladder takes no phase_halfwidth")

    @staticmethod
    def grid(dim: int = 2048, halfwidth: float = 6.0 * math.pi) -> "BasisSpec":
        # 6 pi default: at 4 pi the box clips the shallow-well tails of the
        # 5th/6th levels at the 1e-3 GHz level for E_J/E_C <= 30.
        return BasisSpec(BasisKind.PHASE_GRID, dim, halfwidth)

    @staticmethod
    def ladder(dim: int = 200) -> "BasisSpec":
        return BasisSpec(BasisKind.OSCILLATOR_LADDER, dim)

    def certified(self, tol: float) -> "BasisSpec":
        return replace(self, certified_tol=tol)
