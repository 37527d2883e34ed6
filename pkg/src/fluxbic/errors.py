"""Exception types raised by the simulator."""


class FluxbicError(Exception):
    """Base class for all numerical/physics failures."""


class UnitError(FluxbicError):
    """A physical parameter is outside its admissible range."""


class SchemaError(FluxbicError):
    """A configuration document does not match the published schema."""


class GridTooNarrow(FluxbicError):
    """Phase grid does not span the three potential wells."""


class NonHermitianResult(FluxbicError):
    """Internal consistency failure: a built operator is not Hermitian."""


class ConvergenceNotCertified(FluxbicError):
    """Diagonalization requested with certification on an uncertified basis."""


class NotConverged(FluxbicError):
    """Basis ladder exhausted without meeting the energy tolerance."""


class AmbiguousParity(FluxbicError):
    """Parity expectation below threshold at a symmetric point."""


class NoSideWells(FluxbicError):
    """Potential has no side minima; the qutrit picture does not apply."""


class NoMinimumInRange(FluxbicError):
    """Level gap has no minimum over the swept range (flat gap)."""


class WrongParityOrder(FluxbicError):
    """Lowest three states are not (even, odd, even)."""


class SingularTermSet(FluxbicError):
    """Spin-1 term subset does not span independently (singular Gram matrix)."""


class NotDownward(FluxbicError):
    """Golden-rule emission requested for a non-downward transition."""


class ZeroFrequency(FluxbicError):
    """1/f spectral density evaluated at zero frequency."""


class InvalidCutoffs(FluxbicError):
    """Quasi-static noise cutoffs are not ordered or give no band power."""


class ModeGridTooCoarse(FluxbicError):
    """Discrete waveguide modes do not bracket the transition frequency."""


class StateTrackingLost(FluxbicError):
    """Adiabatic continuation lost a state (maximum overlap below threshold)."""
