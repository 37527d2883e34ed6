"""Localized qutrit basis, spin-1 operator decompositions and the
analytic Gaussian-well model of the three lowest fluxonium states."""

import math
from dataclasses import dataclass

import numpy as np

from fluxbic.constants import CONSTANTS
from fluxbic.errors import NoSideWells, SingularTermSet, WrongParityOrder
from fluxbic.operators import (
    HermitianOperator,
    build_flux_operators,
    phase_grid_points,
    potential_curvature,
    potential_energy,
    _ladder_theta_eig,
    oscillator_lengths,
)
from fluxbic.params import BasisKind, BasisSpec, CircuitParams, derive_params
from fluxbic.spectrum import (
    EVEN,
    ODD,
    PotentialMinima,
    SpectralResult,
    find_potential_minima,
    spectral_result,
)

# ---------------------------------------------------------------------------
# Spin-1 operators in the basis ordering (|-1>, |0>, |1>), so S_z|1> = +|1>
# and |1> is the right-well state.
# ---------------------------------------------------------------------------

_SP = math.sqrt(2.0) * np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=complex)
_SM = _SP.conj().T
S_X = 0.5 * (_SP + _SM)
S_Y = -0.5j * (_SP - _SM)
S_Z = np.diag([-1.0, 0.0, 1.0]).astype(complex)

_ANTI = lambda a, b: a @ b + b @ a

SPIN_TERMS: dict[str, np.ndarray] = {
    "I": np.eye(3, dtype=complex),
    "Sx": S_X,
    "Sy": S_Y,
    "Sz": S_Z,
    "Sz2": S_Z @ S_Z,
    "{Sx,Sz}": _ANTI(S_X, S_Z),
    "{Sy,Sz}": _ANTI(S_Y, S_Z),
    "S+2+S-2": _SP @ _SP + _SM @ _SM,
    "i(S+2-S-2)": 1j * (_SP @ _SP - _SM @ _SM),
}

# CSV-safe column names for the term coefficients.
TERM_COLUMN_NAMES = {
    "I": "I",
    "Sx": "Sx",
    "Sy": "Sy",
    "Sz": "Sz",
    "Sz2": "Sz2",
    "{Sx,Sz}": "SxSz_sym",
    "{Sy,Sz}": "SySz_sym",
    "S+2+S-2": "Sp2_plus_Sm2",
    "i(S+2-S-2)": "i_Sp2_minus_Sm2",
}


def spin_term_set(names: tuple[str, ...] | None = None) -> dict[str, np.ndarray]:
    """Named Hermitian spin-1 matrices; the full nine-term set spans the
    3x3 Hermitian space."""
    if names is None:
        names = tuple(SPIN_TERMS)
    try:
        terms = {name: SPIN_TERMS[name] for name in names}
    except KeyError as exc:
        raise KeyError(f"unknown spin term {exc.args[0]!r}") from None
    gram = term_gram_matrix(terms)
    if abs(np.linalg.det(gram)) < 1e-12:
        raise SingularTermSet(f"term subset {names} has singular Gram matrix")
    return terms


def term_gram_matrix(terms: dict[str, np.ndarray]) -> np.ndarray:
    mats = list(terms.values())
    return np.array([[np.trace(a @ b).real for b in mats] for a in mats])


@dataclass(frozen=True)
class QutritDecomposition:
    """Real coefficients of a projected operator over a spin-1 term set."""

    coefficients: dict[str, float]
    residual: float
    operator_label: str

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((3, 3), dtype=complex)
        for name, c in self.coefficients.items():
            out += c * SPIN_TERMS[name]
        return out

    def dominant(self) -> str:
        return max(self.coefficients, key=lambda n: abs(self.coefficients[n]))


@dataclass(frozen=True)
class QutritBasis:
    """Orthonormal (|-1>, |0>, |1>) ordered left / center / right."""

    vectors: np.ndarray  # dim x 3, columns in the build basis
    construction: str    # "eigenstates" or "gram_schmidt"
    localization_sides: tuple[float, float, float]
    basis: BasisSpec

    def project(self, op: HermitianOperator | np.ndarray) -> np.ndarray:
        m = op.entries if isinstance(op, HermitianOperator) else op
        return self.vectors.conj().T @ m @ self.vectors


def positive_side_weight(state: np.ndarray, basis: BasisSpec, params: CircuitParams) -> float:
    """Probability weight of a state at theta > 0."""
    if basis.kind is BasisKind.PHASE_GRID:
        theta = phase_grid_points(basis)
        return float(np.sum(np.abs(state[theta > 0.0]) ** 2))
    theta_zpf, _ = oscillator_lengths(params)
    vals, vecs = _ladder_theta_eig(basis.dim, theta_zpf)
    amp = vecs.T @ state
    return float(np.sum(np.abs(amp[vals > 0.0]) ** 2))


def _localization(vectors: np.ndarray, basis: BasisSpec, params: CircuitParams):
    w_left = 1.0 - positive_side_weight(vectors[:, 0], basis, params)
    w_right = positive_side_weight(vectors[:, 2], basis, params)
    pos_center = positive_side_weight(vectors[:, 1], basis, params)
    # Center state is even: report how balanced it is across theta = 0.
    w_center = 1.0 - abs(1.0 - 2.0 * pos_center)
    return (float(w_left), float(w_center), float(w_right))


def qutrit_basis_from_eigenstates(spec: SpectralResult) -> QutritBasis:
    """(|+/-1> = (|+> +/- |->)/sqrt2, |0> = ground) with |1> right-localized.

    Requires the symmetric point and the (even, odd, even) parity order of
    the three lowest levels.
    """
    if spec.parities[:3] != (EVEN, ODD, EVEN):
        raise WrongParityOrder(
            f"lowest three parities are {spec.parities[:3]}, expected (even, odd, even)"
        )
    ground, odd1, even2 = spec.states[:, 0], spec.states[:, 1], spec.states[:, 2]
    right = (even2 + odd1) / math.sqrt(2.0)
    left = (even2 - odd1) / math.sqrt(2.0)
    if positive_side_weight(right, spec.basis, spec.params) < 0.5:
        right, left = left, right
    vectors = np.column_stack([left, ground, right])
    return QutritBasis(
        vectors=vectors,
        construction="eigenstates",
        localization_sides=_localization(vectors, spec.basis, spec.params),
        basis=spec.basis,
    )


def decompose_operator(
    op: HermitianOperator | np.ndarray,
    basis: QutritBasis | None,
    terms: dict[str, np.ndarray] | None = None,
    label: str = "",
) -> QutritDecomposition:
    """Project an operator onto the qutrit and fit it over the term set.

    The fit solves the normal equations of the trace inner product; with
    the full nine-term set the residual is zero up to round-off.  A 3x3
    matrix may be passed directly with basis=None.
    """
    if terms is None:
        terms = spin_term_set()
    if basis is not None:
        if isinstance(op, HermitianOperator) and (
            op.basis.kind is not basis.basis.kind or op.basis.dim != basis.basis.dim
        ):
            raise ValueError("operator and qutrit basis live in different build bases")
        m = basis.project(op)
    else:
        m = op.entries if isinstance(op, HermitianOperator) else np.asarray(op)
    if not label and isinstance(op, HermitianOperator):
        label = op.label
    gram = term_gram_matrix(terms)
    if abs(np.linalg.det(gram)) < 1e-12:
        raise SingularTermSet(f"term subset {tuple(terms)} has singular Gram matrix")
    rhs = np.array([np.trace(t.conj().T @ m) for t in terms.values()])
    coeff = np.linalg.solve(gram, rhs.real)
    fitted = sum(c * t for c, t in zip(coeff, terms.values()))
    residual = float(np.linalg.norm(m - fitted))
    return QutritDecomposition(
        coefficients={name: float(c) for name, c in zip(terms, coeff)},
        residual=residual,
        operator_label=label,
    )


# ---------------------------------------------------------------------------
# Gaussian well states and Gram-Schmidt construction (phase grid only).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WellGaussians:
    """Ground Gaussians of the local harmonic wells: (|L>, |0_w>, |R>)."""

    vectors: np.ndarray      # dim x 3 on the phase grid
    centers: tuple[float, float, float]
    frequencies: tuple[float, float, float]  # GHz, sqrt(8 E_C U'')
    energies: tuple[float, float, float]     # GHz, U(min) + freq/2

    @property
    def left(self) -> np.ndarray:
        return self.vectors[:, 0]

    @property
    def center(self) -> np.ndarray:
        return self.vectors[:, 1]

    @property
    def right(self) -> np.ndarray:
        return self.vectors[:, 2]


def gaussian_well_states(
    params: CircuitParams, minima: PotentialMinima, basis: BasisSpec
) -> WellGaussians:
    """Local harmonic ground states of the three central wells.

    Each state is exp(-(theta - theta_min)^2 / (4 sigma^2)) normalized on
    the grid, with sigma^2 = sqrt(8 E_C / U'') / 2.
    """
    if basis.kind is not BasisKind.PHASE_GRID:
        raise ValueError("gaussian well states require a phase-grid basis")
    centers = minima.central_three()
    theta = phase_grid_points(basis)
    cols, freqs, energies = [], [], []
    for c in centers:
        curv = float(potential_curvature(params, c))
        sigma2 = 0.5 * math.sqrt(8.0 * params.E_C / curv)
        psi = np.exp(-((theta - c) ** 2) / (4.0 * sigma2))
        cols.append(psi / np.linalg.norm(psi))
        freqs.append(math.sqrt(8.0 * params.E_C * curv))
        energies.append(float(potential_energy(params, c)) + 0.5 * freqs[-1])
    return WellGaussians(
        vectors=np.column_stack(cols),
        centers=centers,
        frequencies=tuple(freqs),
        energies=tuple(energies),
    )


@dataclass(frozen=True)
class GramSchmidtResult:
    basis: QutritBasis
    overlaps: dict[str, float]        # a0 = <3|L>, a1 = <4|L> when requested
    reconstructed: np.ndarray         # dim x 3 approximate lowest eigenstates


def gram_schmidt_qutrit(
    wells: WellGaussians, spec: SpectralResult, highest_level: int = 3
) -> GramSchmidtResult:
    """Orthogonalize |L>, |R> against eigenstates 3..highest_level.

    The overlaps a0 = <3|L> = -<3|R> and (for highest_level = 4) a1 = <4|L>
    are taken before orthogonalization.  The projected triple
    {|L'>, |0_w>, |R'>} is symmetrically orthonormalized, preserving the
    mirror symmetry, and recombined into approximate eigenstates.
    """
    if highest_level not in (3, 4):
        raise ValueError("highest_level must be 3 or 4")
    if spec.k < highest_level + 1:
        raise ValueError(f"need at least {highest_level + 1} eigenstates, have {spec.k}")
    left, center, right = wells.left, wells.center, wells.right
    overlaps = {"a0": float(np.dot(spec.states[:, 3], left))}
    if highest_level >= 4:
        overlaps["a1"] = float(np.dot(spec.states[:, 4], left))
    for level in range(3, highest_level + 1):
        v = spec.states[:, level]
        left = left - np.dot(v, left) * v
        right = right - np.dot(v, right) * v
    # Symmetric (Loewdin) orthonormalization of the well triple.
    triple = np.column_stack([left, center, right])
    overlap = triple.T @ triple
    vals, vecs = np.linalg.eigh(overlap)
    inv_sqrt = (vecs / np.sqrt(vals)) @ vecs.T
    vectors = triple @ inv_sqrt
    reconstructed = np.column_stack(
        [
            vectors[:, 1],
            (vectors[:, 2] - vectors[:, 0]) / math.sqrt(2.0),
            (vectors[:, 2] + vectors[:, 0]) / math.sqrt(2.0),
        ]
    )
    basis = QutritBasis(
        vectors=vectors,
        construction="gram_schmidt",
        localization_sides=_localization(vectors, spec.basis, spec.params),
        basis=spec.basis,
    )
    return GramSchmidtResult(basis=basis, overlaps=overlaps, reconstructed=reconstructed)


# ---------------------------------------------------------------------------
# Analytic qutrit model
# ---------------------------------------------------------------------------

# Above this well-state overlap the zero-overlap assumption of the model is
# qualitative only; results are flagged, not rejected.
OVERLAP_CONFIDENCE_THRESHOLD = 0.05


@dataclass(frozen=True)
class AnalyticQutritModel:
    """Closed-form spin-1 model built from the Gaussian-well quantities.

    Emitted matrices: "theta" (dimensionless flux), "sin_theta",
    "hamiltonian" (GHz, referenced to the central state) and "charge_n"
    (Cooper-pair number from the Heisenberg equation).
    """

    a0: float
    phi_star_tilde: float  # rad, effective well position
    b: float
    epsilon: float         # GHz, side-well elevation U(theta*) - U(0)
    Delta: float           # GHz, E3 a0^2 / (1 - a0^2)
    E3: float              # GHz, mediating level above the side doublet
    matrices: dict[str, np.ndarray]
    low_confidence: bool


def analytic_qutrit_model(
    params: CircuitParams,
    minima: PotentialMinima | None = None,
    wells: WellGaussians | None = None,
    spec: SpectralResult | None = None,
    basis: BasisSpec | None = None,
) -> AnalyticQutritModel:
    """Spin-1 matrices for flux, Hamiltonian and charge.

    Uses a0 from the Gram-Schmidt overlap, the side-well elevation, and
    the mediated coupling Delta = E3 a0^2/(1 - a0^2); the charge matrix
    follows from the Heisenberg equation q = (i C / hbar)[H, phi] with C
    the capacitance behind the circuit's charging energy.  Intermediate
    results may be passed in to avoid recomputation.
    """
    base = params.with_phi_ext(0.0)  # Eq-form is built at the symmetric point
    if basis is None:
        basis = spec.basis if spec is not None else BasisSpec.grid(1024)
    if minima is None:
        minima = find_potential_minima(base)
    if wells is None:
        wells = gaussian_well_states(base, minima, basis)
    if spec is None:
        spec = spectral_result(base, basis, k=6)
    _, _, theta_star = minima.central_three()
    gs = gram_schmidt_qutrit(wells, spec, highest_level=3)
    a0 = gs.overlaps["a0"]
    # Mediation denominator: the fourth level measured from the side-well
    # doublet it dresses (the raw eigenvalue would be offset-dependent).
    e3 = float(spec.energies[3] - 0.5 * (spec.energies[1] + spec.energies[2]))
    epsilon = float(potential_energy(base, theta_star) - potential_energy(base, 0.0))
    theta_op, sin_op, _ = build_flux_operators(spec.basis, base)
    ground_theta_3 = float(spec.states[:, 0] @ theta_op.entries @ spec.states[:, 3])
    b = math.sqrt(2.0) * a0 / math.sqrt(1.0 - a0**2) * ground_theta_3
    delta = e3 * a0**2 / (1.0 - a0**2)
    theta_tilde = theta_star * (1.0 - 2.0 * a0**2) / (1.0 - a0**2)

    theta_eff = theta_tilde * S_Z + b * SPIN_TERMS["{Sx,Sz}"]
    sin_eff = gs.basis.project(sin_op)
    h_eff = epsilon * SPIN_TERMS["Sz2"] + 0.5 * delta * SPIN_TERMS["S+2+S-2"]
    if params.phi_ext != 0.0:
        # Linear external-drive term of the effective Hamiltonian: the flux
        # bias couples through I_0 sin(theta), converted back to GHz.
        drive_joule = params.phi_ext * CONSTANTS.Phi0 * derive_params(params).I_0
        h_eff = h_eff + (drive_joule / (CONSTANTS.h * 1e9)) * sin_eff

    # q = (i C / hbar) [H, phi]; for the pure circuit this reduces to 2 e n.
    c_kinetic = CONSTANTS.e_charge**2 / (2.0 * CONSTANTS.h * params.E_C * 1e9)
    h_joule = h_eff * CONSTANTS.h * 1e9
    phi_wb = theta_eff * CONSTANTS.Phi0 / (2.0 * math.pi)
    q_eff = 1j * c_kinetic / CONSTANTS.hbar * (h_joule @ phi_wb - phi_wb @ h_joule)
    n_eff = q_eff / (2.0 * CONSTANTS.e_charge)

    max_overlap = max(
        abs(float(wells.left @ wells.right)), abs(float(wells.left @ wells.center))
    )
    return AnalyticQutritModel(
        a0=a0,
        phi_star_tilde=theta_tilde,
        b=b,
        epsilon=epsilon,
        Delta=delta,
        E3=e3,
        matrices={
            "theta": theta_eff,
            "sin_theta": sin_eff,
            "hamiltonian": h_eff,
            "charge_n": n_eff,
        },
        low_confidence=max_overlap > OVERLAP_CONFIDENCE_THRESHOLD,
    )
