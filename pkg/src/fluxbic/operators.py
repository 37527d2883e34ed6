"""Hamiltonian, charge and flux operators in the two numerical bases.

Dimensionless variables: phase theta = 2 pi phi / Phi0 and Cooper-pair
number n = q / 2e, with [theta, n] = i.  The Hamiltonian (in GHz) is

    H = 4 E_C n^2 + E_L theta^2 / 2 - E_J cos(theta + 2 pi phi_ext)

with the external flux inside the cosine.  The phase grid uses the
sinc-DVR (spectral) kinetic and derivative matrices; the oscillator
ladder applies scalar functions of theta through its eigendecomposition.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from fluxbic.errors import NonHermitianResult
from fluxbic.params import BasisKind, BasisSpec, CircuitParams


@dataclass(frozen=True)
class HermitianOperator:
    """Dense Hermitian matrix tagged with its basis and a label."""

    entries: np.ndarray
    basis: BasisSpec
    label: str = ""

    def __post_init__(self):
        m = self.entries
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise NonHermitianResult(f"{self.label}: matrix is not square")
        scale = np.abs(m).max()
        dev = np.abs(m - m.conj().T).max()
        if scale > 0.0 and dev > 1e-12 * scale:
            raise NonHermitianResult(
                f"{self.label}: hermiticity deviation {dev:.3e} exceeds 1e-12 * {scale:.3e}"
            )
        self.entries.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def phase_grid_points(basis: BasisSpec) -> np.ndarray:
    """Symmetric grid theta_i in [-w, w]; theta[N-1-i] = -theta[i] exactly."""
    w = basis.phase_halfwidth
    return np.linspace(-w, w, basis.dim)


def _dvr_matrices(dim: int, dx: float):
    """Sinc-DVR first derivative (antisymmetric) and -d^2/dtheta^2 (positive)."""
    idx = np.arange(dim)
    diff = idx[:, None] - idx[None, :]
    sign = np.where(diff % 2 == 0, 1.0, -1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = sign / (dx * diff)
        d2 = 2.0 * sign / (dx * diff) ** 2
    np.fill_diagonal(d1, 0.0)
    np.fill_diagonal(d2, math.pi**2 / (3.0 * dx**2))
    return d1, d2


def potential_energy(params: CircuitParams, theta):
    """U(theta) in GHz."""
    return 0.5 * params.E_L * np.asarray(theta) ** 2 - params.E_J * np.cos(
        np.asarray(theta) + 2.0 * math.pi * params.phi_ext
    )


def potential_gradient(params: CircuitParams, theta):
    return params.E_L * np.asarray(theta) + params.E_J * np.sin(
        np.asarray(theta) + 2.0 * math.pi * params.phi_ext
    )


def potential_curvature(params: CircuitParams, theta):
    return params.E_L + params.E_J * np.cos(np.asarray(theta) + 2.0 * math.pi * params.phi_ext)


def oscillator_lengths(params: CircuitParams) -> tuple[float, float]:
    """(theta_zpf, n_zpf) of the E_L well; product is 1/2 so [theta, n] = i."""
    theta_zpf = (8.0 * params.E_C / params.E_L) ** 0.25 / math.sqrt(2.0)
    n_zpf = (params.E_L / (8.0 * params.E_C)) ** 0.25 / math.sqrt(2.0)
    return theta_zpf, n_zpf


def _ladder_theta_matrix(basis: BasisSpec, params: CircuitParams) -> np.ndarray:
    dim = basis.dim
    theta_zpf, _ = oscillator_lengths(params)
    off = theta_zpf * np.sqrt(np.arange(1, dim))
    return np.diag(off, 1) + np.diag(off, -1)


@lru_cache(maxsize=8)
def _ladder_theta_eig(dim: int, theta_zpf: float):
    off = theta_zpf * np.sqrt(np.arange(1, dim))
    theta = np.diag(off, 1) + np.diag(off, -1)
    vals, vecs = np.linalg.eigh(theta)
    return vals, vecs


def _ladder_function_of_theta(basis: BasisSpec, params: CircuitParams, fn) -> np.ndarray:
    """f(theta) on the truncated ladder via the theta eigendecomposition."""
    theta_zpf, _ = oscillator_lengths(params)
    vals, vecs = _ladder_theta_eig(basis.dim, theta_zpf)
    return (vecs * fn(vals)) @ vecs.T


def build_hamiltonian(
    params: CircuitParams, basis: BasisSpec, gauge: str = "cosine"
) -> HermitianOperator:
    """Fluxonium Hamiltonian in GHz.

    gauge="cosine" puts the external flux inside the Josephson cosine;
    gauge="inductive" shifts it into the inductive term instead (the two
    are unitarily equivalent and share the spectrum).
    """
    if gauge not in ("cosine", "inductive"):
        raise ValueError(f"unknown gauge {gauge!r}")
    two_pi_phi = 2.0 * math.pi * params.phi_ext
    if basis.kind is BasisKind.PHASE_GRID:
        theta = phase_grid_points(basis)
        _, d2 = _dvr_matrices(basis.dim, theta[1] - theta[0])
        if gauge == "cosine":
            u = potential_energy(params, theta)
        else:
            u = 0.5 * params.E_L * (theta - two_pi_phi) ** 2 - params.E_J * np.cos(theta)
        h = 4.0 * params.E_C * d2
        h[np.diag_indices_from(h)] += u
    else:
        # Harmonic part is diagonal in the ladder by construction.
        omega0 = math.sqrt(8.0 * params.E_C * params.E_L)
        h = np.diag(omega0 * (np.arange(basis.dim) + 0.5))
        if gauge == "cosine":
            h -= params.E_J * _ladder_function_of_theta(
                basis, params, lambda t: np.cos(t + two_pi_phi)
            )
        else:
            theta = _ladder_theta_matrix(basis, params)
            h += 0.5 * params.E_L * (two_pi_phi**2 * np.eye(basis.dim) - 2.0 * two_pi_phi * theta)
            h -= params.E_J * _ladder_function_of_theta(basis, params, np.cos)
    h = 0.5 * (h + h.T)
    return HermitianOperator(h, basis, label="H")


def build_charge_operator(basis: BasisSpec, params: CircuitParams) -> HermitianOperator:
    """Cooper-pair number n = q/2e (dimensionless)."""
    if basis.kind is BasisKind.PHASE_GRID:
        theta = phase_grid_points(basis)
        d1, _ = _dvr_matrices(basis.dim, theta[1] - theta[0])
        n = -1j * d1
    else:
        _, n_zpf = oscillator_lengths(params)
        off = np.sqrt(np.arange(1, basis.dim))
        # i * n_zpf * (adag - a)
        n = 1j * n_zpf * (np.diag(off, -1) - np.diag(off, 1))
    return HermitianOperator(n, basis, label="n")


def build_flux_operators(
    basis: BasisSpec, params: CircuitParams
) -> tuple[HermitianOperator, HermitianOperator, HermitianOperator]:
    """(theta, sin theta, cos theta); exact per grid point on the phase grid."""
    if basis.kind is BasisKind.PHASE_GRID:
        theta = phase_grid_points(basis)
        mats = (np.diag(theta), np.diag(np.sin(theta)), np.diag(np.cos(theta)))
    else:
        mats = (
            _ladder_theta_matrix(basis, params),
            _ladder_function_of_theta(basis, params, np.sin),
            _ladder_function_of_theta(basis, params, np.cos),
        )
    labels = ("theta", "sin_theta", "cos_theta")
    return tuple(HermitianOperator(m, basis, label=l) for m, l in zip(mats, labels))


def parity_operator(basis: BasisSpec) -> np.ndarray:
    """Reflection theta -> -theta: grid index reversal / ladder (-1)^m."""
    if basis.kind is BasisKind.PHASE_GRID:
        return np.fliplr(np.eye(basis.dim))
    return np.diag(np.where(np.arange(basis.dim) % 2 == 0, 1.0, -1.0))
