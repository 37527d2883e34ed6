"""Diagonalization, convergence certification, parity labels, potential
minima and avoided level crossings."""

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
import scipy.optimize

from fluxbic.errors import (
    AmbiguousParity,
    ConvergenceNotCertified,
    NoMinimumInRange,
    NoSideWells,
    NotConverged,
    StateTrackingLost,
)
from fluxbic.operators import (
    HermitianOperator,
    build_hamiltonian,
    parity_operator,
    potential_curvature,
    potential_energy,
    potential_gradient,
)
from fluxbic.params import BasisSpec, CircuitParams

PARITY_THRESHOLD = 0.999  # |<psi|P|psi>| below this at a symmetric point -> ambiguous

EVEN = "even"
ODD = "odd"
UNDEFINED = "undefined"


@dataclass(frozen=True)
class SpectralResult:
    """Lowest-k eigenpairs of one circuit Hamiltonian.

    energies ascending in GHz, states as columns in the build basis,
    parities per state (undefined away from integer flux).
    """

    energies: np.ndarray
    states: np.ndarray
    parities: tuple[str, ...]
    basis: BasisSpec
    params: CircuitParams
    converged_dim: int
    tol_achieved: float | None = None

    @property
    def k(self) -> int:
        return self.energies.size


def _fix_signs(states: np.ndarray) -> np.ndarray:
    """Largest-magnitude component of each eigenvector made positive."""
    out = states.copy()
    for col in range(out.shape[1]):
        lead = np.argmax(np.abs(out[:, col]))
        if out[lead, col].real < 0.0:
            out[:, col] = -out[:, col]
    return out


def diagonalize(
    H: HermitianOperator,
    k: int,
    params: CircuitParams | None = None,
    require_certified: bool = False,
) -> SpectralResult:
    """Lowest k eigenpairs of a built Hamiltonian.

    Dense solver restricted to the lowest subset; k is capped at dim/4 so
    returned levels sit safely below the truncation edge.
    """
    if k > H.dim // 4:
        raise ValueError(f"k={k} exceeds dim/4={H.dim // 4} truncation safety margin")
    if require_certified and H.basis.certified_tol is None:
        raise ConvergenceNotCertified(
            f"basis {H.basis.kind.value}(dim={H.basis.dim}) has no convergence certificate"
        )
    vals, vecs = scipy.linalg.eigh(H.entries, subset_by_index=(0, k - 1))
    return SpectralResult(
        energies=vals,
        states=_fix_signs(vecs),
        parities=(UNDEFINED,) * k,
        basis=H.basis,
        params=params,
        converged_dim=H.dim,
        tol_achieved=H.basis.certified_tol,
    )


def label_states(result: SpectralResult) -> SpectralResult:
    """Attach parity labels from <psi|P|psi>; requires phi_ext = 0 mod 1."""
    params = result.params
    if params is None or not math.isclose(params.phi_ext % 1.0, 0.0, abs_tol=1e-12):
        return replace(result, parities=(UNDEFINED,) * result.k)
    p = parity_operator(result.basis)
    labels = []
    for col in range(result.k):
        v = result.states[:, col]
        expect = float(np.real(np.vdot(v, p @ v)))
        if abs(expect) < PARITY_THRESHOLD:
            raise AmbiguousParity(
                f"state {col}: |<P>| = {abs(expect):.6f} < {PARITY_THRESHOLD} at symmetric point"
            )
        labels.append(EVEN if expect > 0.0 else ODD)
    return replace(result, parities=tuple(labels))


def spectral_result(
    params: CircuitParams,
    basis: BasisSpec,
    k: int,
    require_certified: bool = False,
    label: bool = True,
) -> SpectralResult:
    """Build, diagonalize and (at integer flux) parity-label in one call.

    label=False skips parity labeling, e.g. for sweeps that pass through a
    level crossing where labels are ill-defined.
    """
    h = build_hamiltonian(params, basis)
    res = diagonalize(h, k, params=params, require_certified=require_certified)
    return label_states(res) if label else res


def check_convergence(
    params: CircuitParams, basis_ladder: list[BasisSpec], k: int, tol: float
) -> BasisSpec:
    """First basis whose lowest-k energies move < tol at the next rung.

    The returned BasisSpec carries the achieved deviation as its
    convergence certificate.
    """
    dims = [b.dim for b in basis_ladder]
    if len(basis_ladder) < 2 or any(b <= a for a, b in zip(dims, dims[1:])):
        raise ValueError("basis ladder must contain at least two strictly increasing dims")
    energies = [
        scipy.linalg.eigh(
            build_hamiltonian(params, b).entries, subset_by_index=(0, k - 1), eigvals_only=True
        )
        for b in basis_ladder
    ]
    for rung, (lo, hi) in enumerate(zip(energies, energies[1:])):
        dev = float(np.abs(lo - hi).max())
        if dev < tol:
            return basis_ladder[rung].certified(dev)
    raise NotConverged(
        f"ladder {dims} exhausted: last deviation {float(np.abs(energies[-2] - energies[-1]).max()):.3e}"
        f" >= tol {tol:.3e}"
    )


# ---------------------------------------------------------------------------
# Potential landscape
# ---------------------------------------------------------------------------

# Search window for minima; covers the central wells of the qutrit regime.
_MINIMA_WINDOW = 3.0 * math.pi
_MINIMA_SCAN_STEP = 0.01


@dataclass(frozen=True)
class PotentialMinima:
    """Local minima of U(theta) inside the qutrit window, ascending."""

    locations: np.ndarray   # rad
    depths: np.ndarray      # GHz
    curvatures: np.ndarray  # GHz / rad^2

    @property
    def count(self) -> int:
        return self.locations.size

    def central_three(self) -> tuple[float, float, float]:
        """(-theta_star, theta_center, +theta_star): the three deepest wells."""
        if self.count < 3:
            raise NoSideWells(f"only {self.count} minima; three are required")
        order = np.argsort(self.depths)[:3]
        locs = np.sort(self.locations[order])
        return float(locs[0]), float(locs[1]), float(locs[2])


def find_potential_minima(params: CircuitParams) -> PotentialMinima:
    """All minima of U in [-3 pi, 3 pi] by sign scan plus bisection."""
    grid = np.arange(-_MINIMA_WINDOW, _MINIMA_WINDOW + _MINIMA_SCAN_STEP, _MINIMA_SCAN_STEP)
    g = potential_gradient(params, grid)
    roots = []
    for a, b, ga, gb in zip(grid[:-1], grid[1:], g[:-1], g[1:]):
        if ga == 0.0:
            roots.append(float(a))
        elif ga * gb < 0.0:
            roots.append(
                float(
                    scipy.optimize.bisect(
                        lambda t: float(potential_gradient(params, t)), a, b, xtol=1e-12
                    )
                )
            )
    minima = [r for r in roots if potential_curvature(params, r) > 0.0]
    if len(minima) <= 1:
        raise NoSideWells(
            f"single potential minimum at E_J/E_L = {params.E_J / params.E_L:.3f}"
        )
    locs = np.array(sorted(minima))
    # At a symmetric point the side wells mirror exactly; average out the
    # residual bisection asymmetry.
    if math.isclose(params.phi_ext % 1.0, 0.0, abs_tol=1e-12) and locs.size % 2 == 1:
        half = locs.size // 2
        sym = 0.5 * (locs[half + 1 :] - locs[:half][::-1])
        locs = np.concatenate([-sym[::-1], [0.0 if abs(locs[half]) < 1e-9 else locs[half]], sym])
    return PotentialMinima(
        locations=locs,
        depths=potential_energy(params, locs),
        curvatures=potential_curvature(params, locs),
    )


# ---------------------------------------------------------------------------
# Avoided crossings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AvoidedCrossing:
    sweep_parameter_value: float
    gap: float  # GHz
    level_pair: tuple[int, int]


def apply_axis(params: CircuitParams, axis: str, value: float) -> CircuitParams:
    """Set a swept parameter; ratio axes fix the derived quantity at E_J."""
    if axis in ("E_J", "E_C", "E_L", "E_Cc", "phi_ext", "T", "Z_line"):
        return replace(params, **{axis: float(value)})
    if axis == "EJ_over_EC":
        return replace(params, E_C=params.E_J / float(value))
    if axis == "EJ_over_EL":
        return replace(params, E_L=params.E_J / float(value))
    raise ValueError(f"unknown sweep axis {axis!r}")


_FLAT_GAP_RTOL = 1e-9
_GOLDEN_TOL = 1e-6


def find_avoided_crossing(
    params_template: CircuitParams,
    axis: str,
    values: np.ndarray,
    levels: tuple[int, int],
    basis: BasisSpec,
) -> AvoidedCrossing:
    """Location and size of the minimum gap E_j - E_i along a sweep.

    The sweep grid brackets the minimum; an interior bracket is refined by
    golden-section search.  A gap that is flat over the whole sweep has no
    crossing and raises NoMinimumInRange.
    """
    i, j = levels
    if j <= i:
        raise ValueError("levels must satisfy j > i")
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise ValueError("sweep needs at least 2 points")

    def gap_at(x: float) -> float:
        h = build_hamiltonian(apply_axis(params_template, axis, x), basis)
        e = scipy.linalg.eigh(h.entries, subset_by_index=(0, j), eigvals_only=True)
        return float(e[j] - e[i])

    gaps = np.array([gap_at(x) for x in values])
    if gaps.max() - gaps.min() <= _FLAT_GAP_RTOL * gaps.max():
        raise NoMinimumInRange(
            f"gap E_{j}-E_{i} is flat over the sweep (variation {gaps.max() - gaps.min():.3e} GHz)"
        )
    m = int(np.argmin(gaps))
    if m == 0 or m == values.size - 1:
        return AvoidedCrossing(float(values[m]), float(gaps[m]), levels)
    res = scipy.optimize.minimize_scalar(
        gap_at,
        bracket=(values[m - 1], values[m], values[m + 1]),
        method="golden",
        options={"xtol": _GOLDEN_TOL},
    )
    return AvoidedCrossing(float(res.x), float(res.fun), levels)


def track_states(
    reference: SpectralResult, target: SpectralResult, indices: tuple[int, ...]
) -> dict[int, int]:
    """Map reference level indices to target levels by maximum overlap.

    Raises StateTrackingLost when the best overlap drops below 0.5 or two
    reference states claim the same target state.
    """
    overlaps = np.abs(reference.states.conj().T @ target.states)
    mapping: dict[int, int] = {}
    for idx in indices:
        best = int(np.argmax(overlaps[idx]))
        if overlaps[idx, best] < 0.5:
            raise StateTrackingLost(
                f"state {idx}: best overlap {overlaps[idx, best]:.3f} < 0.5"
            )
        if best in mapping.values():
            raise StateTrackingLost(f"states collide on target level {best}")
        mapping[idx] = best
    return mapping
