"""Exact diagonalization, perturbative ground-state structure, multi-pair
creation matrix elements, and power-law fits of their small-J/U scaling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fock import BOSE, OperatorMatrix, doublon_matrix
from .model import hopping_sum, square
from .symmetry import SymmetricSubspace, build_symmetric_subspace, square_subspace

DENSE_DIM_CAP = 5000
HERMITICITY_TOL = 1e-12
SPARSE_GROUND_CUTOFF = 600


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, matching eigenvalue order

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def ground_state(self) -> np.ndarray:
        return self.eigenvectors[:, 0]


def _as_dense(h) -> np.ndarray:
    if isinstance(h, OperatorMatrix):
        return h.toarray()
    if sp.issparse(h):
        return h.toarray()
    return np.asarray(h)


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Largest-magnitude component real positive, column by column."""
    out = vectors.copy()
    for k in range(out.shape[1]):
        idx = int(np.argmax(np.abs(out[:, k])))
        pivot = out[idx, k]
        if np.iscomplexobj(out):
            if abs(pivot) > 0:
                out[:, k] *= np.conj(pivot) / abs(pivot)
        elif pivot < 0:
            out[:, k] = -out[:, k]
    return out


def diagonalize(h) -> Spectrum:
    """Full dense spectrum of a Hermitian operator (dim <= 5000), ascending.

    Eigenvector phases are fixed by making the largest-magnitude component
    real positive, which keeps results run-to-run deterministic.
    """
    mat = _as_dense(h)
    n = mat.shape[0]
    if mat.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    if n > DENSE_DIM_CAP:
        raise ValueError(f"dimension {n} exceeds the dense solver cap {DENSE_DIM_CAP}")
    scale = max(1.0, float(np.max(np.abs(mat))) if n else 1.0)
    defect = float(np.max(np.abs(mat - mat.conj().T))) if n else 0.0
    if defect > HERMITICITY_TOL * scale:
        raise ValueError(f"matrix is not Hermitian (defect {defect:.3e})")
    w, v = np.linalg.eigh(mat)
    return Spectrum(w, _fix_phases(v))


def ground_state_energy(h) -> float:
    """Lowest eigenvalue; sparse Lanczos above the dense cutoff.

    The Lanczos start vector is fixed (uniform), so results are
    deterministic run to run.
    """
    if isinstance(h, OperatorMatrix):
        mat = h.matrix
    elif sp.issparse(h):
        mat = h
    else:
        mat = np.asarray(h)
    n = mat.shape[0]
    if n <= SPARSE_GROUND_CUTOFF:
        return float(np.linalg.eigvalsh(_as_dense(mat))[0])
    v0 = np.full(n, 1.0 / np.sqrt(n))
    w = spla.eigsh(mat, k=1, which="SA", v0=v0, return_eigenvectors=False)
    return float(w[0])


@dataclass(frozen=True)
class PerturbationCoefficients:
    c0: float
    c1: float
    c2: float
    j_over_u: float
    outside_window: bool


def perturbation_coefficients(j: float, u: float, statistics: str = BOSE) -> PerturbationCoefficients:
    """Overlaps <psi_k|ground> of the K4 reduced 3x3 ground state, c0 > 0.

    Flagged when J/U >= 0.2 (outside the perturbative window).
    """
    sub = build_symmetric_subspace(4, statistics)
    spec = diagonalize(sub.reduced_hubbard(j, u))
    g = spec.ground_state
    if g[0] < 0:
        g = -g
    x = j / u
    return PerturbationCoefficients(
        c0=float(g[0]), c1=float(g[1]), c2=float(g[2]),
        j_over_u=x, outside_window=bool(x >= 0.2),
    )


@dataclass(frozen=True)
class PairAmplitude:
    """Per-unit-dJ drive matrix element into the n_pairs channel."""

    value: float
    n_pairs: int
    j: float
    u: float
    ambiguous: bool
    competing_value: float | None = None


def pair_amplitude(
    subspace: SymmetricSubspace, j: float, u: float, n_pairs: int
) -> PairAmplitude:
    """<(eigenstate with dominant n_pairs-doublon character)| t_reduced |ground>.

    Eigenstates are labeled by maximal overlap with the symmetrized
    n_pairs-doublon vector; when the two largest overlaps agree within 1%
    the labeling is flagged ambiguous and the runner-up element reported.
    """
    if not 0 <= n_pairs < subspace.size:
        raise ValueError(f"n_pairs {n_pairs} outside 0..{subspace.size - 1}")
    spec = diagonalize(subspace.reduced_hubbard(j, u))
    ground = spec.eigenvectors[:, 0]
    overlaps = np.abs(spec.eigenvectors[n_pairs, :])
    order = np.argsort(overlaps)[::-1]
    best, runner = int(order[0]), int(order[1])
    ambiguous = overlaps[runner] > 0.99 * overlaps[best]
    amp = float(spec.eigenvectors[:, best] @ subspace.t_reduced @ ground)
    competing = (
        float(spec.eigenvectors[:, runner] @ subspace.t_reduced @ ground)
        if ambiguous
        else None
    )
    return PairAmplitude(amp, n_pairs, j, u, ambiguous, competing)


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    prefactor: float
    r_squared: float
    window: tuple[float, float]


def scaling_fit(j_over_u: np.ndarray, amplitudes: np.ndarray) -> ScalingFit:
    """Least-squares slope of log|amplitude| against log(J/U)."""
    x = np.asarray(j_over_u, dtype=float)
    a = np.abs(np.asarray(amplitudes, dtype=float))
    if x.size < 6:
        raise ValueError(f"need at least 6 grid points, got {x.size}")
    if np.any(a == 0.0):
        raise ValueError("zero amplitude in window; identically-zero channel?")
    lx, la = np.log(x), np.log(a)
    slope, intercept = np.polyfit(lx, la, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((la - pred) ** 2))
    ss_tot = float(np.sum((la - la.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(
        exponent=float(slope),
        prefactor=float(np.exp(intercept)),
        r_squared=r2,
        window=(float(x.min()), float(x.max())),
    )


@dataclass(frozen=True)
class ScalingScan:
    j_over_u: np.ndarray
    amplitudes: np.ndarray
    fit: ScalingFit | None
    zero_channel: bool


def scaling_scan(
    n_sites: int,
    n_pairs: int,
    j_min: float,
    j_max: float,
    points: int = 10,
    statistics: str = BOSE,
) -> ScalingScan:
    """Pair amplitudes on a log-spaced J/U grid plus the fitted exponent.

    An identically-zero channel (every |amplitude| < 1e-14) is reported
    without a fit.
    """
    sub = build_symmetric_subspace(n_sites, statistics)
    xs = np.geomspace(j_min, j_max, points)
    amps = np.array([pair_amplitude(sub, x, 1.0, n_pairs).value for x in xs])
    if np.all(np.abs(amps) < 1e-14):
        return ScalingScan(xs, amps, None, zero_channel=True)
    return ScalingScan(xs, amps, scaling_fit(xs, amps), zero_channel=False)


@dataclass(frozen=True)
class AmplitudeMaximum:
    j_over_u: float
    value: float
    unimodal: bool
    at_boundary: bool
    n_local_maxima: int


def amplitude_maximum(
    subspace: SymmetricSubspace,
    n_pairs: int,
    grid: np.ndarray | None = None,
) -> AmplitudeMaximum:
    """Location and value of the maximum of |amplitude|^2 over a J/U grid.

    Default grid: J/U in (0, 1.5] with step 0.01.  Flags loss of
    unimodality and maxima sitting on the grid boundary.
    """
    xs = np.arange(0.01, 1.5 + 1e-12, 0.01) if grid is None else np.asarray(grid, float)
    vals = np.array(
        [pair_amplitude(subspace, x, 1.0, n_pairs).value ** 2 for x in xs]
    )
    peak = int(np.argmax(vals))
    interior_maxima = [
        i
        for i in range(1, len(xs) - 1)
        if vals[i] > vals[i - 1] and vals[i] > vals[i + 1]
    ]
    return AmplitudeMaximum(
        j_over_u=float(xs[peak]),
        value=float(vals[peak]),
        unimodal=len(interior_maxima) == 1,
        at_boundary=peak in (0, len(xs) - 1),
        n_local_maxima=len(interior_maxima),
    )


def cycle_pair_amplitude(j: float, u: float, reading: str = "krylov", statistics: str = BOSE) -> float:
    """|2-pair drive element| on the 4-site cycle, per unit dJ.

    ``reading="krylov"``: top-vs-ground element of the reduced invariant
    subspace.  ``reading="eigenstates"``: norm of the projection of
    t_kin|ground> onto the highest-energy eigenspace of the full sector.
    """
    if reading == "krylov":
        sub = square_subspace(statistics)
        spec = diagonalize(sub.reduced_hubbard(j, u))
        return float(
            abs(spec.eigenvectors[:, -1] @ sub.t_reduced @ spec.eigenvectors[:, 0])
        )
    if reading == "eigenstates":
        sub = square_subspace(statistics)
        t_kin = -hopping_sum(square(), sub.basis, statistics).toarray()
        h = j * t_kin + u * doublon_matrix(sub.basis).toarray()
        spec = diagonalize(h)
        top_mask = np.abs(spec.eigenvalues - spec.eigenvalues[-1]) < 1e-8 * max(
            1.0, abs(spec.eigenvalues[-1])
        )
        top = spec.eigenvectors[:, top_mask]
        return float(np.linalg.norm(top.T @ (t_kin @ spec.ground_state)))
    raise ValueError(f"unknown reading {reading!r}")
