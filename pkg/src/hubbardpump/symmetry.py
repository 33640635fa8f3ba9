"""Permutation-invariant subspaces of half-filled clusters and their reductions.

For the complete graphs K4/K6/K8 the subspace holds one vector per doublon
count; the reduced Hamiltonian J * t_reduced + U * d_reduced is the small
tridiagonal matrix that governs multi-pair creation.  The reduction closes
in the sign-free representation (``statistics="bose"``); under fermionic
exchange signs the symmetrization of the zero-doublon seed is identically
null, which ``fock.symmetrize`` reports as a NullProjectionError.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import fock
from .fock import BOSE, FERMI, FockBasis, NullProjectionError, OperatorMatrix
from .model import complete, hopping_sum, square

CLOSURE_TOL = 1e-10
_SUPPORTED_SITES = (2, 4, 6, 8)


class SubspaceError(RuntimeError):
    """Subspace construction failed (null seeds and no usable Krylov start)."""


@dataclass(frozen=True)
class SymmetricSubspace:
    """Orthonormal invariant subspace with reduced kinetic/doublon matrices.

    ``t_reduced`` is the reduced unit-J kinetic term (the hopping part of the
    Hamiltonian at J = 1, negative off-diagonals), so the reduced Hamiltonian
    is J * t_reduced + U * d_reduced.  For complete graphs ``d_reduced`` is
    exactly diag(0..N/2); for the square reduction it is a full symmetric
    matrix because the closure vectors mix doublon sectors.
    """

    n_sites: int
    basis: FockBasis
    vectors: np.ndarray
    t_reduced: np.ndarray
    d_reduced: np.ndarray
    statistics: str
    name: str
    closed: bool = True

    @property
    def size(self) -> int:
        return self.vectors.shape[1]

    def reduced_hubbard(self, j: float, u: float) -> np.ndarray:
        return j * self.t_reduced + u * self.d_reduced


def reference_seed(n_sites: int, k: int) -> fock.FockState:
    """k-doublon reference pattern: doublons on 0..k-1, holes on k..2k-1,
    singles alternating up/down on the remaining sites."""
    up = down = 0
    for s in range(k):
        up |= 1 << s
        down |= 1 << s
    for idx, s in enumerate(range(2 * k, n_sites)):
        if idx % 2 == 0:
            up |= 1 << s
        else:
            down |= 1 << s
    return fock.FockState(up, down)


def _orthonormalize_against(w: np.ndarray, basis_vectors: list[np.ndarray]) -> np.ndarray:
    for b in basis_vectors:
        w = w - b * (b @ w)
    return w


def _krylov_vectors(t_kin, start: np.ndarray, count: int) -> list[np.ndarray]:
    """Orthonormalized iterates start, T start, T^2 start, ... (full reorth)."""
    vecs = [start / np.linalg.norm(start)]
    while len(vecs) < count:
        w = _orthonormalize_against(t_kin @ vecs[-1], vecs)
        nw = np.linalg.norm(w)
        if nw < CLOSURE_TOL:
            break
        vecs.append(w / nw)
    return vecs


def _fix_phases(vecs: list[np.ndarray], t_kin) -> list[np.ndarray]:
    # match the negative off-diagonal convention of the reduced matrices
    out = [vecs[0] if vecs[0][np.argmax(np.abs(vecs[0]))] > 0 else -vecs[0]]
    for k in range(1, len(vecs)):
        v = vecs[k]
        if out[k - 1] @ (t_kin @ v) > 0:
            v = -v
        out.append(v)
    return out


@lru_cache(maxsize=None)
def build_symmetric_subspace(n_sites: int, statistics: str = BOSE) -> SymmetricSubspace:
    """Symmetrized k-doublon vectors and reduced matrices for K_N, N in {4, 6, 8}.

    Falls back to Krylov iterates of the kinetic term when a seed
    symmetrization is null; raises SubspaceError when no start vector exists
    (the fermionic-sign convention at half filling).
    """
    if n_sites not in _SUPPORTED_SITES:
        raise ValueError(f"n_sites must be one of {_SUPPORTED_SITES}, got {n_sites}")
    basis = fock.build_basis(n_sites, n_sites // 2, n_sites // 2)
    graph = complete(n_sites)
    t_kin = -hopping_sum(graph, basis, statistics).matrix
    n_vectors = n_sites // 2 + 1

    vecs: list[np.ndarray] = []
    for k in range(n_vectors):
        seed = basis.unit_vector(reference_seed(n_sites, k))
        try:
            vecs.append(fock.symmetrize(basis, seed, statistics))
        except NullProjectionError:
            if not vecs:
                raise SubspaceError(
                    f"symmetrization of every start seed is null for K{n_sites} "
                    f"under {statistics} statistics; no invariant subspace of "
                    "one vector per doublon count exists in this convention"
                ) from None
            vecs = _krylov_vectors(t_kin, vecs[0], n_vectors)
            if len(vecs) < n_vectors:
                raise SubspaceError(
                    f"Krylov fallback closed after {len(vecs)} vectors, "
                    f"expected {n_vectors}"
                ) from None
            break

    vecs = _fix_phases(vecs, t_kin)
    v = np.column_stack(vecs)

    for k in range(n_vectors):
        w = t_kin @ v[:, k]
        residual = np.linalg.norm(w - v @ (v.T @ w))
        if residual > CLOSURE_TOL:
            raise SubspaceError(
                f"hopping sum does not close on the K{n_sites} subspace "
                f"(residual {residual:.3e} on vector {k})"
            )

    t_red = v.T @ (t_kin @ v)
    t_red = 0.5 * (t_red + t_red.T)
    d_full = fock.doublon_matrix(basis).matrix
    d_red = v.T @ (d_full @ v)
    target = np.diag(np.arange(n_vectors, dtype=float))
    if np.max(np.abs(d_red - target)) < CLOSURE_TOL:
        d_red = target
    v.setflags(write=False)
    t_red.setflags(write=False)
    d_red.setflags(write=False)
    return SymmetricSubspace(
        n_sites=n_sites,
        basis=basis,
        vectors=v,
        t_reduced=t_red,
        d_reduced=d_red,
        statistics=statistics,
        name="complete",
    )


@lru_cache(maxsize=None)
def square_subspace(statistics: str = BOSE, max_vectors: int = 10) -> SymmetricSubspace:
    """Invariant subspace of the 4-site cycle containing its ground state.

    Built as the closure of the symmetrized zero-doublon state under the
    hopping sum and the doublon operator.  If the closure exceeds
    ``max_vectors`` the truncated subspace is returned with ``closed=False``.
    """
    graph = square()
    basis = fock.build_basis(4, 2, 2)
    t_kin = -hopping_sum(graph, basis, statistics).matrix
    d_full = fock.doublon_matrix(basis).matrix

    seed = basis.unit_vector(reference_seed(4, 0))
    v0 = fock.symmetrize(basis, seed, statistics)
    vecs = [v0]
    closed = True
    growing = True
    while growing:
        growing = False
        for op in (t_kin, d_full):
            for b in list(vecs):
                w = _orthonormalize_against(op @ b, vecs)
                nw = np.linalg.norm(w)
                if nw > CLOSURE_TOL:
                    if len(vecs) >= max_vectors:
                        closed = False
                        growing = False
                        break
                    vecs.append(w / nw)
                    growing = True
            if not closed:
                break

    vecs = _fix_phases(vecs, t_kin)
    v = np.column_stack(vecs)
    t_red = v.T @ (t_kin @ v)
    t_red = 0.5 * (t_red + t_red.T)
    d_red = v.T @ (d_full @ v)
    d_red = 0.5 * (d_red + d_red.T)
    v.setflags(write=False)
    t_red.setflags(write=False)
    d_red.setflags(write=False)
    return SymmetricSubspace(
        n_sites=4,
        basis=basis,
        vectors=v,
        t_reduced=t_red,
        d_reduced=d_red,
        statistics=statistics,
        name="square",
        closed=closed,
    )


def reduce_operator(subspace: SymmetricSubspace, op: OperatorMatrix | np.ndarray) -> np.ndarray:
    """Matrix of <psi_j| op |psi_k> on the subspace vectors."""
    mat = op.matrix if isinstance(op, OperatorMatrix) else np.asarray(op)
    if mat.shape != (subspace.basis.dim, subspace.basis.dim):
        raise ValueError(
            f"operator shape {mat.shape} does not match sector dim {subspace.basis.dim}"
        )
    v = subspace.vectors
    return v.T @ (mat @ v)
