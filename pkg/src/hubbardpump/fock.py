"""Fock-space machinery for fixed particle-number sectors.

Basis states are pairs of bitmasks (spin-up, spin-down occupations) over the
lattice sites.  The global mode ordering is fixed: all spin-up modes (sites
ascending) precede all spin-down modes.  Operators are built either with
canonical fermionic exchange signs (``statistics="fermi"``) or sign-free
(``statistics="bose"``, hard-core bosons), which is the representation in
which the permutation-symmetric cluster reduction closes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

MAX_SITES = 16

FERMI = "fermi"
BOSE = "bose"
_STATISTICS = (FERMI, BOSE)

UP = 0
DOWN = 1

_SPIN_ALIASES = {0: UP, 1: DOWN, "up": UP, "down": DOWN, "u": UP, "d": DOWN}


class CapacityError(ValueError):
    """Requested particle sector is outside the supported range."""


class NullProjectionError(ValueError):
    """Symmetrization annihilated the seed (no symmetric component)."""


class FockState(NamedTuple):
    up_mask: int
    down_mask: int


def _spin_index(s) -> int:
    try:
        return _SPIN_ALIASES[s]
    except (KeyError, TypeError):
        raise ValueError(f"unknown spin label {s!r}; use 0/'up' or 1/'down'") from None


def _check_statistics(statistics: str) -> str:
    if statistics not in _STATISTICS:
        raise ValueError(f"statistics must be one of {_STATISTICS}, got {statistics!r}")
    return statistics


def sector_dimension(n_sites: int, n_up: int, n_down: int) -> int:
    """Dimension C(n_sites, n_up) * C(n_sites, n_down) without building the basis."""
    _validate_sector(n_sites, n_up, n_down)
    return math.comb(n_sites, n_up) * math.comb(n_sites, n_down)


def _validate_sector(n_sites: int, n_up: int, n_down: int) -> None:
    if not (0 < n_sites <= MAX_SITES):
        raise CapacityError(f"n_sites must be in 1..{MAX_SITES}, got {n_sites}")
    if not (0 <= n_up <= n_sites and 0 <= n_down <= n_sites):
        raise CapacityError(
            f"particle numbers ({n_up}, {n_down}) out of range for {n_sites} sites"
        )


def _masks(n_sites: int, k: int) -> list[int]:
    out = []
    for combo in itertools.combinations(range(n_sites), k):
        m = 0
        for c in combo:
            m |= 1 << c
        out.append(m)
    out.sort()
    return out


class FockBasis:
    """Ordered basis of a fixed (n_up, n_down) sector.

    States are sorted lexicographically on (up_mask, down_mask); ``index``
    is the exact inverse of ``states``.
    """

    def __init__(self, n_sites: int, n_up: int, n_down: int):
        _validate_sector(n_sites, n_up, n_down)
        self.n_sites = n_sites
        self.n_up = n_up
        self.n_down = n_down
        ups = _masks(n_sites, n_up)
        downs = _masks(n_sites, n_down)
        self.states: list[FockState] = [
            FockState(u, d) for u in ups for d in downs
        ]
        self.index: dict[FockState, int] = {s: i for i, s in enumerate(self.states)}
        self.dim = len(self.states)

    def __len__(self) -> int:
        return self.dim

    def __repr__(self) -> str:
        return (
            f"FockBasis(n_sites={self.n_sites}, n_up={self.n_up}, "
            f"n_down={self.n_down}, dim={self.dim})"
        )

    def unit_vector(self, state: FockState | tuple[int, int]) -> np.ndarray:
        """Basis vector for a single occupation state."""
        v = np.zeros(self.dim)
        v[self.index[FockState(*state)]] = 1.0
        return v


@lru_cache(maxsize=None)
def build_basis(n_sites: int, n_up: int, n_down: int) -> FockBasis:
    """Enumerate the (n_up, n_down) sector on n_sites sites (n_sites <= 16)."""
    return FockBasis(n_sites, n_up, n_down)


@dataclass(frozen=True)
class OperatorMatrix:
    """Sparse operator on one sector, with a declared hermiticity flag."""

    matrix: sp.csr_matrix
    hermitian: bool = False

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def hermiticity_defect(self) -> float:
        """max|A - A^dag| relative to the largest entry (0.0 for empty A)."""
        diff = (self.matrix - self.matrix.conjugate().transpose()).tocoo()
        scale = max(1.0, abs(self.matrix).max() if self.matrix.nnz else 0.0)
        return (abs(diff.data).max() / scale) if diff.nnz else 0.0


def operator_from_action(
    basis: FockBasis,
    action: Callable[[FockState], Iterable[tuple[FockState, float]]],
    hermitian: bool = False,
) -> OperatorMatrix:
    """Assemble a sector operator from its action on basis states."""
    rows, cols, vals = [], [], []
    for j, state in enumerate(basis.states):
        for out_state, amp in action(state):
            rows.append(basis.index[out_state])
            cols.append(j)
            vals.append(amp)
    m = sp.csr_matrix(
        (np.asarray(vals, dtype=float), (rows, cols)), shape=(basis.dim, basis.dim)
    )
    return OperatorMatrix(m, hermitian=hermitian)


def _parity_below(occupation: int, mode: int) -> int:
    return (occupation & ((1 << mode) - 1)).bit_count() & 1


def _hop_on_occupation(
    occupation: int, mode_to: int, mode_from: int, signed: bool
) -> tuple[int, int] | None:
    """Apply c^dag_{mode_to} c_{mode_from}; None if annihilated."""
    if not (occupation >> mode_from) & 1:
        return None
    sign = 1
    if signed and _parity_below(occupation, mode_from):
        sign = -sign
    occupation &= ~(1 << mode_from)
    if (occupation >> mode_to) & 1:
        return None
    if signed and _parity_below(occupation, mode_to):
        sign = -sign
    return sign, occupation | (1 << mode_to)


def _pack(state: FockState, n_sites: int) -> int:
    return state.up_mask | (state.down_mask << n_sites)


def _unpack(occupation: int, n_sites: int) -> FockState:
    return FockState(occupation & ((1 << n_sites) - 1), occupation >> n_sites)


def hop_matrix(
    basis: FockBasis, mu: int, nu: int, s, statistics: str = FERMI
) -> OperatorMatrix:
    """Matrix of c^dag_{mu,s} c_{nu,s} on the sector.

    The fermionic sign is (-1)^(number of occupied modes strictly between
    the two modes in the global ordering); ``statistics="bose"`` drops it.
    """
    _check_statistics(statistics)
    if mu == nu:
        raise ValueError("mu == nu: use number_matrix for on-site occupation")
    n = basis.n_sites
    if not (0 <= mu < n and 0 <= nu < n):
        raise ValueError(f"sites ({mu}, {nu}) out of range for {n} sites")
    spin = _spin_index(s)
    mode_to = mu + spin * n
    mode_from = nu + spin * n
    signed = statistics == FERMI

    def action(state: FockState):
        res = _hop_on_occupation(_pack(state, n), mode_to, mode_from, signed)
        if res is not None:
            sign, occ = res
            yield _unpack(occ, n), float(sign)

    return operator_from_action(basis, action)


def number_matrix(basis: FockBasis, mu: int, s) -> OperatorMatrix:
    """Diagonal matrix of n_{mu,s}."""
    n = basis.n_sites
    if not 0 <= mu < n:
        raise ValueError(f"site {mu} out of range for {n} sites")
    spin = _spin_index(s)
    diag = np.array(
        [
            float((state[spin] >> mu) & 1)
            for state in basis.states
        ]
    )
    return OperatorMatrix(sp.csr_matrix(sp.diags(diag)), hermitian=True)


def doublon_matrix(basis: FockBasis) -> OperatorMatrix:
    """Diagonal matrix counting doubly occupied sites."""
    diag = np.array(
        [float((u & d).bit_count()) for (u, d) in basis.states]
    )
    return OperatorMatrix(sp.csr_matrix(sp.diags(diag)), hermitian=True)


def _permute_mask(mask: int, perm: Sequence[int]) -> tuple[int, int]:
    """Relabel occupied sites through perm; sign from re-sorting the modes."""
    image = [perm[site] for site in range(len(perm)) if (mask >> site) & 1]
    inversions = 0
    for i in range(len(image)):
        for j in range(i + 1, len(image)):
            if image[i] > image[j]:
                inversions += 1
    new_mask = 0
    for p in image:
        new_mask |= 1 << p
    return new_mask, (-1) ** (inversions & 1)


def _validate_permutation(perm: Sequence[int], n_sites: int) -> tuple[int, ...]:
    perm = tuple(perm)
    if len(perm) != n_sites or sorted(perm) != list(range(n_sites)):
        raise ValueError(f"{perm} is not a permutation of 0..{n_sites - 1}")
    return perm


def permutation_matrix(
    basis: FockBasis, perm: Sequence[int], statistics: str = FERMI
) -> OperatorMatrix:
    """Unitary site relabeling mu -> perm[mu], acting on both spin species."""
    _check_statistics(statistics)
    perm = _validate_permutation(perm, basis.n_sites)
    signed = statistics == FERMI

    def action(state: FockState):
        u2, su = _permute_mask(state.up_mask, perm)
        d2, sd = _permute_mask(state.down_mask, perm)
        yield FockState(u2, d2), float(su * sd) if signed else 1.0

    return operator_from_action(basis, action)


@lru_cache(maxsize=None)
def _all_permutations(n_sites: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.permutations(range(n_sites)))


def symmetrize(
    basis: FockBasis,
    seed: np.ndarray,
    statistics: str = FERMI,
    null_tol: float = 1e-10,
) -> np.ndarray:
    """Normalized projection (1/|S_N|) sum_pi P(pi) seed onto the symmetric span.

    Raises NullProjectionError when the projection norm falls below
    ``null_tol`` before normalization, which signals that the seed has no
    fully symmetric component under the chosen sign convention.  Cost is
    nnz(seed) * N!, so keep seeds sparse for N = 8.
    """
    _check_statistics(statistics)
    seed = np.asarray(seed, dtype=float)
    if seed.shape != (basis.dim,):
        raise ValueError(f"seed shape {seed.shape} does not match sector dim {basis.dim}")
    signed = statistics == FERMI
    nz = np.nonzero(seed)[0]
    acc: dict[int, float] = {}
    for j in nz:
        u, d = basis.states[j]
        coeff = seed[j]
        for perm in _all_permutations(basis.n_sites):
            u2, su = _permute_mask(u, perm)
            d2, sd = _permute_mask(d, perm)
            amp = coeff * (su * sd if signed else 1)
            key = basis.index[FockState(u2, d2)]
            acc[key] = acc.get(key, 0.0) + amp
    out = np.zeros(basis.dim)
    group_order = math.factorial(basis.n_sites)
    for key, val in acc.items():
        out[key] = val / group_order
    norm = float(np.linalg.norm(out))
    if norm < null_tol:
        raise NullProjectionError(
            f"projection norm {norm:.3e} < {null_tol:.0e}; seed has no fully "
            f"symmetric component under {statistics} statistics"
        )
    return out / norm
