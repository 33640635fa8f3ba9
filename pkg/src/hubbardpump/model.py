"""Lattice graphs, static Hubbard Hamiltonians, and pump-drive representations.

Units: hbar = 1, energies in units of the on-site repulsion (U = 1 is the
conventional choice), time in 1/U.  The three drive kinds follow one
consistent field convention so that the Peierls and site-potential gauges
describe the same physical pulse:

* ``peierls``   -- chain hopping J0 -> J0 exp(i dphi(t)) on the forward bond
  c^dag_mu c_{mu+1}, with dphi(t) = phi_max sin(omega t) envelope(t);
* ``potential`` -- site energies V_mu(t) = -r_mu phi_max omega cos(omega t)
  envelope(t) added to the static Hamiltonian;
* ``delta_j``   -- real hopping modulation dJ(t) = dj_amp sin(omega t)
  envelope(t), entering as -dJ(t) times the uniform hopping sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .fock import (
    BOSE,
    FERMI,
    FockBasis,
    OperatorMatrix,
    _check_statistics,
    doublon_matrix,
    hop_matrix,
    number_matrix,
)

CHAIN = "chain"
SQUARE = "square"
COMPLETE = "complete"


@dataclass(frozen=True)
class LatticeGraph:
    """Sites with positions (units of the lattice spacing) plus undirected edges."""

    n_sites: int
    edges: tuple[tuple[int, int], ...]
    positions: tuple[tuple[float, ...], ...]
    name: str

    def __post_init__(self):
        seen = set()
        for (a, b) in self.edges:
            if a == b:
                raise ValueError(f"self-loop on site {a}")
            if not (0 <= a < self.n_sites and 0 <= b < self.n_sites):
                raise ValueError(f"edge ({a}, {b}) out of range")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
        if len(self.positions) != self.n_sites:
            raise ValueError("positions must list one coordinate tuple per site")


def chain(n_sites: int) -> LatticeGraph:
    """Open chain, r_mu = mu."""
    edges = tuple((mu, mu + 1) for mu in range(n_sites - 1))
    positions = tuple((float(mu),) for mu in range(n_sites))
    return LatticeGraph(n_sites, edges, positions, CHAIN)


def square() -> LatticeGraph:
    """4-site cycle (the square plaquette)."""
    edges = ((0, 1), (1, 2), (2, 3), (0, 3))
    positions = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))
    return LatticeGraph(4, edges, positions, SQUARE)


def complete(n_sites: int) -> LatticeGraph:
    """Complete graph K_N (all pairs connected); positions on a unit circle."""
    edges = tuple(
        (a, b) for a in range(n_sites) for b in range(a + 1, n_sites)
    )
    positions = tuple(
        (
            math.cos(2 * math.pi * mu / n_sites),
            math.sin(2 * math.pi * mu / n_sites),
        )
        for mu in range(n_sites)
    )
    return LatticeGraph(n_sites, edges, positions, COMPLETE)


@dataclass(frozen=True)
class HubbardParams:
    j0: float
    u: float

    def __post_init__(self):
        if self.u <= 0:
            raise ValueError(f"U must be positive, got {self.u}")


@dataclass(frozen=True)
class Envelope:
    """Pulse envelope: constant, sudden-on at t0, or gaussian(center, fwhm)."""

    kind: str = "constant"
    t0: float = 0.0
    center: float = 0.0
    fwhm: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "sudden", "gaussian"):
            raise ValueError(f"unknown envelope kind {self.kind!r}")
        if self.kind == "gaussian" and self.fwhm <= 0:
            raise ValueError("gaussian envelope needs fwhm > 0")

    def value(self, t: float) -> float:
        if self.kind == "constant":
            return 1.0
        if self.kind == "sudden":
            return 1.0 if t >= self.t0 else 0.0
        return math.exp(-4.0 * math.log(2.0) * (t - self.center) ** 2 / self.fwhm**2)


PEIERLS = "peierls"
DELTA_J = "delta_j"
POTENTIAL = "potential"
NONE = "none"
_OSCILLATING = (PEIERLS, DELTA_J, POTENTIAL)


@dataclass(frozen=True)
class DriveProtocol:
    kind: str = NONE
    omega: float = 0.0
    phi_max: float = 0.0
    dj_amp: float = 0.0
    envelope: Envelope = field(default_factory=Envelope)

    def __post_init__(self):
        if self.kind not in _OSCILLATING + (NONE,):
            raise ValueError(f"unknown drive kind {self.kind!r}")
        if self.kind in _OSCILLATING and self.omega <= 0:
            raise ValueError(f"{self.kind} drive needs omega > 0")


def peierls_phase(protocol: DriveProtocol, t: float):
    """Instantaneous Peierls phase dphi(t) = phi_max sin(omega t) envelope(t)."""
    if protocol.kind != PEIERLS:
        raise ValueError(f"peierls_phase needs a peierls protocol, got {protocol.kind!r}")
    t = np.asarray(t, dtype=float)
    env = np.vectorize(protocol.envelope.value)(t) if t.ndim else protocol.envelope.value(float(t))
    return protocol.phi_max * np.sin(protocol.omega * t) * env


@lru_cache(maxsize=None)
def hopping_sum(graph: LatticeGraph, basis: FockBasis, statistics: str = FERMI) -> OperatorMatrix:
    """Hermitian hopping sum T = sum_{edges,s} (c^dag_mu c_nu + h.c.), unit coefficient."""
    _check_statistics(statistics)
    if basis.n_sites != graph.n_sites:
        raise ValueError("basis sector does not match graph size")
    total = sp.csr_matrix((basis.dim, basis.dim))
    for (a, b) in graph.edges:
        for s in (0, 1):
            h = hop_matrix(basis, a, b, s, statistics).matrix
            total = total + h + h.conjugate().transpose()
    return OperatorMatrix(total.tocsr(), hermitian=True)


@lru_cache(maxsize=None)
def forward_hop_sum(graph: LatticeGraph, basis: FockBasis, statistics: str = FERMI) -> OperatorMatrix:
    """Forward half of the hopping sum: sum_{(a,b), a<b, s} c^dag_a c_b."""
    _check_statistics(statistics)
    total = sp.csr_matrix((basis.dim, basis.dim))
    for (a, b) in graph.edges:
        for s in (0, 1):
            total = total + hop_matrix(basis, a, b, s, statistics).matrix
    return OperatorMatrix(total.tocsr(), hermitian=False)


def site_weighted_number(graph: LatticeGraph, basis: FockBasis) -> OperatorMatrix:
    """Diagonal operator R = sum_mu r_mu (n_up + n_down)_mu (1D positions)."""
    diag = np.zeros(basis.dim)
    for mu in range(graph.n_sites):
        r = graph.positions[mu][0]
        n_mu = (number_matrix(basis, mu, 0).matrix + number_matrix(basis, mu, 1).matrix).diagonal()
        diag += r * n_mu
    return OperatorMatrix(sp.csr_matrix(sp.diags(diag)), hermitian=True)


def build_hubbard(
    graph: LatticeGraph,
    params: HubbardParams,
    basis: FockBasis,
    statistics: str = FERMI,
) -> OperatorMatrix:
    """Static Hamiltonian -J0 T + U D on the sector."""
    if basis.n_sites != graph.n_sites:
        raise ValueError("basis sector does not match graph size")
    t = hopping_sum(graph, basis, statistics).matrix
    d = doublon_matrix(basis).matrix
    return OperatorMatrix((-params.j0 * t + params.u * d).tocsr(), hermitian=True)


@dataclass(frozen=True)
class DrivePart:
    """One time-dependent term f(t) * M, optionally completed with its h.c."""

    matrix: np.ndarray
    coeff: Callable[[float], complex]
    add_conjugate: bool
    coeff_bound: float


class TimeDependentHamiltonian:
    """H(t) = static + sum_k [f_k(t) M_k (+ h.c. when flagged)], dense storage."""

    def __init__(self, static: np.ndarray, parts: Sequence[DrivePart] = ()):
        self.static = np.asarray(static)
        self.parts = tuple(parts)
        self.dim = self.static.shape[0]
        self._is_complex = any(
            p.add_conjugate or np.iscomplexobj(p.matrix) for p in self.parts
        ) or np.iscomplexobj(self.static)

    def matrix(self, t: float) -> np.ndarray:
        return self.blend(((1.0, t),))

    def blend(self, weighted_times: Sequence[tuple[float, float]]) -> np.ndarray:
        """sum_i w_i H(t_i); the workhorse for multi-node integrators."""
        w_total = sum(w for w, _ in weighted_times)
        dtype = complex if self._is_complex else float
        out = np.zeros((self.dim, self.dim), dtype=dtype)
        out += w_total * self.static
        for part in self.parts:
            c = sum(w * part.coeff(t) for w, t in weighted_times)
            if part.add_conjugate:
                out += c * part.matrix
                out += np.conjugate(c) * part.matrix.conj().T
            else:
                out += c * part.matrix
        return out

    def spectral_bound(self) -> float:
        """Upper estimate of max|eig H(t)| over t (static extremes + drive bounds)."""
        w = np.linalg.eigvalsh(self.static)
        bound = max(abs(w[0]), abs(w[-1]))
        for part in self.parts:
            norm = np.linalg.norm(part.matrix, 2)
            bound += part.coeff_bound * norm * (2.0 if part.add_conjugate else 1.0)
        return bound


def build_driven(
    graph: LatticeGraph,
    params: HubbardParams,
    basis: FockBasis,
    protocol: DriveProtocol,
    statistics: str = FERMI,
) -> TimeDependentHamiltonian:
    """Assemble H(t) for the requested drive kind.

    Peierls and potential drives encode a field along the chain axis and are
    rejected for non-chain graphs (use ``delta_j`` on complete graphs, where
    no field direction is defined).
    """
    static_full = build_hubbard(graph, params, basis, statistics).toarray()
    kind = protocol.kind
    if kind == NONE:
        return TimeDependentHamiltonian(static_full)

    env = protocol.envelope.value
    omega = protocol.omega
    if kind == DELTA_J:
        if protocol.dj_amp == 0.0:
            return TimeDependentHamiltonian(static_full)
        t_plain = hopping_sum(graph, basis, statistics).toarray()
        amp = protocol.dj_amp

        def dj_coeff(t: float) -> float:
            return -amp * math.sin(omega * t) * env(t)

        part = DrivePart(t_plain, dj_coeff, add_conjugate=False, coeff_bound=abs(amp))
        return TimeDependentHamiltonian(static_full, (part,))

    if graph.name != CHAIN:
        raise ValueError(
            f"{kind} drive requires a chain graph (field direction undefined "
            f"on {graph.name!r}; use delta_j there)"
        )

    if kind == PEIERLS:
        u_term = params.u * doublon_matrix(basis).toarray()
        fwd = forward_hop_sum(graph, basis, statistics).toarray()
        j0 = params.j0
        phi = protocol.phi_max

        def hop_coeff(t: float) -> complex:
            return -j0 * np.exp(1j * phi * math.sin(omega * t) * env(t))

        part = DrivePart(fwd, hop_coeff, add_conjugate=True, coeff_bound=abs(j0))
        return TimeDependentHamiltonian(u_term, (part,))

    if kind == POTENTIAL:
        r_op = site_weighted_number(graph, basis).toarray()
        phi = protocol.phi_max

        def field_coeff(t: float) -> float:
            # V_mu(t) = -r_mu E(t) with E(t) = phi_max * omega * cos(omega t) env(t)
            return -phi * omega * math.cos(omega * t) * env(t)

        bound = abs(phi) * omega
        part = DrivePart(r_op, field_coeff, add_conjugate=False, coeff_bound=bound)
        return TimeDependentHamiltonian(static_full, (part,))

    raise ValueError(f"unknown drive kind {kind!r}")
