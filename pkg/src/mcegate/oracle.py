"""Exact reference propagation in a truncated Fock basis.

Two truncations are supported: a per-mode cap ``n_max`` (full product
space), optionally combined with a cap on the total photon number
``n_total``.  The rotating-wave, zero-tunnelling regime conserves the
total excitation number, which :func:`rwa_sector_solve` exploits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import factorial

import numpy as np
import scipy.sparse as sp

from .hamiltonian import ROTATING_WAVE, HamiltonianSpec
from .hilbert import D


class BudgetError(MemoryError):
    """Truncated Hilbert space exceeds the configured dimension budget."""


class UnsupportedRegimeError(ValueError):
    """The requested solver does not apply to this Hamiltonian."""


@dataclass(frozen=True)
class FockTruncation:
    n_max: int
    M: int
    n_total: int | None = None
    max_dim: int = 12_000

    def __post_init__(self):
        if self.n_max < 0 or self.M < 1:
            raise ValueError("need n_max >= 0 and M >= 1")
        if self.dim > self.max_dim:
            raise BudgetError(f"truncated dimension {self.dim} exceeds budget {self.max_dim}")

    def occupations(self) -> list[tuple[int, ...]]:
        cap = self.n_max if self.n_total is None else min(self.n_max, self.n_total)
        if self.n_total is None:
            return list(itertools.product(range(cap + 1), repeat=self.M))
        return [occ for occ in _bounded_compositions(self.M, self.n_total) if max(occ) <= cap]

    @property
    def field_dim(self) -> int:
        if self.n_total is None:
            return (self.n_max + 1) ** self.M
        return len(self.occupations())

    @property
    def dim(self) -> int:
        n_total = self.n_total
        if n_total is None:
            return D * (self.n_max + 1) ** self.M
        # count without materializing when huge
        if self.n_max >= n_total:
            from math import comb
            return D * comb(self.M + n_total, n_total)
        return D * len(self.occupations())


def _bounded_compositions(M: int, total: int):
    """Occupation tuples over M modes with sum <= total, ascending by sum."""
    for s in range(total + 1):
        for bars in itertools.combinations(range(s + M - 1), M - 1):
            prev, occ = -1, []
            for b in bars:
                occ.append(b - prev - 1)
                prev = b
            occ.append(s + M - 2 - prev)
            yield tuple(occ)


class FockSpace:
    """Field basis plus sparse ladder operators for one truncation."""

    def __init__(self, tr: FockTruncation):
        self.tr = tr
        self.occ = np.array(tr.occupations(), dtype=int).reshape(-1, tr.M)
        self.index = {tuple(o): i for i, o in enumerate(self.occ)}
        self.dim = self.occ.shape[0]
        self.lowering = [self._lower(m) for m in range(tr.M)]

    def _lower(self, m: int) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for i, o in enumerate(self.occ):
            if o[m] == 0:
                continue
            t = list(o)
            t[m] -= 1
            j = self.index.get(tuple(t))
            if j is not None:
                rows.append(j)
                cols.append(i)
                vals.append(np.sqrt(o[m]))
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim))

    def number(self) -> np.ndarray:
        return self.occ.sum(axis=1)

    def coherent(self, alpha) -> np.ndarray:
        """Truncated (unrenormalized) product coherent state."""
        alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
        fact = np.array([1.0 / np.sqrt(float(factorial(k))) for k in range(self.occ.max() + 1)])
        amp = np.exp(-0.5 * np.sum(abs(alpha) ** 2)) * np.ones(self.dim, dtype=complex)
        for m in range(self.tr.M):
            amp *= alpha[m] ** self.occ[:, m] * fact[self.occ[:, m]]
        return amp

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index[(0,) * self.tr.M]] = 1.0
        return v


def build_truncated_hamiltonian(spec: HamiltonianSpec, tr: FockTruncation,
                                space: FockSpace | None = None, sparse: bool = False):
    """H on ``|l> (x) |n_1..n_M>`` (qubit index major); dense unless ``sparse``."""
    if tr.M != spec.M:
        raise ValueError("truncation and Hamiltonian disagree on M")
    space = space or FockSpace(tr)
    If = sp.identity(space.dim, format="csr")
    nvec = space.occ @ spec.frequencies
    H = sp.kron(spec.qubit_hamiltonian(), If) + sp.kron(np.eye(D), sp.diags(nvec.astype(complex)))
    A = spec.coupling_operators()
    for m, a in enumerate(space.lowering):
        H = H + sp.kron(A[m], a) + sp.kron(A[m].conj().T, a.T)
    H = (0.5 * (H + H.conj().T)).tocsr()
    return H if sparse else H.toarray()


class ExactPropagator:
    """e^{-iHt} via a single dense eigendecomposition."""

    def __init__(self, H: np.ndarray):
        H = np.asarray(H)
        if not np.allclose(H, H.conj().T, atol=1e-12):
            raise ValueError("Hamiltonian is not Hermitian")
        self.evals, self.evecs = np.linalg.eigh(H)

    def evolve(self, psi0, t):
        """State(s) at time(s) ``t``; scalar ``t`` gives a vector, array ``t`` a (T, dim) stack."""
        coef = self.evecs.conj().T @ np.asarray(psi0, dtype=complex)
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        out = (np.exp(-1j * np.outer(ts, self.evals)) * coef) @ self.evecs.T
        return out[0] if np.ndim(t) == 0 else out


def exact_evolve(H, psi0, t):
    return ExactPropagator(H).evolve(psi0, t)


def reduce_vector(psi: np.ndarray) -> np.ndarray:
    """Qubit reduced density matrix of a qubit-major joint vector."""
    X = psi.reshape(D, -1)
    return X @ X.conj().T


def cross_vector(ket: np.ndarray, bra: np.ndarray) -> np.ndarray:
    """``X[l, n] = <phi^bra_n|phi^ket_l>`` for qubit-major joint vectors."""
    return ket.reshape(D, -1) @ bra.reshape(D, -1).conj().T


class FockEvolver:
    """Channel backend: exact evolution in a truncated Fock space.

    Used with any Hamiltonian whose dynamics fits the truncation.  With
    ``sectors=True`` (rotating wave, zero tunnelling) the Hamiltonian is
    diagonalized block by block in fixed total-excitation sectors.
    """

    def __init__(self, spec: HamiltonianSpec, tr: FockTruncation, sectors: bool = False,
                 dense_limit: int = 2500):
        self.spec = spec
        self.tr = tr
        self.space = FockSpace(tr)
        self.Hs = None
        if tr.dim > dense_limit and not sectors:
            # Krylov propagation; requires a uniform time grid
            self.Hs = build_truncated_hamiltonian(spec, tr, self.space, sparse=True)
            self.blocks = []
            return
        H = build_truncated_hamiltonian(spec, tr, self.space)
        if sectors:
            ups = np.array([0, 1, 1, 2])
            exc = (ups[:, None] + self.space.number()[None, :]).reshape(-1)
            self.blocks = []
            for e in np.unique(exc):
                idx = np.flatnonzero(exc == e)
                self.blocks.append((idx, ExactPropagator(H[np.ix_(idx, idx)])))
        else:
            self.blocks = [(np.arange(H.shape[0]), ExactPropagator(H))]

    def initial(self, qubit_amps, field_center=None) -> np.ndarray:
        if field_center is None or not np.any(field_center):
            f = self.space.vacuum()
        else:
            f = self.space.coherent(field_center)
        return np.kron(np.asarray(qubit_amps, dtype=complex), f)

    def run(self, qubit_amps, field_center, times) -> list[np.ndarray]:
        psi0 = self.initial(qubit_amps, field_center)
        ts = np.atleast_1d(np.asarray(times, dtype=float))
        if self.Hs is not None:
            return list(_krylov_evolve(self.Hs, psi0, ts))
        out = np.zeros((ts.size, psi0.size), dtype=complex)
        for idx, prop in self.blocks:
            if np.any(psi0[idx]):
                out[:, idx] = prop.evolve(psi0[idx], ts)
        return list(out)

    reduce = staticmethod(reduce_vector)
    cross = staticmethod(cross_vector)


def _krylov_evolve(H, psi0, ts):
    from scipy.sparse.linalg import expm_multiply

    steps = np.diff(ts)
    if ts.size > 1 and not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
        raise ValueError("sparse propagation needs a uniform time grid")
    if ts.size == 1:
        return expm_multiply(-1j * ts[0] * H, psi0)[None, :]
    return expm_multiply(-1j * H, psi0, start=ts[0], stop=ts[-1], num=ts.size, endpoint=True)


def rwa_sector_solve(spec: HamiltonianSpec, qubit_amps, times, n_total: int = 2):
    """Reduced two-qubit density matrices for a vacuum-start rotating-wave run.

    Vacuum-start inputs carry at most two excitations, so the photon number
    never exceeds ``n_total = 2`` and the result is exact.
    """
    if spec.variant != ROTATING_WAVE or any(spec.delta):
        raise UnsupportedRegimeError("sector solver needs the rotating-wave variant with zero tunnelling")
    ev = sector_evolver(spec, n_total)
    return np.array([reduce_vector(p) for p in ev.run(qubit_amps, None, times)])


def sector_evolver(spec: HamiltonianSpec, n_total: int = 2) -> FockEvolver:
    if spec.variant != ROTATING_WAVE or any(spec.delta):
        raise UnsupportedRegimeError("sector solver needs the rotating-wave variant with zero tunnelling")
    tr = FockTruncation(n_max=n_total, M=spec.M, n_total=n_total, max_dim=10**6)
    return FockEvolver(spec, tr, sectors=True)
