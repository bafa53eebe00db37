"""Qubit-field state containers and coherent-state algebra.

The two-qubit computational basis is ordered ``|dd>, |du>, |ud>, |uu>``
(first letter = qubit 1).  Public helpers that take a *basis label* use the
1-based labels 1..4; all arrays are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

D = 4
#: CZ signs f(j): +1 on |1>,|2>,|3>, -1 on |4>.
CZ_SIGNS = np.array([1.0, 1.0, 1.0, -1.0])

BASIS_LABELS = ("dd", "du", "ud", "uu")


class DimensionError(ValueError):
    """Raised when mode counts or array shapes do not agree."""


def check_label(l: int) -> int:
    """Validate a 1-based basis label and return the 0-based index."""
    if int(l) != l or not 1 <= l <= D:
        raise ValueError(f"qubit basis label must be in 1..4, got {l!r}")
    return int(l) - 1


def coherent_vector(alpha, M: int | None = None) -> np.ndarray:
    """Return ``alpha`` as a read-only complex vector, checking finiteness."""
    a = np.atleast_1d(np.asarray(alpha, dtype=complex)).copy()
    if a.ndim != 1:
        raise DimensionError("a coherent vector is one-dimensional")
    if M is not None and a.shape[0] != M:
        raise DimensionError(f"expected {M} modes, got {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise ValueError("coherent vector entries must be finite")
    a.flags.writeable = False
    return a


def coherent_overlap(a, b) -> complex:
    """<a|b> for normalized product coherent states."""
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    if a.shape != b.shape:
        raise DimensionError(f"mode mismatch: {a.shape} vs {b.shape}")
    expo = np.sum(a.conj() * b - 0.5 * abs(a) ** 2 - 0.5 * abs(b) ** 2)
    return complex(np.exp(expo))


def gram_matrix(za: np.ndarray, zb: np.ndarray | None = None) -> np.ndarray:
    """Overlap matrix ``G[j, k] = <za_j|zb_k>`` for two stacks of centers."""
    if zb is None:
        zb = za
    if za.shape[1] != zb.shape[1]:
        raise DimensionError("center stacks have different mode counts")
    na = 0.5 * np.sum(abs(za) ** 2, axis=1)
    nb = 0.5 * np.sum(abs(zb) ** 2, axis=1)
    return np.exp(za.conj() @ zb.T - na[:, None] - nb[None, :])


@dataclass(frozen=True)
class Configuration:
    """One grid element: a product coherent state carrying four qubit amplitudes.

    ``amplitudes`` are stored relative to the smooth phase ``exp(i*phase)``;
    the physical amplitudes are ``amplitudes * exp(1j * phase)``.
    """

    center: np.ndarray
    amplitudes: np.ndarray
    phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", coherent_vector(self.center))
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(D).copy()
        if not np.all(np.isfinite(amps)) or not np.isfinite(self.phase):
            raise ValueError("configuration amplitudes and phase must be finite")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "phase", float(self.phase))

    @property
    def physical_amplitudes(self) -> np.ndarray:
        return self.amplitudes * np.exp(1j * self.phase)


class McEState:
    """Immutable snapshot of an MCE wavefunction.

    Stored as arrays: ``centers`` (N, M), ``amps`` (N, 4) relative to the
    per-configuration phase, and ``phases`` (N,).
    """

    __slots__ = ("centers", "amps", "phases", "time")

    def __init__(self, centers, amps, phases=None, time: float = 0.0):
        centers = np.array(centers, dtype=complex, ndmin=2)
        amps = np.array(amps, dtype=complex, ndmin=2)
        N = centers.shape[0]
        if N < 1:
            raise ValueError("an MCE state needs at least one configuration")
        if amps.shape != (N, D):
            raise DimensionError(f"amplitudes must have shape ({N}, 4), got {amps.shape}")
        phases = np.zeros(N) if phases is None else np.array(phases, dtype=float).reshape(N)
        for arr in (centers, amps, phases):
            if not np.all(np.isfinite(arr)):
                raise ValueError("non-finite entry in MCE state")
            arr.flags.writeable = False
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "time", float(time))

    def __setattr__(self, name, value):
        raise AttributeError("McEState is immutable")

    @classmethod
    def from_configs(cls, configs, time: float = 0.0) -> "McEState":
        configs = list(configs)
        M = {c.center.shape[0] for c in configs}
        if len(M) > 1:
            raise DimensionError("configurations disagree on the mode count")
        return cls(
            np.array([c.center for c in configs]),
            np.array([c.amplitudes for c in configs]),
            np.array([c.phase for c in configs]),
            time,
        )

    @property
    def N(self) -> int:
        return self.centers.shape[0]

    @property
    def M(self) -> int:
        return self.centers.shape[1]

    @property
    def configs(self) -> list[Configuration]:
        return [Configuration(z, c, s) for z, c, s in zip(self.centers, self.amps, self.phases)]

    def physical_amplitudes(self) -> np.ndarray:
        return self.amps * np.exp(1j * self.phases)[:, None]

    def permuted(self, order) -> "McEState":
        order = np.asarray(order)
        return McEState(self.centers[order], self.amps[order], self.phases[order], self.time)

    def __repr__(self):
        return f"McEState(N={self.N}, M={self.M}, t={self.time:g})"


def cross_overlap(ket: McEState, bra: McEState) -> np.ndarray:
    """Field overlaps between the qubit components of two MCE wavefunctions.

    Returns ``X[l, n] = <phi^bra_n | phi^ket_l>`` where
    ``|psi> = sum_l |l> (x) |phi_l>``.  For ``bra is ket`` this is the
    reduced qubit density matrix.
    """
    if ket.M != bra.M:
        raise DimensionError("states live on different mode counts")
    g = gram_matrix(bra.centers, ket.centers)
    return ket.physical_amplitudes().T @ g.T @ bra.physical_amplitudes().conj()


def reduce_to_qubits(state: McEState) -> np.ndarray:
    """Two-qubit reduced density matrix ``rho[l, n] = <l|Tr_B|psi><psi||n>``."""
    rho = cross_overlap(state, state)
    return 0.5 * (rho + rho.conj().T)


def state_norm(state: McEState) -> float:
    """Trace of the reduced density matrix (equals <psi|psi>)."""
    return float(np.trace(reduce_to_qubits(state)).real)


def basis_state(l: int) -> np.ndarray:
    """Qubit amplitude vector for the 1-based basis label ``l``."""
    v = np.zeros(D, dtype=complex)
    v[check_label(l)] = 1.0
    return v
