"""Two-qubit channel reconstruction, CZ Choi fidelity, concurrence and
thermal (P-representation) averaging.

A *trajectory backend* ("evolver") is any object with

``run(qubit_amps, field_center, times) -> list[snapshot]``
    wavefunction snapshots at the requested times,
``reduce(snapshot) -> (4, 4)``
    reduced qubit density matrix,
``cross(ket, bra) -> (4, 4)``
    field overlaps ``X[l, n] = <phi^bra_n|phi^ket_l>`` (``overlap`` mode only).
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .hilbert import CZ_SIGNS, D

logger = logging.getLogger(__name__)

PAIRS = [(j, k) for j in range(D) for k in range(j + 1, D)]


class ChannelError(RuntimeError):
    """A trajectory backing the channel reconstruction failed."""


class PhysicalityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class QuantumChannel4:
    """``action[j, k] = Gamma(|j><k|)`` as a (4, 4, 4, 4) array.

    ``inputs`` records how the channel was obtained; for ``"pairs"`` only the
    Hermitian part ``(Gamma(|j><k|) + Gamma(|k><j|))/2`` is known and is stored
    in both ``(j, k)`` and ``(k, j)``.
    """

    action: np.ndarray
    t: float = 0.0
    beta: float = np.inf
    inputs: str = "overlap"

    def __post_init__(self):
        a = np.array(self.action, dtype=complex)
        if a.shape != (D, D, D, D):
            raise ValueError(f"channel action must be (4, 4, 4, 4), got {a.shape}")
        a.flags.writeable = False
        object.__setattr__(self, "action", a)

    @classmethod
    def from_unitary(cls, U, t: float = 0.0) -> "QuantumChannel4":
        U = np.asarray(U, dtype=complex)
        a = np.einsum("lj,nk->jkln", U, U.conj())
        return cls(a, t, inputs="overlap")

    @classmethod
    def identity(cls, t: float = 0.0) -> "QuantumChannel4":
        return cls.from_unitary(np.eye(D), t)

    def choi_matrix(self) -> np.ndarray:
        """``(1/4) sum_jk Gamma(|j><k|) (x) |j><k|`` as a 16x16 matrix."""
        return 0.25 * np.einsum("jkln->ljnk", self.action).reshape(D * D, D * D)

    def trace_defect(self) -> float:
        return float(abs(sum(np.trace(self.action[j, j]) for j in range(D)) - D))

    def hermiticity_defect(self) -> float:
        a = self.action
        return float(np.max(abs(a - np.conj(np.transpose(a, (1, 0, 3, 2))))))

    def apply(self, rho) -> np.ndarray:
        return np.einsum("jk,jkln->ln", np.asarray(rho), self.action)


def choi_fidelity(ch: QuantumChannel4, tol: float = 1e-8) -> float:
    """Overlap of the Choi state with the pure CZ Choi state.

    ``F = (1/16) sum_jk f(j) f(k) <j|Gamma(|j><k|)|k>``.
    """
    diag = np.einsum("jkjk->jk", ch.action)
    F = np.sum(np.outer(CZ_SIGNS, CZ_SIGNS) * diag) / 16.0
    if abs(F.imag) > tol:
        logger.warning("Choi fidelity has imaginary residue %.3e at t=%g", F.imag, ch.t)
    return float(F.real)


def cz_channel() -> QuantumChannel4:
    return QuantumChannel4.from_unitary(np.diag(CZ_SIGNS))


def _rho_from(ev, snap):
    return np.asarray(ev.reduce(snap))


def channel_trace(evolver, field_init, times, inputs: str = "overlap", observer=None) -> list[QuantumChannel4]:
    """Reconstruct ``Gamma_t`` at every time in ``times`` from pure-state runs.

    inputs
        ``"overlap"``: evolve the four basis states and assemble
        ``Gamma(|j><k|)`` from field overlaps between their wavefunctions
        (exact linear reconstruction, 4 runs).
        ``"full"``: 16 runs: basis states, ``(|j>+|k>)/sqrt2`` and
        ``(|j>+i|k>)/sqrt2``; uses reduced states only.
        ``"pairs"``: 10 runs, recovers only the Hermitian combination
        ``Gamma(|j><k|) + Gamma(|k><j|)``.

    ``observer(label, snapshots)`` is called after every trajectory.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    T = times.size
    eye = np.eye(D, dtype=complex)

    def run(label, amps):
        try:
            snaps = evolver.run(amps, field_init, times)
        except Exception as exc:  # noqa: BLE001 - re-raised with context
            raise ChannelError(f"trajectory for initial state {label} failed: {exc}") from exc
        if observer is not None:
            observer(label, snaps)
        return snaps

    action = np.zeros((T, D, D, D, D), dtype=complex)
    basis_runs = [run(f"|{j + 1}>", eye[j]) for j in range(D)]
    if inputs == "overlap":
        for j in range(D):
            for k in range(j, D):
                for ti in range(T):
                    X = np.asarray(evolver.cross(basis_runs[j][ti], basis_runs[k][ti]))
                    if j == k:
                        X = 0.5 * (X + X.conj().T)
                    action[ti, j, k] = X
                    action[ti, k, j] = X.conj().T
    elif inputs in ("full", "pairs"):
        for j in range(D):
            for ti in range(T):
                action[ti, j, j] = _rho_from(evolver, basis_runs[j][ti])
        for j, k in PAIRS:
            plus = run(f"(|{j + 1}>+|{k + 1}>)/sqrt2", (eye[j] + eye[k]) / np.sqrt(2))
            if inputs == "full":
                plus_i = run(f"(|{j + 1}>+i|{k + 1}>)/sqrt2", (eye[j] + 1j * eye[k]) / np.sqrt(2))
            for ti in range(T):
                pj, pk = action[ti, j, j], action[ti, k, k]
                P = _rho_from(evolver, plus[ti])
                if inputs == "full":
                    Pi = _rho_from(evolver, plus_i[ti])
                    # |j><k| = P+ + i P+i - (1+i)/2 (Pj + Pk)
                    g = P + 1j * Pi - 0.5 * (1 + 1j) * (pj + pk)
                    action[ti, j, k] = g
                    action[ti, k, j] = g.conj().T
                else:
                    sym = 0.5 * (2.0 * P - pj - pk)
                    action[ti, j, k] = sym
                    action[ti, k, j] = sym
    else:
        raise ValueError(f"unknown reconstruction inputs {inputs!r}")
    return [QuantumChannel4(action[i], float(times[i]), inputs=inputs) for i in range(T)]


def reconstruct_channel(evolver, field_init, t: float, inputs: str = "overlap") -> QuantumChannel4:
    return channel_trace(evolver, field_init, [t], inputs)[0]


def symmetric_part(ch: QuantumChannel4, j: int, k: int) -> np.ndarray:
    """``Gamma(|j><k|) + Gamma(|k><j|)`` (0-based indices)."""
    return ch.action[j, k] + ch.action[k, j]


# --------------------------------------------------------------------------
# concurrence

_SYSY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


@dataclass(frozen=True)
class ConcurrenceResult:
    value: float
    raw_trace: float
    min_eigenvalue: float
    physical: bool

    def __float__(self):
        return self.value


def concurrence(rho, tol: float = 1e-8) -> ConcurrenceResult:
    """Wootters concurrence of a two-qubit state, renormalized to unit trace."""
    rho = np.asarray(rho, dtype=complex)
    rho = 0.5 * (rho + rho.conj().T)
    tr = float(np.trace(rho).real)
    if tr <= 0:
        raise ValueError("density matrix has non-positive trace")
    rho = rho / tr
    lam_min = float(np.linalg.eigvalsh(rho).min())
    physical = lam_min >= -tol
    if not physical:
        warnings.warn(f"non-physical density matrix (min eigenvalue {lam_min:.2e})", PhysicalityWarning, stacklevel=2)
    # lambda_i are the singular values of sqrt(rho) Y conj(sqrt(rho)), which
    # avoids square roots of tiny eigenvalues for nearly pure states
    w, V = np.linalg.eigh(rho)
    sq = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.conj().T
    lam = np.linalg.svd(sq @ _SYSY @ sq.conj(), compute_uv=False)
    C = max(0.0, lam[0] - lam[1] - lam[2] - lam[3])
    return ConcurrenceResult(float(C), tr, lam_min, physical)


# --------------------------------------------------------------------------
# finite temperature


class DivergentOccupationError(ValueError):
    pass


@dataclass(frozen=True)
class ThermalSampler:
    beta: float
    frequencies: np.ndarray
    n_samples: int
    seed: int = 0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.n_samples < 1:
            raise ValueError("need at least one sample")
        w = np.array(self.frequencies, dtype=float).reshape(-1)
        w.flags.writeable = False
        object.__setattr__(self, "frequencies", w)

    def occupations(self) -> np.ndarray:
        """Bose occupations ``1/(exp(beta w) - 1)`` per mode."""
        if np.isinf(self.beta):
            return np.zeros_like(self.frequencies)
        if np.any(self.frequencies <= 0):
            raise DivergentOccupationError("zero-frequency mode has divergent thermal occupation")
        x = self.beta * self.frequencies
        return np.exp(-x) / -np.expm1(-x)  # 1/(e^x - 1) without overflow


def sample_thermal(sampler: ThermalSampler) -> np.ndarray:
    """Draw ``n_samples`` coherent-state centers from the thermal P function.

    Each ``alpha_m`` is circular complex Gaussian with ``<|alpha_m|^2>`` equal
    to the Bose occupation.  Returns an (n_samples, M) array.
    """
    nbar = sampler.occupations()
    rng = np.random.Generator(np.random.Philox(sampler.seed))
    z = rng.standard_normal((sampler.n_samples, nbar.size, 2))
    return np.sqrt(nbar / 2.0) * (z[..., 0] + 1j * z[..., 1])


def thermal_channel_trace(evolver, sampler: ThermalSampler, times, inputs="overlap",
                          samples: np.ndarray | None = None) -> list[QuantumChannel4]:
    """Average the reconstructed channel over thermally sampled initial fields.

    Sample ``i`` runs on ``evolver.for_stream(i)`` when the backend provides
    it, so each sample gets its own grid draw independent of scheduling.
    """
    if samples is None:
        samples = sample_thermal(sampler)
    acc = None
    for i, alpha in enumerate(samples):
        ev = evolver.for_stream(i) if hasattr(evolver, "for_stream") else evolver
        chans = channel_trace(ev, alpha, times, inputs)
        arr = np.array([c.action for c in chans])
        acc = arr if acc is None else acc + arr
        logger.debug("thermal sample %d/%d done", i + 1, len(samples))
    acc /= len(samples)
    times = np.atleast_1d(times)
    return [QuantumChannel4(acc[i], float(times[i]), sampler.beta, inputs) for i in range(len(times))]


def thermal_channel(evolver, sampler: ThermalSampler, t: float, inputs="overlap") -> QuantumChannel4:
    return thermal_channel_trace(evolver, sampler, [t], inputs)[0]


def per_sample_fidelities(evolver, samples, times, inputs="overlap") -> np.ndarray:
    """Fidelity trace for each sampled initial field, shape (n_samples, T).

    Because F is linear in the channel, the mean over rows is the fidelity of
    the averaged channel; the spread gives the sampling error bar.
    """
    rows = []
    for i, a in enumerate(samples):
        ev = evolver.for_stream(i) if hasattr(evolver, "for_stream") else evolver
        rows.append([choi_fidelity(c) for c in channel_trace(ev, a, times, inputs)])
    return np.array(rows)


# --------------------------------------------------------------------------
# export


def format_channel(ch: QuantumChannel4) -> str:
    """Plain-text dump: header then the 16x16 Choi-ordered action, row-major 're im' pairs."""
    lines = [f"channel t={ch.t!r} beta={ch.beta!r}"]
    mat = np.einsum("jkln->ljnk", ch.action).reshape(D * D, D * D)
    for row in mat:
        lines.append(" ".join(f"{z.real:.17g} {z.imag:.17g}" for z in row))
    return "\n".join(lines) + "\n"


def parse_channel(text: str) -> QuantumChannel4:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "channel":
        raise ValueError("missing channel header")
    meta = dict(h.split("=", 1) for h in head[1:])
    vals = np.array([[float(x) for x in ln.split()] for ln in lines[1:]])
    mat = vals[:, 0::2] + 1j * vals[:, 1::2]
    action = np.einsum("ljnk->jkln", mat.reshape(D, D, D, D))
    return QuantumChannel4(action, float(meta["t"]), float(meta["beta"]))
