"""Two-qubit / multimode Hamiltonians and their coherent-state matrix elements.

Both variants are written as

    H = H_q + sum_m w_m a_m^+ a_m + sum_m (A_m a_m + A_m^+ a_m^+)

with ``H_q = eps (sz1 + sz2) + D1 sx1 + D2 sx2`` and a qubit operator ``A_m``
that is ``sum_j g_mj sx^(j)`` for the spin-boson coupling and
``sum_j g_mj s+^(j)`` for the rotating-wave coupling.  Qubit terms are
counted once per qubit, mode terms once per mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hilbert import D, DimensionError, check_label

SPIN_BOSON = "spin-boson"
ROTATING_WAVE = "rotating-wave"
VARIANTS = (SPIN_BOSON, ROTATING_WAVE)

# single-qubit operators in the (down, up) ordering
_I2 = np.eye(2)
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SZ = np.diag([-1.0, 1.0]).astype(complex)
_SP = np.array([[0, 0], [1, 0]], dtype=complex)  # |up><down|


def _on(qubit: int, op: np.ndarray) -> np.ndarray:
    return np.kron(op, _I2) if qubit == 1 else np.kron(_I2, op)


def qubit_operators(pauli_plus: str = "half") -> dict[str, np.ndarray]:
    """The named 4x4 qubit operators.

    ``pauli_plus="half"`` uses s+ = (sx + i sy)/2 = |up><down|; ``"full"``
    uses s+ = sx + i sy, which is twice that.
    """
    if pauli_plus not in ("half", "full"):
        raise ValueError(f"unknown pauli_plus convention {pauli_plus!r}")
    scale = 1.0 if pauli_plus == "half" else 2.0
    ops = {}
    for j in (1, 2):
        ops[f"sx{j}"] = _on(j, _SX)
        ops[f"sz{j}"] = _on(j, _SZ)
        ops[f"s+{j}"] = scale * _on(j, _SP)
        ops[f"s-{j}"] = scale * _on(j, _SP.T)
    return ops


_ALIASES = {"σx1": "sx1", "σx2": "sx2", "σz1": "sz1", "σz2": "sz2",
            "σ+1": "s+1", "σ+2": "s+2", "σ−1": "s-1", "σ−2": "s-2", "σ-1": "s-1", "σ-2": "s-2"}


def qubit_operator_element(which: str, l: int, n: int, pauli_plus: str = "half") -> complex:
    """``<l|op|n>`` for 1-based basis labels, e.g. ``("sx1", 3, 1) -> 1``."""
    ops = qubit_operators(pauli_plus)
    key = _ALIASES.get(which, which)
    if key not in ops:
        raise KeyError(f"unknown qubit operator {which!r}")
    return complex(ops[key][check_label(l), check_label(n)])


@dataclass(frozen=True)
class HamiltonianSpec:
    variant: str
    epsilon: float
    delta: tuple[float, float]
    frequencies: np.ndarray
    couplings: np.ndarray  # (M, 2): couplings[m, j] = g_m^(j+1)
    pauli_plus: str = "half"
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        w = np.array(self.frequencies, dtype=float).reshape(-1)
        g = np.array(self.couplings, dtype=float)
        if g.ndim == 1 and g.shape == (2,):
            g = np.tile(g, (w.shape[0], 1))
        if w.shape[0] < 1:
            raise ValueError("need at least one mode")
        if g.shape != (w.shape[0], 2):
            raise DimensionError(f"couplings must have shape ({w.shape[0]}, 2), got {g.shape}")
        if np.any(w < 0):
            raise ValueError("mode frequencies must be non-negative")
        delta = tuple(float(x) for x in np.broadcast_to(self.delta, (2,)))
        vals = [self.epsilon, *delta]
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(g)) and np.all(np.isfinite(vals))):
            raise ValueError("Hamiltonian parameters must be finite")
        w.flags.writeable = False
        g.flags.writeable = False
        object.__setattr__(self, "frequencies", w)
        object.__setattr__(self, "couplings", g)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @classmethod
    def uniform(cls, variant, frequencies, g1, g2, epsilon=0.0, delta=0.0, **kw):
        """Every mode couples with ``g1`` to qubit 1 and ``g2`` to qubit 2."""
        w = np.asarray(frequencies, dtype=float).reshape(-1)
        g = np.column_stack([np.full_like(w, g1), np.full_like(w, g2)])
        return cls(variant, epsilon, delta, w, g, **kw)

    @property
    def M(self) -> int:
        return self.frequencies.shape[0]

    def replace(self, **changes) -> "HamiltonianSpec":
        kw = dict(variant=self.variant, epsilon=self.epsilon, delta=self.delta,
                  frequencies=self.frequencies, couplings=self.couplings,
                  pauli_plus=self.pauli_plus)
        kw.update(changes)
        return HamiltonianSpec(**kw)

    # operator pieces, cached per instance
    def qubit_hamiltonian(self) -> np.ndarray:
        if "hq" not in self._cache:
            ops = qubit_operators(self.pauli_plus)
            d1, d2 = self.delta
            self._cache["hq"] = (self.epsilon * (ops["sz1"] + ops["sz2"])
                                 + d1 * ops["sx1"] + d2 * ops["sx2"])
        return self._cache["hq"]

    def coupling_operators(self) -> np.ndarray:
        """Stack ``A[m]`` (M, 4, 4) multiplying ``a_m`` in the Hamiltonian."""
        if "A" not in self._cache:
            ops = qubit_operators(self.pauli_plus)
            key = "sx" if self.variant == SPIN_BOSON else "s+"
            basis = np.stack([ops[f"{key}1"], ops[f"{key}2"]])
            self._cache["A"] = np.einsum("mj,jln->mln", self.couplings, basis)
        return self._cache["A"]


def _check_modes(spec: HamiltonianSpec, *vecs):
    for v in vecs:
        if v.shape[-1] != spec.M:
            raise DimensionError(f"expected {spec.M} modes, got {v.shape[-1]}")


def normalized_blocks(spec: HamiltonianSpec, za: np.ndarray, zb: np.ndarray | None = None):
    """Pieces of ``Ht[j, k] = <za_j, l|H|zb_k, n> / <za_j|zb_k>``.

    Returns ``(hq, W, B, C)`` with
    ``Ht[j, k] = hq + W[j, k] * I + B[k] + C[j]``:
    ``W`` is the free-field term, ``B[k] = sum_m A_m zb_km`` and
    ``C[j] = sum_m A_m^+ conj(za_jm)``.
    """
    if zb is None:
        zb = za
    _check_modes(spec, za, zb)
    A = spec.coupling_operators()
    W = (za.conj() * spec.frequencies) @ zb.T
    B = np.einsum("km,mln->kln", zb, A)
    C = np.einsum("jm,mnl->jln", za.conj(), A.conj())
    return spec.qubit_hamiltonian(), W, B, C


def matrix_element(spec: HamiltonianSpec, l: int, a, n: int, b) -> complex:
    """Overlap-normalized element ``<l, a|H|n, b> / <a|b>`` (1-based labels)."""
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    li, ni = check_label(l), check_label(n)
    hq, W, B, C = normalized_blocks(spec, a[None, :], b[None, :])
    val = hq[li, ni] + B[0, li, ni] + C[0, li, ni]
    if li == ni:
        val += W[0, 0]
    return complex(val)


def normalized_hamiltonian(spec: HamiltonianSpec, za: np.ndarray, zb: np.ndarray | None = None) -> np.ndarray:
    """Dense ``Ht[j, k, l, n]``; convenient for small grids and tests."""
    hq, W, B, C = normalized_blocks(spec, za, zb)
    return hq + W[:, :, None, None] * np.eye(D) + B[None, :] + C[:, None]


class DegenerateConfigurationError(ValueError):
    """A configuration carries (numerically) zero qubit amplitude."""


def mean_field_gradients(spec: HamiltonianSpec, centers: np.ndarray, amps: np.ndarray,
                         tiny: float = 1e-14) -> tuple[np.ndarray, np.ndarray]:
    """Amplitude-weighted d/d(alpha_m) of ``<alpha, l|H|alpha, n>`` for every configuration.

    Returns ``(grad, live)`` with ``grad`` of shape (N, M); rows flagged
    ``live == False`` have amplitude norm below ``tiny`` and are zero.
    """
    _check_modes(spec, centers)
    A = spec.coupling_operators()
    w2 = np.sum(abs(amps) ** 2, axis=1)
    live = w2 > tiny
    # <c|A_m|c> / <c|c>
    avg = np.einsum("kl,mln,kn->km", amps.conj(), A, amps)
    grad = spec.frequencies * centers.conj()
    grad = grad + np.divide(avg, w2[:, None], out=np.zeros_like(avg), where=live[:, None])
    grad[~live] = 0.0
    return grad, live


def mean_field_gradient(spec: HamiltonianSpec, cfg, m: int) -> complex:
    """Single-configuration, single-mode form of :func:`mean_field_gradients` (0-based ``m``)."""
    amps = np.asarray(cfg.amplitudes, dtype=complex)[None, :]
    if np.sum(abs(amps) ** 2) <= 1e-14:
        raise DegenerateConfigurationError("configuration has zero amplitude norm")
    grad, _ = mean_field_gradients(spec, np.asarray(cfg.center)[None, :], amps)
    return complex(grad[0, m])


def mean_field_energies(spec: HamiltonianSpec, centers: np.ndarray, amps: np.ndarray,
                        tiny: float = 1e-14) -> np.ndarray:
    """Diagonal energies ``<c, z|H|c, z> / <c|c>`` per configuration (real)."""
    hq, W, B, C = normalized_blocks(spec, centers, centers)
    diagW = np.real(np.diag(W))
    Bd = B + np.transpose(B.conj(), (0, 2, 1))  # B[k] + C[k] at equal centers
    h = hq[None] + Bd
    w2 = np.sum(abs(amps) ** 2, axis=1)
    e = np.einsum("kl,kln,kn->k", amps.conj(), h, amps).real
    return diagW + np.divide(e, w2, out=np.zeros_like(e), where=w2 > tiny)
