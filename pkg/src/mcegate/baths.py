"""Discrete mode sets: equally spaced, doubly degenerate, and Ohmic baths."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LINEAR, DEGENERATE_DOUBLE, OHMIC = "linear", "degenerate-double", "ohmic"

#: default spectral cutoffs ``omega_max`` keyed by ``omega_c``
DEFAULT_OMEGA_MAX = {2.5: 12.5, 1.0: 6.0}


@dataclass(frozen=True)
class BathSpec:
    kind: str
    M: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in (LINEAR, DEGENERATE_DOUBLE, OHMIC):
            raise ValueError(f"unknown bath kind {self.kind!r}")
        if self.M < 1:
            raise ValueError("M must be >= 1")

    def build(self):
        """``(frequencies, couplings)``; couplings is None unless Ohmic."""
        p = self.params
        if self.kind == LINEAR:
            return build_linear(self.M, p.get("spacing", 0.1)), None
        if self.kind == DEGENERATE_DOUBLE:
            if self.M % 2:
                raise ValueError("a doubled spectrum needs an even mode count")
            return build_degenerate_double(self.M // 2, p.get("spacing", 0.1)), None
        omega_c = p.get("omega_c", 2.5)
        omega_max = p.get("omega_max") or DEFAULT_OMEGA_MAX.get(omega_c)
        if omega_max is None:
            raise ValueError(f"no default omega_max for omega_c={omega_c}; set it explicitly")
        return build_ohmic(self.M, p.get("kondo", 0.09), omega_c, omega_max)


def build_linear(M: int, spacing: float) -> np.ndarray:
    """``w_m = spacing * m`` for m = 1..M."""
    if M < 1 or not spacing > 0:
        raise ValueError("need M >= 1 and spacing > 0")
    return spacing * np.arange(1, M + 1, dtype=float)


def build_degenerate_double(M_half: int, spacing: float = 0.1) -> np.ndarray:
    """Two copies of the linear spectrum, concatenated (2*M_half modes)."""
    w = build_linear(M_half, spacing)
    return np.concatenate([w, w])


def ohmic_spectral_density(omega, kondo: float, omega_c: float):
    """J(w) = (2/pi) kondo w exp(-w/w_c)."""
    omega = np.asarray(omega, dtype=float)
    return (2.0 / np.pi) * kondo * omega * np.exp(-omega / omega_c)


def build_ohmic(M: int, kondo: float, omega_c: float, omega_max: float):
    """Logarithmic discretization of an Ohmic bath.

    ``w_m = -w_c ln(1 - m (1 - exp(-w_max/w_c)) / M)`` and
    ``g_m = sqrt(w_m kondo w_c (1 - exp(-w_max/w_c)) / (2M))`` for both qubits.
    Returns ``(frequencies, couplings)`` with couplings of shape (M, 2).
    """
    if M < 1 or not (kondo > 0 and omega_c > 0 and omega_max > 0):
        raise ValueError("Ohmic bath needs M >= 1 and positive kondo, omega_c, omega_max")
    frac = -np.expm1(-omega_max / omega_c)
    m = np.arange(1, M + 1, dtype=float)
    # 1 - m*frac/M rearranged to avoid cancellation near m = M
    arg = ((M - m) + m * np.exp(-omega_max / omega_c)) / M
    if np.any(arg <= 0):
        raise ValueError("logarithm argument must be positive")
    w = -omega_c * np.log(arg)
    g = np.sqrt(w * kondo * omega_c * frac / (2.0 * M))
    return w, np.column_stack([g, g])


def format_bath(frequencies, couplings) -> str:
    """One line per mode: ``m omega g1 g2`` with 17 significant digits."""
    w = np.asarray(frequencies, dtype=float)
    g = np.asarray(couplings, dtype=float).reshape(w.size, 2)
    return "".join(f"{m} {wm:.17g} {a:.17g} {b:.17g}\n" for m, (wm, (a, b)) in enumerate(zip(w, g), start=1))


def parse_bath(text: str):
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    arr = np.array([[float(x) for x in r] for r in rows])
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise ValueError("bath dump lines must read 'm omega g1 g2'")
    if not np.array_equal(arr[:, 0], np.arange(1, arr.shape[0] + 1)):
        raise ValueError("bath dump mode indices must run 1..M")
    return arr[:, 1].copy(), arr[:, 2:4].copy()
