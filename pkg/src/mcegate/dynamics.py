"""Multi-configurational Ehrenfest propagation on a moving coherent-state grid.

Each configuration ``j`` carries a center ``z_j`` (M complex numbers),
four amplitudes and a smooth phase ``S_j``; physical amplitudes are
``c_j = d_j exp(i S_j)``.  Centers follow the amplitude-weighted mean-field
gradient, amplitudes obey the Schroedinger equation projected on the
(non-orthogonal) span of the grid:

    i sum_k W_jk dc_k/dt = sum_k W_jk [Ht_jk c_k - i kappa_jk c_k]
    kappa_jk = conj(z_j).dz_k/dt - Re(conj(z_k).dz_k/dt)

where ``W`` is the Gram matrix and ``Ht`` the overlap-normalized
Hamiltonian.  The phase follows the diagonal semiclassical action
``dS_j/dt = -Im(conj(z_j).dz_j/dt) - E_j``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as la
from scipy.integrate import solve_ivp
from scipy.linalg.lapack import zpocon

from .hamiltonian import DegenerateConfigurationError, HamiltonianSpec, mean_field_gradients, normalized_blocks
from .hilbert import D, DimensionError, McEState, coherent_vector, cross_overlap, gram_matrix, reduce_to_qubits, state_norm

logger = logging.getLogger(__name__)

DEGENERATE_NORM = 1e-14


class GramSolveError(np.linalg.LinAlgError):
    def __init__(self, msg, cond=np.inf):
        super().__init__(msg)
        self.cond = cond


class GridInitError(GramSolveError):
    """Initial grid cannot represent the target state (Gram matrix singular)."""


class StepError(RuntimeError):
    """Propagation failed; ``partial`` holds the states completed before the failure."""

    def __init__(self, msg, last_good_time, partial=()):
        super().__init__(f"{msg} (last good time {last_good_time:g})")
        self.last_good_time = last_good_time
        self.partial = list(partial)


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 0.01
    method: str = "rk4"  # "rk4" (fixed step) or "rk45" (adaptive)
    abs_tol: float = 1e-8
    rel_tol: float = 1e-6
    gram_reg: float = 1e-10

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown integrator {self.method!r}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0.0 <= self.gram_reg <= 1e-3:
            raise ValueError("gram_reg must lie in [0, 1e-3]")


@dataclass(frozen=True)
class GridInit:
    N: int = 1
    comp: float = 1.0
    conjugate_pairs: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if not self.comp > 0:
            raise ValueError("comp must be positive")


def make_rng(seed, *stream) -> np.random.Generator:
    """Counter-based Philox stream keyed by ``(seed, *stream)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))


def solve_gram(G: np.ndarray, rhs: np.ndarray, gram_reg: float) -> tuple[np.ndarray, float, bool]:
    """Solve the Hermitian PSD system ``G X = rhs``.

    A Tikhonov shift ``gram_reg * tr(G)/N`` is applied when the estimated
    reciprocal condition number falls below ``gram_reg``.  Returns
    ``(X, cond_estimate, regularized)``.
    """
    n = G.shape[0]
    rcond = 0.0
    try:
        cf = la.cho_factor(G, lower=False, check_finite=False)
        rcond, info = zpocon(cf[0], np.linalg.norm(G, 1))
        if info != 0:
            rcond = 0.0
    except la.LinAlgError:
        cf = None
    cond = 1.0 / rcond if rcond > 0 else np.inf
    if cf is not None and rcond >= gram_reg:
        return la.cho_solve(cf, rhs, check_finite=False), cond, False
    if gram_reg <= 0:
        raise GramSolveError(f"Gram matrix is singular (cond ~ {cond:.3g})", cond)
    lam = gram_reg * np.trace(G).real / n
    try:
        cf = la.cho_factor(G + lam * np.eye(n), lower=False, check_finite=False)
    except la.LinAlgError as exc:
        raise GramSolveError(f"regularized Gram solve failed (cond ~ {cond:.3g})", cond) from exc
    return la.cho_solve(cf, rhs, check_finite=False), cond, True


# --------------------------------------------------------------------------
# grid initialization


def init_grid(init: GridInit, qubit_amps, field_center, gram_reg: float = 1e-10,
              stream: tuple = (), return_residual: bool = False):
    """Sample a grid around ``field_center`` and project the product state on it.

    The target is ``|qubit_amps> (x) |field_center>``; amplitudes solve the
    least-squares normal equations ``W x = <z_j|field_center>``.

    With ``conjugate_pairs`` the offsets come as ``(z, conj(z))`` pairs and an
    odd ``N`` places the unpaired center exactly on ``field_center``, which
    makes the projection (and hence the t = 0 channel) exact.
    """
    q = np.asarray(qubit_amps, dtype=complex).reshape(D)
    if abs(np.vdot(q, q).real - 1.0) > 1e-12:
        raise ValueError("qubit amplitudes must be normalized")
    z0 = coherent_vector(field_center)
    M, N = z0.shape[0], init.N
    if N == 1:
        centers = z0[None, :].copy()
    else:
        rng = make_rng(init.seed, *stream)
        n_draw = N // 2 if init.conjugate_pairs else N
        off = (rng.standard_normal((n_draw, M)) + 1j * rng.standard_normal((n_draw, M))) / init.comp
        if init.conjugate_pairs:
            off = np.stack([off, off.conj()], axis=1).reshape(-1, M)
            if N % 2:
                off = np.vstack([off, np.zeros((1, M))])
        centers = z0[None, :] + off
    G = gram_matrix(centers)
    b = gram_matrix(centers, z0[None, :])[:, 0]
    try:
        x, cond, _ = solve_gram(G, b, gram_reg)
    except GramSolveError as exc:
        raise GridInitError(f"initial grid is singular: {exc}", exc.cond) from exc
    amps = x[:, None] * q[None, :]
    state = McEState(centers, amps)
    # ||grid - target||^2 = 1 - 2 Re(x^H b) + x^H G x
    res2 = 1.0 - 2.0 * np.vdot(x, b).real + np.vdot(x, G @ x).real
    residual = float(np.sqrt(max(res2, 0.0)))
    logger.debug("grid N=%d comp=%g cond=%.3g residual=%.3g", N, init.comp, cond, residual)
    return (state, residual) if return_residual else state


# --------------------------------------------------------------------------
# right-hand sides


def _center_derivatives(spec, Z, amps):
    grad, live = mean_field_gradients(spec, Z, amps, DEGENERATE_NORM)
    return -1j * grad.conj(), live


def ehrenfest_rhs(spec: HamiltonianSpec, cfg) -> np.ndarray:
    """``d(alpha)/dt = -i conj(mean-field gradient)`` for one configuration."""
    amps = np.asarray(cfg.amplitudes, dtype=complex)[None, :]
    z = np.asarray(cfg.center, dtype=complex)[None, :]
    zdot, live = _center_derivatives(spec, z, amps)
    if not live[0]:
        raise DegenerateConfigurationError("configuration has zero amplitude norm")
    return zdot[0]


def _energies(hq, W, B, amps):
    w2 = np.sum(abs(amps) ** 2, axis=1)
    h = hq[None] + B + np.transpose(B.conj(), (0, 2, 1))
    e = np.einsum("kl,kln,kn->k", amps.conj(), h, amps).real
    return np.real(np.diag(W)) + np.divide(e, w2, out=np.zeros_like(e), where=w2 > DEGENERATE_NORM)


def _projected_rhs(Gp, blocks, kappa, shift, amps):
    """``R[j] = sum_k Gp_jk [(Ht_jk - i kappa_jk + shift_k) amps_k]``."""
    hq, W, B, C = blocks
    Gd = Gp @ amps
    R = Gd @ hq.T
    R += (Gp * (W - 1j * kappa + shift[None, :])) @ amps
    R += Gp @ np.einsum("kln,kn->kl", B, amps)
    R += np.einsum("jln,jn->jl", C, Gd)
    return R


def _kappa(Z, Zdot):
    return Z.conj() @ Zdot.T - np.real(np.sum(Z.conj() * Zdot, axis=1))[None, :]


def amplitude_rhs(spec: HamiltonianSpec, state: McEState, center_derivs, gram_reg: float = 1e-10) -> np.ndarray:
    """Time derivative (N, 4) of the *physical* amplitudes ``c = d exp(iS)``."""
    Z = state.centers
    Zdot = np.asarray(center_derivs, dtype=complex).reshape(Z.shape)
    c = state.physical_amplitudes()
    G = gram_matrix(Z)
    R = _projected_rhs(G, normalized_blocks(spec, Z), _kappa(Z, Zdot), np.zeros(state.N), c)
    return solve_gram(G, -1j * R, gram_reg)[0]


class _System:
    """Flattened MCE equations of motion ``y' = f(y)``."""

    def __init__(self, spec: HamiltonianSpec, N: int, M: int, gram_reg: float):
        self.spec, self.N, self.M, self.gram_reg = spec, N, M, gram_reg
        self.n_regularized = 0
        self.max_cond = 1.0

    def pack(self, state: McEState) -> np.ndarray:
        return np.concatenate([state.centers.ravel(), state.amps.ravel(), state.phases.astype(complex)])

    def unpack(self, y):
        N, M = self.N, self.M
        Z = y[: N * M].reshape(N, M)
        d = y[N * M: N * M + N * D].reshape(N, D)
        S = y[N * M + N * D:].real
        return Z, d, S

    def state(self, y, t) -> McEState:
        Z, d, S = self.unpack(y)
        return McEState(Z, d, S, t)

    def __call__(self, t, y):
        Z, d, S = self.unpack(y)
        Zdot, live = _center_derivatives(self.spec, Z, d)
        blocks = normalized_blocks(self.spec, Z)
        E = _energies(blocks[0], blocks[1], blocks[2], d)
        Sdot = -np.imag(np.sum(Z.conj() * Zdot, axis=1)) - E
        ph = np.exp(1j * S)
        Gp = gram_matrix(Z) * np.outer(ph.conj(), ph)
        R = _projected_rhs(Gp, blocks, _kappa(Z, Zdot), Sdot, d)
        ddot, cond, reg = solve_gram(Gp, -1j * R, self.gram_reg)
        self.max_cond = max(self.max_cond, cond)
        self.n_regularized += reg
        return np.concatenate([Zdot.ravel(), ddot.ravel(), Sdot.astype(complex)])


def _rk4(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def step(spec: HamiltonianSpec, state: McEState, icfg: IntegratorConfig) -> McEState:
    """Advance ``state`` by one ``icfg.dt``."""
    return propagate(spec, state, icfg, [state.time, state.time + icfg.dt])[-1]


def propagate(spec: HamiltonianSpec, state: McEState, icfg: IntegratorConfig, times) -> list[McEState]:
    """States at each of ``times`` (ascending, starting at or after ``state.time``).

    With ``rk4`` every output interval is split into ``max(1, round(interval/dt))``
    equal steps.
    """
    if state.M != spec.M:
        raise DimensionError(f"state has {state.M} modes, Hamiltonian {spec.M}")
    times = np.asarray(times, dtype=float)
    sys = _System(spec, state.N, state.M, icfg.gram_reg)
    y, t = sys.pack(state), state.time
    out = []
    try:
        if icfg.method == "rk4":
            for t_next in times:
                if t_next < t - 1e-12:
                    raise ValueError("output times must be ascending")
                n = int(round((t_next - t) / icfg.dt))
                if n == 0 and t_next - t > 1e-12:
                    n = 1
                h = (t_next - t) / n if n else 0.0
                for _ in range(n):
                    y = _rk4(sys, t, y, h)
                    t += h
                    if not np.all(np.isfinite(y)):
                        raise StepError("non-finite state", out[-1].time if out else state.time, out)
                t = float(t_next)
                out.append(sys.state(y, t))
        else:
            sol = solve_ivp(sys, (t, times[-1]), y, method="RK45", t_eval=times,
                            rtol=icfg.rel_tol, atol=icfg.abs_tol, max_step=icfg.dt * 10)
            if not sol.success:
                raise StepError(sol.message, float(sol.t[-1]) if sol.t.size else t,
                                [sys.state(sol.y[:, i], float(ti)) for i, ti in enumerate(sol.t)])
            out = [sys.state(sol.y[:, i], float(ti)) for i, ti in enumerate(sol.t)]
    except GramSolveError as exc:
        raise StepError(str(exc), out[-1].time if out else state.time, out) from exc
    if sys.n_regularized:
        logger.debug("Gram regularization used in %d evaluations (max cond %.3g)", sys.n_regularized, sys.max_cond)
    return out


# --------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class Diagnostics:
    norm: float
    energy: float


def energy(spec: HamiltonianSpec, state: McEState) -> float:
    """<psi|H|psi> over the grid superposition."""
    Z, c = state.centers, state.physical_amplitudes()
    G = gram_matrix(Z)
    R = _projected_rhs(G, normalized_blocks(spec, Z), np.zeros((state.N, state.N)), np.zeros(state.N), c)
    return float(np.vdot(c, R).real)


def diagnostics(spec: HamiltonianSpec, state: McEState) -> Diagnostics:
    return Diagnostics(state_norm(state), energy(spec, state))


def divergence_time(times, norms, energies, tol: float = 0.01, energy_scale: float = 1.0):
    """First time at which the norm or energy leaves a ``tol`` band, else None.

    Energy drift is measured relative to ``max(|E(0)|, energy_scale)``.
    """
    norms, energies = np.asarray(norms), np.asarray(energies)
    scale = max(abs(energies[0]), energy_scale)
    bad = (abs(norms - 1.0) > tol) | (abs(energies - energies[0]) / scale > tol)
    idx = np.flatnonzero(bad)
    return float(np.asarray(times)[idx[0]]) if idx.size else None


# --------------------------------------------------------------------------
# channel backend


class MCEEvolver:
    """Trajectory backend for :mod:`mcegate.channels` running MCE propagation.

    ``stream`` selects an independent grid draw (used per thermal sample);
    all initial qubit states of one stream share the same sampled grid.
    """

    def __init__(self, spec: HamiltonianSpec, grid: GridInit, icfg: IntegratorConfig, stream: int = 0):
        self.spec, self.grid, self.icfg, self.stream = spec, grid, icfg, stream

    def for_stream(self, stream: int) -> "MCEEvolver":
        return MCEEvolver(self.spec, self.grid, self.icfg, stream)

    def initial(self, qubit_amps, field_center=None) -> McEState:
        z0 = np.zeros(self.spec.M, complex) if field_center is None else field_center
        return init_grid(self.grid, qubit_amps, z0, self.icfg.gram_reg, stream=(self.stream,))

    def run(self, qubit_amps, field_center, times) -> list[McEState]:
        state = self.initial(qubit_amps, field_center)
        return propagate(self.spec, state, self.icfg, times)

    reduce = staticmethod(reduce_to_qubits)
    cross = staticmethod(cross_overlap)

    def with_grid(self, **changes) -> "MCEEvolver":
        return MCEEvolver(self.spec, replace(self.grid, **changes), self.icfg, self.stream)
