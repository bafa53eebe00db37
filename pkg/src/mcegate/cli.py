"""Experiment drivers and the ``mcegate`` command line.

Every driver takes a :class:`~mcegate.config.SimConfig` and returns the CSV
text it would write (the resolved configuration as a ``#`` header, then a
column line, then rows of 17-digit floats).  Output depends only on the
configuration and seed: parallel work is collected by index and reduced in
index order.

Subcommands: ``simulate``, ``channel``, ``oracle-compare``, ``bath``, ``sweep``.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baths import format_bath
from .channels import (
    ChannelError,
    QuantumChannel4,
    channel_trace,
    choi_fidelity,
    concurrence,
    format_channel,
    sample_thermal,
)
from .config import ConfigError, SimConfig
from .dynamics import MCEEvolver, StepError, diagnostics, divergence_time
from .hilbert import D, basis_state, reduce_to_qubits
from .oracle import BudgetError, FockEvolver, FockTruncation, UnsupportedRegimeError, sector_evolver

logger = logging.getLogger(__name__)

EXIT_FAIL, EXIT_CONFIG, EXIT_STEP, EXIT_UNSUPPORTED = 1, 2, 3, 4


def _num(x) -> str:
    return f"{float(x):.17g}"


def _csv(cfg: SimConfig, columns, rows, footer=()) -> str:
    lines = [cfg.header().rstrip("\n"), ",".join(columns)]
    lines += [",".join(_num(v) for v in row) for row in rows]
    lines += [f"# {f}" for f in footer]
    return "\n".join(lines) + "\n"


def _pool_map(fn, items, threads: int):
    """Ordered map, optionally over a process pool."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _evolver(cfg: SimConfig) -> MCEEvolver:
    return MCEEvolver(cfg.hamiltonian(), cfg.grid(), cfg.integrator())


# --------------------------------------------------------------------------
# simulate


@dataclass
class SimulateResult:
    csv: str
    divergence_time: float | None
    failure_time: float | None = None


def run_simulate(cfg: SimConfig) -> SimulateResult:
    """Single trajectory from ``simulate.initial`` with the field in vacuum.

    Columns ``t, norm, energy, rho_11_re, rho_11_im, ..., rho_44_im``.  A
    step failure truncates the table and is recorded with the last good time.
    """
    spec = cfg.hamiltonian()
    ev = _evolver(cfg)
    times = cfg.output_times()
    failure = None
    try:
        snaps = ev.run(cfg.qubit_state(), None, times / cfg.time_unit)
    except StepError as exc:
        snaps, failure = exc.partial, exc.last_good_time * cfg.time_unit
        logger.error("propagation failed: %s", exc)
    rows = []
    for tau, s in zip(times, snaps):
        d = diagnostics(spec, s)
        rho = reduce_to_qubits(s)
        rows.append([tau, d.norm, d.energy, *np.column_stack([rho.real.ravel(), rho.imag.ravel()]).ravel()])
    cols = ["t", "norm", "energy"] + [f"rho_{l}{n}_{p}" for l in range(1, D + 1) for n in range(1, D + 1)
                                       for p in ("re", "im")]
    div = None
    if rows:
        arr = np.array(rows)
        div = divergence_time(arr[:, 0], arr[:, 1], arr[:, 2])
    footer = [f"divergence_time = {'none' if div is None else _num(div)}"]
    if failure is not None:
        footer.append(f"step_failure last_good_time = {_num(failure)}")
    if div is not None:
        logger.warning("norm/energy diagnostics left the 1%% band at rescaled time %g", div)
    return SimulateResult(_csv(cfg, cols, rows, footer), div, failure)


# --------------------------------------------------------------------------
# channel


@dataclass
class ChannelResult:
    csv: str
    channels: list[QuantumChannel4]
    fidelity: np.ndarray
    times: np.ndarray
    fidelity_stderr: np.ndarray | None = None
    divergence_time: float | None = None
    extra: dict = field(default_factory=dict)


def _trajectory_channels(args):
    """One initial field (vacuum or thermal sample): channels plus diagnostics."""
    cfg, stream, alpha = args
    spec = cfg.hamiltonian()
    ev = _evolver(cfg).for_stream(stream)
    norms, energies = [], []

    def observe(label, snaps):
        ds = [diagnostics(spec, s) for s in snaps]
        norms.append([d.norm for d in ds])
        energies.append([d.energy for d in ds])

    z0 = np.zeros(spec.M, complex) if alpha is None else alpha
    chans = channel_trace(ev, z0, cfg.physical_times(), cfg["channel.inputs"], observer=observe)
    return np.array([c.action for c in chans]), np.mean(norms, axis=0), np.mean(energies, axis=0)


def run_channel(cfg: SimConfig, threads: int = 1) -> ChannelResult:
    """Channel reconstruction, CZ fidelity and concurrence versus rescaled time.

    At finite ``temperature.beta`` the channel is averaged over
    ``temperature.N_T`` thermally sampled initial fields; sample ``i`` uses
    grid stream ``i``.
    """
    times = cfg.output_times()
    sampler = cfg.sampler()
    if sampler is None:
        jobs = [(cfg, 0, None)]
    else:
        jobs = [(cfg, i, a) for i, a in enumerate(sample_thermal(sampler))]
    results = _pool_map(_trajectory_channels, jobs, threads)
    acts = np.array([r[0] for r in results])
    norm = np.mean([r[1] for r in results], axis=0)
    ener = np.mean([r[2] for r in results], axis=0)
    action = acts.mean(axis=0)
    beta = cfg["temperature.beta"]
    chans = [QuantumChannel4(action[i], float(t), beta, cfg["channel.inputs"]) for i, t in enumerate(times)]
    F = np.array([choi_fidelity(c) for c in chans])
    stderr = None
    if len(results) > 1:
        per = np.array([[choi_fidelity(QuantumChannel4(a[i], float(t), beta)) for i, t in enumerate(times)]
                        for a in acts])
        stderr = per.std(axis=0, ddof=1) / math.sqrt(len(results))
    p4, p2 = (np.outer(basis_state(l), basis_state(l)) for l in (4, 2))
    c4 = [concurrence(c.apply(p4)).value for c in chans]
    c2 = [concurrence(c.apply(p2)).value for c in chans]
    rows = list(zip(times, F, c4, c2, norm, ener))
    div = divergence_time(times, norm, ener)
    k = int(np.argmax(F))
    footer = [f"peak_F = {_num(F[k])}", f"peak_t = {_num(times[k])}",
              f"divergence_time = {'none' if div is None else _num(div)}"]
    if stderr is not None:
        footer.insert(1, f"peak_F_stderr = {_num(stderr[k])}")
    csv = _csv(cfg, ["t", "F", "C_from_state_4", "C_from_state_2", "norm_mean", "energy_mean"], rows, footer)
    return ChannelResult(csv, chans, F, times, stderr, div)


# --------------------------------------------------------------------------
# oracle comparison


def oracle_evolver(cfg: SimConfig):
    """Exact backend for the configured regime, or an explicit refusal.

    Rotating wave with zero tunnelling uses the excitation-sector solver;
    anything else needs a Fock truncation within ``oracle.max_dim``.
    """
    spec = cfg.hamiltonian()
    if not math.isinf(cfg["temperature.beta"]):
        raise UnsupportedRegimeError("oracle comparison requires temperature.beta = inf (vacuum initial field)")
    n_total = cfg["oracle.n_total"] or None
    if spec.variant == "rotating-wave" and not any(spec.delta):
        return sector_evolver(spec, n_total or 2)
    try:
        tr = FockTruncation(cfg["oracle.n_max"], spec.M, n_total, cfg["oracle.max_dim"])
    except BudgetError as exc:
        raise UnsupportedRegimeError(
            f"Fock truncation exceeds oracle.max_dim={cfg['oracle.max_dim']}: {exc}") from exc
    return FockEvolver(spec, tr)


@dataclass
class OracleCompareResult:
    csv: str
    max_abs_diff: float
    passed: bool
    f_mce: np.ndarray
    f_oracle: np.ndarray
    times: np.ndarray


def run_oracle_compare(cfg: SimConfig) -> OracleCompareResult:
    ora = oracle_evolver(cfg)
    times = cfg.output_times()
    spec = cfg.hamiltonian()
    z0 = np.zeros(spec.M, complex)
    inputs = cfg["channel.inputs"]
    f_mce = np.array([choi_fidelity(c) for c in channel_trace(_evolver(cfg), z0, cfg.physical_times(), inputs)])
    f_ora = np.array([choi_fidelity(c) for c in channel_trace(ora, z0, cfg.physical_times(), inputs)])
    diff = np.abs(f_mce - f_ora)
    worst = float(diff.max())
    ok = worst < cfg["oracle.bound"]
    footer = [f"max_abs_diff = {_num(worst)}", f"bound = {_num(cfg['oracle.bound'])}",
              f"result = {'PASS' if ok else 'FAIL'}"]
    csv = _csv(cfg, ["t", "F_mce", "F_oracle", "abs_diff"], zip(times, f_mce, f_ora, diff), footer)
    return OracleCompareResult(csv, worst, ok, f_mce, f_ora, times)


# --------------------------------------------------------------------------
# bath and sweep


def run_bath(cfg: SimConfig) -> str:
    w, g = cfg.modes()
    return format_bath(w, g)


@dataclass
class SweepResult:
    csv: str
    traces_csv: str
    values: np.ndarray
    peak_F: np.ndarray
    peak_t: np.ndarray


def _sweep_point(args):
    cfg, key, value = args
    res = run_channel(cfg.with_overrides({key: value}))
    k = int(np.argmax(res.fidelity))
    return res.times, res.fidelity, float(res.fidelity[k]), float(res.times[k])


def run_sweep(cfg: SimConfig, threads: int = 1) -> SweepResult:
    """Peak fidelity over ``sweep.values`` of ``sweep.parameter``."""
    values = cfg["sweep.values"]
    if not values:
        raise ConfigError("sweep.values: need at least one value")
    key = cfg.sweep_key()
    if key in ("grid.N",) and any(v != int(v) for v in values):
        raise ConfigError("sweep.values: N must be integral")
    vals = [int(v) if key == "grid.N" else float(v) for v in values]
    out = _pool_map(_sweep_point, [(cfg, key, v) for v in vals], threads)
    name = cfg["sweep.parameter"]
    rows = [(v, o[3], o[2]) for v, o in zip(vals, out)]
    peak = np.array([r[2] for r in rows])
    best = int(np.argmax(peak))
    footer = [f"argmax_{name} = {_num(vals[best])}", f"max_peak_F = {_num(peak[best])}"]
    csv = _csv(cfg, [name, "t_peak", "F_peak"], rows, footer)
    trace_rows = [(v, t, f) for v, o in zip(vals, out) for t, f in zip(o[0], o[1])]
    traces = _csv(cfg, [name, "t", "F"], trace_rows)
    return SweepResult(csv, traces, np.array(vals, float), peak, np.array([r[1] for r in rows]))


# --------------------------------------------------------------------------
# command line


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mcegate", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [("simulate", "single trajectory time series"),
                        ("channel", "channel fidelity and concurrence versus time"),
                        ("oracle-compare", "MCE against an exact Fock-space solution"),
                        ("bath", "write the configured mode set"),
                        ("sweep", "peak fidelity over a parameter sweep")]:
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", type=Path, help="key = value configuration file")
        s.add_argument("--set", dest="sets", action="append", default=[], metavar="K=V",
                       help="override one configuration key (repeatable)")
        s.add_argument("--out", type=Path, default=Path("."), help="output directory")
        s.add_argument("--seed", type=int, help="override the configured seed")
        s.add_argument("--threads", type=int, default=1, help="worker processes")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(args) -> SimConfig:
    cfg = SimConfig.from_file(args.config) if args.config else SimConfig()
    cfg = cfg.with_sets(args.sets)
    if args.seed is not None:
        cfg = cfg.with_overrides({"seed": args.seed})
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        out: Path = args.out
        out.mkdir(parents=True, exist_ok=True)
        code = 0
        if args.command == "simulate":
            res = run_simulate(cfg)
            (out / "simulate.csv").write_text(res.csv)
            code = EXIT_STEP if res.failure_time is not None else 0
        elif args.command == "channel":
            res = run_channel(cfg, args.threads)
            (out / "channel.csv").write_text(res.csv)
            if cfg["channel.dump"]:
                cdir = out / "channels"
                cdir.mkdir(exist_ok=True)
                for i, ch in enumerate(res.channels):
                    (cdir / f"channel_{i:05d}.txt").write_text(format_channel(ch))
        elif args.command == "oracle-compare":
            res = run_oracle_compare(cfg)
            (out / "oracle_compare.csv").write_text(res.csv)
            print(f"max |dF| = {res.max_abs_diff:.3e} (bound {cfg['oracle.bound']:g}): "
                  f"{'PASS' if res.passed else 'FAIL'}")
            code = 0 if res.passed else EXIT_FAIL
        elif args.command == "bath":
            (out / "bath.txt").write_text(run_bath(cfg))
        elif args.command == "sweep":
            res = run_sweep(cfg, args.threads)
            (out / "sweep.csv").write_text(res.csv)
            (out / "sweep_traces.csv").write_text(res.traces_csv)
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ChannelError as exc:
        print(f"trajectory failure: {exc}", file=sys.stderr)
        return EXIT_STEP
    except UnsupportedRegimeError as exc:
        print(f"unsupported regime: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
