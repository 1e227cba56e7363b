"""Command-line entry point ``inertial-ch``.

Subcommands: ``validate``, ``simulate``, ``equilibria``, ``glue``, ``split``,
``eps_sweep``, ``converge`` and ``verify``. Every subcommand except
``verify`` takes a config file (see :mod:`inertial_ch.config`).

Exit codes: 0 ok, 2 config error, 3 assumption violation, 4 numerical
failure, 5 verification failure, 6 file I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .diagnostics import OBSERVERS, make_observers
from .dynamics import State, StiffnessError, TrajectoryRecord, integrate
from .equilibria import (
    CutoffProfile,
    EquilibriumError,
    distance_to_equilibria,
    enumerate_equilibria,
    equilibrium_at_gap,
    glue_quasi_trajectory,
    select_L,
)
from .model import AssumptionViolation, validate_assumptions
from .regularization import eps_comparison, split_trajectory
from .storage import Snapshot, dump_json, load_catalog, save_catalog, save_snapshot, write_csv

__all__ = ["main", "EXIT_OK", "EXIT_CONFIG", "EXIT_ASSUMPTION", "EXIT_NUMERICAL", "EXIT_VERIFY", "EXIT_IO"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ASSUMPTION = 3
EXIT_NUMERICAL = 4
EXIT_VERIFY = 5
EXIT_IO = 6

NUMERICAL_ERRORS = (StiffnessError, FloatingPointError, EquilibriumError)


class _Out:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def __call__(self, msg: str = ""):
        if not self.quiet:
            print(msg)


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "output_dir", None):
        cfg = replace(cfg, output_dir=args.output_dir)
    return cfg


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _validated(cfg: RunConfig):
    f = cfg.nonlinearity()
    report = validate_assumptions(f, cfg.domain.lambda1, cfg.domain.volume)
    return f, report


def _series_columns(cfg: RunConfig, rec: TrajectoryRecord) -> list[str]:
    cols = []
    for name in cfg.observers:
        sample = OBSERVERS[name](rec.state(0), rec.config, rec.f)
        cols.extend(sample)
    return cols + ["dissipation_integral"]


# ----------------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------------


def cmd_validate(args, out) -> int:
    cfg = _load(args)
    _, report = _validated(cfg)
    out(json.dumps(report.to_dict(), indent=1))
    out("accepted")
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    cfg = _load(args)
    f, _ = _validated(cfg)
    problem = cfg.problem()
    observers = make_observers(cfg.observers)
    catalog = load_catalog(cfg.catalog) if cfg.catalog else None
    outdir = _outdir(cfg)
    integ = cfg.integrator()
    state = cfg.initial_state()
    total = max(0, int(round(cfg.T / cfg.dt)))
    k = max(1, cfg.checkpoints)
    bounds = [int(round(total * (i + 1) / k)) for i in range(k)]
    csv_path = outdir / "trajectory.csv"
    header = None
    D0 = 0.0
    done = 0
    written = 0
    failure = None
    # the echo describes the run, not where its files went, so reruns compare byte for byte
    echo = {k: v for k, v in cfg.to_dict().items() if k != "output_dir"}
    for i, b in enumerate(bounds):
        span = (b - done) * cfg.dt
        try:
            rec = integrate(state, span, integ, problem, f, observers)
        except NUMERICAL_ERRORS as exc:
            failure = {"error": type(exc).__name__, "message": str(exc), "t_start": state.t, "chunk": i}
            break
        cols = {"t": rec.times}
        if header is None:
            header = ["t"] + _series_columns(cfg, rec)
            if catalog is not None:
                header.append("distance_to_equilibria")
        for name in header[1:]:
            if name == "dissipation_integral":
                cols[name] = rec.diagnostics[name] + D0
            elif name == "distance_to_equilibria":
                cols[name] = [distance_to_equilibria(s, catalog, cfg.beta, problem, f) for s in rec.states()]
            else:
                cols[name] = rec.diagnostics[name]
        first = 0 if i == 0 else 1
        write_csv(csv_path, {h: np.asarray(cols[h])[first:] for h in header}, header, append=i > 0)
        written += len(rec) - first
        D0 += float(rec.diagnostics["dissipation_integral"][-1])
        state = rec.state(len(rec) - 1)
        done = b
        save_snapshot(Snapshot.from_state(state, echo, D0), outdir / f"snapshot_{i + 1:04d}.json")
    summary = {"config": echo, "rows": written, "t_final": state.t, "dissipation_integral": D0, "failure": failure}
    dump_json(summary, outdir / "summary.json")
    if failure is not None:
        out(f"numerical failure at t={failure['t_start']:.6g}: {failure['message']} (partial output kept)")
        return EXIT_NUMERICAL
    out(f"wrote {written} rows to {csv_path}")
    return EXIT_OK


def cmd_equilibria(args, out) -> int:
    cfg = _load(args)
    f, _ = _validated(cfg)
    problem = cfg.problem()
    cat = enumerate_equilibria(problem, f, seed_count=cfg.seed_count, rng_seed=cfg.rng_seed, workers=args.workers)
    path = _outdir(cfg) / "catalog.json"
    save_catalog(cat, path, cfg.to_dict())
    for e in cat:
        out(f"{e.basin_tag:>8s}  |u|_L2={np.sqrt(np.sum(e.u_star.coeffs ** 2)):.10g}  residual={e.residual:.3g}")
    out(f"{len(cat)} equilibria written to {path}")
    return EXIT_OK


def _catalog_for(cfg, problem, f, workers=1):
    if cfg.catalog:
        return load_catalog(cfg.catalog)
    return enumerate_equilibria(problem, f, seed_count=cfg.seed_count, rng_seed=cfg.rng_seed, workers=workers)


def cmd_glue(args, out) -> int:
    cfg = _load(args)
    f, _ = _validated(cfg)
    problem = cfg.problem()
    cat = _catalog_for(cfg, problem, f, args.workers)
    base = max(cat, key=lambda e: (float(np.sum(e.u_star.coeffs**2)), float(e.u_star.coeffs.ravel()[0])))
    direction = cfg.coefficient_field(cfg.glue_direction, name="glue_direction")
    theta = CutoffProfile(cfg.cutoff)
    rows = {"gap": [], "scale": [], "sup_phi": [], "sup_phi_t": []}
    for gap in cfg.gaps:
        eb, s = equilibrium_at_gap(base, direction, gap, problem, f)
        g = glue_quasi_trajectory(base, eb, theta, problem, f)
        for key, val in (("gap", gap), ("scale", s), ("sup_phi", g.max_phi), ("sup_phi_t", g.max_phi_t)):
            rows[key].append(val)
    slope = None
    if len(cfg.gaps) >= 2:
        slope = float(np.polyfit(np.log(rows["gap"]), np.log(rows["sup_phi"]), 1)[0])
    outdir = _outdir(cfg)
    write_csv(outdir / "glue.csv", rows)
    dump_json({"config": cfg.to_dict(), **rows, "slope": slope}, outdir / "glue.json")
    out(f"sup|phi| = {', '.join(f'{x:.3g}' for x in rows['sup_phi'])}; slope {slope}")
    return EXIT_OK


def cmd_split(args, out) -> int:
    cfg = _load(args)
    if cfg.L is not None and not cfg.L > 0:
        raise ConfigError("split needs L > 0 (or L = auto)", path=cfg.source)
    f, report = _validated(cfg)
    L = select_L(report.lam).L if cfg.L is None else cfg.L
    m = cfg.lowpass_m if cfg.lowpass_m is not None else max(1, cfg.n // 4)
    if m > cfg.n:
        raise ConfigError(f"lowpass_m = {m} exceeds n = {cfg.n}", path=cfg.source)
    problem = cfg.problem()
    rec = integrate(cfg.initial_state(), cfg.T, cfg.integrator(), problem, f)
    rep = split_trajectory(rec, L, cfg.t0, m)
    outdir = _outdir(cfg)
    write_csv(outdir / "split.csv", {"t": rep.times, "w_x0": rep.w_x0, "v_h4": rep.v_h4, "v_t_h2": rep.v_t_h2})
    dump_json({"config": cfg.to_dict(), **rep.to_dict()}, outdir / "split.json")
    if rep.decay is not None:
        out(f"L={L:.6g}  decay rate {rep.decay.rate:.6g} (r^2 {rep.decay.r_squared:.6f}), R0 {rep.ball_radius_used:.6g}")
    else:
        out(f"L={L:.6g}  no decay fit: {rep.note}")
    return EXIT_OK


def cmd_eps_sweep(args, out) -> int:
    cfg = _load(args)
    f, _ = _validated(cfg)
    problem = cfg.problem()
    rep = eps_comparison(
        cfg.initial_field(), cfg.eps_list, cfg.T, cfg.L0, problem, f, dt=cfg.dt,
        scheme="etd" if cfg.scheme == "reference" else cfg.scheme, workers=args.workers,
    )
    outdir = _outdir(cfg)
    write_csv(
        outdir / "eps_sweep.csv",
        {"epsilon": rep.eps_values, "sup_diff_hminus1": rep.sup_diff_hminus1, "sup_diff_l2": rep.sup_diff_l2},
    )
    dump_json({"config": cfg.to_dict(), **rep.to_dict()}, outdir / "eps_sweep.json")
    out(f"slope {rep.slope}, ratio spread {rep.ratio_spread}")
    if rep.failures:
        for e, msg in rep.failures.items():
            out(f"eps={e}: {msg}")
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_converge(args, out) -> int:
    cfg = _load(args)
    f, _ = _validated(cfg)
    ns = sorted(set(cfg.n_list))
    if len(ns) < 2:
        raise ConfigError("n_list needs at least two cutoffs", path=cfg.source)
    recs = {n: integrate(cfg.initial_state(n), cfg.T, cfg.integrator(), cfg.problem(n), f) for n in ns}
    rows = {"n_coarse": [], "n_fine": [], "sup_l2_diff": []}
    for a, b in zip(ns[:-1], ns[1:]):
        ua = np.zeros(recs[b].u.shape)
        ua[(slice(None),) + (slice(0, a),) * cfg.dim] = recs[a].u
        axes = tuple(range(1, ua.ndim))
        diff = float(np.max(np.sqrt(np.sum((ua - recs[b].u) ** 2, axis=axes))))
        for key, val in (("n_coarse", a), ("n_fine", b), ("sup_l2_diff", diff)):
            rows[key].append(val)
    d = rows["sup_l2_diff"]
    monotone = all(x > y for x, y in zip(d[:-1], d[1:]))
    outdir = _outdir(cfg)
    write_csv(outdir / "converge.csv", rows)
    dump_json({"config": cfg.to_dict(), **rows, "strictly_decreasing": monotone}, outdir / "converge.json")
    out(f"sup L2 differences {', '.join(f'{x:.3g}' for x in d)}; strictly decreasing: {monotone}")
    return EXIT_OK


def cmd_verify(args, out) -> int:
    from .verify import run_all, tolerance_scale

    try:
        scale = tolerance_scale()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    results = run_all(scale, echo=print)
    npass = sum(r.passed for r in results)
    print(f"{npass}/{len(results)} criteria passed (tolerance scale {scale:g})")
    if args.json:
        dump_json({"tolerance_scale": scale, "results": [r.to_dict() for r in results]}, args.json)
    return EXIT_OK if npass == len(results) else EXIT_VERIFY


COMMANDS = {
    "validate": (cmd_validate, "check the nonlinearity assumptions and print certified constants"),
    "simulate": (cmd_simulate, "integrate the Galerkin system, writing a CSV and snapshots"),
    "equilibria": (cmd_equilibria, "enumerate stationary solutions into a catalog"),
    "glue": (cmd_glue, "gluing residuals along a forcing continuation family"),
    "split": (cmd_split, "split a trajectory into smooth and decaying parts"),
    "eps_sweep": (cmd_eps_sweep, "compare against the parabolic limit for several eps"),
    "converge": (cmd_converge, "Galerkin self-convergence over n_list"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="inertial-ch", description="Spectral-Galerkin inertial Cahn-Hilliard toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="run configuration file")
        sp.add_argument("-o", "--output-dir", help="override output_dir from the config")
        sp.add_argument("-q", "--quiet", action="store_true", help="suppress progress output")
        sp.add_argument("--workers", type=int, default=1, help="threads for sweep subcommands")
    vp = sub.add_parser("verify", help="run the acceptance suite")
    vp.add_argument("--json", help="also write the results as JSON")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    out = _Out(getattr(args, "quiet", False))
    try:
        if args.command == "verify":
            return cmd_verify(args, out)
        return COMMANDS[args.command][0](args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AssumptionViolation as exc:
        print(f"assumption violated ({exc.kind}): {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
