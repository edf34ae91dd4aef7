"""Command-line surface.

Subcommands: simulate, eigs, linearized, stationary, ineq, sweep-eps,
report. Each run owns one locked output directory and ends by writing a
manifest; identical config and seed give byte-identical artifacts.

Exit codes: 0 success, 2 configuration, 3 numeric failure, 4 I/O.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from .checkpoint import checkpoint_bytes
from .config import (ConfigError, RunConfig, domain_grid, initial_state,
                     load_config)
from .dynamics import (SchemeConfig, SimulationError, params_for_initial,
                       simulate, sweep_distances)
from .energy import audit_energy_identity
from .grid import (Field, build_grid, lambda1, neumann_eigs,
                   random_cosine_field, set_fft_workers)
from .ineq import (DegenerateSample, FieldEnsemble, TrigSeries,
                   check_hessian_dominance, check_log_hessian_identity,
                   check_poincare, check_quartic_bound, grid_tolerance)
from .linearized import (LinState, coupled_decay_constant, decay_check,
                         semigroup_constant, singular_convolution_check)
from .rates import rate_suite
from .reporting import RunDirectory, json_text, read_manifest
from .stationary import StationaryProblem, multi_init_report
from .svgplot import render_plot

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

ENV_PREFIX = "CHEMOREPEL_"

TRAJ_COLUMNS = ("t", "mass", "cbar", "min_rho", "min_c", "dist_rho_inf",
                "dist_c_inf", "gradc_inf", "E", "D1", "D2", "D3", "D4", "B",
                "inst_rate", "residual")


def _jnum(x):
    """JSON-safe number: infinities as strings, None passed through."""
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return None
    return x


def _estimate_dict(est):
    return {
        "item": est.item,
        "p": _jnum(est.p),
        "q": _jnum(est.q),
        "empirical_constant": est.empirical_constant,
        "sup_time": est.sup_time,
        "sup_sample": est.sup_sample,
        "sample_count": est.sample_count,
        "sample_seed": est.sample_seed,
    }


def _trajectory_rows(traj):
    rows = []
    for r in traj.records:
        row = []
        for name in TRAJ_COLUMNS:
            v = getattr(r, name)
            row.append("" if v is None else v)
        rows.append(row)
    return rows


def _decay_plot_spec(traj, lam1):
    t = traj.times
    series = []
    for attr, label in (("dist_rho_inf", "max|rho-M|"),
                        ("gradc_inf", "max|grad c|"),
                        ("dist_c_inf", "max|c-M|")):
        v = traj.series(attr)
        if np.any(v > 0):
            series.append({"label": label, "t": t, "values": v})
    if not series:
        return None
    return {"kind": "decay", "title": "distance to equilibrium",
            "xlabel": "t", "ylabel": "log10 norm", "logy": True,
            "series": series, "reference_rate": lam1}


def _energy_plot_spec(traj):
    t = traj.times
    series = [{"label": "E", "t": t, "values": traj.series("E")}]
    if traj.records[0].D1 is not None:
        for name in ("D1", "D2", "D3", "D4", "B"):
            series.append({"label": name, "t": t, "values": traj.series(name)})
    return {"kind": "lines", "title": "energy and dissipation",
            "xlabel": "t", "ylabel": "value", "series": series}


def cmd_simulate(cfg):
    grid = domain_grid(cfg)
    state0 = initial_state(cfg, grid)
    try:
        params = params_for_initial(state0.rho, chi=cfg.chi, gamma=cfg.gamma,
                                    eps=cfg.eps)
    except ValueError as exc:
        raise ConfigError([str(exc)])
    scheme = SchemeConfig(dt=cfg.dt, dt_adapt=cfg.dt_adapt,
                          drift_discretization=cfg.drift,
                          linear_solver_tol=cfg.linear_solver_tol,
                          c_floor=cfg.c_floor)
    traj = simulate(state0, params, scheme, cfg.t_end,
                    probe_every=cfg.probe_every,
                    energy_detail=cfg.energy_detail)
    lam1 = lambda1(grid)
    with RunDirectory(cfg.out) as run:
        try:
            audit = audit_energy_identity(traj)
            audit_doc = {"checked": True,
                         "max_residual": audit.max_residual,
                         "monotone": audit.monotone,
                         "max_scaled_increment": audit.max_scaled_increment}
        except ValueError as exc:
            audit_doc = {"checked": False, "reason": str(exc)}
        # after the audit so the residual column is filled in
        run.write_csv("trajectory.csv", TRAJ_COLUMNS, _trajectory_rows(traj))
        run.write_json("audit.json", audit_doc)
        try:
            reports, verdict = rate_suite(traj, lam1)
            rates_doc = {"lambda1": lam1, "verdict": verdict,
                         "reports": [
                             {k: _jnum(v) if isinstance(v, float) else v
                              for k, v in r.as_dict().items()}
                             for r in reports]}
        except ValueError as exc:
            rates_doc = {"lambda1": lam1, "verdict": "NOFIT",
                         "reason": str(exc)}
        run.write_json("rates.json", rates_doc)
        run.write_bytes("final.ckpt",
                        checkpoint_bytes(traj.final_state, params,
                                         traj.final_dt))
        spec = _decay_plot_spec(traj, lam1)
        if spec is not None:
            run.write_text("decay.svg", render_plot(spec))
        run.write_text("energy.svg", render_plot(_energy_plot_spec(traj)))
        run.write_json("summary.json", {
            "lambda1": lam1,
            "final_t": traj.final_state.t,
            "probes": len(traj.records),
            "aborted": traj.aborted,
            "abort_reason": traj.abort_reason,
            "mass_initial": traj.records[0].mass,
            "mass_final": traj.records[-1].mass,
        })
        run.finalize(cfg.raw_text, cfg.seed)
    if traj.aborted:
        print(f"simulate: aborted at t={traj.final_state.t:.6g}: "
              f"{traj.abort_reason}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"simulate: {len(traj.records)} probes to t={traj.final_state.t:.6g}"
          f" in {cfg.out}")
    return EXIT_OK


def cmd_eigs(cfg):
    grid = domain_grid(cfg)
    k = min(16, grid.cell_count)
    vals = neumann_eigs(grid, k)
    with RunDirectory(cfg.out) as run:
        run.write_json("eigs.json", {
            "dim": grid.dim, "cells": list(grid.cells),
            "extents": list(grid.extents), "lambda1": lambda1(grid),
            "eigenvalues": [float(v) for v in vals]})
        run.write_csv("eigs.csv", ("index", "eigenvalue"),
                      [(i, float(v)) for i, v in enumerate(vals)])
        run.finalize(cfg.raw_text, cfg.seed)
    print(f"eigs: lambda1 = {lambda1(grid):.12g} in {cfg.out}")
    return EXIT_OK


# representative (p, q) pairs inside each item's admissible range
_SEMIGROUP_PAIRS = {
    "lp_lq": ((2.0, 2.0), (np.inf, 2.0)),
    "grad_lq": ((2.0, 2.0), (np.inf, 2.0)),
    "grad_grad": ((2.0, 2.0), (4.0, 2.0)),
    "div_lq": ((2.0, 2.0), (np.inf, 2.0)),
}


def cmd_linearized(cfg):
    grid = domain_grid(cfg)
    a = 1.0 - cfg.eps * cfg.mean_density
    if not 0.5 <= a <= 1.0:
        raise ConfigError([
            f"block coupling 1 - eps*mean = {a} outside [1/2, 1]; "
            f"lower params.eps or initial.mean_density"])
    rng = np.random.default_rng(cfg.seed)
    times = np.linspace(0.0, 5.0, cfg.margin_times)
    margin_rows = []
    worst = np.inf
    for i in range(cfg.margin_samples):
        u0 = random_cosine_field(grid, rng, cfg.max_wavenumber, 1.0)
        v0 = random_cosine_field(grid, rng, cfg.max_wavenumber, 1.0)
        rep = decay_check(LinState(u=Field(grid, u0), v=Field(grid, v0)), a,
                          times)
        scale = np.where(rep.rhs > 0, rep.rhs, 1.0)
        scaled = float(np.min(rep.margins / scale))
        worst = min(worst, scaled)
        margin_rows.append((i, float(rep.margins.min()), scaled))
    semis = []
    for item, pairs in _SEMIGROUP_PAIRS.items():
        for p, q in pairs:
            semis.append(semigroup_constant(
                grid, item, p, q, sample_count=cfg.semigroup_samples,
                seed=cfg.seed, max_wavenumber=cfg.max_wavenumber))
    if grid.dim >= 2:
        for comp in ("u", "grad_v"):
            semis.append(coupled_decay_constant(
                grid, a, p=4.0, component=comp, seed=cfg.seed,
                max_wavenumber=cfg.max_wavenumber))
    conv = singular_convolution_check(alpha=0.5, beta=0.5, gamma=1.0,
                                      delta=2.0)
    with RunDirectory(cfg.out) as run:
        run.write_csv("margins.csv", ("sample", "min_margin", "min_scaled"),
                      margin_rows)
        run.write_json("linearized.json", {
            "a": a,
            "lambda1": lambda1(grid),
            "margin_samples": cfg.margin_samples,
            "worst_scaled_margin": worst,
            "margins_ok": bool(worst >= -1e-10),
            "semigroup": [_estimate_dict(e) for e in semis],
            "convolution_sup_ratio": conv,
        })
        run.finalize(cfg.raw_text, cfg.seed)
    print(f"linearized: worst scaled margin {worst:.3e}, "
          f"{len(semis)} envelope constants in {cfg.out}")
    return EXIT_OK


def cmd_stationary(cfg):
    grid = domain_grid(cfg)
    m = cfg.mean_density * float(np.prod(grid.extents))
    problem = StationaryProblem(grid=grid, m=m, chi=cfg.chi)
    entries = multi_init_report(problem, count=cfg.stationary_inits,
                                seed=cfg.seed, tol=cfg.stationary_tol,
                                amplitude=cfg.stationary_amplitude)
    doc = {
        "M": problem.M,
        "inits": entries,
        "all_converged": all(e["converged"] for e in entries),
        "max_distance_to_constant": max(e["distance_to_constant"]
                                        for e in entries),
    }
    with RunDirectory(cfg.out) as run:
        run.write_json("stationary.json", doc)
        run.finalize(cfg.raw_text, cfg.seed)
    print(f"stationary: {sum(e['converged'] for e in entries)}"
          f"/{len(entries)} inits converged, max distance "
          f"{doc['max_distance_to_constant']:.3e} in {cfg.out}")
    return EXIT_OK


def cmd_ineq(cfg):
    summaries = []
    csv_blobs = []
    checks = (("quartic_gradient_bound", check_quartic_bound),
              ("hessian_dominance", check_hessian_dominance),
              ("log_hessian_identity_residual", check_log_hessian_identity))
    for d in (1, 2, 3):
        n = cfg.ineq_cells[d - 1]
        grid = build_grid(d, (1.0,) * d, (n,) * d)
        gen = TrigSeries(max_wavenumber=cfg.ineq_max_wavenumber,
                         amplitude=cfg.ineq_amplitude)
        seed = cfg.seed + d
        ens = FieldEnsemble(grid=grid, count=cfg.ineq_samples, generator=gen,
                            seed=seed)
        rows = []
        sups = {name: 0.0 for name, _ in checks}
        degenerate = {name: 0 for name, _ in checks}
        for i, phi in enumerate(ens.fields()):
            row = [i]
            for name, fn in checks:
                try:
                    v = fn(phi)
                    sups[name] = max(sups[name], v)
                    row.append(float(v))
                except DegenerateSample:
                    degenerate[name] += 1
                    row.append("")
            rows.append(row)
        rng = np.random.default_rng(seed)
        pmargins = []
        for _ in range(cfg.ineq_samples):
            w = random_cosine_field(grid, rng, cfg.ineq_max_wavenumber, 1.0)
            pmargins.append(check_poincare(Field(grid, w)))
        bound = (2.0 + math.sqrt(d)) ** 2 * grid_tolerance(grid)
        for name, _ in checks:
            entry = {"check": name, "d": d, "grid": n,
                     "samples": cfg.ineq_samples, "sup_ratio": sups[name],
                     "degenerate_count": degenerate[name], "seed": seed}
            if name == "quartic_gradient_bound":
                entry["bound"] = bound
                entry["ok"] = bool(sups[name] <= bound)
            summaries.append(entry)
        summaries.append({
            "check": "poincare_margin", "d": d, "grid": n,
            "samples": len(pmargins), "min_margin": float(min(pmargins)),
            "degenerate_count": 0, "seed": seed})
        csv_blobs.append((f"ineq_d{d}.csv",
                          ("sample", "quartic_ratio", "dominance_ratio",
                           "identity_residual"), rows))
    with RunDirectory(cfg.out) as run:
        for name, header, rows in csv_blobs:
            run.write_csv(name, header, rows)
        run.write_json("ineq.json", {"suites": summaries})
        run.finalize(cfg.raw_text, cfg.seed)
    sup1 = max(s["sup_ratio"] for s in summaries
               if s["check"] == "quartic_gradient_bound")
    print(f"ineq: quartic sup ratio {sup1:.4f} over d=1..3 in {cfg.out}")
    return EXIT_OK


def cmd_sweep_eps(cfg):
    grid = domain_grid(cfg)
    state0 = initial_state(cfg, grid)
    zeta0 = 1.0 / float(state0.rho.values.max())
    eps_list = list(cfg.eps_sweep) if cfg.eps_sweep else \
        [zeta0, zeta0 / 2.0, zeta0 / 4.0]
    if len(eps_list) < 2:
        raise ConfigError(["params.eps_sweep needs at least two entries"])
    try:
        params_list = [params_for_initial(state0.rho, chi=cfg.chi,
                                          gamma=cfg.gamma, eps=e)
                       for e in eps_list]
    except ValueError as exc:
        raise ConfigError([str(exc)])
    scheme = SchemeConfig(dt=cfg.dt, dt_adapt=False,
                          drift_discretization=cfg.drift,
                          linear_solver_tol=cfg.linear_solver_tol,
                          c_floor=cfg.c_floor)
    times, dists = sweep_distances(state0, params_list, scheme, cfg.t_end,
                                   probe_every=cfg.probe_every)
    sups = dists.max(axis=1)
    ratios = [float(sups[i] / sups[i + 1]) if sups[i + 1] > 0 else None
              for i in range(len(sups) - 1)]
    with RunDirectory(cfg.out) as run:
        header = ["t"] + [f"dist_{i}" for i in range(len(sups))]
        rows = [[times[j]] + [dists[i, j] for i in range(len(sups))]
                for j in range(len(times))]
        run.write_csv("sweep.csv", header, rows)
        run.write_json("sweep.json", {
            "eps": [float(e) for e in eps_list],
            "sup_l2_distances": [float(s) for s in sups],
            "halving_ratios": ratios,
        })
        run.finalize(cfg.raw_text, cfg.seed)
    print(f"sweep-eps: eps {eps_list} sup distances "
          f"{[f'{s:.3e}' for s in sups]} in {cfg.out}")
    return EXIT_OK


def cmd_report(src, cfg):
    manifest = read_manifest(src)
    md = ["# Run report", "", f"Source directory: `{src}`", "",
          f"Config sha256: `{manifest['config_sha256']}`", "",
          f"Seed: {manifest['seed']}", "", "## Artifacts", ""]
    for name, digest in sorted(manifest["artifacts"].items()):
        md.append(f"- `{name}` sha256 `{digest[:16]}...`")
    md.append("")
    for name in sorted(manifest["artifacts"]):
        if not name.endswith(".json"):
            continue
        path = os.path.join(src, name)
        if not os.path.exists(path):
            continue
        with open(path, "rb") as fh:
            doc = json.loads(fh.read())
        md.append(f"## {name}")
        md.append("")
        md.append("```json")
        md.append(json.dumps(doc, sort_keys=True, indent=2))
        md.append("```")
        md.append("")
    with RunDirectory(cfg.out) as run:
        run.write_text("report.md", "\n".join(md))
        run.finalize(json_text(manifest), manifest["seed"])
    print(f"report: {len(manifest['artifacts'])} artifacts summarized "
          f"into {cfg.out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="chemorepel",
        description="Simulation and verification suite for a repulsive "
                    "chemotaxis system with logarithmic sensitivity.")
    parser.add_argument("--config", help="TOML run configuration")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="seed (overrides config)")
    parser.add_argument("--threads", type=int,
                        help="FFT worker threads (default 1)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "eigs", "linearized", "stationary", "ineq",
                 "sweep-eps"):
        sub.add_parser(name)
    rep = sub.add_parser("report")
    rep.add_argument("source", help="completed run directory to summarize")
    return parser


def _env(name):
    return os.environ.get(ENV_PREFIX + name)


def resolve_config(args):
    """CLI > environment > file > defaults."""
    path = args.config or _env("CONFIG")
    cfg = load_config(path) if path else RunConfig()
    import dataclasses

    seed = args.seed if args.seed is not None else \
        (int(_env("SEED")) if _env("SEED") else cfg.seed)
    out = args.out or _env("OUT") or cfg.out
    return dataclasses.replace(cfg, seed=seed, out=out)


def main(argv=None):
    args = build_parser().parse_args(argv)
    threads = args.threads if args.threads is not None else \
        (int(_env("THREADS")) if _env("THREADS") else 1)
    if threads < 1:
        print("config error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    set_fft_workers(threads)
    try:
        cfg = resolve_config(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "eigs":
            return cmd_eigs(cfg)
        if args.command == "linearized":
            return cmd_linearized(cfg)
        if args.command == "stationary":
            return cmd_stationary(cfg)
        if args.command == "ineq":
            return cmd_ineq(cfg)
        if args.command == "sweep-eps":
            return cmd_sweep_eps(cfg)
        if args.command == "report":
            return cmd_report(args.source, cfg)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        for line in exc.errors:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RuntimeError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
