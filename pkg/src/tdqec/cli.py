"""Batch orchestration CLI.

Subcommands: simulate (infidelity curves), sweep (logical-error-rate tables
plus threshold/suppression summaries), rates (trapped-ion effective rates),
verify (invariant suites).  Bare invocations reproduce the published
experiment: defaults are the paper's code sizes, error-rate grids, initial
state, and t_max = 3/gamma_e.

Exit codes: 0 success, 1 usage/config error, 2 engine guard, 3 verification
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .analysis import FitError, fit_infidelity, lambda_estimate, threshold_estimate
from .codes import RepetitionCode
from .config import (
    ConfigError,
    ExperimentConfig,
    IonConfig,
    RunManifest,
    check_manifest_complete,
    load_config,
)
from .engines import (
    SimConfig,
    gillespie_ensemble,
    infidelity_from_density,
    lindblad_dense_evolve,
    logical_density,
    mcwf_ensemble,
    weight_chain_generator,
    weight_chain_transient,
)
from .ion import rates_table
from .opcore import GuardError
from .verify import run_verification

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_GUARD = 2
EXIT_VERIFY = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _time_grid(cfg: ExperimentConfig, gamma_e: float) -> np.ndarray:
    t_max = cfg.t_max_factor / gamma_e
    if cfg.t_spacing == "log":
        grid = np.geomspace(1e-4 * t_max, t_max, cfg.t_points)
    else:
        grid = np.linspace(t_max / cfg.t_points, t_max, cfg.t_points)
    return np.concatenate([[0.0], grid])


def _run_cell(cfg: ExperimentConfig, desc: dict, code: RepetitionCode, gamma_e: float):
    jumps = cfg.build_jump_set(desc, code, gamma_e)
    t_grid = _time_grid(cfg, gamma_e)
    if cfg.engine == "chain":
        return weight_chain_transient(weight_chain_generator(jumps), t_grid=t_grid)
    if cfg.engine == "dense":
        rhos = lindblad_dense_evolve(logical_density(code), jumps, t_grid)
        return infidelity_from_density(rhos, code, t_grid=t_grid)
    sim = SimConfig(
        t_grid=t_grid,
        n_traj=cfg.n_traj,
        master_seed=cfg.seed,
        dt_rate_cap=cfg.dt_rate_cap,
        engine=cfg.engine,
    )
    if cfg.engine == "mcwf":
        return mcwf_ensemble(jumps, sim)
    return gillespie_ensemble(jumps, sim)


def _write_csv(path: str, series):
    with open(path, "w", newline="") as fh:
        for row in series.csv_rows():
            fh.write(row + "\r\n")


def _thread_count(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("TDQEC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"TDQEC_THREADS is not an integer: {env!r}") from exc
    return 1


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.seed is not None:
        cfg.seed = args.seed
    if args.engine is not None:
        cfg.engine = args.engine
    if args.out is not None:
        cfg.out_dir = args.out
    return cfg


def _plot_script(kind: str) -> str:
    return (
        "#!/usr/bin/env python3\n"
        '"""Plot the {kind} outputs in this directory (needs matplotlib)."""\n'
        "import csv, glob, json\n"
        "import matplotlib.pyplot as plt\n\n"
        "if '{kind}' == 'simulate':\n"
        "    for path in sorted(glob.glob('sim_*.csv')):\n"
        "        rows = list(csv.DictReader(open(path)))\n"
        "        t = [float(r['time']) for r in rows if float(r['time']) > 0]\n"
        "        v = [float(r['infidelity']) for r in rows if float(r['time']) > 0]\n"
        "        plt.loglog(t, v, label=path)\n"
        "    plt.xlabel('time'); plt.ylabel('logical infidelity')\n"
        "else:\n"
        "    pts = [json.loads(l) for l in open('sweep.ndjson') if '\"p_l\"' in l]\n"
        "    keys = sorted({(p['scheme'], p['n']) for p in pts})\n"
        "    for scheme, n in keys:\n"
        "        sel = [p for p in pts if p['scheme'] == scheme and p['n'] == n]\n"
        "        sel.sort(key=lambda p: p['gamma_e'])\n"
        "        plt.loglog([p['gamma_e'] for p in sel], [p['p_l'] for p in sel],\n"
        "                   marker='o', label=f'{{scheme}} n={{n}}')\n"
        "    plt.xlabel('gamma_e / gamma_c'); plt.ylabel('p_L')\n"
        "plt.legend(fontsize=6); plt.tight_layout(); plt.savefig('{kind}.png', dpi=160)\n"
    ).replace("{kind}", kind)


def cmd_simulate(cfg: ExperimentConfig, threads: int) -> int:
    os.makedirs(cfg.out_dir, exist_ok=True)
    manifest = RunManifest("simulate", cfg.content_hash(), cfg.seed)
    cells = []
    for n in cfg.codes:
        code = RepetitionCode(n)
        for desc in cfg.schemes:
            for gamma_e in cfg.gamma_e:
                cells.append((desc, code, gamma_e))

    def work(cell):
        desc, code, gamma_e = cell
        return cell, _run_cell(cfg, desc, code, gamma_e)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, cells))
    else:
        results = [work(c) for c in cells]

    for (desc, code, gamma_e), series in sorted(
        results, key=lambda item: (item[0][1].n, str(item[0][0]), item[0][2])
    ):
        label = cfg.scheme_label(desc, code)
        name = f"sim_n{code.n}_{label}_ge{gamma_e:g}.csv"
        _write_csv(os.path.join(cfg.out_dir, name), series)
        manifest.register(name)

    script = os.path.join(cfg.out_dir, "plot_simulate.py")
    with open(script, "w") as fh:
        fh.write(_plot_script("simulate"))
    manifest.register("plot_simulate.py")
    manifest.write(cfg.out_dir)
    check_manifest_complete(cfg.out_dir)
    print(f"simulate: wrote {len(results)} series to {cfg.out_dir}")
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig, threads: int) -> int:
    os.makedirs(cfg.out_dir, exist_ok=True)
    manifest = RunManifest("sweep", cfg.content_hash(), cfg.seed)
    cells = []
    for desc in cfg.schemes:
        for n in cfg.codes:
            code = RepetitionCode(n)
            for gamma_e in cfg.gamma_e:
                cells.append((desc, code, gamma_e))

    def work(cell):
        desc, code, gamma_e = cell
        series = _run_cell(cfg, desc, code, gamma_e)
        label = cfg.scheme_label(desc, code)
        row = {"scheme": label, "n": code.n, "gamma_e": gamma_e}
        try:
            fit = fit_infidelity(series, code.ell)
            row.update(
                epsilon=fit.epsilon, tau=fit.tau, p_l=fit.p_l,
                residual_norm=fit.residual_norm,
            )
        except FitError as exc:
            row["error"] = str(exc)
        return row

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(work, cells))
    else:
        rows = [work(c) for c in cells]
    rows.sort(key=lambda r: (r["scheme"], r["n"], r["gamma_e"]))

    lines = [json.dumps(r, sort_keys=True) for r in rows]
    by_scheme = {}
    for row in rows:
        if "p_l" in row:
            by_scheme.setdefault(row["scheme"], {})[(row["n"], row["gamma_e"])] = row["p_l"]
    for scheme, table in sorted(by_scheme.items()):
        summary = {"kind": "summary", "scheme": scheme}
        try:
            thr = threshold_estimate(table)
            summary["threshold"] = thr.threshold
            summary["crossings"] = [[a, b, g] for a, b, g in thr.crossings]
        except ValueError as exc:
            summary["threshold_error"] = str(exc)
        try:
            lam = lambda_estimate(table)
            summary["gamma_e_star"] = lam.gamma_e_star
            summary["lambda_offset"] = lam.b
            summary["lambda_at_min_gamma"] = lam.lambda_at(float(min(cfg.gamma_e)))
        except ValueError as exc:
            summary["lambda_error"] = str(exc)
        lines.append(json.dumps(summary, sort_keys=True))
        pretty = {k: v for k, v in summary.items() if k not in ("kind", "crossings")}
        print(f"sweep summary: {pretty}")

    with open(os.path.join(cfg.out_dir, "sweep.ndjson"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    manifest.register("sweep.ndjson")
    script = os.path.join(cfg.out_dir, "plot_sweep.py")
    with open(script, "w") as fh:
        fh.write(_plot_script("sweep"))
    manifest.register("plot_sweep.py")
    manifest.write(cfg.out_dir)
    check_manifest_complete(cfg.out_dir)
    return EXIT_OK


def cmd_rates(cfg: ExperimentConfig) -> int:
    if cfg.ion is None:
        raise ConfigError("rates requires the 'ion' config block")
    os.makedirs(cfg.out_dir, exist_ok=True)
    manifest = RunManifest("rates", cfg.content_hash(), cfg.seed)
    for n in cfg.codes:
        code = RepetitionCode(n)
        params = cfg.ion.params_for(n)
        rows = rates_table(code, params, cfg.ion.tone_set(code))
        name = f"rates_n{n}.csv"
        with open(os.path.join(cfg.out_dir, name), "w", newline="") as fh:
            fh.write("c,desired_rate,undesired_rate,desired_norm,undesired_norm,active\r\n")
            for r in rows:
                fh.write(
                    f"{r['c']},{r['desired_rate']!r},{r['undesired_rate']!r},"
                    f"{r['desired_norm']!r},{r['undesired_norm']!r},{int(r['active'])}\r\n"
                )
        manifest.register(name)
        print(f"rates: wrote {name} ({len(rows)} weights)")
    manifest.write(cfg.out_dir)
    check_manifest_complete(cfg.out_dir)
    return EXIT_OK


def cmd_verify(sizes) -> int:
    report = run_verification(sizes)
    for line in report.lines:
        print(line)
    print(f"verify: {len(report.lines) - report.failures}/{len(report.lines)} checks passed")
    return EXIT_OK if report.ok else EXIT_VERIFY


FIG2B_DEFAULTS = {
    "codes": [13],
    "schemes": [
        {"kind": "none"},
        {"kind": "lookup"},
        {"kind": "trickle", "m": 1},
        {"kind": "trickle", "m": 2},
        {"kind": "trickle", "m": 3},
        {"kind": "trickle", "m": 4},
        {"kind": "trickle", "m": 5},
        {"kind": "trickle", "m": "ell"},
    ],
    "gamma_e": [0.01],
    "engine": "chain",
}

FIG3_DEFAULTS = {
    "codes": [3, 5, 7, 9, 11, 13],
    "schemes": [{"kind": "lookup"}, {"kind": "trickle", "m": "ell"}],
    "gamma_e": list(np.geomspace(1e-2, 1.0, 21)),
    "engine": "chain",
}

FIG4B_DEFAULTS = {
    "codes": [21],
    "ion": {
        "omega": 1.0,
        "delta_big": 4.0,
        "delta_small": 3.46,
        "g_coupling": 1.66,
        "kappa_eng": 1.0,
        "tones": [5],
    },
}


def _load_or_default(args, defaults: dict) -> ExperimentConfig:
    if args.config is not None:
        return load_config(args.config)
    return ExperimentConfig.from_dict(dict(defaults))


def build_parser() -> _Parser:
    parser = _Parser(prog="tdqec", description=__doc__)
    parser.add_argument("--version", action="version", version=f"tdqec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="JSON experiment config")
        p.add_argument("--seed", type=int, metavar="U64")
        p.add_argument("--engine", choices=["dense", "mcwf", "gillespie", "chain"])
        p.add_argument("--out", metavar="DIR")
        p.add_argument("--threads", type=int, metavar="N")

    common(sub.add_parser("simulate", help="infidelity time series per (n, scheme)"))
    common(sub.add_parser("sweep", help="p_L table over (scheme, n, gamma_e) plus summaries"))
    common(sub.add_parser("rates", help="trapped-ion effective rate table"))
    v = sub.add_parser("verify", help="run the operator/code invariant suites")
    v.add_argument("--sizes", default="3,5,7", help="comma-separated odd code sizes")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "verify":
            sizes = tuple(int(s) for s in args.sizes.split(","))
            return cmd_verify(sizes)
        threads = _thread_count(args)
        if args.command == "simulate":
            cfg = _apply_overrides(_load_or_default(args, FIG2B_DEFAULTS), args)
            return cmd_simulate(cfg, threads)
        if args.command == "sweep":
            cfg = _apply_overrides(_load_or_default(args, FIG3_DEFAULTS), args)
            return cmd_sweep(cfg, threads)
        if args.command == "rates":
            cfg = _apply_overrides(_load_or_default(args, FIG4B_DEFAULTS), args)
            return cmd_rates(cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GuardError as exc:
        print(f"engine guard: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
