"""Command line interface: ``negcall simulate | verify | converge | tails``.

Exit codes: 0 success (all verdicts pass), 1 a verdict failed, 2 bad input.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, analytics, economy, report, strategies, suite
from ._accel import set_threads
from .config import BACKENDS, FORMATS, load_config
from .errors import ConfigError, DomainError
from .stats import ALPHA_3SIGMA, binomial_tail_test, clopper_pearson, mean_test

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="scenario file of 'key = value' lines")
    p.add_argument("--paths", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--backend", choices=BACKENDS)
    p.add_argument("--tau-max", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--claim")
    p.add_argument("--alpha", type=float)
    p.add_argument("--out")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--levels", help="comma-separated depths L")
    p.add_argument("--n-list", help="comma-separated step counts for converge")
    p.add_argument("--threads", type=int)
    p.add_argument("--hedge-paths", type=int)
    p.add_argument("--record-nodes", type=int)
    p.add_argument("--bridge-correction", choices=("on", "off"))
    p.add_argument("--corrupt-oracle", action="store_const", const="1", help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="negcall", description="Monte Carlo checks for an economy with a negatively priced call.")
    parser.add_argument("--version", action="version", version=f"negcall {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("simulate", "simulate an ensemble and write paths and a summary"),
        ("verify", "run the verification suite"),
        ("converge", "delta-hedge error against step count"),
        ("tails", "ruin probabilities of the box strategy"),
    ):
        _add_common(sub.add_parser(name, help=help_))
    return parser


def _overrides(ns) -> dict:
    keys = ("paths", "seed", "backend", "tau_max", "steps", "claim", "alpha", "out", "format", "levels", "n_list", "threads", "hedge_paths", "record_nodes", "bridge_correction", "corrupt_oracle")
    return {k: getattr(ns, k) for k in keys}


def _wants(cfg, kind: str) -> bool:
    return cfg.format in (kind, "both")


def _emit(cfg, stem: str, doc: dict, rows=None, header=None) -> None:
    out = Path(cfg.out)
    if _wants(cfg, "json"):
        report.write_json(out / f"{stem}.json", doc)
    if _wants(cfg, "csv") and rows is not None:
        report.write_csv(out / f"{stem}.csv", header, rows)


# commands


def cmd_simulate(cfg) -> int:
    claim = economy.get_claim(cfg.claim)
    out = Path(cfg.out)
    if cfg.backend == "exact_law":
        ex = economy.simulate_exact_law(claim, cfg.paths, cfg.seed)
        if _wants(cfg, "csv"):
            report.write_exact_csv(ex, out)
        payoff = mean_test(ex.d, ex.c0, ALPHA_3SIGMA, "terminal_payoff_mean")
        summary = {
            "config": cfg.to_dict(),
            "claim": claim.label,
            "c0": ex.c0,
            "a": ex.a,
            "s2_initial": -1.0,
            "stopped_fraction": 1.0,
            "terminal_payoff_mean": payoff.to_dict(),
            "terminal_s2_mean": float(np.mean(ex.s2_terminal)),
        }
    else:
        grid = economy.grid_for_backend(cfg.backend, cfg.steps, cfg.tau_max)
        nodes = economy.default_record_nodes(grid, cfg.record_nodes)
        ens = economy.simulate_ensemble(grid, claim, cfg.paths, cfg.seed, cfg.bridge_correction, nodes)
        if _wants(cfg, "csv"):
            report.write_ensemble_csv(ens, out)
        st = ens.stopped
        summary = {
            "config": cfg.to_dict(),
            "claim": claim.label,
            "c0": ens.c0,
            "a": ens.a,
            "s2_initial": float(ens.s2[0, 0]),
            "stopped_fraction": 1.0 - ens.unstopped_fraction,
            "unstopped_fraction": ens.unstopped_fraction,
            "terminal_payoff_mean": mean_test(ens.d, ens.c0, ALPHA_3SIGMA, "terminal_payoff_mean").to_dict(),
        }
        if cfg.backend == "euler_qv":
            tau_max = ens.qv_horizon()
            rep = binomial_tail_test(int(np.count_nonzero(~st)), ens.n_paths, analytics.hitting_tail(ens.a, tau_max), ALPHA_3SIGMA, "unstopped_fraction")
            summary["truncation"] = {"tau_max": tau_max, "hitting_tail_prediction": float(analytics.hitting_tail(ens.a, tau_max)), "test": rep.to_dict()}
    rows = [(k, v) for k, v in summary.items() if not isinstance(v, dict)]
    _emit(cfg, "summary", summary, rows, ("key", "value"))
    for k, v in rows:
        print(f"{k}: {v}")
    return EXIT_OK


def cmd_verify(cfg) -> int:
    reports, ctx = suite.run_suite(cfg)
    doc = suite.suite_document(cfg, reports, ctx)
    out = Path(cfg.out)
    if _wants(cfg, "json"):
        report.write_json(out / "verify.json", doc)
    if _wants(cfg, "csv"):
        report.write_reports_csv(out / "verify.csv", reports)
    for r in reports:
        print(r.line())
    for s in ctx.skipped:
        print(f"[SKIP] {s['criterion']}: {s['reason']}")
    summ = doc["summary"]
    print(f"{summ['n_pass']}/{summ['n_checks']} checks passed")
    return EXIT_OK if summ["all_pass"] else EXIT_FAIL


def cmd_converge(cfg) -> int:
    if cfg.backend != "euler_uniform_t":
        raise ConfigError("converge needs --backend euler_uniform_t")
    rows, fit = suite.hedge_table(cfg, economy.get_claim(cfg.claim))
    doc = {"config": cfg.to_dict(), "rows": rows, "slope": None, "band": list(suite.SLOPE_BAND)}
    code = EXIT_OK
    if fit is not None:
        lo, hi = suite.SLOPE_BAND
        ok = lo <= fit.slope <= hi
        doc["slope"] = {"value": fit.slope, "stderr": fit.stderr, "intercept": fit.intercept, "n_points": fit.n, "verdict": "pass" if ok else "fail"}
        code = EXIT_OK if ok else EXIT_FAIL
    header = ("n", "rms", "rms_stderr", "mean_error", "paths")
    _emit(cfg, "convergence", doc, [[r[k] for k in header] for r in rows], header)
    for r in rows:
        print(f"n={r['n']:>6d} rms={r['rms']:.6g} +- {r['rms_stderr']:.2g}")
    if fit is not None:
        print(f"log-log slope {fit.slope:.4f} +- {fit.stderr:.4f} ({doc['slope']['verdict']})")
    else:
        print("slope not estimated: fewer than three step counts")
    return code


def cmd_tails(cfg) -> int:
    claim = economy.get_claim(cfg.claim)
    if cfg.backend == "exact_law":
        ex = economy.simulate_exact_law(claim, cfg.paths, cfg.seed)
        minima, a, n, biased = ex.minimum, ex.a, ex.n_paths, False
    else:
        grid = economy.grid_for_backend(cfg.backend, cfg.steps, cfg.tau_max)
        ens = economy.simulate_ensemble(grid, claim, cfg.paths, cfg.seed, cfg.bridge_correction, economy.default_record_nodes(grid, cfg.record_nodes))
        minima = strategies.box_wealth_ensemble(ens).running_min[:, -1]
        a, n, biased = ens.a, ens.n_paths, True
    alpha = ALPHA_3SIGMA
    rows, docs, code = [], [], EXIT_OK
    for L in sorted(cfg.levels):
        hits = int(np.count_nonzero(minima < -L))
        oracle = float(analytics.ruin_tail(a, L))
        lo, hi = clopper_pearson(hits, n, alpha)
        if biased:
            # grid minima miss excursions between nodes, so only an excess is evidence
            verdict = "fail" if lo > oracle else "pass"
        else:
            verdict = binomial_tail_test(hits, n, oracle, alpha).verdict
        if verdict != "pass":
            code = EXIT_FAIL
        rows.append((L, hits / n, oracle, lo, hi, verdict))
        docs.append({"depth": L, "empirical": hits / n, "hits": hits, "n": n, "oracle": oracle, "ci": [lo, hi], "verdict": verdict})
    doc = {"config": cfg.to_dict(), "a": a, "alpha": alpha, "discretized_minimum": biased, "rows": docs}
    _emit(cfg, "tails", doc, rows, ("depth", "empirical", "oracle", "ci_low", "ci_high", "verdict"))
    print(f"{'L':>8} {'empirical':>10} {'oracle':>10} {'ci':>22} verdict")
    for L, p, o, lo, hi, v in rows:
        print(f"{L:8g} {p:10.5f} {o:10.5f} [{lo:.5f}, {hi:.5f}] {v}")
    if biased:
        print("note: minima taken on the grid are biased upward; the check is one-sided")
    return code


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "converge": cmd_converge, "tails": cmd_tails}


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = load_config(ns.config, _overrides(ns), statistical=ns.command != "simulate")
        set_threads(cfg.threads)
        return COMMANDS[ns.command](cfg)
    except (ConfigError, DomainError) as exc:
        print(f"negcall: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
