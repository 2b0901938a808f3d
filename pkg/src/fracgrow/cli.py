"""``fracgrow`` command line.

Exit codes: 0 success, 1 failed verification, 2 configuration error,
3 solver failure, 4 assumption refusal.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
import warnings

from . import __version__
from .asymptotics import REGIMES, SweepPlan, run_sweep, stability_check
from .assumptions import check_assumptions
from .config import config_hash, load_document, parse_config, serialize_config, study_options
from .diagnostics import apriori_report, residual_report
from .errors import AssumptionError, AssumptionWarning, ConfigError, StepFailure
from .io import RunManifest, dumps_json, read_trajectory_csv, write_json, write_trajectory_csv
from .scheme import simulate
from .verification import run_all

log = logging.getLogger("fracgrow")

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_SOLVER, EXIT_ASSUMPTION = 0, 1, 2, 3, 4


def _u64(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="fracgrow", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"fracgrow {__version__}")
    p.add_argument("command", choices=("simulate", "sweep", "stability", "verify", "report"))
    p.add_argument("--config", required=False, help="JSON configuration file")
    p.add_argument("--out", default="fracgrow_out", help="output directory")
    p.add_argument("--seed", type=_u64, default=None, help="overrides the config seed")
    p.add_argument("--regime", choices=REGIMES, default=None, help="sweep regime (overrides config)")
    p.add_argument("--trajectory", default=None, help="trajectory CSV for 'report'")
    p.add_argument("--workers", type=int, default=None, help="sweep processes (default FRACGROW_THREADS)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def _load(args, required=True):
    if args.config is None:
        if required:
            raise ConfigError("--config is required for this command")
        return {}, None
    doc = load_document(_read(args.config))
    return doc, parse_config(doc, seed=args.seed)


class _Run:
    def __init__(self, args, cfg, command):
        self.out = args.out
        os.makedirs(self.out, exist_ok=True)
        self.t0 = time.perf_counter()
        chk = check_assumptions(cfg).to_dict() if cfg is not None else {}
        self.manifest = RunManifest(config_hash(cfg) if cfg is not None else "", __version__, command,
                                    assumptions=chk)

    def path(self, name):
        p = os.path.join(self.out, name)
        self.manifest.add(p)
        return p

    def text(self, name, text):
        with open(self.path(name), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)

    def finish(self):
        self.manifest.wall_clock_s = time.perf_counter() - self.t0
        path = self.path("manifest.json")
        write_json(self.manifest.to_dict(), path)


def cmd_simulate(args):
    _, cfg = _load(args)
    run = _Run(args, cfg, "simulate")
    run.text("config.json", serialize_config(cfg))
    try:
        traj = simulate(cfg)
    except StepFailure as exc:
        if exc.partial is not None:
            write_trajectory_csv(exc.partial, run.path("trajectory_partial.csv"))
        run.finish()
        raise
    write_trajectory_csv(traj, run.path("trajectory.csv"))
    run.text("estimate_report.json", dumps_json(apriori_report(traj).to_dict()))
    run.text("residual_report.json", dumps_json(residual_report(traj).to_dict()))
    run.finish()
    print(f"simulated {traj.n_states - 1} steps; outputs in {args.out}")
    return EXIT_OK


def cmd_report(args):
    _, cfg = _load(args)
    if args.trajectory is None:
        raise ConfigError("report needs --trajectory PATH")
    traj = read_trajectory_csv(args.trajectory, cfg)
    run = _Run(args, cfg, "report")
    run.text("estimate_report.json", dumps_json(apriori_report(traj).to_dict()))
    run.text("residual_report.json", dumps_json(residual_report(traj).to_dict()))
    run.finish()
    print(f"reports written to {args.out}")
    return EXIT_OK


def cmd_sweep(args):
    doc, cfg = _load(args)
    opts = study_options(doc)["sweep"]
    regime = args.regime or opts["regime"]
    plan = SweepPlan(regime, opts["values"], cfg, opts["fixed"], opts["reference"])
    table = run_sweep(plan, workers=args.workers)
    run = _Run(args, cfg, f"sweep {regime}")
    run.text("sweep_table.csv", table.to_csv())
    run.text("sweep_verdict.json", dumps_json(table.verdict()))
    run.finish()
    print(table.to_csv(), end="")
    v = table.verdict()
    print(f"strictly decreasing: {v['strictly_decreasing']}; first/last ratio: {v['first_last_ratio']:.3g}")
    return EXIT_OK


def cmd_stability(args):
    doc, cfg = _load(args)
    opts = study_options(doc)["stability"]
    alpha2 = cfg.alpha if opts["alpha2"] is None else float(opts["alpha2"])
    beta2 = cfg.beta / 2 if opts["beta2"] is None else float(opts["beta2"])
    cfg2 = cfg.with_params(alpha=alpha2, beta=beta2)
    rep = stability_check(simulate(cfg), simulate(cfg2), float(opts["delta"]))
    run = _Run(args, cfg, "stability")
    lines = ["t,lhs,w_term,beta_term,margin"]
    lines += [",".join(format(v, ".17g") for v in row) for row in rep.rows()]
    run.text("stability_table.csv", "\n".join(lines) + "\n")
    summary = {"alpha1": cfg.alpha, "beta1": cfg.beta, "alpha2": alpha2, "beta2": beta2,
               "delta": rep.delta, "coefficient": rep.coefficient, "min_margin": rep.min_margin,
               "alpha_gap": rep.alpha_gap, "implied_M_hat": rep.implied_M_hat}
    run.text("stability.json", dumps_json(summary))
    run.finish()
    if rep.alpha_gap == 0:
        print(f"min margin over t_n: {rep.min_margin:.6e}")
    else:
        print(f"implied lower bound on M_hat: {rep.implied_M_hat:.6e}")
    return EXIT_OK


def cmd_verify(args):
    _, cfg = _load(args, required=False)
    results = run_all(cfg)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_VERIFY


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "stability": cmd_stability,
            "verify": cmd_verify, "report": cmd_report}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    with warnings.catch_warnings():
        warnings.simplefilter("always", AssumptionWarning)
        warnings.showwarning = lambda m, c, f, ln, file=None, line=None: log.warning("%s", m)
        try:
            return COMMANDS[args.command](args)
        except ConfigError as exc:
            print(f"configuration error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except AssumptionError as exc:
            print(f"assumption refused: {exc}", file=sys.stderr)
            return EXIT_ASSUMPTION
        except StepFailure as exc:
            print(f"solver failure: {exc}", file=sys.stderr)
            return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
