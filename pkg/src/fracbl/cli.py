"""Command line entry point: ``fracbl <verb> ...``.

Exit codes: 0 completed, 2 gradient blow-up, 3 resolution lost,
1 configuration or runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import config as cfgmod
from . import experiments as ex
from .errors import ConfigurationError, NumericalError, ParameterDomainError
from .flux import threshold_report
from .initial_data import PRESET_HELP


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the configuration-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(ex.EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _overrides(args) -> dict:
    out = {}
    for item in args.set or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigurationError(f"--set expects section.key=value, got {item!r}")
        out[key.strip()] = value.strip()
    if args.n_nodes is not None:
        out["grid.n_nodes"] = str(args.n_nodes)
    if args.t_end is not None:
        out["time.t_end"] = str(args.t_end)
    return out


def _apply(cfg: cfgmod.SolverConfig, overrides: dict) -> cfgmod.SolverConfig:
    if not overrides:
        return cfg
    text = cfgmod.dumps(cfg)
    cp = cfgmod._parser()
    cp.read_string(text)
    for dotted, value in overrides.items():
        section, _, key = dotted.partition(".")
        if (section, key) not in cfgmod._LAYOUT:
            raise ConfigurationError(f"unknown configuration key {dotted!r}")
        cp.set(section, key, value)
    return cfgmod._from_parser(cp, "<command line>")


def _cmd_run(args) -> int:
    cfg = _apply(cfgmod.load_any(args.config), _overrides(args))
    traj, summary = ex.run(cfg, args.output)
    print(summary.to_json() if args.json else
          f"{cfg.name}: verdict={summary.verdict} t_final={summary.t_final:.6g} "
          f"max|u_x|={summary.max_grad_linf:.6g} at t={summary.max_grad_time:.6g}")
    if summary.error:
        print(f"numerical error: {summary.error}", file=sys.stderr)
    return summary.exit_code


def _cmd_sweep(args) -> int:
    text = cfgmod.preset_text(args.spec) if not os.path.isfile(args.spec) else open(args.spec).read()
    spec = cfgmod.loads_sweep(text, args.spec)
    overrides = _overrides(args)
    if overrides:
        spec = cfgmod.SweepSpec(_apply(spec.base, overrides), spec.axes, spec.workers, spec.tied)
    index = ex.sweep(spec, args.output, args.workers)
    for entry in index["points"]:
        print(f"{entry['name']}: {entry.get('verdict', 'error: ' + entry.get('error', '?'))}")
    return ex.EXIT_ERROR if any("error" in e for e in index["points"]) else 0


def _cmd_verify(args) -> int:
    report = ex.verify(args.n_nodes or 1024)
    for line in report.lines():
        print(line)
    return 0 if report.passed else ex.EXIT_ERROR


def _cmd_thresholds(args) -> int:
    rep = threshold_report(args.nu, args.m_ratio, args.alpha)
    if args.json:
        print(json.dumps(ex._clean(rep.as_dict()), indent=2, sort_keys=True))
    else:
        for key, value in rep.as_dict().items():
            print(f"{key:26s} {value}")
    return 0


def _cmd_entropy(args) -> int:
    reports = ex.entropy_check(args.function, args.alpha, args.epsilon, args.which,
                               args.n_nodes or 512, args.count, args.seed)
    passed = 0
    for i, r in enumerate(reports):
        state = "undefined" if r.holds is None else ("pass" if r.holds else "FAIL")
        passed += r.holds is True
        print(f"[{i}] {state} l1_slack={r.l1_slack:.6g} linf_slack={r.linf_slack:.6g} fisher={r.fisher:.6g}")
    print(f"{passed}/{len(reports)} pass")
    return 0 if passed == len(reports) else ex.EXIT_ERROR


def _cmd_presets(args) -> int:
    print("scenario presets:")
    for name in cfgmod.preset_names():
        kind = "sweep" if cfgmod.is_sweep_text(cfgmod.preset_text(name)) else "run"
        print(f"  {name:22s} ({kind})")
    print("initial data:")
    for name, text in PRESET_HELP.items():
        print(f"  {name:22s} {text}")
    if args.show:
        print(cfgmod.preset_text(args.show))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fracbl", description="Fractional Buckley-Leverett pseudospectral experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--output", "-o", help="output directory (default $%s or ./%s)"
                        % (ex.OUTPUT_ENV, ex.DEFAULT_OUTPUT))
        sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override one configuration value (repeatable)")
        sp.add_argument("--n-nodes", type=int)
        sp.add_argument("--t-end", type=float)

    sp = sub.add_parser("run", help="run one configuration file or shipped preset")
    sp.add_argument("config")
    sp.add_argument("--json", action="store_true", help="print the full summary")
    common(sp)
    sp.set_defaults(func=_cmd_run)

    sp = sub.add_parser("sweep", help="run a sweep file or shipped sweep preset")
    sp.add_argument("spec")
    sp.add_argument("--workers", type=int)
    common(sp)
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("verify", help="operator self-tests")
    sp.add_argument("--n-nodes", type=int)
    sp.set_defaults(func=_cmd_verify)

    sp = sub.add_parser("thresholds", help="small-data thresholds")
    sp.add_argument("--nu", type=float, default=0.5)
    sp.add_argument("--m-ratio", type=float, default=0.5)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=_cmd_thresholds)

    sp = sub.add_parser("entropy-check", help="Fisher-information inequality checks")
    sp.add_argument("function", help="initial-data name or 'random'")
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--epsilon", type=float, help="default alpha/4")
    sp.add_argument("--which", choices=("i1", "i2"), default="i1")
    sp.add_argument("--count", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n-nodes", type=int)
    sp.set_defaults(func=_cmd_entropy)

    sp = sub.add_parser("presets", help="list shipped presets")
    sp.add_argument("--show", metavar="NAME", help="print one preset file")
    sp.set_defaults(func=_cmd_presets)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, ParameterDomainError) as exc:
        print(f"fracbl: configuration error: {exc}", file=sys.stderr)
        return ex.EXIT_ERROR
    except (NumericalError, OSError) as exc:
        print(f"fracbl: error: {exc}", file=sys.stderr)
        return ex.EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
