"""``slotless`` command-line front end.

Exit codes: 0 success, 1 usage error, 2 infeasible request, 3 I/O error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import sys
import warnings
from dataclasses import replace
from typing import Iterator, Sequence, TextIO

from .baselines import eta_grid, gain_table, granularity_study, write_gain_csv
from .errors import GuardExceedsWindow, InfeasibleEta, RangesEmpty, SlotlessError
from .model import (
    RadioParams,
    config_to_json,
    format_duration,
    parse_duration,
    radio_from_json,
    solution_to_json,
)
from .optimizer import (
    BEST,
    OptimizerRequest,
    apply_skew_guards,
    derive,
    eta_limits,
    one_way_split,
)
from .simulator import (
    TIMEOUT,
    collision_affected_fraction,
    monte_carlo,
    sweep_offsets,
    write_cdf_csv,
    write_outcomes_jsonl,
)

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _duration(text: str) -> int:
    try:
        return parse_duration(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _fraction(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"{text} is not in (0, 1)")
    return value


def _variant(text: str) -> str:
    up = text.upper()
    if up not in ("PI0M", "PIK1P", "PIK2P", BEST):
        raise argparse.ArgumentTypeError("variant must be PI0M, PIK1P, PIK2P or best")
    return up


def _load_radio(args: argparse.Namespace) -> RadioParams:
    if args.radio_file:
        with open(args.radio_file, encoding="utf-8") as fh:
            radio = radio_from_json(json.load(fh))
    else:
        radio = RadioParams()
    if getattr(args, "skew_guard", None) is not None:
        radio = replace(radio, skew_ppm=args.skew_guard)
    return radio


@contextlib.contextmanager
def _output(path: str | None) -> Iterator[TextIO]:
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _solve(args: argparse.Namespace, radio: RadioParams):
    req = OptimizerRequest(eta_target=args.eta, radio=radio, eps=args.eps, variant=args.variant)
    sol = derive(req)
    if getattr(args, "skew_guard", None) is not None:
        sol = apply_skew_guards(sol, radio)
    return sol


# --------------------------------------------------------------------------
# commands

def cmd_optimize(args: argparse.Namespace) -> int:
    radio = _load_radio(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sol = _solve(args, radio)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    adv, scan = one_way_split(sol)
    if args.json:
        payload = {
            "solution": solution_to_json(sol),
            "one_way": {"advertiser": config_to_json(adv), "scanner": config_to_json(scan)},
            "eta_max": eta_limits(sol.variant, radio).eta_max,
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
        return EXIT_OK
    cfg = sol.config
    lines = [
        f"variant      {sol.variant.value}",
        f"k, M         {sol.k}, {sol.M}",
        f"T_a          {cfg.t_a} ns ({format_duration(cfg.t_a)})",
        f"T_s          {cfg.t_s} ns ({format_duration(cfg.t_s)})",
        f"d_s          {cfg.d_s} ns ({format_duration(cfg.d_s)})",
        f"d_a          {cfg.d_a} ns",
        f"eta          target {sol.eta_target:.6%}, achieved {sol.eta_achieved:.6%}",
        f"d_m          {sol.d_m} ns ({format_duration(sol.d_m)})",
        f"eps          {sol.eps} ns, eps_Ta {sol.eps_ta} ns",
        f"clamped      {', '.join(sol.clamped) or 'none'}",
        f"one-way      advertiser T_a={adv.t_a} ns; scanner T_s={scan.t_s} ns, d_s={scan.d_s} ns",
    ]
    print("\n".join(lines))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    radio = _load_radio(args)
    grid = eta_grid(args.eta_min, args.eta_max, args.step)
    usable = []
    for eta in grid:
        try:
            derive(OptimizerRequest(eta_target=eta, radio=radio))
        except (InfeasibleEta, RangesEmpty) as exc:
            if not args.lenient:
                raise
            print(f"warning: skipping eta={eta}: {exc}", file=sys.stderr)
            continue
        usable.append(eta)
    table = gain_table(usable, radio=radio, d_sl=args.dsl, guarded=not args.no_guarded,
                       searchlight_literal=args.searchlight_literal)
    with _output(args.out) as fh:
        write_gain_csv(table, fh)
    return EXIT_OK


def cmd_cdf(args: argparse.Namespace) -> int:
    radio = _load_radio(args)
    sol = _solve(args, radio)
    curve = sweep_offsets(sol.config, step=args.step, exact=not args.grid)
    with _output(args.out) as fh:
        write_cdf_csv(curve, fh)
    print(
        f"d_m={sol.d_m} ns sweep_max={curve.worst_case} ns mean={curve.mean:.0f} ns "
        f"mean/d_m={curve.mean / sol.d_m:.4f}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    radio = _load_radio(args)
    sol = _solve(args, radio)
    outcomes = monte_carlo(
        sol.config, trials=args.trials, seed=args.seed, collisions=args.collisions,
        half_duplex=not args.full_duplex, skew_ppm_range=args.skew_ppm, horizon=args.horizon,
        workers=args.workers,
    )
    with _output(args.out) as fh:
        write_outcomes_jsonl(outcomes, fh)
    timeouts = sum(1 for o in outcomes if o.latency is TIMEOUT)
    print(
        f"trials={len(outcomes)} collision_affected={collision_affected_fraction(outcomes):.4f} "
        f"timeouts={timeouts} d_m={sol.d_m} ns",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_granularity(args: argparse.Namespace) -> int:
    radio = _load_radio(args)
    if args.min == args.max:
        targets = [args.min]
    else:
        targets = eta_grid(args.min, args.max, args.step)
    pi, nihao = granularity_study(args.min, args.max, args.step, radio=radio, d_sl=args.dsl)
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["family", "eta_target", "eta"])
        for t, e in zip(targets, pi):
            w.writerow(["PI_KM_OPT", repr(t), repr(e)])
        for e in nihao:
            w.writerow(["G_NIHAO", "", repr(e)])
    print(f"slotless points={len(pi)} G-Nihao distinct={len(nihao)}", file=sys.stderr)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser

def _add_radio(p: argparse.ArgumentParser) -> None:
    p.add_argument("--radio-file", help="JSON radio profile (durations in ns)")


def _add_solution(p: argparse.ArgumentParser, eta_required: bool = True) -> None:
    p.add_argument("--eta", type=_fraction, required=eta_required, help="target duty-cycle in (0, 1)")
    p.add_argument("--variant", type=_variant, default=BEST, help="PI0M, PIK1P, PIK2P or best")
    p.add_argument("--eps", type=_duration, default=None, help="T_s guard, e.g. 30518ns")
    p.add_argument("--skew-guard", type=float, default=None, metavar="PPM",
                   help="apply clock-skew guards for this crystal accuracy")
    _add_radio(p)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slotless", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("optimize", help="derive optimal parameters for a duty-cycle")
    _add_solution(p)
    p.add_argument("--json", action="store_true", help="emit JSON")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("compare", help="gain table against slotted baselines (CSV)")
    p.add_argument("--eta-min", type=_fraction, default=0.01)
    p.add_argument("--eta-max", type=_fraction, default=0.20)
    p.add_argument("--step", type=float, default=0.001)
    p.add_argument("--dsl", type=_duration, default=10_000_000, help="slot length, e.g. 10ms")
    p.add_argument("--out", default=None)
    p.add_argument("--lenient", action="store_true", help="skip infeasible grid points")
    p.add_argument("--no-guarded", action="store_true", help="omit skew-guarded columns")
    p.add_argument("--searchlight-literal", action="store_true",
                   help="use the literal one-period Searchlight entry")
    _add_radio(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("cdf", help="latency CDF over all initial offsets (CSV)")
    _add_solution(p)
    p.add_argument("--step", type=_duration, default=1_000, help="grid step, e.g. 1us")
    p.add_argument("--grid", action="store_true", help="plain grid instead of exact pieces")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_cdf)

    p = sub.add_parser("simulate", help="Monte-Carlo pair simulation (JSON lines)")
    _add_solution(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--collisions", action="store_true", help="model packet collisions")
    p.add_argument("--full-duplex", action="store_true",
                   help="let a device receive while it transmits")
    p.add_argument("--skew-ppm", type=float, default=0.0, help="per-device skew drawn from +-PPM")
    p.add_argument("--horizon", type=_duration, default=None, help="timeout, e.g. 30s")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("granularity", help="realizable duty-cycles (CSV)")
    p.add_argument("--min", type=_fraction, default=0.001)
    p.add_argument("--max", type=_fraction, default=0.2)
    p.add_argument("--step", type=float, default=0.0005)
    p.add_argument("--dsl", type=_duration, default=10_000_000)
    p.add_argument("--out", default=None)
    _add_radio(p)
    p.set_defaults(func=cmd_granularity)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InfeasibleEta, RangesEmpty, GuardExceedsWindow) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SlotlessError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
