"""Command line front end.

One subcommand per experiment family.  Results print as CSV or JSON to
stdout or to --out; a JSON config file can predefine any flag, with
explicit flags winning.  Exit status: 0 on success, 2 when a gated check
fails, 1 on usage errors or bad inputs.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import bootstrap as boot
from . import harness, interface1d, meanfield
from .events import EventSource
from .lattice import interface_density, run, sample_product_measure
from .payoffs import (DerivedParams, NeighborhoodSpec, PayoffMatrix,
                      derive_params, parse_payoffs)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here reserves 2 for
    failed gates, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _sides_arg(text) -> tuple[int, ...]:
    if isinstance(text, int):
        return (text,)
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    return tuple(int(s) for s in str(text).replace(",", " ").split())


def _word_arg(text) -> tuple[int, ...]:
    word = tuple(int(c) for c in str(text))
    if any(c not in (1, 2) for c in word):
        raise ValueError("strategy words use digits 1 and 2 only")
    return word


def _exact(value) -> Fraction:
    # exact rationals from CLI strings and from JSON numbers alike;
    # floats go through their decimal text so 0.3 means 3/10
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


def build_parser() -> _Parser:
    top = _Parser(prog="evolattice",
                  description="lattice imitation dynamics experiments")
    top.add_argument("--config", help="JSON file with flag defaults")
    sub = top.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def out_flags(p, default_format="csv"):
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"),
                       default=default_format)

    def geometry_flags(p, d=1, M=1, sides="64"):
        p.add_argument("--d", type=int, default=d)
        p.add_argument("--M", type=int, default=M)
        p.add_argument("--sides", default=sides,
                       help="comma separated extents; one value repeats")

    p = sub.add_parser("simulate", help="seeded torus run")
    p.add_argument("--payoffs", required=True)
    geometry_flags(p)
    p.add_argument("--rho", default="1/2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=float, default=100.0)
    p.add_argument("--sample-dt", type=float, default=None)
    p.add_argument("--floor", type=float, default=None,
                   help="d=1 only: emit the coexistence series and verdict "
                        "against this minority floor")
    out_flags(p)

    p = sub.add_parser("meanfield", help="well-mixed classification and flow")
    p.add_argument("--payoffs")
    p.add_argument("--a1")
    p.add_argument("--a2")
    p.add_argument("--u0", default="1/2")
    p.add_argument("--t-max", type=float, default=50.0)
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--displayed-orientation", action="store_true")
    out_flags(p)

    p = sub.add_parser("phase-sweep", help="outcome grid over (a11, a22)")
    p.add_argument("--a12", required=True)
    p.add_argument("--a21", required=True)
    p.add_argument("--min", dest="grid_min", default="-2")
    p.add_argument("--max", dest="grid_max", default="2")
    p.add_argument("--steps", type=int, default=9)
    geometry_flags(p)
    p.add_argument("--rho", default="1/2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--horizon", type=float, default=100.0)
    p.add_argument("--include-boundary", action="store_true")
    out_flags(p)

    p = sub.add_parser("front", help="half-line front hitting runs")
    p.add_argument("--payoffs", required=True)
    p.add_argument("--level", type=int, default=20)
    p.add_argument("--exterior", choices=interface1d.EXTERIORS,
                   default="all-2")
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--margin", type=int, default=240)
    p.add_argument("--bound", type=float, default=None,
                   help="gate: fail when the estimate drops below "
                        "bound - 3*sigma")
    out_flags(p)

    p = sub.add_parser("interval", help="protected-block survival runs")
    p.add_argument("--payoffs", required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--level", type=int, default=20)
    p.add_argument("--exterior", choices=interface1d.EXTERIORS,
                   default="all-2")
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--margin", type=int, default=240)
    p.add_argument("--bound", type=float, default=None)
    out_flags(p)

    p = sub.add_parser("bootstrap", help="monotone growth from seeded sites")
    p.add_argument("--rho", default="1/10")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--sides", default="40,40")
    p.add_argument("--replicates", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    out_flags(p)

    p = sub.add_parser("patterns", help="stability reports and chain search")
    p.add_argument("--payoffs", required=True)
    p.add_argument("--word")
    p.add_argument("--left", default="22")
    p.add_argument("--right", default="22")
    p.add_argument("--chain-length", type=int, default=None)
    p.add_argument("--claims", action="store_true")
    out_flags(p, default_format="json")

    p = sub.add_parser("blocks", help="renormalization block diagnostics")
    p.add_argument("--payoffs", required=True)
    p.add_argument("--M", type=int, default=16)
    p.add_argument("--T", type=float, default=None,
                   help="horizon; omitted = the calibrated nine-heads "
                        "percentile (heavy)")
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rho", default="1/2")
    out_flags(p)

    p = sub.add_parser("fluctuate", help="open-region interval step statistics")
    p.add_argument("--payoffs", required=True)
    p.add_argument("--events", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--L", type=int, default=900)
    p.add_argument("--start-length", type=int, default=3)
    out_flags(p)

    return top


def _emit(args, rows, meta) -> None:
    text = harness.render(rows, args.format, meta)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _payoffs(args) -> PayoffMatrix:
    p = args.payoffs
    return p if isinstance(p, PayoffMatrix) else parse_payoffs(str(p))


def _geometry(args) -> tuple[NeighborhoodSpec, tuple[int, ...]]:
    ns = NeighborhoodSpec(d=args.d, M=args.M)
    sides = _sides_arg(args.sides)
    if len(sides) == 1 and ns.d > 1:
        sides = sides * ns.d
    return ns, sides


def _gate(estimate: float, bound: float, trials: int) -> bool:
    sigma = math.sqrt(bound * (1 - bound) / trials) if 0 < bound < 1 else 0.0
    return estimate >= bound - 3 * sigma


def _cmd_simulate(args) -> int:
    p = _payoffs(args)
    ns, sides = _geometry(args)
    rho = _exact(args.rho)
    if args.floor is not None:
        if ns.d != 1:
            raise ValueError("--floor needs d=1")
        res = harness.coexistence_run(
            p, ns.M, sides[0], rho=rho, horizon=args.horizon, seed=args.seed,
            sample_dt=args.sample_dt or 5.0, floor=args.floor)
        rows = [{"t": t, "minority_fraction": m, "interface_density": k}
                for t, m, k in zip(res["t"], res["minority_fraction"],
                                   res["interface_density"])]
        meta = {k: v for k, v in res.items()
                if k not in ("t", "minority_fraction", "interface_density")}
        _emit(args, rows, meta)
        return 0
    init_seed, event_seed = harness.split_seed(args.seed, 0)
    cfg0 = sample_product_measure(rho, ns, sides, init_seed)
    es = EventSource(event_seed, cfg0.num_sites)
    traj = run(cfg0, es, p, args.horizon, sample_dt=args.sample_dt,
               record_log=False)
    s = traj.samples
    rows = [{"t": float(s["t"][i]), "n_ones": int(s["n_ones"][i]),
             "minority_fraction": float(s["minority_fraction"][i])}
            for i in range(len(s["t"]))]
    meta = {"payoffs": p.as_text(), "d": ns.d, "M": ns.M,
            "sides": "x".join(str(v) for v in sides), "rho": rho,
            "seed": args.seed, "status": traj.status, "t_end": traj.t_end,
            "final_n_ones": traj.final.n_ones()}
    if ns.d == 1:
        meta["final_interface_density"] = float(interface_density(traj.final))
    _emit(args, rows, meta)
    return 0


def _cmd_meanfield(args) -> int:
    if args.payoffs:
        dp = derive_params(_payoffs(args))
    elif args.a1 is not None and args.a2 is not None:
        dp = DerivedParams(a1=_exact(args.a1), a2=_exact(args.a2))
    else:
        raise ValueError("give --payoffs or both --a1 and --a2")
    u0 = _exact(args.u0)
    flag = args.displayed_orientation
    outcome = meanfield.classify_outcome(dp, u0, displayed_orientation=flag)
    fp = meanfield.fixed_points(dp, displayed_orientation=flag)
    series = meanfield.solve_series(dp, u0, args.t_max, args.steps,
                                    displayed_orientation=flag)
    rows = [{"t": t, "u1": u} for t, u in series]
    meta = {"a1": dp.a1, "a2": dp.a2, "u0": u0, "kind": outcome.kind,
            "limit": outcome.limit, "boundary": outcome.boundary,
            "interior_fixed_point": fp.interior,
            "interior_stable": fp.interior_stable,
            "displayed_orientation": flag}
    _emit(args, rows, meta)
    return 0


def _cmd_phase_sweep(args) -> int:
    ns, sides = _geometry(args)
    lo, hi = _exact(args.grid_min), _exact(args.grid_max)
    n = args.steps
    if n < 2 or hi <= lo:
        raise ValueError("need steps >= 2 and max > min")
    values = [lo + (hi - lo) * k / (n - 1) for k in range(n)]
    rows = harness.phase_sweep(
        values, values, a12=_exact(args.a12), a21=_exact(args.a21), ns=ns,
        sides=sides, rho=_exact(args.rho), horizon=args.horizon,
        replicates=args.replicates, base_seed=args.seed,
        skip_boundary=not args.include_boundary)
    meta = {"a12": _exact(args.a12), "a21": _exact(args.a21),
            "grid": f"{lo}..{hi}({n})", "d": ns.d, "M": ns.M,
            "rho": _exact(args.rho), "horizon": args.horizon,
            "replicates": args.replicates, "seed": args.seed}
    _emit(args, rows, meta)
    return 0


def _cmd_front(args) -> int:
    p = _payoffs(args)
    rows = []
    wins = 0
    for i in range(args.replicates):
        seed_i = harness.split_seed(args.seed, i)[1]
        res = interface1d.run_hitting(p, args.level, seed_i,
                                      exterior=args.exterior,
                                      margin=args.margin)
        wins += res.outcome == "reached-n-first"
        rows.append({"replicate": i, "outcome": res.outcome, "t": res.t,
                     "events": res.events, "flips": res.flips,
                     "seed": seed_i})
    rec = harness.EstimateRecord("reached-level-first", wins, args.replicates)
    meta = {"payoffs": p.as_text(), "level": args.level,
            "exterior": args.exterior, "seed": args.seed, **rec.as_row()}
    if args.bound is not None:
        meta["bound"] = args.bound
        meta["gate_passed"] = _gate(rec.estimate, args.bound, rec.trials)
    _emit(args, rows, meta)
    return 0 if args.bound is None or meta["gate_passed"] else 2


def _cmd_interval(args) -> int:
    p = _payoffs(args)
    rows = []
    wins = 0
    for i in range(args.replicates):
        seed_i = harness.split_seed(args.seed, i)[1]
        res = interface1d.interval_survival(p, args.m, args.level, seed_i,
                                            exterior=args.exterior,
                                            margin=args.margin)
        wins += res.outcome == "intact-escape"
        rows.append({"replicate": i, "outcome": res.outcome, "t": res.t,
                     "events": res.events, "flips": res.flips,
                     "seed": seed_i})
    rec = harness.EstimateRecord("intact-escape", wins, args.replicates)
    meta = {"payoffs": p.as_text(), "m": args.m, "level": args.level,
            "exterior": args.exterior, "seed": args.seed, **rec.as_row()}
    if args.bound is not None:
        meta["bound"] = args.bound
        meta["gate_passed"] = _gate(rec.estimate, args.bound, rec.trials)
    _emit(args, rows, meta)
    return 0 if args.bound is None or meta["gate_passed"] else 2


def _cmd_bootstrap(args) -> int:
    rho = float(_exact(args.rho))
    sides = _sides_arg(args.sides)
    if len(sides) == 1 and args.d > 1:
        sides = sides * args.d
    rows = []
    filled_count = 0
    for i in range(args.replicates):
        seed_i = harness.split_seed(args.seed, i)[0]
        rng = np.random.default_rng(seed_i)
        field = (rng.random(sides) < rho).astype(np.uint8)
        limit, steps = boot.bootstrap_limit(field)
        filled = bool(limit.all())
        filled_count += filled
        rows.append({"replicate": i, "seed": seed_i,
                     "initial_count": int(field.sum()),
                     "final_count": int(limit.sum()),
                     "steps": steps, "filled": filled})
    rec = harness.EstimateRecord("filled", filled_count, args.replicates)
    meta = {"rho": _exact(args.rho),
            "sides": "x".join(str(v) for v in sides), "seed": args.seed,
            **rec.as_row()}
    _emit(args, rows, meta)
    return 0


def _cmd_patterns(args) -> int:
    p = _payoffs(args)
    rows = []
    if args.word:
        rows.append(interface1d.pattern_report(
            _word_arg(args.word), p, left=_word_arg(args.left),
            right=_word_arg(args.right)))
    if args.chain_length is not None:
        res = interface1d.absorbing_chain_verify(args.chain_length, p)
        rows.append({"chain_length": res.length, "ok": res.ok,
                     "n_states": res.n_states, "n_stable": res.n_stable,
                     "counterexample": list(res.counterexample)
                     if res.counterexample else None})
    if args.claims:
        rows.extend(interface1d.stability_claims(p))
        rows.append(interface1d.forbidden_transition_check(p))
    if not rows:
        raise ValueError("give --word, --chain-length, or --claims")
    meta = {"payoffs": p.as_text(),
            "fixation_case": interface1d.fixation_case(p)}
    _emit(args, rows, meta)
    return 0


def _cmd_blocks(args) -> int:
    p = _payoffs(args)
    report = harness.block_event_diagnostics(
        p, args.M, T=args.T, replicates=args.replicates,
        base_seed=args.seed, rho=_exact(args.rho))
    rows = report.pop("records")
    report["conditioning"] = json.dumps(report["conditioning"])
    _emit(args, rows, report)
    return 0


def _cmd_fluctuate(args) -> int:
    p = _payoffs(args)
    res = harness.fluctuation_probe(p, events=args.events, seed=args.seed,
                                    L=args.L, start_length=args.start_length)
    ok = res["shrinks_at_length_2"] == 0 and res["p_value"] > 0.01
    res["gate_passed"] = ok
    _emit(args, [res], {"payoffs": p.as_text()})
    return 0 if ok else 2


_COMMANDS = {
    "simulate": _cmd_simulate,
    "meanfield": _cmd_meanfield,
    "phase-sweep": _cmd_phase_sweep,
    "front": _cmd_front,
    "interval": _cmd_interval,
    "bootstrap": _cmd_bootstrap,
    "patterns": _cmd_patterns,
    "blocks": _cmd_blocks,
    "fluctuate": _cmd_fluctuate,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    parser = build_parser()
    if known.config:
        try:
            with open(known.config, encoding="utf-8") as fh:
                defaults = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            sys.stderr.write(f"evolattice: bad config: {exc}\n")
            return 1
        if not isinstance(defaults, dict):
            sys.stderr.write("evolattice: config must be a JSON object\n")
            return 1
        named = {str(k).replace("-", "_"): v for k, v in defaults.items()}
        # subparsers parse into a fresh namespace, so defaults must be
        # installed on each of them, and a default only satisfies the
        # parser if the flag stops being mandatory
        parser.set_defaults(**named)
        for action in parser._actions:
            if isinstance(action, argparse._SubParsersAction):
                for sp in action.choices.values():
                    sp.set_defaults(**named)
                    for act in sp._actions:
                        if act.required and act.dest in named:
                            act.required = False
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, RuntimeError) as exc:
        sys.stderr.write(f"evolattice {args.command}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
