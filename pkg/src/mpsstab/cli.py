"""Command-line entry point: ``mpsstab {learn,fig2,fig3,fig4,oracle-check}``.

Exit codes: 0 success, 1 oracle mismatch or inconsistent result,
2 usage or validation error, 3 capacity error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from . import experiments as ex
from .errors import CapacityError, MpsStabError, ValidationError
from .learner import LearnerConfig, LearnResult, learn
from .mps import MpsState, random_mps, read_mps, zero_state
from .sampler import SamplerConfig

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3
BOOL_FLAGS = {"json"}


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _common(p: argparse.ArgumentParser, *, m_default: str = "256") -> None:
    p.add_argument("--config", help="key=value file mirroring these flags")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m", type=_int_list, default=_int_list(m_default), help="max branches M")
    p.add_argument("--iterations", type=int, default=5)
    p.add_argument("--depth", type=int, default=1, help="Clifford layers per modified state")
    p.add_argument("--bond-cap", type=int, default=4096)
    p.add_argument("--out", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpsstab", description="Learn stabilizer groups of MPS states.")
    sub = parser.add_subparsers(dest="command")

    for name in ("learn", "oracle-check"):
        p = sub.add_parser(name, help="learn one state" if name == "learn" else "compare the learner with brute force")
        _common(p)
        p.add_argument("--state", choices=("doped", "zero", "random", "file"), default="doped")
        p.add_argument("--n", type=int, default=8)
        p.add_argument("--nt", type=int, default=0)
        p.add_argument("--chi", type=int, default=4, help="bond dimension of --state random")
        p.add_argument("--mps-file", help="binary MPS file; implies --state file")
        p.add_argument("--patience", type=int, default=5)
        p.add_argument("--json", action="store_true", help="emit JSON instead of the text report")

    p = sub.add_parser("fig2", help="success probability versus iteration")
    _common(p)
    p.add_argument("--n", type=_int_list, default=(10,))
    p.add_argument("--nt", type=_int_list, default=(5,))
    p.add_argument("--traj", type=int, default=100)

    p = sub.add_parser("fig3", help="discovered generators versus iteration for several M")
    _common(p, m_default="4,16,64")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--nt", type=int, default=4)
    p.add_argument("--traj", type=int, default=20)

    p = sub.add_parser("fig4", help="k along Clifford + T dynamics")
    _common(p)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--tau", type=int, default=2)
    p.add_argument("--steps", type=int, default=6)
    p.add_argument("--traj", type=int, default=5)
    return parser


def config_tokens(path: str) -> list[str]:
    """Turn ``key=value`` lines into flags; ``#`` starts a comment."""
    tokens: list[str] = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line without '=': {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key == "config":
            raise ValidationError("config files cannot include other config files")
        if key in BOOL_FLAGS:
            if value.lower() in ("1", "true", "yes"):
                tokens.append(f"--{key}")
            continue
        tokens += [f"--{key}", value]
    return tokens


def _parse(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        # config values come first so explicit flags override them
        args = parser.parse_args([argv[0]] + config_tokens(args.config) + argv[1:])
    return args


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _single_state(args: argparse.Namespace) -> MpsState:
    kind = "file" if args.mps_file else args.state
    if kind == "file":
        if not args.mps_file:
            raise ValidationError("--state file needs --mps-file")
        return read_mps(args.mps_file)
    if kind == "zero":
        return zero_state(args.n)
    if kind == "random":
        return random_mps(args.n, args.chi, seed=args.seed)
    return ex.prepare_doped_state(args.n, args.nt, args.seed, bond_cap=args.bond_cap).state


def _learner_config(args: argparse.Namespace) -> LearnerConfig:
    return LearnerConfig(SamplerConfig(max_branches=args.m[0]), iterations=args.iterations,
                         modifier_depth=args.depth, patience=args.patience, seed=args.seed,
                         bond_cap=args.bond_cap)


def _render(result: LearnResult, as_json: bool) -> str:
    if as_json:
        return json.dumps(result.to_dict(), indent=2) + "\n"
    return result.report()


def _spec(args: argparse.Namespace, kind: str, **extra) -> ex.ExperimentSpec:
    return ex.ExperimentSpec(kind=kind, m=args.m, iterations=args.iterations, depth=args.depth,
                             trajectories=args.traj, seed=args.seed, bond_cap=args.bond_cap,
                             output=args.out, **extra)


def _run(args: argparse.Namespace) -> int:
    if args.command == "learn":
        result = learn(_single_state(args), _learner_config(args))
        _emit(_render(result, args.json), args.out)
        return EXIT_OK
    if args.command == "oracle-check":
        from .oracle import exact_stabilizer_group

        state = _single_state(args)
        result = learn(state, _learner_config(args))
        exact = exact_stabilizer_group(state)
        match = result.generators.same_group(exact)
        text = _render(result, args.json)
        if not args.json:
            text += f"oracle_k={exact.rank}\nmatch={int(match)}\n"
        _emit(text, args.out)
        return EXIT_OK if match else EXIT_MISMATCH
    if args.command == "fig2":
        spec = _spec(args, "fig2_success_prob", n=args.n, nt=args.nt)
        _emit(ex.to_csv(ex.FIG2_HEADER, ex.run_fig2(spec)), args.out)
        return EXIT_OK
    if args.command == "fig3":
        spec = _spec(args, "fig3_k_vs_iter", n=(args.n,), nt=(args.nt,))
        _emit(ex.to_csv(ex.FIG3_HEADER, ex.run_fig3(spec)), args.out)
        return EXIT_OK
    spec = _spec(args, "fig4_doped_dynamics", n=(args.n,), tau=args.tau, steps=args.steps)
    _emit(ex.to_csv(ex.FIG4_HEADER, ex.run_fig4(spec)), args.out)
    return EXIT_OK


def cli_main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        args = _parse(parser, argv)
    except SystemExit as exc:  # argparse reports usage errors this way
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return _run(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except MpsStabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH


def main() -> None:
    sys.exit(cli_main())
