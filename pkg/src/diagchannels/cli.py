"""Command-line interface.

Exit codes: 0 success, 1 a flagged gap or slack, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import experiments as ex
from .channels import DiagonalChannel
from .exceptions import DimensionError, DomainError, NotPSDError, ValidationError
from .purity import OptimizerConfig
from .serialization import load_channel, load_matrix

log = logging.getLogger("diagchannels")

INPUT_ERRORS = (ValidationError, DomainError, DimensionError, NotPSDError, ValueError, OSError)


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_common(sp: argparse.ArgumentParser, optimizer: bool = True) -> None:
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--format", choices=("json", "table"), default="json")
    sp.add_argument("--out", type=Path, help="write the report here instead of stdout")
    if optimizer:
        sp.add_argument("--restarts", type=int, default=20)
        sp.add_argument("--max-iters", type=int, default=2000)
        sp.add_argument("--grad-tol", type=float, default=1e-9)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diagchannels",
        description="Maximal output p-norms of quantum channels and the diagonal-channel product bound.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("nu", help="estimate the maximal output p-norm of one channel")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--channel", type=Path, help="channel JSON file")
    src.add_argument("--named", help="identity:n, dephase:n, depolarize:d, wh:d or whd (e.g. wh3)")
    sp.add_argument("--p", type=_float_list, default=[2.0])
    _add_common(sp)

    sp = sub.add_parser("mult-test", help="multiplicativity for diagonal (x) random channels")
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--p", type=_float_list, default=[1.5, 2.0, 3.0])
    sp.add_argument("--instances", type=int, default=50)
    sp.add_argument("--non-tp-diagonal", action="store_true",
                    help="do not normalize diag(C) to ones")
    _add_common(sp)

    sp = sub.add_parser("replay", help="replay the factorization certificate on instances")
    sp.add_argument("--n", type=_int_list, default=[2, 3])
    sp.add_argument("--k", type=_int_list, default=[2, 3])
    sp.add_argument("--p", type=_float_list, default=list(ex.DEFAULT_P_GRID))
    sp.add_argument("--instances", type=int, default=20)
    sp.add_argument("--phi", type=Path, help="diagonal channel JSON file")
    sp.add_argument("--psi", type=Path, help="channel JSON file for the second factor")
    sp.add_argument("--rho", type=Path, help="state matrix JSON file")
    _add_common(sp)

    sp = sub.add_parser("wh", help="Werner-Holevo multiplicativity counterexample")
    sp.add_argument("--d", type=int, default=3)
    sp.add_argument("--p", type=_float_list, default=[5.0])
    _add_common(sp)

    sp = sub.add_parser("entropy-add", help="additivity of minimal output entropy")
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--instances", type=int, default=20)
    _add_common(sp)

    sp = sub.add_parser("lt-fuzz", help="random instances of the Lieb-Thirring trace inequality")
    sp.add_argument("--dims", type=_int_list, default=[2, 3, 4])
    sp.add_argument("--p", type=_float_list, default=[1.5, 2.0, 3.0, 5.0])
    sp.add_argument("--instances", type=int, default=1000)
    _add_common(sp, optimizer=False)
    return parser


def _config(args) -> OptimizerConfig:
    return OptimizerConfig(
        restarts=args.restarts, max_iters=args.max_iters, grad_tol=args.grad_tol, seed=args.seed
    )


def run(args) -> dict:
    if args.command == "nu":
        if args.channel is not None:
            ch, source = load_channel(args.channel), str(args.channel)
        else:
            ch, source = ex.named_channel(args.named), args.named
        return ex.nu_report(ch, args.p, _config(args), source)
    if args.command == "mult-test":
        return ex.mult_test(args.n, args.k, args.p, args.instances, args.seed, _config(args),
                            diagonal_tp=not args.non_tp_diagonal)
    if args.command == "replay":
        phi = load_channel(args.phi) if args.phi else None
        if phi is not None and not isinstance(phi, DiagonalChannel):
            raise ValidationError("phi.kind", "the first factor must be a diagonal channel")
        psi = load_channel(args.psi) if args.psi else None
        rho = load_matrix(args.rho, hermitian=True) if args.rho else None
        return ex.replay(args.n, args.k, args.p, args.instances, args.seed, _config(args), phi, psi, rho)
    if args.command == "wh":
        return ex.wh_experiment(args.p, args.d, _config(args))
    if args.command == "entropy-add":
        return ex.entropy_add(args.n, args.k, args.instances, args.seed, _config(args))
    if args.command == "lt-fuzz":
        return ex.lt_fuzz(args.dims, args.p, args.instances, args.seed)
    raise AssertionError(args.command)


def _scalar(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, (list, dict)):
        return json.dumps(v) if len(json.dumps(v)) <= 60 else f"<{type(v).__name__} of {len(v)}>"
    return str(v)


def _flatten(row: dict, prefix: str = "", lists: bool = False) -> dict:
    # Nested dicts become dotted keys; lists are dropped unless asked for.
    flat = {}
    for key, val in row.items():
        if isinstance(val, dict):
            flat.update(_flatten(val, f"{prefix}{key}.", lists))
        elif (lists or not isinstance(val, list)) and val is not None:
            flat[prefix + key] = val
    return flat


def render_table(report: dict) -> str:
    lines = [f"command: {report['command']}"]
    for key, val in _flatten(report["summary"], lists=True).items():
        lines.append(f"  {key:<28} {_scalar(val)}")
    rows = [{c: _scalar(v) for c, v in _flatten(r).items()} for r in report["instances"]]
    if rows:
        cols = list(dict.fromkeys(c for r in rows for c in r))
        widths = [max(len(c), *(len(r.get(c, "")) for r in rows)) for c in cols]
        lines.append("")
        lines.append("  ".join(f"{c:>{w}}" for c, w in zip(cols, widths)))
        for r in rows:
            lines.append("  ".join(f"{r.get(c, ''):>{w}}" for c, w in zip(cols, widths)))
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        report = run(args)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(report, indent=2) + "\n" if args.format == "json" else render_table(report)
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    log.info("%s finished in %.2fs", args.command, time.perf_counter() - start)
    return 1 if report["summary"].get("failures", 0) else 0


if __name__ == "__main__":
    sys.exit(main())
