"""Command-line entry point: ``run``, ``sweep`` and ``validate``.

Exit codes: 0 completed, 2 band limit reached, 3 blow-up, 1 bad input or
I/O failure, 64 usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, parse_config
from .runner import output_dir, run

EXIT_ERROR = 1
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load(path: str):
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _run_one(path: str) -> tuple[str, int, str]:
    try:
        cfg = _load(path)
        result, code = run(cfg, output_dir(cfg))
        return path, code, f"{result.outcome} t={result.final_state.t:.6g} " \
                           f"M={result.final_state.field.band.M} events={len(result.events)}"
    except (ConfigError, OSError) as exc:
        return path, EXIT_ERROR, f"error: {exc}"


def cmd_run(args) -> int:
    path, code, msg = _run_one(args.config)
    print(f"{path}: {msg}", file=sys.stderr if code == EXIT_ERROR else sys.stdout)
    return code


def cmd_sweep(args) -> int:
    seen: dict[Path, str] = {}
    for path in args.configs:
        try:
            out = output_dir(_load(path)).resolve()
        except (ConfigError, OSError) as exc:
            print(f"{path}: error: {exc}", file=sys.stderr)
            return EXIT_ERROR
        if out in seen:
            print(f"sweep: {path} and {seen[out]} write to the same directory {out}",
                  file=sys.stderr)
            return EXIT_ERROR
        seen[out] = path
    jobs = max(1, args.jobs)
    if jobs == 1:
        results = [_run_one(p) for p in args.configs]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, args.configs))
    for path, code, msg in results:
        print(f"{path}: {msg}")
    codes = [c for _, c, _ in results]
    if EXIT_ERROR in codes:
        return EXIT_ERROR
    return max(codes)


def cmd_validate(args) -> int:
    from .validation import SUITES, format_table, run_suites

    names = [args.suite] if args.suite else list(SUITES)
    if args.suite and args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}", file=sys.stderr)
        return EXIT_USAGE
    checks = run_suites(names)
    print(format_table(checks))
    if args.json:
        payload = json.dumps([c.to_dict() for c in checks], indent=2)
        if args.json == "-":
            print(payload)
        else:
            Path(args.json).write_text(payload + "\n", encoding="utf-8")
    return 0 if all(c.passed for c in checks) else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mzrefine", description="Flux-triggered adaptive spectral solver")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("run", help="run one configuration")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("sweep", help="run several configurations")
    p.add_argument("configs", nargs="+")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("validate", help="run the acceptance checks")
    p.add_argument("suite", nargs="?")
    p.add_argument("--json", metavar="PATH", help="also write results as JSON ('-' for stdout)")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
