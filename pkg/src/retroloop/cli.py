"""Command line: ``retroloop validate|run|demo``.

Exit codes: 0 success, 1 diagnostics in the circuit or its options, 2 I/O
failure. If ``--out`` is not given, ``RETROLOOP_OUT`` names the output file;
otherwise results go to stdout.
"""

from __future__ import annotations

import argparse
import os
import sys
from importlib import resources

from .circuit import CircuitError, Diagnostic, SweepSpec, parse_circuit
from .runner import emit, run

EXIT_OK, EXIT_DIAGNOSTIC, EXIT_IO = 0, 1, 2
DEMOS = ("fig1a", "fig2", "fig3")
OUT_ENV = "RETROLOOP_OUT"


def bundled_circuit(name: str) -> str:
    return resources.files("retroloop").joinpath("data", f"{name}.circ").read_text(encoding="utf-8")


def _read(path: str) -> str:
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = raw[: exc.start].count(b"\n") + 1
        raise CircuitError([Diagnostic(line, 1, "file is not valid UTF-8")]) from None


def _report(source: str, err: CircuitError) -> int:
    for d in err.diagnostics:
        print(d.format(source), file=sys.stderr)
    return EXIT_DIAGNOSTIC


def _execute(source: str, text: str, args) -> int:
    try:
        spec = parse_circuit(text)
        sweep = SweepSpec.parse(args.sweep) if args.sweep else None
        table = run(spec, sweep)
    except CircuitError as err:
        return _report(source, err)
    except ValueError as exc:
        print(f"{source}: error: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTIC
    output = emit(table, args.format)
    out = args.out or os.environ.get(OUT_ENV)
    if out:
        try:
            with open(out, "w", encoding="utf-8", newline="") as fh:
                fh.write(output)
        except OSError as exc:
            print(f"error: cannot write {out}: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        sys.stdout.write(output)
    return EXIT_OK


def cmd_validate(args) -> int:
    status = EXIT_OK
    for path in args.files:
        try:
            parse_circuit(_read(path))
        except OSError as exc:
            print(f"error: cannot read {path}: {exc}", file=sys.stderr)
            status = max(status, EXIT_IO)
            continue
        except CircuitError as err:
            status = max(status, _report(path, err))
            continue
        print(f"{path}: ok")
    return status


def cmd_run(args) -> int:
    try:
        text = _read(args.file)
    except OSError as exc:
        print(f"error: cannot read {args.file}: {exc}", file=sys.stderr)
        return EXIT_IO
    except CircuitError as err:
        return _report(args.file, err)
    return _execute(args.file, text, args)


def cmd_demo(args) -> int:
    return _execute(f"{args.name}.circ", bundled_circuit(args.name), args)


def _output_options(p: argparse.ArgumentParser):
    p.add_argument("--sweep", metavar="phi=START:END:STEPS", help="sweep the phase shifter angle")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", metavar="PATH", help=f"write here instead of stdout (default: ${OUT_ENV})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="retroloop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse circuit files and report diagnostics")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run the scenario a circuit file declares")
    p.add_argument("file")
    _output_options(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("demo", help="run a bundled circuit")
    p.add_argument("name", choices=DEMOS)
    _output_options(p)
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)
