"""Command line entry point ``condmean-lab``.

Exit codes: 0 all checks pass, 1 some check failed, 2 config schema
violation (or bad command line), 3 unknown experiment, 4 parameter outside
the validity window of the experiment.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time

import jsonschema

from .errors import PreconditionError
from .experiments import EXPERIMENTS, resolve_params
from .reporting import write_outputs

log = logging.getLogger("condmean_lab")

EXIT_OK, EXIT_FAILED, EXIT_SCHEMA, EXIT_UNKNOWN, EXIT_PRECONDITION = 0, 1, 2, 3, 4

_number_or_list = {"oneOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"}, "minItems": 1}]}
_positive_or_list = {
    "oneOf": [
        {"type": "number", "exclusiveMinimum": 0},
        {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
    ]
}
_string_or_list = {"oneOf": [{"type": "string"}, {"type": "array", "items": {"type": "string"}, "minItems": 1}]}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["experiment"],
    "additionalProperties": False,
    "properties": {
        "experiment": {"type": "string"},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "N": {"oneOf": [{"type": "integer", "minimum": 2},
                                {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1}]},
                "ell": _positive_or_list,
                "a": {"type": "number"},
                "s": _number_or_list,
                "r": _number_or_list,
                "t": {"oneOf": [{"type": "null"}, *_number_or_list["oneOf"]]},
                "trials": {"type": "integer", "minimum": 100},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "graph": _string_or_list,
                "dist": {"oneOf": [{"enum": ["uniform", "gaussian", "exp", "truncgauss"]},
                                   {"type": "array", "minItems": 1,
                                    "items": {"enum": ["uniform", "gaussian", "exp", "truncgauss"]}}]},
                "M": {"type": "integer", "minimum": 1},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "formats": {"type": "array", "items": {"enum": ["csv", "json", "svg"]}, "uniqueItems": True},
            },
        },
    },
}


def load_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        config = json.load(fh)
    jsonschema.validate(config, CONFIG_SCHEMA)
    return config


def run_config(config: dict, seed=None, trials=None, out=None) -> int:
    """Execute one validated config; returns the process exit code."""
    name = config["experiment"]
    if name not in EXPERIMENTS:
        print(f"error: unknown experiment {name!r}; try 'condmean-lab list'", file=sys.stderr)
        return EXIT_UNKNOWN
    params = dict(config.get("params", {}))
    if seed is not None:
        params["seed"] = seed
    if trials is not None:
        params["trials"] = trials
    params = resolve_params(name, params)
    output = config.get("output", {})
    out_dir = out or output.get("dir", "results")
    formats = output.get("formats", ["csv", "json"])

    started = time.perf_counter()
    try:
        result = EXPERIMENTS[name].runner(params)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    log.info("%s finished in %.1f s", name, time.perf_counter() - started)
    for path in write_outputs(out_dir, name, params, result.rows, result.passed, formats):
        log.info("wrote %s", path)
    failed = [r for r in result.rows if not r.get("pass", True)]
    status = "PASS" if not failed else f"FAIL ({len(failed)} of {len(result.rows)} rows)"
    print(f"{name}: {status}")
    return EXIT_OK if not failed else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="condmean-lab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log timings and written files")
    # lets -v also follow the subcommand without resetting the top-level value
    verbosity = argparse.ArgumentParser(add_help=False)
    verbosity.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", parents=[verbosity], help="run the experiment described by a JSON config")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--seed", type=int)
    run_p.add_argument("--trials", type=int)
    run_p.add_argument("--out")
    sub.add_parser("list", parents=[verbosity], help="list experiment names")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "list":
        for name, exp in EXPERIMENTS.items():
            print(f"{name:24s} {exp.description}")
        return EXIT_OK
    try:
        config = load_config(args.config)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        print(f"error: config invalid at {where}: {exc.message}", file=sys.stderr)
        return EXIT_SCHEMA
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be a 64-bit unsigned integer", file=sys.stderr)
        return EXIT_SCHEMA
    if args.trials is not None and args.trials < 100:
        print("error: --trials must be at least 100", file=sys.stderr)
        return EXIT_SCHEMA
    return run_config(config, args.seed, args.trials, args.out)


if __name__ == "__main__":
    sys.exit(main())
