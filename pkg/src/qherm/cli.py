"""Command-line front end.

The CLI is a thin client of the task layer: it assembles a validated
RunConfig, executes it either in-process (default) or against a running
qherm service (--server), renders the table, and exits with

    0  success, all checks passed
    2  configuration error
    3  numeric failure or tolerance breach in a *-check task

`qherm serve` starts the HTTP service.
"""

from __future__ import annotations

import argparse
import json
import sys
import urllib.error
import urllib.request
from typing import Any

from pydantic import ValidationError

from . import __version__
from .tasks import (
    RunConfig,
    RunOutcome,
    TASKS,
    outcome_to_json_dict,
    run_task,
    table_to_csv,
)

CONFIG_EXIT = 2
NUMERIC_EXIT = 3


def _set_dotted(tree: dict[str, Any], dotted: str, raw: str) -> None:
    """Apply a --param key=value override; values parse as JSON when possible."""
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    keys = dotted.split(".")
    node = tree
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ValueError(f"cannot descend into non-mapping key {k!r}")
    node[keys[-1]] = value


def _render(outcome_table, checks, quiet: bool) -> None:
    if quiet:
        return
    cols = [c.name for c in outcome_table.columns]
    widths = [max(len(c), 12) for c in cols]
    print("  ".join(c.ljust(w) for c, w in zip(cols, widths)))
    for row in outcome_table.rows:
        cells = []
        for v, w in zip(row, widths):
            text = f"{v:.10g}" if isinstance(v, float) else str(v)
            cells.append(text.ljust(w))
        print("  ".join(cells))
    for c in checks:
        tag = "PASS" if c.passed else "FAIL"
        rel = "<" if c.comparison == "upper" else ">="
        print(f"{tag} {c.name}: {c.residual:.6g} {rel} {c.threshold:.6g}")


def _run_remote(server: str, config: RunConfig) -> tuple[Any, list, int]:
    body = json.dumps(config.model_dump()).encode()
    req = urllib.request.Request(
        server.rstrip("/") + "/run",
        data=body,
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    with urllib.request.urlopen(req) as resp:
        payload = json.loads(resp.read().decode())
    from .tasks import CheckResult, ResultTable

    table = ResultTable.model_validate(payload["table"])
    checks = [CheckResult.model_validate(c) for c in payload["checks"]]
    return table, checks, int(payload["exit_code"])


def _write_output(path: str, fmt: str, config: RunConfig, table, checks) -> None:
    if fmt == "csv":
        text = table_to_csv(table)
    else:
        outcome = RunOutcome(table=table, checks=list(checks))
        text = json.dumps(outcome_to_json_dict(config, outcome), indent=2)
    with open(path, "w") as fh:
        fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qherm", description="quasi-Hermitian oscillator toolkit"
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    for task in TASKS:
        tp = sub.add_parser(task, help=f"run the {task} task")
        tp.add_argument("--config", required=True, help="path to a JSON run config")
        tp.add_argument("--output", help="write results to this path")
        tp.add_argument("--format", choices=("csv", "json"), help="output format")
        tp.add_argument("--quiet", action="store_true", help="suppress the table")
        tp.add_argument(
            "--param",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config entry (dotted keys allowed)",
        )
        tp.add_argument("--server", help="POST the run to a qherm service URL")

    sv = sub.add_parser("serve", help="start the HTTP compute service")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8000)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    # -- assemble and validate the config --------------------------------
    try:
        with open(args.config) as fh:
            tree = json.load(fh)
        if not isinstance(tree, dict):
            raise ValueError("config root must be a JSON object")
        tree["task"] = args.command
        for override in args.param:
            if "=" not in override:
                raise ValueError(f"--param needs KEY=VALUE, got {override!r}")
            key, raw = override.split("=", 1)
            _set_dotted(tree, key, raw)
        config = RunConfig.model_validate(tree)
    except (OSError, json.JSONDecodeError, ValueError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return CONFIG_EXIT

    # -- execute ----------------------------------------------------------
    try:
        if args.server:
            table, checks, code = _run_remote(args.server, config)
        else:
            outcome = run_task(config)
            table, checks, code = outcome.table, outcome.checks, outcome.exit_code
    except urllib.error.URLError as exc:
        print(f"service error: {exc}", file=sys.stderr)
        return NUMERIC_EXIT
    except (ValueError, OverflowError, RuntimeError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return NUMERIC_EXIT

    _render(table, checks, args.quiet)
    failing = [c.name for c in checks if not c.passed]
    if failing:
        print(f"failed checks: {', '.join(failing)}", file=sys.stderr)

    out_path = args.output or config.output.path
    fmt = args.format or config.output.format
    if out_path:
        _write_output(out_path, fmt, config, table, checks)
    return code


if __name__ == "__main__":
    sys.exit(main())
