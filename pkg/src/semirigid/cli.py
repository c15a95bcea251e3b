"""Command-line runner: one subcommand per experiment suite.

    semirigid <command> [--seed N] [--out DIR] [--tol X] [--config FILE] [--<param> VALUE ...]

Per-command flags mirror the keyword parameters of the suite functions in
``semirigid.suites``; list-valued parameters take comma-separated values.
A config file holds ``key = value`` lines with the same keys as the flags
(dashes or underscores); flags given on the command line win.

Exit status: 0 when every asserted check passes, 1 when one fails, 2 on a
usage or configuration error.
"""

from __future__ import annotations

import argparse
import inspect
import json
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

from .suites import SUITES, SuiteReport


class ConfigError(ValueError):
    pass


def _tuple_of(kind: type) -> Callable[[str], tuple]:
    def parse(text: str) -> tuple:
        return tuple(kind(t) for t in text.split(",") if t.strip())

    return parse


def _param_specs(fn: Callable[..., SuiteReport]) -> dict[str, tuple[Callable[[str], Any], Any]]:
    """name -> (parser, default) for every keyword parameter of a suite."""
    specs = {}
    for p in inspect.signature(fn).parameters.values():
        d = p.default
        if isinstance(d, bool):
            parser: Callable[[str], Any] = lambda s: s.lower() in ("1", "true", "yes")
        elif isinstance(d, int):
            parser = int
        elif isinstance(d, float) or d is None:
            parser = float
        elif isinstance(d, tuple):
            parser = _tuple_of(type(d[0]) if d else float)
        else:
            parser = str
        specs[p.name] = (parser, d)
    return specs


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="semirigid", description="Run a reproducible experiment suite.")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")
    for name, fn in SUITES.items():
        sp = sub.add_parser(name, help=(fn.__doc__ or "").strip().splitlines()[0] if fn.__doc__ else None)
        sp.add_argument("--out", type=str, default=None, help="directory for the JSON report and CSV scans")
        sp.add_argument("--config", type=str, default=None, help="key = value file mirroring the flags")
        for pname, (parser, default) in _param_specs(fn).items():
            sp.add_argument(f"--{pname.replace('_', '-')}", dest=pname, type=parser, default=argparse.SUPPRESS, help=f"default: {default}")
    return ap


def read_config(path: str, allowed: set[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in allowed:
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        out[key] = value
    return out


def resolve_params(command: str, ns: argparse.Namespace) -> tuple[dict[str, Any], str | None]:
    fn = SUITES[command]
    specs = _param_specs(fn)
    params: dict[str, Any] = {}
    out = ns.out
    if ns.config:
        cfg = read_config(ns.config, set(specs) | {"out"})
        for k, v in cfg.items():
            if k == "out":
                out = out or v
                continue
            try:
                params[k] = specs[k][0](v)
            except ValueError as exc:
                raise ConfigError(f"bad value for {k}: {v!r}") from exc
    for k in specs:
        if k in vars(ns):
            params[k] = getattr(ns, k)
    return params, out


def write_artifacts(report: SuiteReport, command: str, out: str) -> list[Path]:
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    paths = [d / f"{command}.json"]
    paths[0].write_text(json.dumps(report.to_json(), sort_keys=True, indent=2) + "\n")
    for name, csv in sorted(report.scans.items()):
        p = d / f"{command}_{name}.csv"
        p.write_text(csv)
        paths.append(p)
    return paths


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    try:
        params, out = resolve_params(ns.command, ns)
    except ConfigError as exc:
        print(f"semirigid: error: {exc}", file=sys.stderr)
        return 2
    try:
        report = SUITES[ns.command](**params)
    except (ValueError, TypeError) as exc:
        print(f"semirigid: error: {exc}", file=sys.stderr)
        return 2
    for line in report.lines():
        print(line)
    n_ok = sum(c.passed for c in report.checks if c.asserted)
    n = sum(c.asserted for c in report.checks)
    print(f"{ns.command}: {n_ok}/{n} checks passed in {report.runtime:.1f} s")
    if out:
        for p in write_artifacts(report, ns.command, out):
            print(f"wrote {p}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
