"""Command-line front end: ``ybx list`` and ``ybx run``."""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import os
import re
import sys
import tempfile
from dataclasses import dataclass
from typing import Sequence

from . import __version__
from .errors import InvalidModulus, SamplingExhausted, UnknownCheck
from .identity_suite import (
    CheckReport,
    SamplePlan,
    catalog,
    convention_note,
    get_check,
    run_suite,
)
from .special_fn import CaseKind, Modulus

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
FORMATS = ("json", "csv", "text")
_NUM = r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
_TAU_RE = re.compile(rf"^\s*([+-]?(?:{_NUM}))([+-](?:{_NUM}))i\s*$")
_KINDS = {k.value: k for k in CaseKind}


class UsageError(Exception):
    pass


def parse_tau(text: str) -> complex:
    """Parse 're+imi' (both parts required, e.g. '0+1i', '0.3-0.8i')."""
    m = _TAU_RE.match(text)
    if not m:
        raise UsageError(f"bad tau {text!r}: expected the form re+imi, e.g. 0.3+0.8i")
    tau = complex(float(m.group(1)), float(m.group(2)))
    try:
        Modulus(tau)
    except InvalidModulus as exc:
        raise UsageError(str(exc)) from None
    return tau


def _split(values) -> list[str]:
    out: list[str] = []
    for v in values or []:
        out.extend(x.strip() for x in str(v).split(",") if x.strip())
    return out


@dataclass
class RunConfig:
    checks: list[str] | None = None
    Ns: tuple[int, ...] = (1, 2, 3)
    kinds: tuple[CaseKind, ...] = tuple(CaseKind)
    taus: tuple[complex, ...] = (1j, 0.3 + 0.8j)
    seed: int = 0
    samples: int | None = None
    tol: float | None = None
    report: str | None = None
    format: str = "json"

    def plan(self) -> SamplePlan:
        return SamplePlan(seed=self.seed, count=self.samples, taus=self.taus, Ns=self.Ns,
                          kinds=self.kinds)


_KEYS = ("check", "samples", "seed", "tol", "n", "case", "tau", "report", "format")


def read_config(path: str) -> dict[str, list[str]]:
    """``key = value`` lines; '#' starts a comment; repeated keys accumulate."""
    out: dict[str, list[str]] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("_", "-")
        if key not in _KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out.setdefault(key, []).append(value)
    return out


def build_config(ns: argparse.Namespace) -> RunConfig:
    merged: dict[str, list[str]] = read_config(ns.config) if ns.config else {}
    for key in _KEYS:
        val = getattr(ns, key)
        if val is None:
            continue
        merged[key] = val if isinstance(val, list) else [val]

    cfg = RunConfig()

    def one(key, conv):
        vals = merged.get(key)
        if not vals:
            return None
        try:
            return conv(vals[-1])
        except ValueError:
            raise UsageError(f"bad value for --{key}: {vals[-1]!r}") from None

    if "check" in merged:
        cfg.checks = _split(merged["check"]) or None
    if "n" in merged:
        try:
            cfg.Ns = tuple(int(x) for x in _split(merged["n"]))
        except ValueError:
            raise UsageError(f"bad value for --n: {merged['n']}") from None
        if not cfg.Ns or min(cfg.Ns) < 1:
            raise UsageError("--n needs positive integers")
    if "case" in merged:
        names = _split(merged["case"])
        bad = [x for x in names if x not in _KINDS]
        if bad or not names:
            raise UsageError(f"bad --case {bad or names}; choose from {', '.join(_KINDS)}")
        cfg.kinds = tuple(_KINDS[x] for x in names)
    if "tau" in merged:
        cfg.taus = tuple(parse_tau(x) for x in _split(merged["tau"]))
    seed = one("seed", int)
    if seed is not None:
        cfg.seed = seed
    cfg.samples = one("samples", int)
    if cfg.samples is not None and cfg.samples < 1:
        raise UsageError("--samples must be >= 1")
    cfg.tol = one("tol", float)
    if cfg.tol is not None and not cfg.tol > 0:
        raise UsageError("--tol must be positive")
    cfg.report = one("report", str)
    fmt = one("format", str)
    if fmt is not None:
        if fmt not in FORMATS:
            raise UsageError(f"bad --format {fmt!r}; choose from {', '.join(FORMATS)}")
        cfg.format = fmt
    return cfg


# --- rendering ------------------------------------------------------------------


def payload(reports: Sequence[CheckReport]) -> list[dict]:
    return [r.as_dict() for r in reports]


def render_json(reports: Sequence[CheckReport], header: dict) -> str:
    doc = {"header": header, "checks": payload(reports)}
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"


_CSV_FIELDS = ("id", "paper_eq", "N", "case", "tau_re", "tau_im", "samples", "max_residual",
               "mean_residual", "tol", "pass")


def render_csv(reports: Sequence[CheckReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_CSV_FIELDS)
    for d in payload(reports):
        tau = d["tau"] or ["", ""]
        w.writerow([d["id"], d["paper_eq"], d["N"], d["case"], tau[0], tau[1], d["samples"],
                    _num(d["max_residual"]), _num(d["mean_residual"]), d["tol"],
                    "pass" if d["pass"] else "FAIL"])
    return buf.getvalue()


def _num(x):
    return "nan" if x is None else repr(x)


def _tau_str(tau) -> str:
    return "-" if tau is None else f"{tau.real:g}{tau.imag:+g}i"


def render_text(reports: Sequence[CheckReport], note: str) -> str:
    rows = [("check", "eq", "N", "case", "tau", "n", "max resid", "mean resid", "tol", "")]
    for r in reports:
        rows.append((r.id, r.paper_eq, str(r.N), r.case, _tau_str(r.tau), str(r.samples),
                     f"{r.max_residual:.2e}", f"{r.mean_residual:.2e}", f"{r.tol:.0e}",
                     "pass" if r.passed else "FAIL"))
    widths = [max(len(row[k]) for row in rows) for k in range(len(rows[0]))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows]
    n_fail = sum(not r.passed for r in reports)
    lines.append(f"{len(reports) - n_fail}/{len(reports)} passed")
    lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".ybx-", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- commands --------------------------------------------------------------------


def cmd_list(out) -> int:
    rows = [("id", "eq", "families", "cases", "N")]
    for c in catalog():
        rows.append((c.id, c.paper_eq, ",".join(sorted(c.families)),
                     ",".join(k.value for k in c.kinds), ",".join(map(str, c.Ns))))
    widths = [max(len(r[k]) for r in rows) for k in range(len(rows[0]))]
    for r in rows:
        out.write("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n")
    return EXIT_OK


def cmd_run(cfg: RunConfig, out) -> int:
    if cfg.checks:
        for cid in cfg.checks:
            get_check(cid)
    reports = run_suite(cfg.plan(), cfg.checks, cfg.tol)
    note = convention_note()
    if cfg.format == "json":
        header = {
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "version": __version__,
            "convention_note": note,
        }
        text = render_json(reports, header)
    elif cfg.format == "csv":
        text = render_csv(reports)
    else:
        text = render_text(reports, note)
    if cfg.report:
        write_atomic(cfg.report, text)
        n_fail = sum(not r.passed for r in reports)
        out.write(f"{len(reports) - n_fail}/{len(reports)} passed; report written to "
                  f"{cfg.report}\n")
    else:
        out.write(text)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ybx", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="print the identity catalog")
    r = sub.add_parser("run", help="run identity checks")
    r.add_argument("--check", action="append", help="check id (repeatable or comma list)")
    r.add_argument("--samples", help="accepted points per grid cell")
    r.add_argument("--seed", help="base seed")
    r.add_argument("--tol", help="override every check's tolerance")
    r.add_argument("--n", action="append", help="matrix sizes, e.g. 1,2,3")
    r.add_argument("--case", action="append",
                   help="rational, trigonometric and/or elliptic")
    r.add_argument("--tau", action="append", help="modulus as re+imi, e.g. 0.3+0.8i")
    r.add_argument("--report", help="write the report here (atomically)")
    r.add_argument("--format", help="json (default), csv or text")
    r.add_argument("--config", help="file of key = value lines; flags win")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    out = sys.stdout
    try:
        if ns.command == "list":
            return cmd_list(out)
        return cmd_run(build_config(ns), out)
    except UsageError as exc:
        print(f"ybx: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnknownCheck as exc:
        print(f"ybx: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SamplingExhausted as exc:
        print(f"ybx: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
