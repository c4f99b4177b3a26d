"""Command-line interface: ``sbls score|validate|synth|explain``.

Reports go to stdout (or ``--out``), diagnostics to stderr. Exit status is
0 on success, 2 for invalid input, 1 for unexpected failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .data import (
    EvaluationConfig,
    join,
    load_label_table,
    load_schema,
    load_score_table,
    split_score_arg,
)
from .errors import ConfigError, SBLSError
from .pipeline import evaluate_files
from .report import emit_report, load_report
from .subgroup import enumerate_subgroups, grouping_levels, heatmap_csv, key_str
from .synth import generate, load_spec

log = logging.getLogger("sbls")

CONFIG_ENV = "SBLS_CONFIG"
EXIT_OK, EXIT_INTERNAL, EXIT_INVALID = 0, 1, 2
MODES = {"soft": "soft_scores", "hard": "hard_predictions"}


def _split_list(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _add_input_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--schema", type=Path, help="schema JSON file")
    p.add_argument("--labels", type=Path, help="label CSV file")
    p.add_argument("--scores", action="append", default=[], metavar="[ATTR=]PATH",
                   help="score CSV for one attribute (repeatable)")
    p.add_argument("--groups", type=_split_list, metavar="F1,F2",
                   help="label fields defining subgroups (default: all schema attributes)")
    p.add_argument("--min-subgroup", type=int, help="minimum subgroup size (default 10)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sbls", description="Soft Biometric Leakage Score")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="compute SBLS for one or more systems")
    _add_input_args(p)
    p.add_argument("--system", action="append", default=[], metavar="NAME=DIR",
                   help="score a system whose directory holds <attribute>.csv files (repeatable)")
    p.add_argument("--name", default="system", help="system name when --scores is used")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--mode", choices=sorted(MODES))
    p.add_argument("--config", type=Path,
                   help=f"JSON config file (default: ${CONFIG_ENV} if set)")
    p.add_argument("--subgroup-levels", choices=["all", "full"], default="all",
                   help="'all' scores every subset of the grouping fields, "
                        "'full' only the complete intersection")
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.add_argument("--out", type=Path, help="write the report here instead of stdout")
    p.add_argument("--heatmap", type=Path,
                   help="write subgroup heatmap CSV (one file per system: PATH_<name>.csv "
                        "when several systems are scored)")

    p = sub.add_parser("validate", help="check input files without scoring")
    _add_input_args(p)

    p = sub.add_parser("synth", help="generate a synthetic dataset from a JSON spec")
    p.add_argument("spec", type=Path)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the spec's seed")

    p = sub.add_parser("explain", help="trace every number in a JSON report")
    p.add_argument("report", type=Path)
    p.add_argument("--full", action="store_true", help="print full-precision values")
    return parser


# -- score -------------------------------------------------------------------

def _load_config(args) -> EvaluationConfig:
    values: dict = {}
    path = args.config or (Path(os.environ[CONFIG_ENV]) if os.environ.get(CONFIG_ENV) else None)
    if path is not None:
        try:
            values.update(json.loads(path.read_text(encoding="utf-8")))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}") from None
        if not isinstance(values, dict):
            raise ConfigError("config must be a JSON object", str(path))
    for flag, key in (("alpha", "alpha"), ("beta", "beta"), ("gamma", "gamma"),
                      ("omega", "omega"), ("min_subgroup", "min_subgroup_size")):
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = v
    if getattr(args, "mode", None):
        values["score_mode"] = MODES[args.mode]
    return EvaluationConfig.from_json(values)


def _systems(args) -> list[tuple[str, Path, Path, list]]:
    """(name, schema path, label path, score args) per system."""
    if args.system and args.scores:
        raise ConfigError("use either --scores or --system, not both")
    if not args.system:
        if not args.scores:
            raise ConfigError("no score files given (--scores or --system)")
        if args.schema is None or args.labels is None:
            raise ConfigError("--schema and --labels are required with --scores")
        return [(args.name, args.schema, args.labels, list(args.scores))]
    out = []
    seen = set()
    for item in args.system:
        name, sep, d = item.partition("=")
        if not sep or not name or not d:
            raise ConfigError(f"--system expects NAME=DIR, got {item!r}")
        if name in seen:
            raise ConfigError(f"system {name!r} given twice")
        seen.add(name)
        d = Path(d)
        schema_path = args.schema or d / "schema.json"
        label_path = args.labels or d / "labels.csv"
        schema = load_schema(schema_path)
        scores = [(a, d / f"{a}.csv") for a in schema.names if (d / f"{a}.csv").exists()]
        if not scores:
            raise ConfigError(f"no <attribute>.csv score files in {d}")
        out.append((name, schema_path, label_path, scores))
    return out


def cmd_score(args) -> int:
    config = _load_config(args)
    reports = []
    for name, schema_path, label_path, scores in _systems(args):
        log.info("scoring %s", name)
        reports.append(evaluate_files(schema_path, scores, label_path, config, args.groups,
                                      name, args.subgroup_levels))
    text = emit_report(reports, args.format)
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.heatmap:
        for r in reports:
            path = args.heatmap
            if len(reports) > 1:
                path = path.with_name(f"{path.stem}_{r.name}{path.suffix or '.csv'}")
            path.write_text(heatmap_csv(r.subgroups, [a.name for a in r.attributes]),
                            encoding="utf-8")
    return EXIT_OK


# -- validate ----------------------------------------------------------------

def cmd_validate(args) -> int:
    if args.schema is None or args.labels is None or not args.scores:
        raise ConfigError("validate needs --schema, --labels and at least one --scores")
    min_size = args.min_subgroup if args.min_subgroup is not None else \
        EvaluationConfig().min_subgroup_size
    schema = load_schema(args.schema)
    findings: list[SBLSError] = []
    labels = load_label_table(args.labels, schema, findings=findings)
    tables = []
    for item in args.scores:
        name, path = split_score_arg(item)
        try:
            tables.append(load_score_table(path, schema, attribute=name, findings=findings))
        except SBLSError as exc:
            findings.append(exc)
    joined = []
    for t in sorted(tables, key=lambda t: schema.names.index(t.attribute)):
        try:
            joined.append(join(t, labels, schema))
        except SBLSError as exc:
            findings.append(exc)

    if findings:
        print(f"FAILED: {len(findings)} finding(s)")
        for f in findings:
            print(f"  {f} [{type(f).__name__}]")
    else:
        print("OK")
    for j in joined:
        print(f"attribute {j.attribute.name}: N={j.n} (excluded: {j.excluded_no_label} "
              f"without label, {j.excluded_no_score} without score)")

    groups = args.groups if args.groups is not None else \
        [n for n in schema.names if n in labels.fields]
    warnings = 0
    for combo in grouping_levels(groups):
        try:
            cells = enumerate_subgroups(labels, combo, min_size, schema)
        except SBLSError as exc:
            print(f"  {exc} [{type(exc).__name__}]")
            findings.append(exc)
            break
        for cell in cells:
            status = f"warning: n={cell.n} < {min_size}" if cell.excluded else "ok"
            warnings += cell.excluded
            print(f"subgroup {key_str(cell.key)}: n={cell.n} {status}")
    if warnings:
        print(f"{warnings} subgroup(s) below n={min_size} will be excluded", file=sys.stderr)
    return EXIT_INVALID if findings else EXIT_OK


# -- synth -------------------------------------------------------------------

def cmd_synth(args) -> int:
    spec = load_spec(args.spec)
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
    for name, digest in generate(spec, args.out):
        print(f"{digest}  {args.out / name}")
    return EXIT_OK


# -- explain -----------------------------------------------------------------

def _fmt(full: bool):
    return (lambda x: "-" if x is None else repr(x)) if full else \
        (lambda x: "-" if x is None else f"{x:.3f}")


def explain_text(reports, full: bool = False) -> str:
    f = _fmt(full)
    out = []
    for r in reports:
        c = r.config
        out.append(f"System {r.name}")
        out.append(f"  config: alpha={c.alpha} beta={c.beta} gamma={c.gamma} omega={c.omega} "
                   f"min_subgroup_size={c.min_subgroup_size} mode={c.score_mode}")
        metric = "mAUC*" if c.score_mode == "soft_scores" else "balanced accuracy*"
        chance = "0.5" if c.score_mode == "soft_scores" else "1/K"
        out.append(f"  P_attr = 1 - mean over attributes of max(0, {metric} - {chance}) "
                   f"/ (1 - {chance}) = {f(r.p_attr)}")
        for a in r.attributes:
            al = a.alignment
            out.append(f"    {a.name}: N={a.n}, {metric} = {f(al.aligned_mean)} "
                       f"(identity {f(al.identity_mean)}, columns {list(al.permutation)}), "
                       f"excess = {f(a.leakage.excess_over_chance)}, band = {a.band or 'n/a'}")
            absent = al.absent_classes
            if absent:
                out.append(f"      classes without rows (left out of the mean): {list(absent)}")
        out.append(f"  P_assoc = 1 - mean normalized MI = {f(r.p_assoc)}")
        for a in r.attributes:
            ln = a.linkage
            out.append(f"    {a.name}: I = {f(ln.mutual_information)} nats, "
                       f"H(true) = {f(ln.entropy_true)}, H(pred) = {f(ln.entropy_pred)}, "
                       f"NMI = I / ln {a.k} = {f(ln.normalized_mi)}")
        included = [s for s in r.subgroups if s.leakage is not None]
        out.append(f"  P_subgroup = omega * (1 - max L_g) + (1 - omega) * "
                   f"min(1 - L_g) / max(1 - L_g) = {f(r.p_subgroup)}")
        if included:
            worst = max(included, key=lambda s: s.leakage)
            best = min(included, key=lambda s: s.leakage)
            out.append(f"    worst subgroup: {key_str(worst.key)} (n={worst.n}) "
                       f"L_g = {f(worst.leakage)}")
            out.append(f"    best subgroup: {key_str(best.key)} (n={best.n}) "
                       f"L_g = {f(best.leakage)}")
            out.append(f"    {len(included)} subgroup(s) included")
        for s in r.subgroups:
            if s.leakage is None:
                out.append(f"    excluded {key_str(s.key)} (n={s.n}): {s.excluded_reason}")
        out.append(f"  SBLS = {c.alpha} * {f(r.p_attr)} + {c.beta} * {f(r.p_assoc)} + "
                   f"{c.gamma} * {f(r.p_subgroup)} = {f(r.sbls)}")
        out.append("")
    return "\n".join(out)


def cmd_explain(args) -> int:
    try:
        text = args.report.read_text(encoding="utf-8")
    except OSError as exc:
        raise SBLSError(f"cannot read report: {exc.strerror}", str(args.report)) from None
    sys.stdout.write(explain_text(load_report(text), args.full))
    return EXIT_OK


COMMANDS = {"score": cmd_score, "validate": cmd_validate, "synth": cmd_synth,
            "explain": cmd_explain}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except SBLSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
