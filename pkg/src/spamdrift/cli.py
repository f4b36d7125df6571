"""``spamdrift`` command line: one subcommand per analysis, CSV in between.

Exit status is 0 on success, 2 on usage errors and 1 on data errors; data
errors print a single ``spamdrift-error kind=... message=...`` line on
stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import datetime
from pathlib import Path
from typing import Sequence

from . import charts, corpus, costs, drift, filtereval, synth
from .normalize import (DEFAULT_CONFIG, NormalizeConfig, load_table, marker_totals,
                        message_text, message_tokens, normalize)
from .corpus import Label
from .io import parse_optional_float, read_csv, write_csv, write_text

log = logging.getLogger("spamdrift")

OUT_ENV = "SPAMDRIFT_OUT"

MESSAGE_COLUMNS = ("id", "source", "label", "timestamp", "year", "week")
QUARANTINE_COLUMNS = ("source", "index", "offset", "reason")
PRIOR_COLUMNS = ("year", "week", "spam_count", "legit_count", "p_spam")
PCF_COLUMNS = ("year", "week", "p_spam", "pcf")
RANGE_COLUMNS = ("prior_lo", "prior_hi", "cost_fp", "cost_fn", "pcf_lo", "pcf_hi", "span")
DOMINANCE_COLUMNS = ("interval_lo", "interval_hi", "winner")
ACCURACY_COLUMNS = ("classifier", "year", "week", "p_spam", "accuracy", "error_rate", "pcf",
                    "expected_cost")
MARKER_COLUMNS = ("category", "count")


class UsageError(Exception):
    pass


def _out_dir(args) -> Path:
    out = os.environ.get(OUT_ENV) or args.out
    if not out:
        raise UsageError("no output directory: pass --out or set " + OUT_ENV)
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _norm_config(args) -> NormalizeConfig:
    table = getattr(args, "normalize_table", None)
    return load_table(table) if table else DEFAULT_CONFIG


def _load(paths: Sequence[str], label: Label) -> list[corpus.ParseResult]:
    return [corpus.load_archive(p, label) for p in paths]


def _messages(results: Sequence[corpus.ParseResult]) -> list[corpus.Message]:
    msgs = [m for r in results for m in r.messages]
    msgs.sort(key=lambda m: (m.timestamp, m.id))
    return msgs


def _write_markers(path: Path, messages, config) -> None:
    totals = marker_totals(normalize(message_text(m), config) for m in messages)
    write_csv(path, MARKER_COLUMNS,
              [{"category": k.value, "count": v} for k, v in totals.items()])


def cmd_ingest(args) -> None:
    out = _out_dir(args)
    results = _load(args.spam, Label.SPAM) + _load(args.legit, Label.LEGIT)
    if not results:
        raise UsageError("ingest needs at least one --spam or --legit archive")
    write_csv(out / "parse_report.csv", corpus.REPORT_COLUMNS, [r.report_row() for r in results])
    rows = []
    for r in results:
        for m in r.messages:
            year, week = m.iso_week
            rows.append({"id": m.id, "source": r.source, "label": m.label.value,
                         "timestamp": m.timestamp.isoformat(), "year": year, "week": week})
    rows.sort(key=lambda row: (row["timestamp"], row["id"]))
    write_csv(out / "messages.csv", MESSAGE_COLUMNS, rows)
    write_csv(out / "quarantine.csv", QUARANTINE_COLUMNS, [
        {"source": q.source, "index": q.index, "offset": q.offset, "reason": q.reason}
        for r in results for q in r.quarantine])
    if args.marker_stats:
        _write_markers(out / "markers.csv", _messages(results), _norm_config(args))


def _series_from_messages_csv(path: str) -> drift.WeekSeries:
    stubs = []
    for row in read_csv(path, MESSAGE_COLUMNS):
        stubs.append(corpus.Message(row["id"], datetime.fromisoformat(row["timestamp"]), (), "",
                                    Label(row["label"])))
    labeled = [m for m in stubs if m.label is not Label.UNLABELED]
    return drift.prior_series(corpus.bucket_by_week(labeled))


def read_priors(path: str) -> drift.WeekSeries:
    entries = []
    for row in read_csv(path, PRIOR_COLUMNS):
        entries.append(drift.WeekPrior(int(row["year"]), int(row["week"]), int(row["spam_count"]),
                                       int(row["legit_count"]), parse_optional_float(row["p_spam"])))
    return drift.WeekSeries(tuple(entries))


def cmd_priors(args) -> None:
    out = _out_dir(args)
    if args.messages:
        series = _series_from_messages_csv(args.messages)
    else:
        if not (args.spam or args.legit):
            raise UsageError("priors needs --messages or --spam/--legit archives")
        msgs = _messages(_load(args.spam, Label.SPAM) + _load(args.legit, Label.LEGIT))
        series = drift.prior_series(corpus.bucket_by_week(msgs))
    series = drift.smooth_priors(series, args.decay)
    write_csv(out / "priors.csv", PRIOR_COLUMNS, [
        {"year": e.year, "week": e.week_index, "spam_count": e.spam_count,
         "legit_count": e.legit_count, "p_spam": e.p_spam} for e in series])
    write_text(out / "priors.svg", charts.prior_chart(series))


def _parse_classifier(spec: str) -> costs.ClassifierPoint:
    try:
        name, fpr, fnr = spec.rsplit(":", 2)
        return costs.ClassifierPoint(name, float(fpr), float(fnr))
    except ValueError:
        raise UsageError(f"--classifier expects NAME:FPR:FNR, got {spec!r}") from None


def _eval_point(spec: str) -> costs.ClassifierPoint:
    if "=" not in spec:
        raise UsageError(f"--eval expects NAME=eval.csv, got {spec!r}")
    name, path = spec.split("=", 1)
    totals = [r for r in read_csv(path, filtereval.EVAL_COLUMNS) if r["year"] == "total"]
    if not totals:
        raise ValueError(f"{path}: no totals row")
    t = totals[0]
    return costs.ClassifierPoint(name, parse_optional_float(t["fp_rate"]) or 0.0,
                                 parse_optional_float(t["fn_rate"]) or 0.0)


def cmd_pcf(args) -> None:
    out = _out_dir(args)
    c = costs.CostSpec(args.cost_fp, args.cost_fn)
    series = read_priors(args.priors) if args.priors else None
    if series is not None:
        write_csv(out / "pcf.csv", PCF_COLUMNS, costs.pcf_rows(series, c))
        prior_lo, prior_hi = drift.series_range(series)
    elif args.prior_range:
        prior_lo, prior_hi = args.prior_range
    else:
        raise UsageError("pcf needs --priors or --prior-range")
    r = costs.pcf_range((prior_lo, prior_hi), c)
    write_csv(out / "pcf_range.csv", RANGE_COLUMNS, [{
        "prior_lo": prior_lo, "prior_hi": prior_hi, "cost_fp": c.cost_fp, "cost_fn": c.cost_fn,
        "pcf_lo": r.lo, "pcf_hi": r.hi, "span": r.span}])

    points = [_parse_classifier(s) for s in args.classifier] + [_eval_point(s) for s in args.eval]
    if not points:
        return
    dom = costs.dominant_over_range(points, r, args.grid)
    write_csv(out / "dominance.csv", DOMINANCE_COLUMNS,
              [{"interval_lo": d.lo, "interval_hi": d.hi, "winner": d.winner} for d in dom])
    write_text(out / "costcurve.svg", charts.cost_curve_chart(points, r, dom, args.grid))
    if series is not None:
        rows = []
        for p in points:
            for a in costs.accuracy_is_misleading_report(p, series, c):
                rows.append({"classifier": p.name, "year": a.year, "week": a.week,
                             "p_spam": a.p_spam, "accuracy": a.accuracy,
                             "error_rate": a.error_rate, "pcf": a.pcf,
                             "expected_cost": a.expected_cost})
        write_csv(out / "accuracy.csv", ACCURACY_COLUMNS, rows)


def _read_vocab(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [w.strip().lower() for w in fh if w.strip() and not w.startswith("#")]


def cmd_bursts(args) -> None:
    out = _out_dir(args)
    config = _norm_config(args)
    msgs = _messages(_load(args.spam, Label.SPAM))
    weekly = drift.group_spam_by_week(msgs, config)
    m = drift.term_week_counts(weekly, _read_vocab(args.vocab) if args.vocab else None,
                               drift.CountMode(args.count), args.min_total)
    scored = drift.chi2_bursts(m, args.critical, drift.Chi2Method(args.chi2))
    for term in scored.excluded:
        log.warning("term %r never occurs; excluded from burst scoring", term)
    rows, svg = drift.render_burst_matrix(scored)
    write_csv(out / "bursts.csv", drift.BURST_COLUMNS, rows)
    write_text(out / "bursts.svg", svg)
    if args.marker_stats:
        _write_markers(out / "markers.csv", msgs, config)


_EVAL_DEFAULTS = {
    "threshold": filtereval.DEFAULT_THRESHOLD, "cost_fp": 10.0, "cost_fn": 1.0,
    "mode": filtereval.Mode.TEST_THEN_TRAIN.value, "legit_token_weight": 1.0,
    "smoothing_alpha": 1.0, "freeze_priors": "true", "sweep": "1,10,100",
}


def _eval_settings(args) -> dict:
    settings = dict(_EVAL_DEFAULTS)
    if args.config:
        file_cfg = filtereval.read_config(args.config)
        unknown = set(file_cfg) - set(settings)
        if unknown:
            raise ValueError(f"{args.config}: unknown keys {', '.join(sorted(unknown))}")
        settings.update(file_cfg)
    if args.preset:
        settings["threshold"] = filtereval.THRESHOLD_PRESETS[args.preset]
    flags = {"threshold": args.threshold, "cost_fp": args.cost_fp, "cost_fn": args.cost_fn,
             "mode": args.mode, "legit_token_weight": args.legit_weight,
             "smoothing_alpha": args.alpha, "sweep": args.sweep}
    settings.update({k: v for k, v in flags.items() if v is not None})
    if args.thaw_priors:
        settings["freeze_priors"] = "false"
    return settings


def cmd_eval(args) -> None:
    out = _out_dir(args)
    s = _eval_settings(args)
    config = _norm_config(args)
    msgs = _messages(_load(args.spam, Label.SPAM) + _load(args.legit, Label.LEGIT))
    model = filtereval.NaiveBayesModel(
        smoothing_alpha=float(s["smoothing_alpha"]),
        legit_token_weight=float(s["legit_token_weight"]),
        freeze_priors=str(s["freeze_priors"]).lower() in ("1", "true", "yes", "on"))
    c = costs.CostSpec(float(s["cost_fp"]), float(s["cost_fn"]))
    report = filtereval.prequential_run(
        msgs, model, float(s["threshold"]), c, filtereval.Mode(s["mode"]),
        tokenizer=lambda m: message_tokens(m, config))
    write_csv(out / "eval.csv", filtereval.EVAL_COLUMNS, report.records())
    ratios = [float(x) for x in str(s["sweep"]).split(",") if x.strip()]
    sweep = filtereval.cost_ratio_sweep(report, ratios, c.cost_fn)
    write_csv(out / "sweep.csv", filtereval.SWEEP_COLUMNS, [vars(r) for r in sweep])
    write_text(out / "eval.svg", charts.eval_chart([r.as_dict() for r in report.rows]))


def cmd_synth(args) -> None:
    out = _out_dir(args)
    spec = synth.read_spec(args.spec)
    synth.write_stream(synth.generate(spec), out)


def read_eval(path: str) -> list[dict]:
    rows = []
    for row in read_csv(path, filtereval.EVAL_COLUMNS):
        if row["year"] == "total":
            continue
        rows.append({k: parse_optional_float(row[k]) for k in ("fp_rate", "fn_rate")})
    return rows


def cmd_render(args) -> None:
    out = _out_dir(args)
    if not (args.priors or args.bursts or args.eval):
        raise UsageError("render needs at least one of --priors, --bursts, --eval")
    if args.priors:
        write_text(out / "priors.svg", charts.prior_chart(read_priors(args.priors)))
    if args.bursts:
        m = drift.matrix_from_rows(read_csv(args.bursts, drift.BURST_COLUMNS))
        write_text(out / "bursts.svg", charts.burst_chart(m))
    if args.eval:
        write_text(out / "eval.svg", charts.eval_chart(read_eval(args.eval)))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spamdrift", description=__doc__.split("\n")[0])
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--out", help=f"output directory (the {OUT_ENV} variable takes precedence)")
        p.set_defaults(func=func)
        return p

    def archives(p, spam=True, legit=True):
        if spam:
            p.add_argument("--spam", action="append", default=[], metavar="PATH",
                           help="spam mbox file or maildir (repeatable)")
        if legit:
            p.add_argument("--legit", action="append", default=[], metavar="PATH",
                           help="legitimate mbox file or maildir (repeatable)")

    def normalizing(p):
        p.add_argument("--normalize-table", metavar="FILE", help="leet map / whitespace tag table")
        p.add_argument("--marker-stats", action="store_true",
                       help="also write markers.csv with obfuscation marker counts")

    p = add("ingest", cmd_ingest, "parse archives and write a parse report")
    archives(p)
    normalizing(p)

    p = add("priors", cmd_priors, "weekly p(spam) series")
    archives(p)
    p.add_argument("--messages", metavar="CSV", help="messages.csv from ingest instead of archives")
    p.add_argument("--decay", type=float, default=None,
                   help="exponentially decayed average weight (default: off)")

    p = add("pcf", cmd_pcf, "probability cost range and classifier dominance")
    p.add_argument("--priors", metavar="CSV")
    p.add_argument("--prior-range", nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--cost-fp", type=float, default=10.0)
    p.add_argument("--cost-fn", type=float, default=1.0)
    p.add_argument("--classifier", action="append", default=[], metavar="NAME:FPR:FNR")
    p.add_argument("--eval", action="append", default=[], metavar="NAME=CSV",
                   help="take a classifier's rates from an eval.csv totals row")
    p.add_argument("--grid", type=int, default=200)

    p = add("bursts", cmd_bursts, "chi-square term bursts over weekly spam")
    archives(p, legit=False)
    normalizing(p)
    p.add_argument("--vocab", metavar="FILE", help="one term per line")
    p.add_argument("--count", choices=[m.value for m in drift.CountMode], default="document")
    p.add_argument("--chi2", choices=[m.value for m in drift.Chi2Method], default="one-cell")
    p.add_argument("--min-total", type=int, default=drift.MIN_TERM_TOTAL)
    p.add_argument("--critical", type=float, default=drift.CHI2_CRITICAL_P01)

    p = add("eval", cmd_eval, "prequential evaluation of the naive Bayes filter")
    archives(p)
    p.add_argument("--normalize-table", metavar="FILE")
    p.add_argument("--config", metavar="FILE", help="key=value run configuration")
    p.add_argument("--threshold", type=float)
    p.add_argument("--preset", choices=sorted(filtereval.THRESHOLD_PRESETS))
    p.add_argument("--cost-fp", type=float)
    p.add_argument("--cost-fn", type=float)
    p.add_argument("--mode", choices=[m.value for m in filtereval.Mode])
    p.add_argument("--legit-weight", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--thaw-priors", action="store_true",
                   help="let training class counts set the NB prior")
    p.add_argument("--sweep", help="comma-separated FP:FN cost ratios")

    p = add("synth", cmd_synth, "generate a synthetic spam.mbox / legit.mbox pair")
    p.add_argument("--spec", required=True, metavar="FILE")

    p = add("render", cmd_render, "redraw SVG charts from CSV artifacts")
    p.add_argument("--priors", metavar="CSV")
    p.add_argument("--bursts", metavar="CSV")
    p.add_argument("--eval", metavar="CSV")
    return parser


def _data_error(exc: BaseException) -> int:
    msg = json.dumps(str(exc))
    print(f"spamdrift-error kind={type(exc).__name__} message={msg}", file=sys.stderr)
    return 1


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError) as exc:
        return _data_error(exc)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
