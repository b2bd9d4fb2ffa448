"""``compgen-cli`` command line: validate, render, eval, split, qedata, selftrain.

Exit codes: 0 success, 1 validation failure, 2 partial success, 3 or more
operational error (a JSON error object is printed to stderr).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from compgen import __version__
from compgen.corpus import (
    CorpusError,
    Example,
    file_digest,
    iter_jsonl,
    read_corpus,
    read_jsonl,
    write_json,
    write_jsonl,
)
from compgen.metrics import EvalRecord, evaluate
from compgen.mr_tree import MrParseError, parse_mr, serialize, validate
from compgen.qe_data import QeDataError, assemble_dataset
from compgen.selftrain import (
    Candidate,
    HttpGenerator,
    HttpScorer,
    LabeledPair,
    MockGenerator,
    OracleScorer,
    SelfTrainConfig,
    SelfTrainError,
    UnlabeledItem,
    audit_report,
    format_report,
    run_self_training,
)
from compgen.splits import DEFAULT_SIZES, SplitError, construct_splits, derive_eval_splits
from compgen.template_engine import RenderError, TemplateError, load_registry, render

log = logging.getLogger("compgen")

EXIT_OK, EXIT_INVALID, EXIT_PARTIAL, EXIT_ERROR, EXIT_INPUT = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int = EXIT_ERROR, **extra):
        self.kind, self.code, self.extra = kind, code, extra
        super().__init__(message)


def _emit(path, rows):
    """Write JSONL rows to ``path`` or stdout."""
    if path:
        write_jsonl(path, rows)
    else:
        for r in rows:
            sys.stdout.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")


def _registry(path):
    if not path:
        return None
    with open(path, encoding="utf-8") as f:
        return load_registry(f)


def _manifest(args, inputs: dict, **extra) -> dict:
    return {
        "tool": "compgen",
        "version": __version__,
        "command": args.command,
        "inputs": {name: file_digest(p) for name, p in inputs.items() if p},
        **extra,
    }


# --------------------------------------------------------------------------


def cmd_validate(args) -> int:
    violations = []
    records = 0
    seen = set()
    for lineno, obj in iter_jsonl(args.corpus):
        records += 1
        if isinstance(obj, Exception):
            violations.append({"line": lineno, "rule": "json", "message": str(obj)})
            continue
        rid = obj.get("id")
        try:
            ex = Example.from_dict(obj)
        except MrParseError as e:
            violations.append({"line": lineno, "id": rid, "rule": "parse", "message": str(e)})
            continue
        except (KeyError, TypeError, ValueError) as e:
            violations.append({"line": lineno, "id": rid, "rule": "field", "message": f"bad record: {e}"})
            continue
        if ex.id in seen:
            violations.append({"line": lineno, "id": rid, "rule": "duplicate_id", "message": f"duplicate id {ex.id}"})
        seen.add(ex.id)
        for v in validate(ex.mr):
            violations.append({"line": lineno, "id": rid, **v.to_dict()})
        if "[" in ex.reference or "]" in ex.reference:
            try:
                parse_mr(ex.reference)
            except MrParseError as e:
                violations.append({"line": lineno, "id": rid, "rule": "reference", "message": str(e)})
    if args.report:
        write_jsonl(args.report, violations)
    else:
        for v in violations:
            sys.stderr.write(json.dumps(v, ensure_ascii=False, sort_keys=True) + "\n")
    if records == 0:
        log.warning("0 records")
    print(json.dumps({"records": records, "violations": len(violations)}))
    return EXIT_INVALID if violations else EXIT_OK


def cmd_render(args) -> int:
    registry = _registry(args.templates)
    examples = read_corpus(args.corpus)
    out, errors = [], []
    for ex in examples:
        try:
            out.append({"id": ex.id, "rendered": render(ex.mr, registry, args.mode)})
        except RenderError as e:
            errors.append({"id": ex.id, "error": type(e).__name__, "message": str(e)})
    _emit(args.out, out)
    if args.errors:
        write_jsonl(args.errors, errors)
    else:
        for e in errors:
            sys.stderr.write(json.dumps(e, ensure_ascii=False, sort_keys=True) + "\n")
    return EXIT_PARTIAL if errors else EXIT_OK


def cmd_eval(args) -> int:
    examples = read_corpus(args.corpus)
    by_id = {ex.id: ex for ex in examples}
    predictions = {}
    for row in read_jsonl(args.predictions):
        pid = str(row.get("id"))
        if pid not in by_id:
            raise CliError("UnknownPredictionId", f"prediction id {pid!r} not in corpus", EXIT_INPUT, id=pid)
        predictions[pid] = str(row.get("prediction", ""))
    records = [
        EvalRecord(ex.id, ex.mr, ex.reference, predictions.get(ex.id, "")) for ex in examples
    ]
    report = evaluate(records)
    summary = report.to_dict()
    summary["missing_predictions"] = len(examples) - len(predictions)
    if args.out:
        write_json(args.out, summary)
    else:
        print(json.dumps(summary, sort_keys=True))
    if args.flags:
        write_jsonl(args.flags, report.per_record)
    return EXIT_OK


def _sizes(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}")


def cmd_split(args) -> int:
    registry = _registry(args.templates)
    pool = read_corpus(args.corpus, registry)
    splits = construct_splits(pool, args.sizes, args.seed)
    by_id = {ex.id: ex for ex in pool}
    out = Path(args.out)
    for size, ids in splits.splits:
        write_jsonl(out / f"split.{size}.jsonl", (by_id[i].to_dict() for i in ids))
    unlabeled = splits.unlabeled_ids(pool)
    write_jsonl(
        out / "unlabeled.jsonl",
        ({"id": i, "mr": serialize(by_id[i].mr), "template_text": by_id[i].template_text} for i in unlabeled),
    )
    manifest_extra = {}
    if args.eval:
        candidates = read_corpus(args.eval, registry)
        ev = derive_eval_splits(pool, splits, candidates)
        cand_by_id = {ex.id: ex for ex in candidates}
        write_jsonl(out / "eval.seen.jsonl", (cand_by_id[i].to_dict() for i in ev.seen))
        write_jsonl(out / "eval.unseen.jsonl", (cand_by_id[i].to_dict() for i in ev.unseen))
        manifest_extra["eval"] = {"seen": len(ev.seen), "unseen": len(ev.unseen), "dropped": len(ev.dropped)}
    write_json(
        out / "manifest.json",
        _manifest(
            args,
            {"corpus": args.corpus, "eval": args.eval, "templates": args.templates},
            seed=args.seed,
            sizes=list(args.sizes),
            pool_examples=len(pool),
            pool_signatures=len(splits.signature_index),
            split_signatures={str(s): len(splits.signatures[s]) for s in args.sizes},
            unlabeled=len(unlabeled),
            **manifest_extra,
        ),
    )
    print(json.dumps({"splits": {str(s): len(ids) for s, ids in splits.splits}, "unlabeled": len(unlabeled)}))
    return EXIT_OK


def cmd_qedata(args) -> int:
    pool = read_corpus(args.corpus, _registry(args.templates))
    missing = [ex.id for ex in pool if not ex.template_text]
    if missing:
        raise CliError("MissingTemplateText", f"{len(missing)} records lack template_text; pass --templates",
                       EXIT_INPUT, ids=missing[:10])
    ds = assemble_dataset(pool, seed=args.seed, k=args.k, bleu_threshold=args.bleu_threshold)
    out = Path(args.out)
    write_jsonl(out / "qe.train.jsonl", (p.to_dict() for p in ds.train))
    write_jsonl(out / "qe.val.jsonl", (p.to_dict() for p in ds.validation))
    write_json(
        out / "manifest.json",
        _manifest(args, {"corpus": args.corpus, "templates": args.templates},
                  seed=args.seed, k=args.k, bleu_threshold=args.bleu_threshold, stats=ds.stats),
    )
    print(json.dumps({"train": len(ds.train), "validation": len(ds.validation)}))
    return EXIT_OK


def _unlabeled_items(path, registry):
    items, gold = [], {}
    for lineno, row in iter_jsonl(path):
        if isinstance(row, Exception):
            raise CorpusError(str(row), lineno)
        text = row.get("template_text")
        if not text:
            if registry is None or "mr" not in row:
                raise CorpusError("record needs template_text (or mr plus --templates)", lineno)
            text = render(parse_mr(row["mr"]), registry)
        items.append(UnlabeledItem(str(row["id"]), text))
        if row.get("reference"):
            gold.setdefault(text, row["reference"])
    return items, gold


def cmd_selftrain(args) -> int:
    registry = _registry(args.templates)
    labeled = read_corpus(args.labeled, registry)
    S = [LabeledPair(ex.id, ex.template_text, ex.reference) for ex in labeled]
    U, gold = _unlabeled_items(args.unlabeled, registry)
    if args.gold:
        for ex in read_corpus(args.gold, registry):
            gold.setdefault(ex.template_text, ex.reference)
    labeled_inputs = {s.input for s in S}
    dropped = [u.id for u in U if u.input in labeled_inputs]
    U = [u for u in U if u.input not in labeled_inputs]
    if dropped:
        log.warning("dropped %d unlabeled inputs already in the labeled set", len(dropped))

    config = SelfTrainConfig(
        iterations=args.iterations,
        score_threshold=args.score_threshold,
        generator_url=args.generator_url,
        scorer_url=args.scorer_url,
        batch_size=args.batch_size,
        parallelism=args.parallelism,
        seed=args.seed,
        vanilla=args.vanilla,
        retrain_timeout=args.retrain_timeout,
    )
    if args.mock:
        generator = MockGenerator(gold, args.corruption_rate, args.seed)
        scorer = OracleScorer(gold)
    else:
        if not (args.generator_url and args.scorer_url):
            raise CliError("UsageError", "--generator-url and --scorer-url are required without --mock", EXIT_INPUT)
        generator = HttpGenerator(args.generator_url, retrain_url=args.retrain_url)
        scorer = HttpScorer(args.scorer_url)

    state = Path(args.state or os.environ.get("COMPGEN_STATE_DIR") or "state")
    S_final, stats = run_self_training(S, U, config, generator, scorer, state)
    rejected = []
    last = state / f"iter_{stats[-1].iteration}" / "rejected.jsonl" if stats else None
    if last and last.exists():
        rejected = [Candidate(**r) for r in read_jsonl(last)]
    report = audit_report(stats, rejected)
    write_json(state / "stats.json", report["iterations"])
    write_json(state / "report.json", report)
    write_jsonl(state / "labeled.final.jsonl", (vars(p) for p in S_final))
    sys.stderr.write(format_report(report) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="compgen-cli", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"compgen {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check that every record parses and validates")
    s.add_argument("corpus")
    s.add_argument("--report", help="write violations here instead of stderr")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("render", help="render MRs with a template file")
    s.add_argument("corpus")
    s.add_argument("--templates", required=True)
    s.add_argument("--mode", choices=["plain", "annotated"], default="plain")
    s.add_argument("--out")
    s.add_argument("--errors")
    s.set_defaults(func=cmd_render)

    for name in ("eval", "metrics"):
        s = sub.add_parser(name, help="tree accuracy, slot error rate and BLEU-4")
        s.add_argument("corpus")
        s.add_argument("predictions")
        s.add_argument("--out", help="MetricReport JSON (default stdout)")
        s.add_argument("--flags", help="per-record flags JSONL")
        s.set_defaults(func=cmd_eval)

    s = sub.add_parser("split", help="nested few-shot splits plus seen/unseen eval sets")
    s.add_argument("corpus")
    s.add_argument("--out", required=True)
    s.add_argument("--sizes", type=_sizes, default=list(DEFAULT_SIZES))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--eval", help="evaluation candidates to route into seen/unseen")
    s.add_argument("--templates", help="render template_text for records that lack it")
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("qedata", help="quality-estimator fine-tuning pairs")
    s.add_argument("corpus")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--k", type=int, default=4)
    s.add_argument("--bleu-threshold", type=float, default=90.0)
    s.add_argument("--templates")
    s.set_defaults(func=cmd_qedata)

    s = sub.add_parser("selftrain", help="threshold-gated self-training loop")
    s.add_argument("--labeled", required=True, help="labeled corpus JSONL")
    s.add_argument("--unlabeled", required=True, help="JSONL with id and template_text (or mr)")
    s.add_argument("--state", help="state directory (default $COMPGEN_STATE_DIR or ./state)")
    s.add_argument("--iterations", type=int, default=3)
    s.add_argument("--score-threshold", type=float, default=0.99)
    s.add_argument("--generator-url")
    s.add_argument("--scorer-url")
    s.add_argument("--retrain-url")
    s.add_argument("--retrain-timeout", type=float, default=0.0)
    s.add_argument("--batch-size", type=int, default=64)
    s.add_argument("--parallelism", type=int, default=4)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--vanilla", action="store_true", help="random selection with the scorer's acceptance count")
    s.add_argument("--mock", action="store_true", help="offline mock generator and oracle scorer")
    s.add_argument("--corruption-rate", type=float, default=0.3)
    s.add_argument("--gold", help="corpus with references for the mock clients")
    s.add_argument("--templates")
    s.set_defaults(func=cmd_selftrain)
    return p


def _fail(kind: str, message: str, code: int, **extra) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, **extra}, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CliError as e:
        return _fail(e.kind, str(e), e.code, **e.extra)
    except (CorpusError, TemplateError, SplitError, QeDataError, MrParseError) as e:
        return _fail(type(e).__name__, str(e), EXIT_INPUT)
    except SelfTrainError as e:
        return _fail(type(e).__name__, str(e), EXIT_ERROR, iteration=e.iteration)
    except OSError as e:
        return _fail(type(e).__name__, str(e), EXIT_ERROR)


if __name__ == "__main__":
    sys.exit(main())
