"""Command-line entry point: ``slukit <subcommand> ...``.

Exit status is 0 on success, 1 on validation errors (bad arguments, schema
violations, plan errors) and 2 on I/O errors. Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .channel import NoiseProfile, corrupt, load_profiles, wer_cer_study
from .codec import SymbolTable, decode, encode, mask_outside_slots
from .corpus import Utterance, dumps, read_jsonl, tokenize
from .curriculum import StagePlan, effective_threshold, stage_emit, write_stages
from .errors import CorpusError, SlukitError
from .grammar import load_grammar
from .lm import CorpusStats, corpus_stats
from .metrics import corpus_report, meta_value
from .perturb import (SubstitutionPlan, SubstitutionStats, SyntaxPlan, apply_oov, apply_syntax,
                      oov_schedule, split_by_length)
from .stats import correlate

log = logging.getLogger("slukit")


class UsageError(SlukitError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ------------------------------------------------------------------ helpers

@contextlib.contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            yield f


def _write_records(path, records):
    n = 0
    with _open_out(path) as f:
        for r in records:
            f.write(dumps(r) + "\n")
            n += 1
    return n


def _file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _write_manifest(out, argv, args, inputs=()):
    """Record how an output file was produced, next to it."""
    if out in (None, "-"):
        return
    out = Path(out)
    config = {"command": args.command, "argv": list(argv), "seed": getattr(args, "seed", None)}
    config_hash = hashlib.sha256(json.dumps(config, sort_keys=True, ensure_ascii=False).encode()).hexdigest()
    man = {
        "tool": "slukit",
        "version": __version__,
        **config,
        "config_hash": config_hash,
        "inputs": {str(p): _file_digest(p) for p in inputs if p and p != "-" and Path(p).is_file()},
    }
    target = out / "run.manifest.json" if out.is_dir() else out.with_name(out.name + ".manifest.json")
    target.write_text(json.dumps(man, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


def _symbols(args):
    return SymbolTable.load(args.symbols, repeat=getattr(args, "repeat", None))


def _read_utterances(path, st=None):
    """Utterances from JSONL; records may carry tokens or only an ``enriched`` string."""
    out = []
    for i, rec in enumerate(read_jsonl(path), 1):
        if "tokens" not in rec and "enriched" in rec:
            if st is None:
                raise CorpusError(f"{path}:{i}: enriched record needs a symbol table")
            u, _ = decode(rec["enriched"], st, id=str(rec.get("id", i)), meta=rec.get("meta"))
            out.append(u)
            continue
        if "tokens" not in rec and "text" in rec:
            rec = dict(rec, tokens=tokenize(rec["text"]))
        try:
            out.append(Utterance.from_dict(rec))
        except CorpusError as e:
            raise CorpusError(f"{path}:{i}: {e}") from e
    return out


def _enriched_records(path, st):
    for i, rec in enumerate(read_jsonl(path), 1):
        if "enriched" in rec:
            yield rec
        elif "tokens" in rec:
            u = Utterance.from_dict(rec)
            yield dict(u.to_dict(), enriched=encode(u, st))
        else:
            raise CorpusError(f"{path}:{i}: record has neither 'enriched' nor 'tokens'")


# --------------------------------------------------------------- commands

def cmd_generate(args, argv):
    grammar = load_grammar(args.grammar, max_depth=args.max_depth)
    if args.sample:
        utts = grammar.sample(args.sample, args.seed, start=args.start)
    else:
        utts = grammar.enumerate(args.limit, start=args.start)
    n = _write_records(args.out, (u.to_dict() for u in utts))
    inputs = [] if args.grammar == "demo" else [args.grammar]
    _write_manifest(args.out, argv, args, inputs)
    log.info("generated %d utterances (%d rules, start %s)", n, grammar.rule_count, grammar.start)


def cmd_encode(args, argv):
    st = _symbols(args)
    utts = _read_utterances(args.input, st)
    _write_records(args.out, (dict(u.to_dict(), enriched=encode(u, st, intents=not args.concepts_only)) for u in utts))
    _write_manifest(args.out, argv, args, [args.input])


def cmd_decode(args, argv):
    st = _symbols(args)
    repaired = 0

    def records():
        nonlocal repaired
        for i, rec in enumerate(read_jsonl(args.input), 1):
            if "enriched" not in rec:
                raise CorpusError(f"{args.input}:{i}: missing 'enriched' field")
            u, diag = decode(rec["enriched"], st, id=str(rec.get("id", i)), meta=rec.get("meta"))
            d = u.to_dict()
            if diag:
                repaired += 1
                d["diagnostics"] = diag.repairs
            yield d

    n = _write_records(args.out, records())
    _write_manifest(args.out, argv, args, [args.input])
    if repaired:
        log.warning("%d of %d transcriptions needed repairs", repaired, n)


def cmd_mask(args, argv):
    st = _symbols(args)
    _write_records(args.out, (dict(r, enriched=mask_outside_slots(r["enriched"], st))
                              for r in _enriched_records(args.input, st)))
    _write_manifest(args.out, argv, args, [args.input])


def cmd_score(args, argv):
    st = _symbols(args)
    refs = _read_utterances(args.ref, st)
    hyps = _read_utterances(args.hyp, st)
    report = corpus_report(refs, hyps, group_by=args.group_by, model=args.model, with_values=args.with_values)
    with _open_out(args.out) as f:
        if args.format == "jsonl":
            for r in report.rows:
                f.write(dumps({"model": r.model, "group": r.group, "wer": r.wer, "cer": r.cer,
                               "f1": r.f1, "macro_f1": r.macro_f1, "n": r.n}) + "\n")
        else:
            f.write(report.to_tsv())
    if args.per_utt:
        _write_records(args.per_utt, (s.to_dict() for s in report.scores))
    _write_manifest(args.out, argv, args, [args.ref, args.hyp])


def _column(rec, key):
    v = rec.get(key)
    if v is None and "." in key:
        v = meta_value(rec.get("meta", {}), key)
    return v


def cmd_correlate(args, argv):
    if args.study:
        if not (args.ref and args.profiles):
            raise UsageError("--study needs --ref and --profiles")
        st = _symbols(args)
        refs = [(r.get("id"), r["enriched"]) for r in _enriched_records(args.ref, st)]
        profiles = load_profiles(args.profiles)
        if args.seed is not None:
            profiles = [NoiseProfile(**{**p.to_dict(), "seed": args.seed}) for p in profiles]
        with _open_out(args.out) as f:
            for res in wer_cer_study(refs, profiles, st):
                f.write(f"# profile {res.profile.label()}\tmean WER {res.mean_wer:.2f}\tmean CER {res.mean_cer:.2f}\n")
                f.write(res.report.block("WER", "CER"))
        _write_manifest(args.out, argv, args, [args.ref, args.profiles])
        return
    if not args.scores:
        raise UsageError("correlate needs --scores (or --study)")
    xs, ys = [], []
    skipped = 0
    for rec in read_jsonl(args.scores):
        x, y = _column(rec, args.x), _column(rec, args.y)
        if x is None or y is None:
            skipped += 1
            continue
        xs.append(float(x))
        ys.append(float(y))
    if skipped:
        log.info("skipped %d records without %s or %s", skipped, args.x, args.y)
    rep = correlate(xs, ys)
    with _open_out(args.out) as f:
        if args.format == "jsonl":
            f.write(dumps({"x": args.x, "y": args.y, **rep.to_dict()}) + "\n")
        else:
            f.write(rep.block(args.x.upper(), args.y.upper()))
    _write_manifest(args.out, argv, args, [args.scores])


def _train_vocab(path):
    if not path:
        return None
    vocab = set()
    for u in _read_utterances(path):
        vocab.update(u.tokens)
    return vocab


def cmd_perturb(args, argv):
    corpus = _read_utterances(args.input)
    if args.mode == "oov":
        vocab = _train_vocab(args.train_vocab)
        subs = None
        if args.substitutions:
            with open(args.substitutions, encoding="utf-8") as f:
                subs = json.load(f)["substitutions"]
        if args.schedule:
            if not args.out_dir:
                raise UsageError("--schedule needs --out-dir")
            out_dir = Path(args.out_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            rows = []
            for step, new, stats in oov_schedule(corpus, subs, vocab):
                _write_records(out_dir / f"oov_step{step}.jsonl", (u.to_dict() for u in new))
                rows.append(stats.row())
            table = SubstitutionStats.HEADER + "\n" + "\n".join(rows) + "\n"
            (out_dir / "oov_steps.tsv").write_text(table, encoding="utf-8")
            sys.stdout.write(table)
            _write_manifest(out_dir, argv, args, [args.input, args.train_vocab, args.substitutions])
            return
        if args.plan:
            plan = SubstitutionPlan.load(args.plan)
        else:
            plan = SubstitutionPlan.for_step(args.step, subs)
        new, stats = apply_oov(corpus, plan, vocab)
        _write_records(args.out, (u.to_dict() for u in new))
        sys.stderr.write(SubstitutionStats.HEADER + "\n" + stats.row() + "\n")
        _write_manifest(args.out, argv, args, [args.input, args.train_vocab, args.plan, args.substitutions])
    elif args.mode == "syntax":
        plan = SyntaxPlan.load(args.plan, step=args.step)
        _write_records(args.out, (u.to_dict() for u in apply_syntax(corpus, plan)))
        _write_manifest(args.out, argv, args, [args.input, args.plan])
    else:
        if not (args.long and args.short):
            raise UsageError("split needs --long and --short")
        long, short = split_by_length(corpus, args.threshold)
        _write_records(args.long, (u.to_dict() for u in long))
        _write_records(args.short, (u.to_dict() for u in short))
        _write_manifest(args.long, argv, args, [args.input])
        log.info("%d long, %d short utterances", len(long), len(short))


def cmd_corrupt(args, argv):
    st = _symbols(args)
    profiles = load_profiles(args.profile) if args.profile else [NoiseProfile()]
    if len(profiles) != 1:
        raise UsageError("corrupt takes a single profile")
    prof = profiles[0]
    overrides = {k: getattr(args, k) for k in ("p_sub", "p_del", "p_ins", "symbol_del", "seed")
                 if getattr(args, k) is not None}
    if overrides:
        prof = NoiseProfile(**{**prof.to_dict(), **overrides})
    refs = list(_enriched_records(args.input, st))
    hyps = corrupt([(str(r.get("id")), r["enriched"]) for r in refs], prof, st)
    for ref, hyp in zip(refs, hyps):
        hyp["meta"] = {**ref.get("meta", {}), **hyp["meta"]}
    _write_records(args.out, hyps)
    _write_manifest(args.out, argv, args, [args.input, args.profile])


def cmd_lm(args, argv):
    train = [u.tokens for u in _read_utterances(args.train)]
    test = [u.tokens for u in _read_utterances(args.test)]
    stats = corpus_stats(train, test, order=args.order, k=args.k)
    with _open_out(args.out) as f:
        f.write("corpus\t" + CorpusStats.HEADER + "\n")
        f.write(f"{Path(args.train).stem}\t{stats.row()}\n")


def cmd_curriculum(args, argv):
    st = _symbols(args)
    corpus = _read_utterances(args.input, st)
    plan = StagePlan(args.threshold, args.factor, real_source=args.real_source)
    stages = stage_emit(corpus, plan, st)
    threshold = effective_threshold(corpus, plan)
    config_hash = hashlib.sha256(json.dumps(argv, ensure_ascii=False).encode()).hexdigest()
    path = write_stages(args.out_dir, stages, plan, threshold, config_hash)
    _write_manifest(args.out_dir, argv, args, [args.input])
    log.info("wrote %s", path)


# ------------------------------------------------------------------ parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="only report errors")
    common.add_argument("--symbols", help="symbol table JSON (default: packaged table)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--format", choices=("tsv", "jsonl"), default="tsv")

    p = _Parser(prog="slukit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"slukit {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="generate an annotated corpus from a grammar")
    g.add_argument("--grammar", default="demo", help="grammar file, or 'demo'")
    mode = g.add_mutually_exclusive_group()
    mode.add_argument("--limit", type=int, help="enumerate at most N distinct utterances")
    mode.add_argument("--sample", type=int, help="draw N utterances by weighted sampling (needs --seed)")
    g.add_argument("--start", help="start nonterminal (default: grammar start)")
    g.add_argument("--max-depth", type=int, default=20)
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("encode", parents=[common], help="add enriched transcriptions to a corpus")
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--out", default="-")
    e.add_argument("--repeat", type=int, choices=(1, 2))
    e.add_argument("--concepts-only", action="store_true", help="omit intent symbols")
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", parents=[common], help="parse enriched transcriptions into annotations")
    d.add_argument("--in", dest="input", required=True)
    d.add_argument("--out", default="-")
    d.add_argument("--repeat", type=int, choices=(1, 2))
    d.set_defaults(func=cmd_decode)

    m = sub.add_parser("mask", parents=[common], help="mask words outside concept regions")
    m.add_argument("--in", dest="input", required=True)
    m.add_argument("--out", default="-")
    m.add_argument("--repeat", type=int, choices=(1, 2))
    m.set_defaults(func=cmd_mask)

    s = sub.add_parser("score", parents=[common], help="WER / CER / intent F1 report")
    s.add_argument("--ref", required=True)
    s.add_argument("--hyp", required=True)
    s.add_argument("--group-by", help="meta key to break results down by, e.g. meta.noise")
    s.add_argument("--model", default="system")
    s.add_argument("--with-values", action="store_true", help="CER matches need equal slot values too")
    s.add_argument("--per-utt", help="write per-utterance scores (JSONL) here")
    s.add_argument("--repeat", type=int, choices=(1, 2))
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_score)

    c = sub.add_parser("correlate", parents=[common], help="Pearson / Spearman with significance")
    c.add_argument("--scores", help="per-utterance scores JSONL")
    c.add_argument("--x", default="wer")
    c.add_argument("--y", default="cer")
    c.add_argument("--study", action="store_true", help="simulate noise profiles and correlate WER with CER")
    c.add_argument("--ref", help="reference corpus for --study")
    c.add_argument("--profiles", help="noise profile sweep JSON for --study")
    c.add_argument("--repeat", type=int, choices=(1, 2))
    c.add_argument("--out", default="-")
    c.set_defaults(func=cmd_correlate)

    pt = sub.add_parser("perturb", parents=[common], help="OOV substitution, syntactic variation, length split")
    pt.add_argument("mode", choices=("oov", "syntax", "split"))
    pt.add_argument("--in", dest="input", required=True)
    pt.add_argument("--out", default="-")
    pt.add_argument("--step", type=int, default=None)
    pt.add_argument("--plan", help="plan JSON")
    pt.add_argument("--substitutions", help="full substitution inventory JSON (oov)")
    pt.add_argument("--train-vocab", help="training corpus whose vocabulary replacements must avoid (oov)")
    pt.add_argument("--schedule", action="store_true", help="run OOV steps 1-4 (oov)")
    pt.add_argument("--out-dir")
    pt.add_argument("--threshold", type=int, default=7, help="length threshold in words (split)")
    pt.add_argument("--long")
    pt.add_argument("--short")
    pt.set_defaults(func=cmd_perturb)

    cr = sub.add_parser("corrupt", parents=[common], help="seeded noisy channel over enriched transcriptions")
    cr.add_argument("--in", dest="input", required=True)
    cr.add_argument("--out", default="-")
    cr.add_argument("--profile", help="noise profile JSON")
    cr.add_argument("--p-sub", type=float)
    cr.add_argument("--p-del", type=float)
    cr.add_argument("--p-ins", type=float)
    cr.add_argument("--symbol-del", type=float)
    cr.add_argument("--repeat", type=int, choices=(1, 2))
    cr.set_defaults(func=cmd_corrupt)

    lm = sub.add_parser("lm", parents=[common], help="n-gram perplexity and OOV statistics")
    lm.add_argument("action", choices=("stats",))
    lm.add_argument("--train", required=True)
    lm.add_argument("--test", required=True)
    lm.add_argument("--order", type=int, default=3)
    lm.add_argument("--k", type=float, default=1.0)
    lm.add_argument("--out", default="-")
    lm.set_defaults(func=cmd_lm)

    cu = sub.add_parser("curriculum", parents=[common], help="emit Data2/Data3/Data4/Data4* training stages")
    cu.add_argument("--in", dest="input", required=True)
    cu.add_argument("--out-dir", required=True)
    cu.add_argument("--threshold", type=float, default=None, help="under-represented concept frequency")
    cu.add_argument("--factor", type=int, default=3, help="duplication factor")
    cu.add_argument("--real-source", help="meta.source value selecting the Data2 slice")
    cu.add_argument("--repeat", type=int, choices=(1, 2))
    cu.set_defaults(func=cmd_curriculum)
    return p


def _check_args(args):
    if args.command == "generate":
        if args.sample and args.seed is None:
            raise UsageError("--sample needs an explicit --seed")
        if args.limit is not None and args.limit < 1:
            raise UsageError("--limit must be >= 1")
        if args.sample is not None and args.sample < 1:
            raise UsageError("--sample must be >= 1")
    if args.command == "perturb":
        if args.mode == "oov" and not (args.schedule or args.plan or args.step):
            raise UsageError("oov needs --step, --plan or --schedule")
        if args.mode == "syntax" and args.step not in (None, 1, 2):
            raise UsageError("syntax --step must be 1 or 2")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(format="slukit: %(message)s", stream=sys.stderr, level=logging.INFO, force=True)
    try:
        args = build_parser().parse_args(argv)
        if args.quiet:
            logging.getLogger().setLevel(logging.ERROR)
        _check_args(args)
        args.func(args, argv)
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        sys.stdout = open(os.devnull, "w")
        return 0
    except OSError as e:
        log.error("I/O error: %s", e)
        return 2
    except (SlukitError, ValueError, KeyError) as e:
        log.error("%s", e)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
