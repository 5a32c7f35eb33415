"""Command-line entry point: ``tokcomp <subcommand> ...``.

Exit codes: 0 success, 1 partial failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from tokcomp import costmodel, featio, judgeclient, melfront, metrics, reports
from tokcomp.compress import COMPRESSORS, run_compressor
from tokcomp.featio import FeatureSequence

log = logging.getLogger("tokcomp")

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2
FEATURE_SUFFIXES = (".atcf", ".wav")


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# config file: flat key=value, flags on the command line win
# --------------------------------------------------------------------------

def read_config(path) -> dict:
    cfg = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        cfg[key.strip().replace("_", "-")] = value.strip()
    return cfg


def _config_argv(sub: argparse.ArgumentParser, cfg: dict) -> list[str]:
    by_flag = {opt: act for act in sub._actions for opt in act.option_strings}
    argv = []
    for key, value in cfg.items():
        if key == "inputs":
            continue
        act = by_flag.get(f"--{key}")
        if act is None:
            raise UsageError(f"config key {key!r} is not an option of this command")
        if isinstance(act, argparse._StoreTrueAction):
            if value.lower() in ("1", "true", "yes", "on"):
                argv.append(f"--{key}")
        else:
            argv += [f"--{key}", value]
    return argv


# --------------------------------------------------------------------------
# inputs
# --------------------------------------------------------------------------

def expand_inputs(paths: Sequence[str]) -> list[Path]:
    found = []
    for p in map(Path, paths):
        if p.is_dir():
            found.extend(q for q in p.iterdir() if q.suffix.lower() in FEATURE_SUFFIXES)
        else:
            found.append(p)
    return sorted(set(found))


def load_sequence(path: Path) -> FeatureSequence:
    if path.suffix.lower() == ".wav":
        return melfront.wav_to_features(path)
    return featio.load_features(path)


def _load_all(paths):
    loaded, errors = [], []
    for path in expand_inputs(paths):
        try:
            loaded.append((path, load_sequence(path)))
        except (OSError, ValueError) as exc:
            errors.append({"input": str(path), "error": f"{type(exc).__name__}: {exc}"})
    return loaded, errors


def _aggregate(outcomes) -> dict:
    seconds = sum(o.duration for o in outcomes)
    tin = sum(o.input_tokens for o in outcomes)
    tout = sum(o.output_tokens for o in outcomes)
    return {
        "files": len(outcomes),
        "input_tokens": tin,
        "output_tokens": tout,
        "compression_factor": tin / tout if tout else 0.0,
        "duration_s": seconds,
        "input_rate": tin / seconds if seconds else 0.0,
        # duration-weighted mean of per-file rates
        "output_rate": sum(o.output_rate * o.duration for o in outcomes) / seconds if seconds else 0.0,
    }


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _parse_k(args) -> Optional[int]:
    if args.compressor in ("uniavg", "unisamp"):
        if args.K is None:
            raise UsageError(f"{args.compressor} needs -K")
        if args.K < 1:
            raise UsageError("K must be >= 1")
        return args.K
    if args.K is not None:
        raise UsageError(f"{args.compressor} does not take -K")
    return None


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_compress(args) -> int:
    K = _parse_k(args)
    if not args.inputs:
        raise UsageError("no inputs given")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    loaded, errors = _load_all(args.inputs)
    rows, outcomes = [], []
    for path, seq in loaded:
        try:
            outcome = run_compressor(seq, args.compressor, K)
            featio.save_features(outcome.compressed, outdir / f"{path.stem}.atcf")
        except (OSError, ValueError, IndexError) as exc:
            errors.append({"input": str(path), "error": f"{type(exc).__name__}: {exc}"})
            continue
        outcomes.append(outcome)
        rows.append({"input": str(path), **outcome.accounting()})
    errors.sort(key=lambda e: e["input"])
    report = {
        "compressor": args.compressor,
        "K": K,
        "files": rows,
        "aggregate": _aggregate(outcomes),
        "errors": errors,
    }
    if args.format == "csv":
        text = reports.rows_to_csv(rows + [{"input": "__aggregate__", "method": args.compressor,
                                             **report["aggregate"]}])
    else:
        text = reports.dump(report)
    (outdir / f"report.{args.format}").write_text(text, encoding="utf-8")
    if not outcomes:
        log.error("every input failed")
        return EXIT_PARTIAL
    return EXIT_PARTIAL if errors else EXIT_OK


def sweep_rows(seqs: Sequence[FeatureSequence], factors: Sequence[int], families: Sequence[str],
               shape: costmodel.LlmShape) -> list[dict]:
    """One row per (family, K): total tokens, tok/s, summed attention FLOPs and savings vs K=1."""
    def flops(tokens):
        return sum(costmodel.attention_flops(costmodel.LlmShape(shape.layers, shape.d_model, t, shape.text_tokens))
                   for t in tokens)

    base = flops([s.T for s in seqs])
    rows = []
    for family in families:
        for K in factors:
            outs = [run_compressor(s, family, K) for s in seqs]
            agg = _aggregate(outs)
            f = flops([o.output_tokens for o in outs])
            rows.append({
                "compressor": family,
                "K": K,
                "tokens": agg["output_tokens"],
                "tok_per_s": agg["output_rate"],
                "flops": float(f),
                "savings_vs_baseline": base / f if f else float("inf"),
            })
    return rows


def cmd_sweep(args) -> int:
    try:
        factors = [int(k) for k in str(args.factors).split(",") if k.strip()]
    except ValueError:
        raise UsageError(f"bad --factors {args.factors!r}") from None
    if not factors or min(factors) < 1:
        raise UsageError("--factors must be a non-empty list of integers >= 1")
    families = [f.strip() for f in args.compressors.split(",") if f.strip()]
    bad = [f for f in families if f not in ("uniavg", "unisamp")]
    if bad or not families:
        raise UsageError(f"sweep supports uniavg and unisamp, got {args.compressors!r}")
    if not args.inputs:
        raise UsageError("no inputs given")
    loaded, errors = _load_all(args.inputs)
    for e in errors:
        log.warning("skipping %s: %s", e["input"], e["error"])
    if not loaded:
        return EXIT_PARTIAL
    shape = costmodel.LlmShape(args.layers, args.d_model, 0, args.text_tokens)
    rows = sweep_rows([s for _, s in loaded], factors, families, shape)
    _emit(reports.dump(rows, args.format), args.out)
    return EXIT_PARTIAL if errors else EXIT_OK


def _matched_pairs(args):
    refs = {u.id: u.tokens for u in featio.load_utterances(args.refs)}
    hyps = {u.id: u.tokens for u in featio.load_utterances(args.hyps)}
    if refs.keys() != hyps.keys():
        only_r = sorted(refs.keys() - hyps.keys())
        only_h = sorted(hyps.keys() - refs.keys())
        raise UsageError(f"utterance ids differ: refs-only {only_r[:5]}, hyps-only {only_h[:5]}")
    return [(uid, refs[uid], hyps[uid]) for uid in sorted(refs)]


def _prep(tokens, args):
    tokens = list(tokens)
    if getattr(args, "normalize", False):
        tokens = metrics.normalize_tokens(tokens)
    if getattr(args, "zh_char_split", False):
        tokens = metrics.char_split(tokens)
    return tokens


def cmd_score(args) -> int:
    triples = _matched_pairs(args)
    pairs = [(_prep(r, args), _prep(h, args)) for _, r, h in triples]
    if args.metric == "wer":
        for (uid, _, _), (r, _) in zip(triples, pairs):
            if not r:
                raise UsageError(f"reference {uid!r} is empty")
        pooled = metrics.corpus_wer(pairs)
        report = {"metric": "wer", "n_utterances": len(pairs), **pooled.to_dict()}
        if args.both_aggregations:
            report["per_utterance_mean_wer"] = metrics.mean_utterance_wer(pairs)
    else:
        report = {"metric": "bleu", "n_utterances": len(pairs), **metrics.corpus_bleu(pairs).to_dict()}
    report["normalize"] = bool(args.normalize)
    report["zh_char_split"] = bool(args.zh_char_split)
    _emit(reports.dump(report if args.format == "json" else [report], args.format), args.out)
    return EXIT_OK


def cmd_cost(args) -> int:
    after = args.before if args.after is None else args.after
    shape = costmodel.LlmShape(args.layers, args.d_model, 0, args.text_tokens)
    try:
        ratio = costmodel.savings(args.before, after, shape)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = []
    for label, tokens in (("before", args.before), ("after", after)):
        s = costmodel.LlmShape(args.layers, args.d_model, tokens, args.text_tokens)
        rows.append({"point": label, "audio_tokens": tokens, "text_tokens": args.text_tokens,
                     "flops": costmodel.attention_cost(s)})
    report = {"rows": rows, "savings": ratio, "layers": args.layers, "d_model": args.d_model,
              "note": costmodel.COST_NOTE}
    _emit(reports.dump(report if args.format == "json" else rows, args.format), args.out)
    return EXIT_OK


def cmd_judge(args) -> int:
    overrides = {"timeout": args.timeout, "max_retries": args.retries, "max_concurrency": args.concurrency}
    if args.model:
        overrides["model"] = args.model
    if args.template:
        overrides["prompt_template"] = Path(args.template).read_text(encoding="utf-8")
    try:
        cfg = judgeclient.JudgeConfig.from_env(**overrides)
    except judgeclient.JudgeConfigError as exc:
        raise UsageError(str(exc)) from None
    triples = _matched_pairs(args)
    pairs = [(uid, " ".join(h), " ".join(r)) for uid, r, h in triples]
    try:
        result = judgeclient.judge_corpus(cfg, pairs, out_path=args.out)
    except judgeclient.JudgeCorpusError as exc:
        log.error("%s; %d partial results written to %s", exc, len(exc.partial), args.out)
        return EXIT_PARTIAL
    sys.stdout.write(json.dumps(result.summary(), sort_keys=True) + "\n")
    return EXIT_OK


def cmd_melfront(args) -> int:
    cfg = melfront.MelConfig(pool_rate=args.pool_rate)
    seq = melfront.wav_to_features(Path(args.wav), cfg, pool=not args.no_pool)
    n = featio.save_features(seq, args.out)
    sys.stdout.write(json.dumps({"output": args.out, "T": seq.T, "D": seq.D,
                                 "frame_rate": seq.frame_rate, "bytes": n}) + "\n")
    return EXIT_OK


def cmd_info(args) -> int:
    status = EXIT_OK
    for path in args.files:
        try:
            with open(path, "rb") as fh:
                hdr = featio.read_header(fh)
        except (OSError, ValueError) as exc:
            sys.stdout.write(json.dumps({"file": path, "error": f"{type(exc).__name__}: {exc}"}) + "\n")
            status = EXIT_PARTIAL
            continue
        sys.stdout.write(json.dumps({"file": path, **hdr}) + "\n")
    return status


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _add_llm_shape(p):
    p.add_argument("--layers", type=int, default=costmodel.DEFAULT_LAYERS)
    p.add_argument("--d-model", type=int, default=costmodel.DEFAULT_D_MODEL)
    p.add_argument("--text-tokens", type=int, default=0)


def _add_metric_flags(p):
    p.add_argument("--refs", required=True, help="reference utterances, id<TAB>tokens")
    p.add_argument("--hyps", required=True, help="hypothesis utterances, id<TAB>tokens")
    p.add_argument("--normalize", action="store_true", help="lowercase and strip punctuation")
    p.add_argument("--zh-char-split", action="store_true", help="score characters instead of tokens")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tokcomp", description="audio token compression toolkit")
    parser.add_argument("--config", help="key=value file supplying defaults for the subcommand")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="compress ATCF/WAV inputs and write an accounting report")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--compressor", choices=COMPRESSORS, required=True)
    p.add_argument("-K", "--K", type=int, dest="K")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("sweep", help="token count and attention cost vs compression factor")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--factors", default="1,2,3,4,5,6")
    p.add_argument("--compressors", default="uniavg,unisamp")
    _add_llm_shape(p)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("score", help="WER or BLEU of hypotheses against references")
    _add_metric_flags(p)
    p.add_argument("--metric", choices=("wer", "bleu"), default="wer")
    p.add_argument("--both-aggregations", action="store_true",
                   help="also report the mean of per-utterance WER")
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("cost", help="quadratic attention cost and savings")
    p.add_argument("--before", type=int, required=True, help="audio tokens before compression")
    p.add_argument("--after", type=int, help="audio tokens after compression")
    _add_llm_shape(p)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("judge", help="score hypotheses with an LLM judge endpoint")
    p.add_argument("--refs", required=True)
    p.add_argument("--hyps", required=True)
    p.add_argument("--out", required=True, help="JSON-lines output")
    p.add_argument("--model")
    p.add_argument("--template", help="prompt template file ($prediction, $reference)")
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--retries", type=int, default=3)
    p.add_argument("--concurrency", type=int, default=4)
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("melfront", help="16 kHz mono WAV to pooled log-mel ATCF")
    p.add_argument("wav")
    p.add_argument("--out", required=True)
    p.add_argument("--pool-rate", type=int, default=2)
    p.add_argument("--no-pool", action="store_true")
    p.set_defaults(func=cmd_melfront)

    p = sub.add_parser("info", help="print ATCF headers")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_info)
    return parser


def _apply_config(parser, argv: list[str]) -> tuple[list[str], dict]:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return argv, {}
    cfg = read_config(known.config)
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    cmd_idx = next((i for i, tok in enumerate(rest) if tok in subs.choices), None)
    if cmd_idx is None:
        return rest, cfg
    injected = _config_argv(subs.choices[rest[cmd_idx]], cfg)
    return rest[:cmd_idx + 1] + injected + rest[cmd_idx + 1:], cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv, file_cfg = _apply_config(parser, argv)
    except (UsageError, OSError) as exc:
        sys.stderr.write(f"tokcomp: config error: {exc}\n")
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if getattr(args, "inputs", None) == [] and "inputs" in file_cfg:
        args.inputs = file_cfg["inputs"].split()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"tokcomp: {exc}\n")
        return EXIT_USAGE
    except (featio.FeatioError, ValueError, OSError) as exc:
        sys.stderr.write(f"tokcomp: {type(exc).__name__}: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
