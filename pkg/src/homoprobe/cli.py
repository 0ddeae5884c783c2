"""Command-line entry point wiring the whole pipeline.

Every failure path exits non-zero and prints one machine-parseable JSON
object on stderr; normal output goes to stdout or the requested files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import annotation, homogen, perturb, pipeline, probe, scoring
from .dataset import load_dataset, save_dataset, select_containing
from .errors import ToolError, ValidationError
from .lexicon import (
    FrequencyDict,
    PinyinTable,
    Segmenter,
    build_frequency_dict,
    count_substring_occurrences,
    iter_corpus_lines,
)
from .metrics import human_method_correlation, load_ratings, rating_to_json_dict

DEFAULT_PINYIN_TABLE = Path(__file__).parent / "data" / "pinyin_table.tsv"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
        sys.exit(2)


def _write_jsonl(path: str, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def cmd_build_dict(args) -> int:
    freq = build_frequency_dict(
        iter_corpus_lines(args.corpus), min_count=args.min_count, source_id=Path(args.corpus).name
    )
    freq.save(args.out)
    print(f"wrote {args.out}: {len(freq.counts)} keys, {freq.total_chars} characters")
    return 0


def cmd_extract_slang(args) -> int:
    ds = load_dataset(args.dataset)
    seg = Segmenter.load(args.word_list)
    entries = homogen.extract_error_words(list(ds.instances), seg, min_freq=args.min_freq)
    _write_jsonl(args.out, [{"word": e.word, "frequency": e.frequency} for e in entries])
    if args.selected_out:
        save_dataset(select_containing(ds, entries), args.selected_out)
    print(f"wrote {args.out}: {len(entries)} slang words")
    return 0


def cmd_generate(args) -> int:
    table = PinyinTable.load(args.pinyin_table)
    freq = FrequencyDict.load(args.dict)
    entries = []
    for line in Path(args.slang).read_text(encoding="utf-8").splitlines():
        if line.strip():
            obj = json.loads(line)
            entries.append(homogen.SlangEntry(word=obj["word"], frequency=obj.get("frequency", 1)))
    combos: set[str] = set()
    for entry in entries:
        combos.update(homogen.enumerate_combinations(entry.word, table))
    freq = freq.merged_with(count_substring_occurrences(iter_corpus_lines(args.corpus), combos))
    rows = []
    for entry in entries:
        cand_set = homogen.generate_candidates(entry, table, freq, combo_min=args.combo_min)
        for cand in cand_set.candidates:
            rows.append(
                {
                    "original": entry.word,
                    "text": cand.text,
                    "F_h": cand.aggregate_frequency,
                    "combo_freq": cand.combo_frequency,
                    "percentile": None,
                    "self_info": None,
                }
            )
    _write_jsonl(args.out, rows)
    print(f"wrote {args.out}: {len(rows)} candidates for {len(entries)} slang words")
    return 0


def _load_candidate_sets(path: str) -> list[homogen.CandidateSet]:
    by_original: dict[str, list[homogen.Candidate]] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        by_original.setdefault(obj["original"], []).append(
            homogen.Candidate(
                text=obj["text"],
                root=(),
                aggregate_frequency=obj.get("F_h", 0),
                combo_frequency=obj.get("combo_freq", 0),
                percentile=obj.get("percentile"),
                self_information=obj.get("self_info"),
            )
        )
    return [
        homogen.CandidateSet(original=homogen.SlangEntry(word=o, frequency=1), candidates=tuple(c))
        for o, c in sorted(by_original.items())
    ]


def cmd_score(args) -> int:
    rows = []
    for cand_set in _load_candidate_sets(args.candidates):
        if args.method == "percentile":
            if not args.dict:
                raise ValidationError("percentile scoring needs --dict")
            freq = FrequencyDict.load(args.dict)
            ranked = scoring.percentile_scores(cand_set, freq, k=args.k, direction=args.direction or "asc")
        else:
            if args.provider == "corpus":
                if not args.dict:
                    raise ValidationError("the corpus provider needs --dict")
                provider = scoring.corpus_unigram_provider(FrequencyDict.load(args.dict))
            else:
                if not args.endpoint or not args.model:
                    raise ValidationError("remote provider needs --endpoint and --model")
                provider = scoring.remote_lm_provider(args.endpoint, args.model)
            ranked = scoring.rank_by_self_information(cand_set, provider, k=args.k, direction=args.direction or "desc")
        for cand, _score in ranked.items:
            rows.append(
                {
                    "original": cand_set.original.word,
                    "text": cand.text,
                    "F_h": cand.aggregate_frequency,
                    "combo_freq": cand.combo_frequency,
                    "percentile": cand.percentile,
                    "self_info": cand.self_information,
                }
            )
    _write_jsonl(args.out, rows)
    print(f"wrote {args.out}: {len(rows)} scored candidates")
    return 0


def cmd_perturb(args) -> int:
    ds = load_dataset(args.dataset)
    g0 = perturb.make_g0(ds)
    spec = args.group.lower()
    if spec == "g0":
        group = g0
    elif spec.startswith("m1:"):
        if not args.rules:
            raise ValidationError("method-1 groups need --rules")
        rank = int(spec.split(":", 1)[1])
        group = perturb.apply_method1(g0, perturb.load_rules(args.rules), name=f"M1G{rank}")
    elif spec == "m2g1":
        if not args.fixes:
            raise ValidationError("M2G1 needs --fixes")
        group = perturb.apply_method2_fix_slang(g0, perturb.load_fixes(args.fixes), name="M2G1")
    elif spec == "m2g2":
        group = perturb.apply_method2_use_reference(g0)
    else:
        raise ValidationError(f"unknown group spec {args.group!r} (use g0, m1:RANK, m2g1 or m2g2)")
    save_dataset(group.to_dataset(), args.out)
    print(f"wrote {args.out}: group {group.name}, {len(group.instances)} instances")
    return 0


def cmd_probe(args) -> int:
    ds = load_dataset(args.group_file)
    group = perturb.PerturbationGroup(name=args.group_name or ds.name.upper(), instances=ds.instances, provenance="loaded")
    if args.kind == "qe":
        if args.provider == "replay":
            if not args.cassette:
                raise ValidationError("replay provider needs --cassette")
            provider = probe.ReplayQEProvider(args.cassette, args.model)
        elif args.provider == "http":
            if not args.endpoint:
                raise ValidationError("http provider needs --endpoint")
            provider = probe.HttpQEProvider(args.endpoint, args.model)
        else:
            provider = probe.HashStubQEProvider(args.model)
        if args.record:
            provider = probe.RecordingQEProvider(provider, probe.CassetteWriter(args.record))
        result = probe.run_probe(group, provider, parallelism=args.parallelism)
        rows = [{"id": e.instance_id, "score": e.value, "error": e.error} for e in result.entries]
    else:
        if args.provider == "replay":
            if not args.cassette:
                raise ValidationError("replay provider needs --cassette")
            predictor = probe.ReplayEmotionPredictor(args.cassette, args.model)
        elif args.provider == "http":
            if not args.endpoint:
                raise ValidationError("http provider needs --endpoint")
            predictor = probe.HttpEmotionPredictor(args.endpoint, args.model)
        else:
            predictor = probe.HashStubEmotionPredictor(args.model)
        if args.record:
            predictor = probe.RecordingEmotionPredictor(predictor, probe.CassetteWriter(args.record))
        result = probe.predict_labels(group, predictor, parallelism=args.parallelism)
        rows = [{"id": e.instance_id, "label": e.value, "error": e.error} for e in result.entries]
    _write_jsonl(args.out, rows)
    status = "complete" if result.complete else f"incomplete ({len(result.missing())} missing)"
    print(f"wrote {args.out}: {len(rows)} predictions, {status}")
    return 0


def cmd_report(args) -> int:
    config = pipeline.PipelineConfig.from_file(args.config)
    if args.out_dir:
        config.out_dir = Path(args.out_dir)
    pipe = pipeline.Pipeline(config)
    pipe.stage_report()
    path = pipe.report_paths[{"json": "json", "table": "table", "csv": "csv"}[args.format]]
    print(path.read_text(encoding="utf-8"))
    return 0


def cmd_pipeline(args) -> int:
    config = pipeline.PipelineConfig.from_file(args.config)
    if args.out_dir:
        config.out_dir = Path(args.out_dir)
    stages = args.stages.split(",") if args.stages else list(pipeline.STAGE_ORDER)
    produced = pipeline.run_pipeline(config, [s.strip() for s in stages], force=args.force)
    for stage, artifacts in produced.items():
        print(f"{stage}: " + ", ".join(str(a) for a in artifacts))
    return 0


def cmd_annotate(args) -> int:
    if args.action == "export":
        if not args.candidates or not args.out:
            raise ValidationError("annotate export needs --candidates and --out")
        pairs = []
        for cand_set in _load_candidate_sets(args.candidates):
            for cand in cand_set.candidates:
                pairs.append((cand.text, cand_set.original.word))
        ds = load_dataset(args.dataset) if args.dataset else None
        items = annotation.export_tasks(pairs, ds, with_context=args.with_context, seed=args.seed)
        annotation.save_tasks(items, args.out)
        print(f"wrote {args.out}: {len(items)} task items")
        return 0
    if not args.path:
        raise ValidationError("annotate import needs --path")
    records = annotation.import_ratings(args.path)
    groups = annotation.group_by_annotator(records)
    summary = {a: len(r) for a, r in sorted(groups.items())}
    if args.out:
        _write_jsonl(args.out, [rating_to_json_dict(r) for r in records])
    print(json.dumps({"records": len(records), "annotators": summary}, ensure_ascii=False))
    return 0


def cmd_rate_correlation(args) -> int:
    ratings = load_ratings(args.ratings)
    scores = []
    for cand_set in _load_candidate_sets(args.scored):
        for cand in cand_set.candidates:
            value = cand.percentile if args.method == "percentile" else cand.self_information
            if value is not None:
                scores.append((cand.text, value))
    result = human_method_correlation(ratings, scores)
    print(
        json.dumps(
            {
                "per_annotator": dict(result.per_annotator),
                "vs_mean_rating": result.vs_mean_rating,
                "inter_annotator": dict(result.inter_annotator),
                "n_records": result.n_records,
                "n_candidates": result.n_candidates,
            },
            ensure_ascii=False,
            sort_keys=True,
        )
    )
    return 0


def cmd_serve_annotation(args) -> int:
    server = annotation.make_annotation_server(
        args.tasks, args.ratings, ui_dir=args.ui_dir, host=args.host, port=args.port
    )
    host, port = server.server_address[:2]
    print(f"serving annotation UI on http://{host}:{port} (Ctrl-C to stop)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="homoprobe", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-dict", help="count corpus character frequencies")
    p.add_argument("--corpus", required=True)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_dict)

    p = sub.add_parser("extract-slang", help="extract error words from highlighted spans")
    p.add_argument("--dataset", required=True)
    p.add_argument("--word-list", required=True)
    p.add_argument("--min-freq", type=int, default=10)
    p.add_argument("--out", required=True)
    p.add_argument("--selected-out")
    p.set_defaults(func=cmd_extract_slang)

    p = sub.add_parser("generate", help="enumerate homophone candidates")
    p.add_argument("--slang", required=True)
    p.add_argument("--pinyin-table", default=str(DEFAULT_PINYIN_TABLE))
    p.add_argument("--dict", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--combo-min", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("score", help="rank candidates by percentile or self-information")
    p.add_argument("--candidates", required=True)
    p.add_argument("--method", choices=["percentile", "selfinfo"], required=True)
    p.add_argument("--provider", choices=["corpus", "remote"], default="corpus")
    p.add_argument("--dict")
    p.add_argument("--endpoint")
    p.add_argument("--model")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--tie-order", choices=["codepoint"], default="codepoint")
    p.add_argument("--direction", choices=["asc", "desc"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("perturb", help="build a perturbation group")
    p.add_argument("--group", required=True, help="g0, m1:RANK, m2g1 or m2g2")
    p.add_argument("--dataset", required=True)
    p.add_argument("--rules")
    p.add_argument("--fixes")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("probe", help="send a group to an external scorer")
    p.add_argument("--group-file", required=True)
    p.add_argument("--group-name")
    p.add_argument("--kind", choices=["qe", "emotion"], default="qe")
    p.add_argument("--provider", choices=["replay", "http", "stub"], default="replay")
    p.add_argument("--cassette")
    p.add_argument("--endpoint")
    p.add_argument("--model", default="qe-stub")
    p.add_argument("--record", help="record responses into this cassette")
    p.add_argument("--parallelism", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("report", help="render the robustness report from probe artifacts")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir")
    p.add_argument("--baseline", default="g0", choices=["g0"])
    p.add_argument("--format", choices=["json", "table", "csv"], default="table")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("pipeline", help="run pipeline stages from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--stages", help="comma-separated subset of dict,extract,generate,score,perturb,probe,report")
    p.add_argument("--out-dir")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("annotate", help="export rating tasks / import rating files")
    p.add_argument("action", choices=["export", "import"])
    p.add_argument("--candidates")
    p.add_argument("--dataset")
    p.add_argument("--with-context", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--path")
    p.add_argument("--out")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("rate-correlation", help="correlate method scores with human ratings")
    p.add_argument("--ratings", required=True)
    p.add_argument("--scored", required=True)
    p.add_argument("--method", choices=["percentile", "selfinfo"], default="selfinfo")
    p.set_defaults(func=cmd_rate_correlation)

    p = sub.add_parser("serve-annotation", help="serve the rating UI and its JSON endpoints")
    p.add_argument("--tasks", required=True)
    p.add_argument("--ratings", required=True)
    p.add_argument("--ui-dir")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8421)
    p.set_defaults(func=cmd_serve_annotation)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ToolError as exc:
        print(json.dumps(exc.to_json(), ensure_ascii=False), file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(json.dumps({"error": "file_not_found", "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
