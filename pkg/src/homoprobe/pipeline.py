"""Stage orchestration: dict, extract, generate, score, perturb, probe, report.

Each stage reads the previous stage's artifact and writes a deterministic
artifact under the output directory. Timestamps live only in a sidecar
meta file next to each artifact; the sidecar also records a fingerprint of
the inputs so an unchanged stage is skipped on rerun.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import homogen, perturb, probe, report, scoring
from .dataset import Dataset, load_dataset, save_dataset, select_containing
from .errors import StageDependencyError, ValidationError
from .lexicon import (
    FrequencyDict,
    PinyinTable,
    Segmenter,
    build_frequency_dict,
    count_substring_occurrences,
    iter_corpus_lines,
)

STAGE_ORDER = ("dict", "extract", "generate", "score", "perturb", "probe", "report")


@dataclass
class PipelineConfig:
    corpus: Path
    pinyin_table: Path
    dataset: Path
    word_list: Path
    m1_rules: list[Path]
    fixes: Path
    qe_cassette: Path
    emotion_cassette: Path
    qe_models: list[str]
    emotion_model: str = "emotion"
    min_freq: int = 10
    combo_min: int = 100
    k: int = 5
    score_method: str = "percentile"
    score_direction: str | None = None
    parallelism: int = 4
    seed: int = 0
    out_dir: Path = Path("out")
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.min_freq < 1:
            raise ValidationError(f"min_freq must be >= 1, got {self.min_freq}")
        if self.combo_min < 0:
            raise ValidationError(f"combo_min must be >= 0, got {self.combo_min}")
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if self.parallelism < 1:
            raise ValidationError(f"parallelism must be >= 1, got {self.parallelism}")
        if self.score_method not in ("percentile", "selfinfo"):
            raise ValidationError(f"score_method must be percentile or selfinfo, got {self.score_method!r}")

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        obj = json.loads(path.read_text(encoding="utf-8"))
        base = path.parent

        def resolve(value: str) -> Path:
            p = Path(value)
            return p if p.is_absolute() else (base / p)

        known = {
            "corpus", "pinyin_table", "dataset", "word_list", "m1_rules", "fixes",
            "qe_cassette", "emotion_cassette", "qe_models", "emotion_model", "min_freq",
            "combo_min", "k", "score_method", "score_direction", "parallelism", "seed", "out_dir",
        }
        extras = {key: obj[key] for key in obj if key not in known}
        return cls(
            corpus=resolve(obj["corpus"]),
            pinyin_table=resolve(obj["pinyin_table"]),
            dataset=resolve(obj["dataset"]),
            word_list=resolve(obj["word_list"]),
            m1_rules=[resolve(p) for p in obj["m1_rules"]],
            fixes=resolve(obj["fixes"]),
            qe_cassette=resolve(obj["qe_cassette"]),
            emotion_cassette=resolve(obj["emotion_cassette"]),
            qe_models=list(obj["qe_models"]),
            emotion_model=obj.get("emotion_model", "emotion"),
            min_freq=obj.get("min_freq", 10),
            combo_min=obj.get("combo_min", 100),
            k=obj.get("k", 5),
            score_method=obj.get("score_method", "percentile"),
            score_direction=obj.get("score_direction"),
            parallelism=obj.get("parallelism", 4),
            seed=obj.get("seed", 0),
            out_dir=resolve(obj.get("out_dir", "out")),
            extras=extras,
        )


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _fingerprint(inputs: list[Path], params: dict) -> str:
    payload = {
        "inputs": {str(p): _sha256_file(p) for p in sorted(inputs)},
        "params": params,
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


def _meta_path(artifact: Path) -> Path:
    return artifact.with_name(artifact.name + ".meta.json")


def _up_to_date(artifacts: list[Path], fingerprint: str) -> bool:
    for artifact in artifacts:
        meta = _meta_path(artifact)
        if not artifact.exists() or not meta.exists():
            return False
        try:
            if json.loads(meta.read_text(encoding="utf-8")).get("fingerprint") != fingerprint:
                return False
        except json.JSONDecodeError:
            return False
    return True


def _write_meta(artifacts: list[Path], fingerprint: str, stage: str) -> None:
    # Timestamps are isolated here so the artifacts themselves stay byte-reproducible.
    for artifact in artifacts:
        _meta_path(artifact).write_text(
            json.dumps(
                {
                    "stage": stage,
                    "fingerprint": fingerprint,
                    "created": datetime.now(timezone.utc).isoformat(),
                },
                sort_keys=True,
            )
            + "\n",
            encoding="utf-8",
        )


def _require(path: Path, stage: str, what: str) -> Path:
    if not path.exists():
        raise StageDependencyError(f"stage {stage!r} needs {what} at {path}; run the upstream stage first")
    return path


def _write_jsonl(path: Path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


class Pipeline:
    def __init__(self, config: PipelineConfig, force: bool = False):
        self.config = config
        self.force = force
        self.out = Path(config.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "groups").mkdir(exist_ok=True)
        (self.out / "probes").mkdir(exist_ok=True)

    # artifact paths
    @property
    def dict_path(self) -> Path:
        return self.out / "dict.json"

    @property
    def slang_path(self) -> Path:
        return self.out / "slang.jsonl"

    @property
    def selected_path(self) -> Path:
        return self.out / "selected.jsonl"

    @property
    def candidates_path(self) -> Path:
        return self.out / "candidates.jsonl"

    @property
    def scored_path(self) -> Path:
        return self.out / "scored.jsonl"

    def group_path(self, name: str) -> Path:
        return self.out / "groups" / f"{name.lower()}.jsonl"

    def qe_probe_path(self, model: str, group: str) -> Path:
        return self.out / "probes" / f"qe__{model}__{group.lower()}.jsonl"

    def emotion_probe_path(self, group: str) -> Path:
        return self.out / "probes" / f"emotion__{group.lower()}.jsonl"

    @property
    def report_paths(self) -> dict[str, Path]:
        return {
            "json": self.out / "report.json",
            "table": self.out / "report.txt",
            "csv": self.out / "report.csv",
        }

    def _run_stage(self, stage: str, inputs: list[Path], params: dict, artifacts: list[Path], builder) -> bool:
        for path in inputs:
            if not path.exists():
                if self.out == path or self.out in path.parents:
                    raise StageDependencyError(
                        f"stage {stage!r} needs {path.name}; run the upstream stage first"
                    )
                raise ValidationError(f"stage {stage!r}: input file {path} does not exist")
        fingerprint = _fingerprint(inputs, params)
        if not self.force and _up_to_date(artifacts, fingerprint):
            return False
        builder()
        _write_meta(artifacts, fingerprint, stage)
        return True

    # --- stages ---

    def stage_dict(self) -> None:
        cfg = self.config

        def build():
            freq = build_frequency_dict(iter_corpus_lines(cfg.corpus), min_count=1, source_id=cfg.corpus.name)
            freq.save(self.dict_path)

        self._run_stage("dict", [cfg.corpus], {"min_count": 1}, [self.dict_path], build)

    def stage_extract(self) -> None:
        cfg = self.config

        def build():
            ds = load_dataset(cfg.dataset)
            seg = Segmenter.load(cfg.word_list)
            entries = homogen.extract_error_words(list(ds.instances), seg, min_freq=cfg.min_freq)
            _write_jsonl(self.slang_path, [{"word": e.word, "frequency": e.frequency} for e in entries])
            selected = select_containing(ds, entries)
            save_dataset(selected, self.selected_path)

        self._run_stage(
            "extract",
            [cfg.dataset, cfg.word_list],
            {"min_freq": cfg.min_freq},
            [self.slang_path, self.selected_path],
            build,
        )

    def _load_slang(self) -> list[homogen.SlangEntry]:
        entries = []
        for line in self.slang_path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                obj = json.loads(line)
                entries.append(homogen.SlangEntry(word=obj["word"], frequency=obj["frequency"]))
        return entries

    def stage_generate(self) -> None:
        cfg = self.config
        _require(self.slang_path, "generate", "the extracted slang list")
        _require(self.dict_path, "generate", "the frequency dictionary")

        def build():
            table = PinyinTable.load(cfg.pinyin_table)
            freq = FrequencyDict.load(self.dict_path)
            entries = self._load_slang()
            combos: set[str] = set()
            for entry in entries:
                combos.update(homogen.enumerate_combinations(entry.word, table))
            string_counts = count_substring_occurrences(iter_corpus_lines(cfg.corpus), combos)
            freq = freq.merged_with(string_counts)
            rows = []
            for entry in entries:
                cand_set = homogen.generate_candidates(entry, table, freq, combo_min=cfg.combo_min)
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
            _write_jsonl(self.candidates_path, rows)

        self._run_stage(
            "generate",
            [cfg.pinyin_table, cfg.corpus, self.slang_path, self.dict_path],
            {"combo_min": cfg.combo_min},
            [self.candidates_path],
            build,
        )

    def _load_candidate_sets(self, path: Path) -> list[homogen.CandidateSet]:
        by_original: dict[str, list[homogen.Candidate]] = {}
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            by_original.setdefault(obj["original"], []).append(
                homogen.Candidate(
                    text=obj["text"],
                    root=(),
                    aggregate_frequency=obj["F_h"],
                    combo_frequency=obj["combo_freq"],
                    percentile=obj.get("percentile"),
                    self_information=obj.get("self_info"),
                )
            )
        return [
            homogen.CandidateSet(
                original=homogen.SlangEntry(word=original, frequency=1),
                candidates=tuple(cands),
            )
            for original, cands in sorted(by_original.items())
        ]

    def stage_score(self) -> None:
        cfg = self.config
        _require(self.candidates_path, "score", "the generated candidates")
        _require(self.dict_path, "score", "the frequency dictionary")

        def build():
            freq = FrequencyDict.load(self.dict_path)
            rows = []
            for cand_set in self._load_candidate_sets(self.candidates_path):
                if cfg.score_method == "percentile":
                    direction = cfg.score_direction or "asc"
                    ranked = scoring.percentile_scores(cand_set, freq, k=cfg.k, direction=direction)
                else:
                    direction = cfg.score_direction or "desc"
                    provider = scoring.corpus_unigram_provider(freq)
                    ranked = scoring.rank_by_self_information(cand_set, provider, k=cfg.k, direction=direction)
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
            _write_jsonl(self.scored_path, rows)

        self._run_stage(
            "score",
            [self.candidates_path, self.dict_path],
            {"method": cfg.score_method, "k": cfg.k, "direction": cfg.score_direction},
            [self.scored_path],
            build,
        )

    def stage_perturb(self) -> None:
        cfg = self.config
        _require(self.selected_path, "perturb", "the selected dataset")
        for rules_path in cfg.m1_rules:
            _require(rules_path, "perturb", "a method-1 rules file")

        def build():
            ds = load_dataset(self.selected_path)
            g0 = perturb.make_g0(ds)
            save_dataset(g0.to_dataset(), self.group_path("G0"))
            for rank, rules_path in enumerate(cfg.m1_rules, start=1):
                rules = perturb.load_rules(rules_path)
                group = perturb.apply_method1(g0, rules, name=f"M1G{rank}")
                save_dataset(group.to_dataset(), self.group_path(group.name))
            fixes = perturb.load_fixes(cfg.fixes)
            m2g1 = perturb.apply_method2_fix_slang(g0, fixes, name="M2G1")
            save_dataset(m2g1.to_dataset(), self.group_path("M2G1"))
            m2g2 = perturb.apply_method2_use_reference(g0, name="M2G2")
            save_dataset(m2g2.to_dataset(), self.group_path("M2G2"))

        group_names = self.all_group_names()
        self._run_stage(
            "perturb",
            [self.selected_path, cfg.fixes, *cfg.m1_rules],
            {"ranks": len(cfg.m1_rules)},
            [self.group_path(name) for name in group_names],
            build,
        )

    def all_group_names(self) -> list[str]:
        return ["G0"] + [f"M1G{i}" for i in range(1, len(self.config.m1_rules) + 1)] + ["M2G1", "M2G2"]

    def emotion_group_names(self) -> list[str]:
        return ["G0"] + [f"M1G{i}" for i in range(1, len(self.config.m1_rules) + 1)]

    def stage_probe(self) -> None:
        cfg = self.config
        artifacts = [
            self.qe_probe_path(model, group) for model in cfg.qe_models for group in self.all_group_names()
        ] + [self.emotion_probe_path(group) for group in self.emotion_group_names()]

        def load_groups() -> dict[str, perturb.PerturbationGroup]:
            groups = {}
            for name in self.all_group_names():
                ds = load_dataset(self.group_path(name))
                groups[name] = perturb.PerturbationGroup(name=name, instances=ds.instances, provenance="loaded")
            return groups

        def build():
            groups = load_groups()
            qe_cassette = probe.load_cassette(cfg.qe_cassette)
            for model in cfg.qe_models:
                provider = probe.ReplayQEProvider(qe_cassette, model)
                for name in self.all_group_names():
                    result = probe.run_probe(groups[name], provider, parallelism=cfg.parallelism)
                    _write_jsonl(
                        self.qe_probe_path(model, name),
                        [
                            {"id": e.instance_id, "score": e.value, "error": e.error}
                            for e in result.entries
                        ],
                    )
            emotion_cassette = probe.load_cassette(cfg.emotion_cassette)
            predictor = probe.ReplayEmotionPredictor(emotion_cassette, cfg.emotion_model)
            for name in self.emotion_group_names():
                result = probe.predict_labels(groups[name], predictor, parallelism=cfg.parallelism)
                _write_jsonl(
                    self.emotion_probe_path(name),
                    [{"id": e.instance_id, "label": e.value, "error": e.error} for e in result.entries],
                )

        self._run_stage(
            "probe",
            [cfg.qe_cassette, cfg.emotion_cassette, *[self.group_path(n) for n in self.all_group_names()]],
            {"models": cfg.qe_models, "emotion_model": cfg.emotion_model},
            artifacts,
            build,
        )

    def stage_report(self) -> None:
        cfg = self.config
        _require(self.selected_path, "report", "the selected dataset")
        probe_paths = [
            self.qe_probe_path(model, group) for model in cfg.qe_models for group in self.all_group_names()
        ]
        emotion_paths = [self.emotion_probe_path(group) for group in self.emotion_group_names()]
        for path in probe_paths + emotion_paths:
            _require(path, "report", "a probe artifact")

        def build():
            ds = load_dataset(self.selected_path)
            human = {inst.id: inst.qe_score for inst in ds.instances}
            gold = [(inst.id, inst.emotion_label) for inst in ds.instances]
            probe_scores = {}
            for model in cfg.qe_models:
                for group in self.all_group_names():
                    rows = [
                        json.loads(line)
                        for line in self.qe_probe_path(model, group).read_text(encoding="utf-8").splitlines()
                        if line.strip()
                    ]
                    probe_scores[(group, model)] = [
                        (row["id"], row["score"]) for row in rows if row.get("error") is None
                    ]
            predicted_by_group = {}
            for group in self.emotion_group_names():
                if group == "G0":
                    continue
                rows = [
                    json.loads(line)
                    for line in self.emotion_probe_path(group).read_text(encoding="utf-8").splitlines()
                    if line.strip()
                ]
                predicted_by_group[group] = [
                    (row["id"], row["label"]) for row in rows if row.get("error") is None
                ]
            m1_groups = [f"M1G{i}" for i in range(1, len(cfg.m1_rules) + 1)]
            correlations = report.correlation_reports(
                human,
                {key: value for key, value in probe_scores.items() if key[0] in ["G0"] + m1_groups},
            )
            increases = report.increase_reports(probe_scores)
            labels = report.label_reports(gold, predicted_by_group)
            full = report.RobustnessReport(
                correlations=correlations,
                increases=increases,
                labels=labels,
                baseline="G0",
                label_averaging="weighted",
            )
            paths = self.report_paths
            paths["json"].write_text(report.render_json(full), encoding="utf-8")
            paths["table"].write_text(report.render_text(full), encoding="utf-8")
            paths["csv"].write_text(report.render_csv(full), encoding="utf-8")

        self._run_stage(
            "report",
            [self.selected_path, *probe_paths, *emotion_paths],
            {"models": cfg.qe_models},
            list(self.report_paths.values()),
            build,
        )


def run_pipeline(config: PipelineConfig, stages: list[str], force: bool = False) -> dict[str, list[Path]]:
    """Run the requested stages in canonical order; returns artifact paths per stage."""
    unknown = [s for s in stages if s not in STAGE_ORDER]
    if unknown:
        raise ValidationError(f"unknown stage(s) {unknown}; valid: {list(STAGE_ORDER)}")
    pipeline = Pipeline(config, force=force)
    produced: dict[str, list[Path]] = {}
    for stage in STAGE_ORDER:
        if stage not in stages:
            continue
        getattr(pipeline, f"stage_{stage}")()
        produced[stage] = _stage_artifacts(pipeline, stage)
    return produced


def _stage_artifacts(pipeline: Pipeline, stage: str) -> list[Path]:
    if stage == "dict":
        return [pipeline.dict_path]
    if stage == "extract":
        return [pipeline.slang_path, pipeline.selected_path]
    if stage == "generate":
        return [pipeline.candidates_path]
    if stage == "score":
        return [pipeline.scored_path]
    if stage == "perturb":
        return [pipeline.group_path(name) for name in pipeline.all_group_names()]
    if stage == "probe":
        return [
            pipeline.qe_probe_path(model, group)
            for model in pipeline.config.qe_models
            for group in pipeline.all_group_names()
        ] + [pipeline.emotion_probe_path(group) for group in pipeline.emotion_group_names()]
    if stage == "report":
        return list(pipeline.report_paths.values())
    return []
