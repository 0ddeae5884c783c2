"""Chinese homophone slang generation and MT quality-estimation robustness probing."""

from .dataset import EMOTION_LABELS, Dataset, Instance, load_dataset, save_dataset, select_containing
from .homogen import (
    Candidate,
    CandidateSet,
    SlangEntry,
    extract_error_words,
    generate_candidates,
)
from .lexicon import (
    FrequencyDict,
    PinyinTable,
    Segmenter,
    build_frequency_dict,
    latinize,
    segment,
)
from .metrics import (
    RatingRecord,
    human_method_correlation,
    increase_rate,
    label_consistency,
    pct_change,
    pearson,
    spearman,
)
from .perturb import (
    PerturbationGroup,
    SubstitutionRule,
    apply_method1,
    apply_method2_fix_slang,
    apply_method2_use_reference,
    make_g0,
)
from .probe import ProbeResult, predict_labels, run_probe
from .scoring import (
    RankedCandidates,
    corpus_unigram_provider,
    percentile_scores,
    rank_by_self_information,
    remote_lm_provider,
    self_information,
)

__version__ = "0.1.0"

__all__ = [
    "EMOTION_LABELS",
    "Candidate",
    "CandidateSet",
    "Dataset",
    "FrequencyDict",
    "Instance",
    "PerturbationGroup",
    "PinyinTable",
    "ProbeResult",
    "RankedCandidates",
    "RatingRecord",
    "Segmenter",
    "SlangEntry",
    "SubstitutionRule",
    "apply_method1",
    "apply_method2_fix_slang",
    "apply_method2_use_reference",
    "build_frequency_dict",
    "corpus_unigram_provider",
    "extract_error_words",
    "generate_candidates",
    "human_method_correlation",
    "increase_rate",
    "label_consistency",
    "latinize",
    "load_dataset",
    "make_g0",
    "pct_change",
    "pearson",
    "percentile_scores",
    "predict_labels",
    "rank_by_self_information",
    "remote_lm_provider",
    "run_probe",
    "save_dataset",
    "segment",
    "select_containing",
    "self_information",
    "spearman",
]
