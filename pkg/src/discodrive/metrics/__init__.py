from .kernels import HAVE_SPEEDUPS, count_ngrams, lcs_length, lcs_length_py
from .report import (
    MetricReport,
    ScoreFileError,
    corpus_distinct,
    corpus_report,
    render_distinct_table,
    render_report_table,
)
from .scores import (
    MetricParams,
    UndefinedMetricError,
    bleu,
    distinct_n,
    meteor,
    meteor_corpus,
    rouge_l,
    rouge_l_corpus,
)
from .stemmer import stem

__all__ = [
    "HAVE_SPEEDUPS",
    "MetricParams",
    "MetricReport",
    "ScoreFileError",
    "UndefinedMetricError",
    "bleu",
    "corpus_distinct",
    "corpus_report",
    "count_ngrams",
    "distinct_n",
    "lcs_length",
    "lcs_length_py",
    "meteor",
    "meteor_corpus",
    "render_distinct_table",
    "render_report_table",
    "rouge_l",
    "rouge_l_corpus",
    "stem",
]
