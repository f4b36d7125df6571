"""Spam-stream analysis: drifting priors, cost curves, term bursts, prequential evaluation.

The text normalizer lives at ``spamdrift.normalize.normalize``; it is not
re-exported here so that ``spamdrift.normalize`` keeps naming the module.
"""

from .corpus import Label, Message, WeekBucket, bucket_by_week, parse_maildir, parse_mbox
from .costs import ClassifierPoint, CostSpec, PcfRange, dominant_over_range, expected_cost, pcf, pcf_range
from .drift import TermWeekMatrix, WeekSeries, chi2_bursts, prior_series, series_range, term_week_counts
from .filtereval import EvalReport, NaiveBayesModel, classify, cost_ratio_sweep, prequential_run
from .normalize import NormalizedText, tokenize
from .synth import StreamSpec, TopicSpec, generate, obfuscate

__version__ = "0.1.0"

__all__ = [
    "ClassifierPoint", "CostSpec", "EvalReport", "Label", "Message", "NaiveBayesModel",
    "NormalizedText", "PcfRange", "StreamSpec", "TermWeekMatrix", "TopicSpec", "WeekBucket",
    "WeekSeries", "bucket_by_week", "chi2_bursts", "classify", "cost_ratio_sweep",
    "dominant_over_range", "expected_cost", "generate", "obfuscate",
    "parse_maildir", "parse_mbox", "pcf", "pcf_range", "prequential_run", "prior_series",
    "series_range", "term_week_counts", "tokenize",
]
