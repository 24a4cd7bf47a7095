"""Measure how compatible LLM answers are with an SME-validated body of
knowledge: corpus -> triplets -> reviewed graph -> sentence index, then
answer -> triplets -> sentences -> cosine proximity -> verdict."""

from .engine import (
    VERDICT_COMPATIBLE,
    VERDICT_MINIMAL,
    VERDICT_NONE,
    AnswerReport,
    SentenceScore,
    ThresholdConfig,
    compute_t2,
    render_report,
    score_answer,
    score_sentence,
)
from .errors import TrusterError
from .workspace import Workspace

__version__ = "0.1.0"

__all__ = [
    "AnswerReport",
    "SentenceScore",
    "ThresholdConfig",
    "TrusterError",
    "VERDICT_COMPATIBLE",
    "VERDICT_MINIMAL",
    "VERDICT_NONE",
    "Workspace",
    "compute_t2",
    "render_report",
    "score_answer",
    "score_sentence",
    "__version__",
]
