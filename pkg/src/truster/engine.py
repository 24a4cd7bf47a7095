"""Scoring core: thresholds, per-sentence proximity, verdicts, and the
printed report.

Verdict trichotomy per sentence: compatible (proximity >= t2), minimal
(0 < proximity < t2), none (no match at or above t1). All comparisons use
full-precision float64; only the rendered text rounds to 2 decimals.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

from .embedding import (
    EmbeddedSentence,
    EmbeddingProvider,
    SentenceText,
    embed_batch,
    triplet_to_sentence,
)
from .errors import ConfigError, ProviderMismatchError
from .gateway import ChatGateway
from .index import Match, VectorIndex
from .triplets import ORIGIN_ANSWER, PromptPair, extract_triplets

logger = logging.getLogger(__name__)

VERDICT_COMPATIBLE = "compatible"
VERDICT_MINIMAL = "minimal"
VERDICT_NONE = "none"

DEFAULT_T1 = 0.6
DEFAULT_A = 0.12


def compute_t2(t1: float, a: float, b: int) -> float:
    """t2 = t1 * a * b: `a*b` is the required number of matched KB sentences
    and t1 the minimum score each contributes."""
    if not 0.0 < t1 < 1.0:
        raise ConfigError(f"t1 must be in (0, 1), got {t1}")
    if not 0.0 < a <= 1.0:
        raise ConfigError(f"a must be in (0, 1], got {a}")
    if not isinstance(b, int) or isinstance(b, bool) or b < 1:
        raise ConfigError(f"b must be a positive integer, got {b!r}")
    return t1 * a * b


@dataclass(frozen=True)
class ThresholdConfig:
    t1: float = DEFAULT_T1
    a: float = DEFAULT_A
    b: int = 1

    def __post_init__(self) -> None:
        compute_t2(self.t1, self.a, self.b)  # range validation

    @property
    def t2(self) -> float:
        return compute_t2(self.t1, self.a, self.b)

    def with_b(self, b: int) -> "ThresholdConfig":
        return ThresholdConfig(t1=self.t1, a=self.a, b=b)


@dataclass(frozen=True)
class SentenceScore:
    query_sentence: SentenceText
    matches: tuple[Match, ...]
    proximity: float
    verdict: str

    def to_dict(self) -> dict:
        return {
            "query": self.query_sentence.text,
            "matches": [
                {"entry_id": m.entry_id, "sentence": m.sentence_text, "score": m.score}
                for m in self.matches
            ],
            "proximity": self.proximity,
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class AnswerReport:
    question: str
    answer_text: str
    sentence_scores: tuple[SentenceScore, ...]
    answer_proximity: float
    answer_threshold: float
    answer_verdict: str
    no_statements: bool

    def to_dict(self) -> dict:
        return {
            "question": self.question,
            "answer_text": self.answer_text,
            "sentences": [s.to_dict() for s in self.sentence_scores],
            "answer_proximity": self.answer_proximity,
            "answer_threshold": self.answer_threshold,
            "answer_verdict": self.answer_verdict,
            "no_statements": self.no_statements,
        }


def _verdict(proximity: float, has_matches: bool, t2: float) -> str:
    if not has_matches:
        return VERDICT_NONE
    return VERDICT_COMPATIBLE if proximity >= t2 else VERDICT_MINIMAL


def score_sentence(
    q: EmbeddedSentence, index: VectorIndex, cfg: ThresholdConfig
) -> SentenceScore:
    if q.provider_id != index.provider_id:
        raise ProviderMismatchError(
            f"query embedded with {q.provider_id!r} but index holds {index.provider_id!r}"
        )
    matches = tuple(index.query(q.array(), cfg.t1))
    proximity = float(sum(m.score for m in matches))
    return SentenceScore(
        query_sentence=q.sentence,
        matches=matches,
        proximity=proximity,
        verdict=_verdict(proximity, bool(matches), cfg.t2),
    )


def aggregate_answer(
    question: str,
    answer_text: str,
    sentence_scores: Sequence[SentenceScore],
    cfg: ThresholdConfig,
) -> AnswerReport:
    """Answer verdict: none iff every sentence is none; the threshold scales
    with sentence count so long answers cannot win by volume alone."""
    scores = tuple(sentence_scores)
    proximity = float(sum(s.proximity for s in scores))
    threshold = cfg.t2 * max(1, len(scores))
    if not scores or all(s.verdict == VERDICT_NONE for s in scores):
        verdict = VERDICT_NONE
    elif proximity >= threshold:
        verdict = VERDICT_COMPATIBLE
    else:
        verdict = VERDICT_MINIMAL
    return AnswerReport(
        question=question,
        answer_text=answer_text,
        sentence_scores=scores,
        answer_proximity=proximity,
        answer_threshold=threshold,
        answer_verdict=verdict,
        no_statements=not scores,
    )


def score_answer(
    question: str,
    answer_text: str,
    *,
    gateway: ChatGateway,
    prompts: PromptPair,
    provider: EmbeddingProvider,
    index: VectorIndex,
    cfg: ThresholdConfig,
) -> AnswerReport:
    """Full validator path: answer -> triplets (same LLM as the KB) ->
    sentences -> embeddings (same provider) -> per-sentence scores."""
    text = answer_text.strip()
    if not text:
        return aggregate_answer(question, answer_text, (), cfg)
    triplet_set = extract_triplets(
        text, gateway, prompts, origin=ORIGIN_ANSWER, source_id="answer"
    ).dedup()
    if not len(triplet_set):
        logger.info("answer produced no extractable statements")
        return aggregate_answer(question, answer_text, (), cfg)
    sentences = [triplet_to_sentence(t) for t in triplet_set]
    embedded = embed_batch(sentences, provider)
    scores = [score_sentence(e, index, cfg) for e in embedded]
    return aggregate_answer(question, answer_text, scores, cfg)


# --- report rendering -------------------------------------------------------


def format_score(value: float) -> str:
    """2-decimal display; trailing zeros drop (0.60 prints as 0.6)."""
    return str(round(value, 2))


def render_sentence(score: SentenceScore) -> str:
    lines = [f"---Query: {score.query_sentence.text}"]
    if not score.matches:
        lines.append("-- No match: the phrase is not compatible with the knowledge base")
        return "\n".join(lines)
    for match in score.matches:
        lines.append(f"  Matched sentence: {match.sentence_text}")
        lines.append(f"    - score: {format_score(match.score)}")
    lines.append(
        "---> The semantic proximity of this phrase to the knowledge base is: "
        f"{format_score(score.proximity)}"
    )
    if score.verdict == VERDICT_COMPATIBLE:
        lines.append("      That means the phrase is compatible with the knowledge base")
    else:
        lines.append("      That means the phrase is not compatible with the knowledge base")
        lines.append("      but there is some minimal compatibility")
    return "\n".join(lines)


def render_report(report: AnswerReport) -> str:
    if report.no_statements:
        return (
            "-- No extractable statements: the answer is not compatible "
            "with the knowledge base\n"
        )
    blocks = [render_sentence(s) for s in report.sentence_scores]
    text = "\n\n".join(blocks)
    if len(report.sentence_scores) >= 2:
        if report.answer_verdict == VERDICT_COMPATIBLE:
            summary = "      That means the answer is compatible with the knowledge base"
        elif report.answer_verdict == VERDICT_MINIMAL:
            summary = (
                "      That means the answer is not compatible with the knowledge base\n"
                "      but there is some minimal compatibility"
            )
        else:
            summary = "-- No match: the answer is not compatible with the knowledge base"
        text += (
            "\n\n===> The overall compatibility of this answer with the knowledge base is: "
            f"{format_score(report.answer_proximity)}\n" + summary
        )
    return text + "\n"
