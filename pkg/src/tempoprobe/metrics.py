"""Scoring primitives: normalized token F1, masked-span perplexity, entropy.

Text normalization and F1 follow the SQuAD reference behavior exactly,
including its degenerate-input conventions.  Perplexity and entropy use
natural logarithms throughout.
"""

from __future__ import annotations

import math
import re
import string
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

_ARTICLE_RE = re.compile(r"\b(a|an|the)\b")
_PUNCT = set(string.punctuation)


def normalize_text(s: str) -> str:
    """Lowercase, strip punctuation, drop articles, collapse whitespace."""
    s = s.lower()
    s = "".join(ch for ch in s if ch not in _PUNCT)
    s = _ARTICLE_RE.sub(" ", s)
    return " ".join(s.split())


def token_f1(pred: str, gold: str) -> float:
    """Bag-of-tokens F1 over normalized whitespace tokens.

    Both sides empty after normalization scores 1; exactly one empty
    scores 0.
    """
    pred_tokens = normalize_text(pred).split()
    gold_tokens = normalize_text(gold).split()
    if not pred_tokens or not gold_tokens:
        return float(pred_tokens == gold_tokens)
    common = Counter(pred_tokens) & Counter(gold_tokens)
    overlap = sum(common.values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_tokens)
    recall = overlap / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def max_f1(pred: str, golds: Sequence[str]) -> float:
    """Best token_f1 of the prediction against any gold answer."""
    if not golds:
        raise ValueError("golds must be non-empty")
    return max(token_f1(pred, gold) for gold in golds)


@dataclass(frozen=True)
class SpanScore:
    """Model log-probability of one target span, with its token length."""

    log_prob: float
    target_len: int


def mlm_perplexity(scores: Sequence[SpanScore]) -> float:
    """exp of the negative total log-probability per target token."""
    if not scores:
        raise ValueError("scores must be non-empty")
    for score in scores:
        if score.target_len < 1:
            raise ValueError(f"target_len must be >= 1, got {score.target_len}")
    total_log = sum(score.log_prob for score in scores)
    total_len = sum(score.target_len for score in scores)
    return math.exp(-total_log / total_len)


def target_length(target: str) -> int:
    """Whitespace token count of a target span, floored at 1."""
    return max(1, len(target.split()))


def entropy(weights: Iterable[float]) -> float:
    """Shannon entropy in nats of a distribution given as raw weights.

    Weights are normalized internally; zero weights contribute nothing.
    """
    values = [w for w in weights if w > 0.0]
    total = sum(values)
    if total <= 0.0:
        raise ValueError("weights must have positive mass")
    result = 0.0
    for w in values:
        p = w / total
        if p > 0.0:  # w/total can underflow for extreme weight ratios
            result -= p * math.log(p)
    return result


def bootstrap_ci(
    values: Sequence[float],
    n_resamples: int = 1000,
    seed: int = 0,
    alpha: float = 0.05,
) -> tuple[float, float]:
    """Percentile bootstrap CI for the mean of a sample.  Deterministic."""
    if len(values) == 0:
        raise ValueError("values must be non-empty")
    arr = np.asarray(values, dtype=float)
    if arr.size == 1:
        return float(arr[0]), float(arr[0])
    rng = np.random.default_rng(seed)
    samples = rng.choice(arr, size=(n_resamples, arr.size), replace=True)
    means = samples.mean(axis=1)
    lo, hi = np.quantile(means, [alpha / 2, 1 - alpha / 2])
    return float(lo), float(hi)
