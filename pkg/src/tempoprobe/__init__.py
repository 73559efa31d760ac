"""Temporally-scoped knowledge probes, masked corpora, and count models."""

from tempoprobe.corpus import (
    CorpusError,
    MaskedExample,
    MixtureSpec,
    SalientSpan,
    TimestampedDoc,
    apply_time_prefix,
    build_corpus,
    load_docs,
    load_examples,
    mix_probe_stream,
    sample_stream,
    save_examples,
)
from tempoprobe.diagnostics import (
    FORMAT_REGISTRY,
    DatePair,
    DiagnosticsError,
    FutureProbe,
    OracleDateModel,
    RandomScoreModel,
    eval_date_comparison,
    gen_date_pairs,
    load_future_probes,
)
from tempoprobe.evaluator import (
    EvalError,
    F1Result,
    GapCurve,
    duration_buckets,
    entropy_curve,
    evaluate_f1,
    future_loglik_curve,
    gap_curve,
    partition_by_multiplicity,
    write_report,
)
from tempoprobe.facts import (
    DEFAULT_PERIOD,
    FactError,
    FactStore,
    TemporalFact,
    YearInterval,
    active_objects,
    filter_temporal,
    load_facts,
    save_facts,
)
from tempoprobe.metrics import (
    SpanScore,
    bootstrap_ci,
    entropy,
    max_f1,
    mlm_perplexity,
    token_f1,
)
from tempoprobe.models import ModelError, TemporalCountModel, train
from tempoprobe.probes import (
    MASK,
    ClozeQuery,
    DatasetSplit,
    ProbeError,
    RelationTemplate,
    build_probe_dataset,
    load_published_queries,
    load_queries,
    save_queries,
    split_by_subject,
)
from tempoprobe.synthetic import DriftWorld, make_drift_world

# imported on first use so `python3 -m tempoprobe.model_protocol` does not
# load the module twice
_LAZY = {"ExternalModel": "tempoprobe.model_protocol",
         "ProtocolError": "tempoprobe.model_protocol"}


def __getattr__(name: str):
    target = _LAZY.get(name)
    if target is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    import importlib

    value = getattr(importlib.import_module(target), name)
    globals()[name] = value
    return value


__version__ = "0.1.0"

__all__ = [
    "DEFAULT_PERIOD",
    "FORMAT_REGISTRY",
    "MASK",
    "ClozeQuery",
    "CorpusError",
    "DatasetSplit",
    "DatePair",
    "DiagnosticsError",
    "DriftWorld",
    "EvalError",
    "ExternalModel",
    "F1Result",
    "FactError",
    "FactStore",
    "FutureProbe",
    "GapCurve",
    "MaskedExample",
    "MixtureSpec",
    "ModelError",
    "OracleDateModel",
    "ProbeError",
    "ProtocolError",
    "RandomScoreModel",
    "RelationTemplate",
    "SalientSpan",
    "SpanScore",
    "TemporalCountModel",
    "TemporalFact",
    "TimestampedDoc",
    "YearInterval",
    "active_objects",
    "apply_time_prefix",
    "bootstrap_ci",
    "build_corpus",
    "build_probe_dataset",
    "duration_buckets",
    "entropy",
    "entropy_curve",
    "eval_date_comparison",
    "evaluate_f1",
    "filter_temporal",
    "future_loglik_curve",
    "gap_curve",
    "gen_date_pairs",
    "load_docs",
    "load_examples",
    "load_facts",
    "load_future_probes",
    "load_published_queries",
    "load_queries",
    "make_drift_world",
    "max_f1",
    "mix_probe_stream",
    "mlm_perplexity",
    "partition_by_multiplicity",
    "sample_stream",
    "save_examples",
    "save_facts",
    "save_queries",
    "split_by_subject",
    "token_f1",
    "train",
    "write_report",
]
