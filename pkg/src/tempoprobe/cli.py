"""Command-line entry point wiring the pipeline into experiment flows.

One flat TOML config drives everything; subcommands cover dataset
construction, training, evaluation, and the diagnostic suites.  Every
run writes a manifest (inputs, hashes, seed, version, no timestamps)
so outputs are reproducible byte for byte.

Exit codes: 0 success, 1 validation problem, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - 3.10 fallback
    import tomli as tomllib

from tempoprobe import __version__
from tempoprobe.corpus import (
    CorpusError,
    MixtureSpec,
    build_corpus,
    explicit_year_stats,
    load_docs,
    load_examples,
    sample_stream,
    save_examples,
)
from tempoprobe.diagnostics import (
    DiagnosticsError,
    OracleDateModel,
    RandomScoreModel,
    date_pairs_to_examples,
    default_candidates,
    eval_date_comparison,
    gen_date_pairs,
    load_candidate_set,
    load_future_probes,
    save_date_pairs,
)
from tempoprobe.evaluator import (
    EvalError,
    duration_buckets,
    entropy_curve,
    evaluate_f1,
    future_loglik_curve,
    gap_curve,
    write_report,
)
from tempoprobe.facts import FactError, FactStore, YearInterval, load_facts
from tempoprobe.models import REGIMES, ModelError, TemporalCountModel, train
from tempoprobe.probes import (
    ProbeError,
    build_probe_dataset,
    load_queries,
    load_templates,
    save_queries,
    split_by_subject,
)
from tempoprobe.synthetic import make_drift_world

log = logging.getLogger(__name__)

FLOWS = ("memorize", "degrade", "calibrate", "adapt", "diagnose")
DATA_DIR_ENV = "TEMPOPROBE_DATA"


class ConfigError(ValueError):
    """Raised when a config file or flag set violates the schema."""


# problems with user-supplied inputs exit 1; anything else exits 2
_VALIDATION_ERRORS = (
    ConfigError,
    FactError,
    ProbeError,
    CorpusError,
    ModelError,
    EvalError,
    DiagnosticsError,
    FileNotFoundError,
)


@dataclass
class RunConfig:
    """Flat experiment configuration (TOML file, one table, no nesting)."""

    period_start: int = 2010
    period_end: int = 2020
    train_years: tuple[int, ...] = tuple(range(2010, 2019))
    future_years: tuple[int, ...] = (2019, 2020)
    seed: int = 0
    regime: str = "temporal"
    smoothing_k: float = 0.1
    interpolation_lambda: float = 0.8
    year_decay: float = 0.5
    split_fractions: tuple[float, float, float] = (0.2, 0.1, 0.7)
    mix_probe_every: int = 1000
    alpha: float = 0.5
    alpha_grid: tuple[float, ...] = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
    train_steps: int = 40000
    adapt_steps: int | None = None
    top_k_subjects: int = 1000
    n_subjects: int = 120
    examples_per_year: int = 6
    diag_pairs: int = 2000
    facts_path: str | None = None
    docs_path: str | None = None
    out_dir: str = "runs"

    @property
    def period(self) -> YearInterval:
        return YearInterval(self.period_start, self.period_end)

    def effective_adapt_steps(self) -> int:
        # continuation budget defaults to a sixth of the base budget
        if self.adapt_steps is not None:
            return self.adapt_steps
        return max(1, self.train_steps // 6)


_INT_FIELDS = {
    "period_start", "period_end", "seed", "mix_probe_every", "train_steps",
    "top_k_subjects", "n_subjects", "examples_per_year", "diag_pairs",
}
_OPT_INT_FIELDS = {"adapt_steps"}
_FLOAT_FIELDS = {"smoothing_k", "interpolation_lambda", "year_decay", "alpha"}
_STR_FIELDS = {"regime", "out_dir"}
_OPT_STR_FIELDS = {"facts_path", "docs_path"}
_INT_TUPLE_FIELDS = {"train_years", "future_years"}
_FLOAT_TUPLE_FIELDS = {"split_fractions", "alpha_grid"}


def _coerce(name: str, value, problems: list[str]):
    def fail(expected: str):
        problems.append(f"config.{name}: expected {expected}, got {value!r}")

    if name in _INT_FIELDS or name in _OPT_INT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, int):
            fail("an integer")
            return None
        return value
    if name in _FLOAT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            fail("a number")
            return None
        return float(value)
    if name in _STR_FIELDS or name in _OPT_STR_FIELDS:
        if not isinstance(value, str):
            fail("a string")
            return None
        return value
    if name in _INT_TUPLE_FIELDS:
        if not isinstance(value, (list, tuple)) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in value
        ):
            fail("a list of integers")
            return None
        return tuple(value)
    if name in _FLOAT_TUPLE_FIELDS:
        if not isinstance(value, (list, tuple)) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            fail("a list of numbers")
            return None
        return tuple(float(v) for v in value)
    raise AssertionError(f"unmapped config field {name}")


def config_from_dict(data: dict) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    problems = [f"config.{key}: unknown field" for key in sorted(set(data) - known)]
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            continue
        coerced = _coerce(key, value, problems)
        if coerced is not None:
            kwargs[key] = coerced
    if problems:
        raise ConfigError("; ".join(problems))
    config = RunConfig(**kwargs)
    validate_config(config)
    return config


def validate_config(config: RunConfig) -> None:
    """Raise ConfigError listing every violated field as config.<field>."""
    problems = []
    if config.period_start > config.period_end:
        problems.append("config.period_end: must be >= period_start")

    def in_period(year: int) -> bool:
        return config.period_start <= year <= config.period_end

    if not config.train_years:
        problems.append("config.train_years: must be non-empty")
    elif not all(in_period(y) for y in config.train_years):
        problems.append("config.train_years: every year must lie in the period")
    if not all(in_period(y) for y in config.future_years):
        problems.append("config.future_years: every year must lie in the period")
    if set(config.train_years) & set(config.future_years):
        problems.append("config.future_years: must be disjoint from train_years")
    if config.regime not in REGIMES:
        problems.append(f"config.regime: must be one of {', '.join(REGIMES)}")
    if config.smoothing_k <= 0:
        problems.append("config.smoothing_k: must be > 0")
    if not 0.0 <= config.interpolation_lambda <= 1.0:
        problems.append("config.interpolation_lambda: must be in [0, 1]")
    if not 0.0 <= config.year_decay <= 1.0:
        problems.append("config.year_decay: must be in [0, 1]")
    if len(config.split_fractions) != 3 or any(f < 0 for f in config.split_fractions):
        problems.append("config.split_fractions: need three non-negative numbers")
    elif abs(sum(config.split_fractions) - 1.0) > 1e-9:
        problems.append("config.split_fractions: must sum to 1")
    if not 0.0 <= config.alpha <= 1.0:
        problems.append("config.alpha: must be in [0, 1]")
    if not config.alpha_grid:
        problems.append("config.alpha_grid: must be non-empty")
    elif not all(0.0 <= a <= 1.0 for a in config.alpha_grid):
        problems.append("config.alpha_grid: every value must be in [0, 1]")
    for name in ("mix_probe_every", "train_steps", "top_k_subjects", "n_subjects",
                 "examples_per_year", "diag_pairs"):
        if getattr(config, name) < 1:
            problems.append(f"config.{name}: must be >= 1")
    if config.adapt_steps is not None and config.adapt_steps < 1:
        problems.append("config.adapt_steps: must be >= 1 when set")
    if problems:
        raise ConfigError("; ".join(problems))


def load_config(path: str | Path) -> RunConfig:
    with Path(path).open("rb") as handle:
        try:
            data = tomllib.load(handle)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config.{path}: not valid TOML: {exc}") from exc
    return config_from_dict(data)


def config_to_dict(config: RunConfig) -> dict:
    record = dataclasses.asdict(config)
    return {k: list(v) if isinstance(v, tuple) else v for k, v in record.items()}


def save_config(config: RunConfig, path: str | Path) -> None:
    """Write the config back out as flat TOML (None fields omitted)."""
    lines = []
    for key, value in config_to_dict(config).items():
        if value is None:
            continue
        if isinstance(value, bool):
            rendered = "true" if value else "false"
        elif isinstance(value, (int, float)):
            rendered = repr(value)
        elif isinstance(value, str):
            rendered = json.dumps(value)
        else:
            rendered = "[" + ", ".join(repr(v) for v in value) + "]"
        lines.append(f"{key} = {rendered}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def data_path(name: str, explicit: str | None = None) -> Path | None:
    """Resolve a data file: explicit flag, then $TEMPOPROBE_DATA/<name>,
    then None meaning the packaged default."""
    if explicit:
        return Path(explicit)
    root = os.environ.get(DATA_DIR_ENV)
    if root and (Path(root) / name).is_file():
        return Path(root) / name
    return None


# ---------------------------------------------------------------------------
# manifests

def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    out_dir: Path,
    command: str,
    seed: int,
    inputs: dict[str, Path],
    config: RunConfig | None = None,
) -> Path:
    """Record provenance for a run: hashes of inputs and outputs, the seed,
    and the package version. Deliberately no timestamps."""
    outputs = {}
    for path in sorted(out_dir.rglob("*")):
        if path.is_file() and path.name != "manifest.json":
            outputs[str(path.relative_to(out_dir))] = _sha256(path)
    manifest = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "inputs": {label: _sha256(Path(p)) for label, p in sorted(inputs.items())},
        "outputs": outputs,
    }
    if config is not None:
        manifest["config"] = config_to_dict(config)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# shared flow plumbing

@dataclass
class _World:
    store: FactStore
    queries: list
    corpus: list
    candidates: tuple[str, ...]
    categories: dict[str, str]
    inputs: dict[str, Path]


def categorize_subjects(store: FactStore) -> dict[str, str]:
    """Rate each subject's churn by its fact count: 1 fact = never,
    2-4 = rare, 5+ = frequent."""
    counts: dict[str, int] = {}
    for fact in store.facts:
        counts[fact.subject_id] = counts.get(fact.subject_id, 0) + 1
    out = {}
    for subject, count in counts.items():
        out[subject] = "never" if count == 1 else ("rare" if count <= 4 else "frequent")
    return out


def _load_world(config: RunConfig) -> _World:
    if config.facts_path is None:
        world = make_drift_world(
            seed=config.seed,
            n_subjects=config.n_subjects,
            period=config.period,
            examples_per_year=config.examples_per_year,
        )
        return _World(world.store, world.queries, world.corpus,
                      tuple(world.team_pool), dict(world.categories), {})
    if config.docs_path is None:
        raise ConfigError("config.docs_path: required when facts_path is set")
    store = load_facts(config.facts_path, config.period)
    queries, _ = build_probe_dataset(
        store,
        top_k=config.top_k_subjects,
        fractions=config.split_fractions,
        seed=config.seed,
    )
    docs = load_docs(config.docs_path, window=config.period)
    corpus = build_corpus(docs, seed=config.seed)
    inputs = {"facts": Path(config.facts_path), "docs": Path(config.docs_path)}
    candidates = tuple(sorted({fact.object_name for fact in store.facts}))
    return _World(store, queries, corpus, candidates, categorize_subjects(store), inputs)


def _train_on(config: RunConfig, examples, years=None, regime=None, steps=None,
              seed=None) -> TemporalCountModel:
    if years is not None:
        wanted = set(years)
        examples = [example for example in examples if example.year in wanted]
    stream = sample_stream(examples, "uniform-by-year",
                           seed=config.seed if seed is None else seed)
    return train(
        stream,
        regime=regime or config.regime,
        steps=steps or config.train_steps,
        smoothing_k=config.smoothing_k,
        interpolation_lambda=config.interpolation_lambda,
        year_decay=config.year_decay,
    )


def _out_dir(config: RunConfig, name: str) -> Path:
    out = Path(config.out_dir) / name
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# flows

def _flow_memorize(config: RunConfig, out: Path, world: _World) -> None:
    split = split_by_subject(world.queries, config.split_fractions, config.seed)
    model = _train_on(config, world.corpus)
    future_from = min(config.future_years) if config.future_years else config.period_end + 1
    result = evaluate_f1(model, split.test, future_from=future_from)
    durations = duration_buckets(result, split.test, seed=config.seed)
    write_report(out, f1=result, durations=durations,
                 extra={"flow": "memorize", "regime": config.regime,
                        "seed": config.seed})


def _flow_degrade(config: RunConfig, out: Path, world: _World) -> None:
    per_expert = max(1, config.train_steps // len(config.train_years))
    experts = {}
    for index, year in enumerate(sorted(config.train_years)):
        stream = sample_stream(world.corpus, "single-year",
                               seed=config.seed + index, year=year)
        experts[year] = train(stream, regime="uniform", steps=per_expert,
                              smoothing_k=config.smoothing_k)
    test_sets = {
        year: [q for q in world.queries if q.year == year]
        for year in config.train_years
    }
    curve = gap_curve(experts, test_sets, seed=config.seed)

    future = None
    anchor = max(config.train_years)
    horizon = min(4, config.period_end - anchor)
    if horizon >= 1:
        model = _train_on(config, world.corpus, years=config.train_years)
        anchored = [q for q in world.queries if q.year == anchor]
        correct = [
            q for q in anchored
            if model.predict(q.text, q.year, top_n=1)[0][0] in q.answers
        ]
        if correct:
            future = future_loglik_curve(model, correct, anchor, horizon,
                                         reference=world.queries)
    write_report(out, gap=curve, future=future,
                 extra={"flow": "degrade", "seed": config.seed})


def _flow_calibrate(config: RunConfig, out: Path, world: _World) -> None:
    train_end = max(config.train_years)
    years = list(range(train_end + 1, min(train_end + 4, config.period_end) + 1))
    if not years:
        raise ConfigError(
            "config.train_years: calibration needs probe years after the last "
            "training year and inside the period"
        )
    model = _train_on(config, world.corpus, years=config.train_years)
    first_text = {}
    for query in world.queries:
        first_text.setdefault(query.subject_id, query.text)
    probes_by_category: dict[str, list[str]] = {}
    for subject, category in sorted(world.categories.items()):
        if subject in first_text:
            probes_by_category.setdefault(category, []).append(first_text[subject])
    curve = entropy_curve(model, probes_by_category, list(world.candidates), years)
    write_report(out, entropies=curve,
                 extra={"flow": "calibrate", "regime": config.regime,
                        "seed": config.seed, "probe_years": years})


def _flow_adapt(config: RunConfig, out: Path, world: _World) -> dict:
    old_years = frozenset(config.train_years)
    new_years = frozenset(config.future_years)
    if not new_years:
        raise ConfigError("config.future_years: adapt flow needs a new slice")
    old_queries = [q for q in world.queries if q.year in old_years]
    new_queries = [q for q in world.queries if q.year in new_years]
    if not old_queries or not new_queries:
        raise ConfigError("config.future_years: no queries on one side of the split")

    base = _train_on(config, world.corpus, years=config.train_years)
    baseline_old = evaluate_f1(base, old_queries).macro
    budget = config.effective_adapt_steps()

    rows = []
    for index, alpha in enumerate(config.alpha_grid):
        model = base.copy()
        mixture = MixtureSpec(alpha, new_years, old_years)
        stream = sample_stream(world.corpus, "mixture",
                               seed=config.seed + 7919 * (index + 1), mixture=mixture)
        model.fit(stream, steps=budget)
        rows.append({
            "alpha": alpha,
            "old_f1": evaluate_f1(model, old_queries).macro,
            "new_f1": evaluate_f1(model, new_queries).macro,
        })

    with (out / "adapt_curve.csv").open("w", encoding="utf-8", newline="") as handle:
        handle.write("alpha,old_f1,new_f1\n")
        for row in rows:
            handle.write(f"{row['alpha']},{row['old_f1']},{row['new_f1']}\n")
    section = {"baseline_old_f1": baseline_old, "adapt_steps": budget, "rows": rows}
    write_report(out, extra={"flow": "adapt", "regime": config.regime,
                             "seed": config.seed, "adapt": section})
    return section


def _flow_diagnose(config: RunConfig, out: Path) -> None:
    anchor = config.period_end
    pairs = gen_date_pairs(config.diag_pairs,
                           (config.period_start, config.period_end),
                           seed=config.seed)
    save_date_pairs(pairs, out / "date_pairs.jsonl")
    oracle = eval_date_comparison(OracleDateModel(), pairs, anchor_year=anchor)
    rng_report = eval_date_comparison(RandomScoreModel(config.seed), pairs,
                                      anchor_year=anchor)
    unambiguous = [p for p in pairs if not p.ambiguous]
    examples = date_pairs_to_examples(unambiguous, anchor)
    trained = train(sample_stream(examples, seed=config.seed),
                    regime=config.regime, steps=config.train_steps,
                    smoothing_k=config.smoothing_k,
                    interpolation_lambda=config.interpolation_lambda,
                    year_decay=config.year_decay)
    trained_report = eval_date_comparison(trained, pairs, anchor_year=anchor)

    probes = load_future_probes()
    cells: dict[str, int] = {}
    for probe in probes:
        key = f"{probe.category}/{probe.answer_domain}"
        cells[key] = cells.get(key, 0) + 1
    write_report(out, extra={
        "flow": "diagnose",
        "seed": config.seed,
        "dates": {
            "oracle": dataclasses.asdict(oracle),
            "random": dataclasses.asdict(rng_report),
            "trained_count_model": dataclasses.asdict(trained_report),
        },
        "future_probes": {"total": len(probes), "by_cell": cells},
    })


def run_experiment(config: RunConfig, flow: str) -> tuple[int, Path]:
    """Run one experiment flow end to end; returns (exit code, report dir)."""
    if flow not in FLOWS:
        raise ConfigError(f"config.flow: unknown flow {flow!r}; "
                          f"choose from {', '.join(FLOWS)}")
    validate_config(config)
    out = _out_dir(config, flow)
    if flow == "diagnose":
        _flow_diagnose(config, out)
        inputs: dict[str, Path] = {}
    else:
        world = _load_world(config)
        inputs = world.inputs
        if flow == "memorize":
            _flow_memorize(config, out, world)
        elif flow == "degrade":
            _flow_degrade(config, out, world)
        elif flow == "calibrate":
            _flow_calibrate(config, out, world)
        else:
            _flow_adapt(config, out, world)
    write_manifest(out, f"flow:{flow}", config.seed, inputs, config)
    return 0, out


# ---------------------------------------------------------------------------
# subcommands

def _cmd_build_templama(args) -> int:
    config = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    store = load_facts(args.facts, config.period)
    templates = None
    template_path = data_path("relation_templates.tsv", args.templates)
    if template_path is not None:
        templates = load_templates(template_path)
    queries, split = build_probe_dataset(
        store,
        templates=templates,
        top_k=args.top_k or config.top_k_subjects,
        fractions=config.split_fractions,
        seed=config.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_queries(queries, out / "queries.jsonl")
    for name, part in (("train", split.train), ("validation", split.validation),
                       ("test", split.test)):
        save_queries(part, out / f"{name}.jsonl")
    inputs = {"facts": Path(args.facts)}
    if template_path is not None:
        inputs["templates"] = template_path
    write_manifest(out, "build-templama", config.seed, inputs, config)
    print(f"wrote {len(queries)} queries to {out}")
    return 0


def _cmd_build_corpus(args) -> int:
    config = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    docs = load_docs(args.docs, window=config.period)
    examples = build_corpus(docs, policy=args.policy, seed=config.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_examples(examples, out / "corpus.jsonl")
    stats = explicit_year_stats(docs)
    (out / "stats.json").write_text(
        json.dumps(stats, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    write_manifest(out, "build-corpus", config.seed, {"docs": Path(args.docs)}, config)
    print(f"wrote {len(examples)} masked examples to {out}")
    return 0


def _cmd_train(args) -> int:
    config = load_config(args.config) if args.config else RunConfig()
    inputs = {}
    if args.corpus:
        examples = load_examples(args.corpus)
        inputs["corpus"] = Path(args.corpus)
    else:
        examples = _load_world(config).corpus
    years = config.train_years if args.train_slice else None
    model = _train_on(config, examples, years=years)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    model.save(out)
    manifest_dir = out.parent
    write_manifest(manifest_dir, "train", config.seed, inputs, config)
    print(f"trained {config.regime} model for {model.steps_trained} steps -> {out}")
    return 0


def _cmd_eval(args) -> int:
    config = load_config(args.config) if args.config else RunConfig()
    model = TemporalCountModel.load(args.model)
    queries = load_queries(args.queries)
    future_from = min(config.future_years) if config.future_years else config.period_end + 1
    result = evaluate_f1(model, queries, future_from=future_from)
    durations = duration_buckets(result, queries, seed=config.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_report(out, f1=result, durations=durations,
                 extra={"flow": "eval", "seed": config.seed})
    write_manifest(out, "eval", config.seed,
                   {"model": Path(args.model), "queries": Path(args.queries)}, config)
    print(f"macro F1 {result.macro:.4f} over {len(result.per_query)} queries -> {out}")
    return 0


def _flow_command(flow: str):
    def handler(args) -> int:
        config = load_config(args.config) if args.config else RunConfig()
        if args.out_dir:
            config = dataclasses.replace(config, out_dir=args.out_dir)
        code, out = run_experiment(config, flow)
        print(f"{flow} report in {out}")
        return code

    return handler


def _parse_year_span(text: str) -> tuple[int, int]:
    try:
        start, _, end = text.partition(":")
        return int(start), int(end)
    except ValueError:
        raise ConfigError(f"config.years: expected START:END, got {text!r}") from None


def _cmd_diag_dates(args) -> int:
    years = _parse_year_span(args.years)
    pairs = gen_date_pairs(args.count, years, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_date_pairs(pairs, out)
    ambiguous = sum(1 for p in pairs if p.ambiguous)
    print(f"wrote {len(pairs)} pairs ({ambiguous} ambiguous) to {out}")
    return 0


def _cmd_diag_future(args) -> int:
    model = TemporalCountModel.load(args.model)
    probes = load_future_probes(data_path("future_probes.tsv", args.probes))
    start, end = _parse_year_span(args.years)
    if start > end:
        raise ConfigError(f"config.years: degenerate span {args.years!r}")
    years = list(range(start, end + 1))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    candidates = {
        "cities": list(load_candidate_set(args.cities) if args.cities
                       else default_candidates("cities")),
        "countries": list(load_candidate_set(args.countries) if args.countries
                          else default_candidates("countries")),
    }
    curves = {}
    for domain in ("cities", "countries"):
        by_category: dict[str, list[str]] = {}
        for probe in probes:
            if probe.answer_domain == domain:
                by_category.setdefault(probe.category, []).append(probe.text)
        if not by_category:
            continue
        curve = entropy_curve(model, by_category, candidates[domain], years)
        for category, series in curve.series.items():
            curves[f"{category}/{domain}"] = series
    rows = []
    for key in sorted(curves):
        for year, value in curves[key]:
            rows.append([key, year, value])
    with (out / "entropy_curve.csv").open("w", encoding="utf-8", newline="") as handle:
        handle.write("category,year,mean_entropy\n")
        for key, year, value in rows:
            handle.write(f"{key},{year},{value}\n")
    report = {"flow": "diag-future",
              "entropy": {k: [[y, v] for y, v in series] for k, series in curves.items()}}
    (out / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    inputs = {"model": Path(args.model)}
    write_manifest(out, "diag-future", 0, inputs)
    print(f"entropy curves for {len(curves)} strata -> {out}")
    return 0


def _cmd_report(args) -> int:
    path = Path(args.run) / "report.json"
    if not path.is_file():
        raise FileNotFoundError(f"no report.json under {args.run}")
    report = json.loads(path.read_text(encoding="utf-8"))
    print(f"report: {path}")
    flow = report.get("flow", "?")
    print(f"flow: {flow}")
    if "f1" in report:
        f1 = report["f1"]
        print(f"macro F1: {f1['macro']:.4f} over {f1['n_queries']} queries "
              f"({f1['n_failures']} failures)")
        for year in sorted(f1["per_year"]):
            print(f"  {year}: {f1['per_year'][year]:.4f}")
        for part in sorted(f1.get("partitions", {})):
            print(f"  {part}: {f1['partitions'][part]:.4f}")
    if "gap_curve" in report:
        print("gap curve (gap: mean F1):")
        for gap in sorted(report["gap_curve"], key=int):
            point = report["gap_curve"][gap]
            print(f"  {gap}: {point['mean_f1']:.4f} (n={point['count']})")
    if "duration_f1" in report:
        print("duration buckets:")
        for label, stats in report["duration_f1"].items():
            print(f"  {label}: {stats['mean_f1']:.4f} (n={stats['count']})")
    if "entropy" in report:
        print("entropy series:")
        for category, series in report["entropy"].items():
            tail = ", ".join(f"{year}:{value:.3f}" for year, value in series)
            print(f"  {category}: {tail}")
    if "future_loglik" in report:
        for group, series in report["future_loglik"].items():
            tail = ", ".join(f"{year}:{value:.3f}" for year, value in series)
            print(f"  loglik {group}: {tail}")
    if "adapt" in report:
        print(f"baseline old F1: {report['adapt']['baseline_old_f1']:.4f}")
        for row in report["adapt"]["rows"]:
            print(f"  alpha={row['alpha']}: old={row['old_f1']:.4f} "
                  f"new={row['new_f1']:.4f}")
    if "dates" in report:
        for name, sub in report["dates"].items():
            print(f"dates/{name}: accuracy {sub['accuracy']:.4f} "
                  f"over {sub['n_scored']} pairs")
    return 0


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract reserves 2 for runtime
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tempoprobe",
                     description="Temporally-scoped probes, corpora, and "
                                 "time-conditioned count models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-templama", help="build probe datasets "
                       "from a temporal fact file")
    p.add_argument("--facts", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--templates")
    p.add_argument("--top-k", type=int, dest="top_k")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_build_templama)

    p = sub.add_parser("build-corpus", help="mask salient spans in timestamped docs")
    p.add_argument("--docs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--policy", default="one-per-span",
                   choices=("one-per-span", "random-one"))
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_build_corpus)

    p = sub.add_parser("train", help="train a count model")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--corpus")
    p.add_argument("--train-slice", action="store_true", dest="train_slice",
                   help="restrict training to config.train_years")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on probe queries")
    p.add_argument("--model", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("calibrate", help="closed-set entropy over future years")
    p.add_argument("--config")
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=_flow_command("calibrate"))

    p = sub.add_parser("adapt", help="continued training over an alpha grid")
    p.add_argument("--config")
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=_flow_command("adapt"))

    p = sub.add_parser("diag-dates", help="generate date comparison pairs")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--years", required=True, help="START:END")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_diag_dates)

    p = sub.add_parser("diag-future", help="entropy of a model over the "
                       "future-relation probes")
    p.add_argument("--model", required=True)
    p.add_argument("--probes")
    p.add_argument("--years", required=True, help="START:END")
    p.add_argument("--cities")
    p.add_argument("--countries")
    p.add_argument("--out", default="runs/diag-future")
    p.set_defaults(func=_cmd_diag_future)

    p = sub.add_parser("report", help="print a saved report")
    p.add_argument("--run", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 1
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
