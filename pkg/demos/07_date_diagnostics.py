"""Probe date-ordering ability across 24 surface formats.

Generates before/after comparison pairs, shows the formats and the
ambiguity flag, then scores an exact parser, a coin flip, and a count
model that memorized the unambiguous pairs.

    python3 demos/07_date_diagnostics.py
"""

from tempoprobe import OracleDateModel, RandomScoreModel, eval_date_comparison, gen_date_pairs
from tempoprobe.diagnostics import date_pairs_to_examples
from tempoprobe.models import train

ANCHOR = 2015


def main() -> None:
    pairs = gen_date_pairs(2000, (1990, 2030), seed=4)
    ambiguous = [p for p in pairs if p.ambiguous]
    print(f"{len(pairs)} pairs, {len(ambiguous)} ambiguous under day/month swap\n")

    for pair in pairs[:4]:
        print(f"  {pair.rendered}")
        print(f"    formats: {pair.format_a} vs {pair.format_b}, "
              f"label {pair.label!r}, ambiguous={pair.ambiguous}")
    if ambiguous:
        pair = ambiguous[0]
        print(f"\n  ambiguous example: {pair.rendered}")
        print(f"    {pair.date_a} vs {pair.date_b}: swapping day and month "
              "flips the order")

    unambiguous = [p for p in pairs if not p.ambiguous]
    examples = date_pairs_to_examples(unambiguous, ANCHOR)
    memorizer = train(iter(examples * 8), steps=len(examples) * 8)

    print(f"\n{'model':<12} {'accuracy':>9}")
    for name, model in (
        ("oracle", OracleDateModel()),
        ("random", RandomScoreModel(seed=5)),
        ("memorizer", memorizer),
    ):
        report = eval_date_comparison(model, pairs, ANCHOR)
        print(f"{name:<12} {report.accuracy:>9.3f}")

    report = eval_date_comparison(OracleDateModel(), pairs, ANCHOR)
    worst = sorted(report.per_format.items(), key=lambda kv: kv[1])[:3]
    print("\nlowest per-format oracle accuracy (all 1.0 when parsing is exact):")
    for fmt, acc in worst:
        print(f"  {fmt}: {acc:.3f}")


if __name__ == "__main__":
    main()
