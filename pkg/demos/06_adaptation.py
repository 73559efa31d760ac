"""Continue training on a new-year/old-year mixture and watch old recall.

Sweeps the mixture rate alpha under a fixed update budget, for a
year-blind baseline and the year-conditioned model.

    python3 demos/06_adaptation.py
"""

import itertools

from tempoprobe import (
    MixtureSpec,
    YearInterval,
    evaluate_f1,
    make_drift_world,
    sample_stream,
    train,
)

TRAIN_YEARS = frozenset(range(2010, 2019))
NEW_YEARS = frozenset({2019, 2020})


def main() -> None:
    world = make_drift_world(
        seed=0, n_subjects=150, period=YearInterval(2010, 2020), examples_per_year=5
    )
    old_examples = [e for e in world.corpus if e.year in TRAIN_YEARS]
    old_queries = world.queries_for_years(sorted(TRAIN_YEARS))
    new_queries = world.queries_for_years(sorted(NEW_YEARS))
    budget = 25000

    for regime in ("uniform", "temporal"):
        base = train(sample_stream(old_examples, seed=0), regime=regime, steps=budget)
        print(f"\n{regime}: baseline old-year F1 "
              f"{evaluate_f1(base, old_queries).macro:.3f}")
        print(f"{'alpha':>6} {'old F1':>8} {'new F1':>8}")
        for alpha in (0.2, 0.4, 0.6, 0.8, 1.0):
            spec = MixtureSpec(alpha=alpha, new_slice=NEW_YEARS, old_slices=TRAIN_YEARS)
            stream = sample_stream(world.corpus, mode="mixture", seed=7, mixture=spec)
            adapted = base.copy().fit(itertools.islice(stream, budget))
            old_f1 = evaluate_f1(adapted, old_queries).macro
            new_f1 = evaluate_f1(adapted, new_queries, future_from=2019).macro
            print(f"{alpha:>6.1f} {old_f1:>8.3f} {new_f1:>8.3f}")

    print("\nthe year-blind model trades old recall for new data; the")
    print("year-conditioned one keeps both.")


if __name__ == "__main__":
    main()
