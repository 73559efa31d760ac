"""Turn a handful of timestamped facts into year-scoped cloze probes.

Run from the repo root after `pip install -e .`:

    python3 demos/01_build_probes.py
"""

import tempfile
from pathlib import Path

from tempoprobe import YearInterval, build_probe_dataset, load_facts

FACTS = """subject_id\tsubject_name\trelation_id\tobject_id\tobject_name\tstart_year\tend_year
Q1\tLena Fischer\tP54\tQ10\tRiver Rowing Club\t2010\t2014
Q1\tLena Fischer\tP54\tQ11\tHarbor Rowing Club\t2014\t2020
Q2\tMarco Silva\tP54\tQ10\tRiver Rowing Club\t2012\t2016
Q2\tMarco Silva\tP54\tQ12\tSummit Athletics\t2016\t2020
Q3\tIda Berg\tP39\tQ20\tcity councillor\t2013\t2017
Q3\tIda Berg\tP39\tQ21\tmayor\t2017\t2020
"""


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "facts.tsv"
        path.write_text(FACTS)
        store = load_facts(path, YearInterval(2010, 2020))

    queries, split = build_probe_dataset(store, seed=0)
    print(f"{len(store.facts)} facts -> {len(queries)} per-year queries")
    print(f"split sizes: train={len(split.train)} "
          f"validation={len(split.validation)} test={len(split.test)}")
    print()

    # a handover year keeps both answers, ordered by interval start
    for query in queries:
        if query.subject_id == "Q1" and query.year in (2013, 2014, 2015):
            print(f"  {query.year}  {query.text}  ->  {list(query.answers)}")
    print()
    print("subjects never share a split:")
    for name, part in (("train", split.train), ("validation", split.validation),
                       ("test", split.test)):
        print(f"  {name}: {sorted({q.subject_id for q in part})}")


if __name__ == "__main__":
    main()
