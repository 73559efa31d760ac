"""Mask salient spans in timestamped documents and inspect the result.

    python3 demos/02_mask_corpus.py
"""

from tempoprobe import TimestampedDoc, build_corpus
from tempoprobe.corpus import GazetteerTagger, explicit_year_stats

DOCS = [
    TimestampedDoc(
        doc_id="d0",
        date="2014-06-12",
        text=(
            "Lena Fischer signed with Harbor Rowing Club on 12 June 2014. "
            "The move ended four seasons at River Rowing Club."
        ),
    ),
    TimestampedDoc(
        doc_id="d1",
        date="2016-02-03",
        text="Marco Silva left River Rowing Club for Summit Athletics in 2016.",
    ),
]

ENTITIES = [
    "Lena Fischer", "Marco Silva", "Harbor Rowing Club",
    "River Rowing Club", "Summit Athletics",
]


def main() -> None:
    tagger = GazetteerTagger(ENTITIES)
    examples = build_corpus(DOCS, tagger=tagger)
    print(f"{len(DOCS)} docs -> {len(examples)} masked examples\n")
    for example in examples:
        print(f"  [{example.year}] {example.input}")
        print(f"        target: {example.target!r}  kind: {example.kind}")
    stats = explicit_year_stats(DOCS)
    print(f"\nsentences with an explicit year: "
          f"{stats['with_explicit_year']}/{stats['sentences']}")


if __name__ == "__main__":
    main()
