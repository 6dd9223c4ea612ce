#!/usr/bin/env python3
"""Extract a balanced IMDB review subset into label<TAB>text files.

Source: the `movie-reviews` wheel on PyPI, which bundles the 25,000 labeled
IMDB training reviews (label 0 = negative, 1 = positive).

    pip download --no-deps movie-reviews -d /tmp/mr
    python3 scripts/make_imdb_subset.py /tmp/mr/movie_reviews-0.0.2-py3-none-any.whl data/imdb_subset
"""
import csv
import io
import random
import sys
import zipfile

TRAIN_PER_CLASS = 2500
TEST_PER_CLASS = 500
SEED = 20180402


def main(wheel, out_dir):
    z = zipfile.ZipFile(wheel)
    raw = z.read("movie_reviews/data/combined_movie_reviews.csv").decode("utf-8")
    rows = [r for r in csv.DictReader(io.StringIO(raw)) if r["source"] == "imdb"]
    by_label = {0: [], 1: []}
    for r in rows:
        text = " ".join(r["text"].replace("\t", " ").split())
        by_label[int(r["label"])].append(text)
    rng = random.Random(SEED)
    train, test = [], []
    for label, texts in sorted(by_label.items()):
        rng.shuffle(texts)
        train += [(label, t) for t in texts[:TRAIN_PER_CLASS]]
        test += [(label, t) for t in texts[TRAIN_PER_CLASS:TRAIN_PER_CLASS + TEST_PER_CLASS]]
    rng.shuffle(train)
    rng.shuffle(test)
    for name, part in (("train.tsv", train), ("test.tsv", test)):
        with open(f"{out_dir}/{name}", "w", encoding="utf-8") as f:
            for label, text in part:
                f.write(f"{label}\t{text}\n")
    print(f"train={len(train)} test={len(test)}")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
