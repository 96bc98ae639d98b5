#!/usr/bin/env python3
"""Convert the public PubMed summarization release to fnetsum's corpus format.

The public release (Cohan et al. 2018) stores one JSON object per line with
`article_text` as a list of sentence strings and `abstract_text` as a list of
sentences wrapped in <S>...</S> tags. fnetsum wants flat `article` and
`abstract` text fields, one JSON object per line.

Usage:
    python3 scripts/convert_pubmed.py train.txt corpus.jsonl --limit 2000
"""

import argparse
import json
import re
import sys

TAG_RE = re.compile(r"</?S>", flags=re.IGNORECASE)


def flatten(sentences):
    text = " ".join(TAG_RE.sub("", s).strip() for s in sentences)
    return " ".join(text.split())


def convert(source, target, limit=None):
    written = skipped = 0
    for line_no, line in enumerate(source, start=1):
        if limit is not None and written >= limit:
            break
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as err:
            raise SystemExit(f"line {line_no}: not valid JSON: {err}")
        article = flatten(record.get("article_text", []))
        abstract = flatten(record.get("abstract_text", []))
        if not article or not abstract:
            skipped += 1
            continue
        json.dump({"article": article, "abstract": abstract}, target, ensure_ascii=False)
        target.write("\n")
        written += 1
    return written, skipped


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("source", help="PubMed release file (one JSON object per line)")
    parser.add_argument("target", help="output corpus path (.jsonl)")
    parser.add_argument("--limit", type=int, default=None,
                        help="stop after this many converted documents")
    args = parser.parse_args()

    with open(args.source, encoding="utf-8") as source, \
            open(args.target, "w", encoding="utf-8") as target:
        written, skipped = convert(source, target, args.limit)
    print(f"wrote {written} documents, skipped {skipped}", file=sys.stderr)


if __name__ == "__main__":
    main()
