#!/usr/bin/env python3
"""Build a WN18-style link-prediction benchmark from raw WordNet data files.

Reads data.{noun,verb,adj,adv} (the WordNet database layout, e.g. from the
`wordnet-db` npm package), keeps the 18 synset-to-synset pointer types used by
the WN18 benchmark, filters low-degree synsets, and writes
train.txt / valid.txt / test.txt as NameTSV (head<TAB>relation<TAB>tail).
"""

import argparse
import collections
import os
import random

POINTERS = {
    "@": "_hypernym",
    "~": "_hyponym",
    "@i": "_instance_hypernym",
    "~i": "_instance_hyponym",
    "#m": "_member_holonym",
    "%m": "_member_meronym",
    "#p": "_part_of",
    "%p": "_has_part",
    "+": "_derivationally_related_form",
    ";c": "_synset_domain_topic_of",
    "-c": "_member_of_domain_topic",
    ";r": "_synset_domain_region_of",
    "-r": "_member_of_domain_region",
    ";u": "_synset_domain_usage_of",
    "-u": "_member_of_domain_usage",
    "^": "_also_see",
    "$": "_verb_group",
    "&": "_similar_to",
}

POS_FILE = {"n": "noun", "v": "verb", "a": "adj", "s": "adj", "r": "adv"}


def synset_key(offset, pos):
    return f"{offset}.{'a' if pos == 's' else pos}"


def read_triples(dict_dir):
    triples = set()
    for name in ("noun", "verb", "adj", "adv"):
        with open(os.path.join(dict_dir, f"data.{name}"), encoding="utf-8") as fh:
            for line in fh:
                if line.startswith("  "):
                    continue
                fields = line.split(" | ")[0].split()
                offset, pos = fields[0], fields[2]
                n_words = int(fields[3], 16)
                i = 4 + 2 * n_words
                n_ptrs = int(fields[i])
                i += 1
                for _ in range(n_ptrs):
                    sym, tgt, tpos = fields[i], fields[i + 1], fields[i + 2]
                    i += 4
                    rel = POINTERS.get(sym)
                    if rel is None:
                        continue
                    h, t = synset_key(offset, pos), synset_key(tgt, tpos)
                    if h != t:
                        triples.add((h, rel, t))
    return triples


def filter_min_degree(triples, min_degree):
    while True:
        deg = collections.Counter()
        for h, _, t in triples:
            deg[h] += 1
            deg[t] += 1
        kept = {tr for tr in triples if deg[tr[0]] >= min_degree and deg[tr[2]] >= min_degree}
        if len(kept) == len(triples):
            return kept
        triples = kept


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("dict_dir")
    ap.add_argument("out_dir")
    ap.add_argument("--min-degree", type=int, default=4)
    ap.add_argument("--valid", type=int, default=5000)
    ap.add_argument("--test", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=2019)
    args = ap.parse_args()

    triples = filter_min_degree(read_triples(args.dict_dir), args.min_degree)
    ordered = sorted(triples)
    random.Random(args.seed).shuffle(ordered)

    # Held-out facts may only use entities that remain in the training split.
    held = args.valid + args.test
    train, rest = ordered[held:], ordered[:held]
    seen = {e for h, _, t in train for e in (h, t)}
    spill = [tr for tr in rest if tr[0] not in seen or tr[2] not in seen]
    rest = [tr for tr in rest if tr[0] in seen and tr[2] in seen]
    train += spill
    valid, test = rest[: args.valid], rest[args.valid :]

    os.makedirs(args.out_dir, exist_ok=True)
    for name, rows in (("train", train), ("valid", valid), ("test", test)):
        with open(os.path.join(args.out_dir, f"{name}.txt"), "w", encoding="utf-8") as fh:
            for h, r, t in rows:
                fh.write(f"{h}\t{r}\t{t}\n")
    ents = {e for h, _, t in triples for e in (h, t)}
    rels = {r for _, r, _ in triples}
    print(f"entities={len(ents)} relations={len(rels)} train={len(train)} "
          f"valid={len(valid)} test={len(test)}")


if __name__ == "__main__":
    main()
