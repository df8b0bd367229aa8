#!/usr/bin/env python3
# Copyright 2026 The Emojinize Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Builds data/lexicon/pos_lexicon.tsv.

Word list: the most frequent English words according to `wordfreq`.
Word class: the WordNet 3.1 part of speech with the most sense-tagged
occurrences (index.* `tagsense_cnt`), falling back to synset counts.
Inflected forms are resolved with WordNet's detachment rules plus a table
of irregular verb forms.

Usage: build_pos_lexicon.py --wordnet <dict dir> --stopwords <file> --out <tsv>
"""

import argparse
import re

from wordfreq import top_n_list

POS_NAMES = {"n": "noun", "v": "verb", "a": "adjective", "r": "adverb", "p": "proper_noun"}
PREFERENCE = ["n", "v", "a", "r"]

DETACH = {
    "n": [("s", ""), ("ses", "s"), ("xes", "x"), ("zes", "z"), ("ches", "ch"),
          ("shes", "sh"), ("men", "man"), ("ies", "y")],
    "v": [("s", ""), ("ies", "y"), ("es", "e"), ("es", ""), ("ed", "e"),
          ("ed", ""), ("ing", "e"), ("ing", "")],
    "a": [("er", ""), ("est", ""), ("er", "e"), ("est", "e")],
}

IRREGULAR_VERBS = """
arose awoke awoken was were been bore born beat beaten became began begun bent
bet bid bit bitten bled blew blown broke broken bred brought built burnt burst
bought cast caught chose chosen clung came cost crept cut dealt dug did done
drew drawn dreamt drank drunk drove driven ate eaten fell fallen fed felt fought
found fled flung flew flown forbade forbidden forgot forgotten forgave forgiven
froze frozen got gotten gave given went gone ground grew grown hung had heard
hid hidden hit held hurt kept knelt knew known laid led leant leapt learnt left
lent lay lain lit lost made meant met paid put quit read rode ridden rang rung
rose risen ran said saw seen sought sold sent set shook shaken shone shot shown
shrank shrunk shut sang sung sank sunk sat slept slid slung spoke spoken sped
spent spun spread sprang sprung stood stole stolen stuck stung stank struck
strove swore sworn swept swam swum swung took taken taught tore torn told
thought threw thrown thrust trod understood woke woken wore worn wove woven wept
won wound wrote written
""".split()


def load_index(path):
    entries = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.startswith(" "):
                continue
            parts = line.split()
            lemma, synset_cnt, p_cnt = parts[0], int(parts[2]), int(parts[3])
            tagsense_cnt = int(parts[5 + p_cnt])
            offsets = parts[6 + p_cnt:]
            entries[lemma] = (tagsense_cnt, synset_cnt, offsets)
    return entries


def only_capitalized(dict_dir, offsets, lemma):
    """True when every noun synset spells `lemma` with an initial capital."""
    with open(f"{dict_dir}/data.noun", "rb") as f:
        for offset in offsets:
            f.seek(int(offset))
            parts = f.readline().decode("utf-8").split()
            word_count = int(parts[3], 16)
            words = [parts[4 + 2 * i] for i in range(word_count)]
            if any(w.lower() == lemma and not w[:1].isupper() for w in words):
                return False
    return True


def best_pos(word, indexes):
    found = [(p, indexes[p][word]) for p in PREFERENCE if word in indexes[p]]
    if not found:
        return None
    found.sort(key=lambda item: (-item[1][0], -item[1][1], PREFERENCE.index(item[0])))
    return found[0][0]


def inflected_pos(word, indexes):
    candidates = []
    for pos, rules in DETACH.items():
        for suffix, repl in rules:
            if word.endswith(suffix) and len(word) > len(suffix) + 1:
                base = word[: -len(suffix)] + repl
                if base in indexes[pos]:
                    candidates.append((indexes[pos][base][0], -PREFERENCE.index(pos), pos))
                # doubled consonant: running -> run, bigger -> big
                if suffix in ("ing", "ed", "er", "est") and repl == "" and len(base) > 2 \
                        and base[-1] == base[-2] and base[:-1] in indexes[pos]:
                    candidates.append((indexes[pos][base[:-1]][0], -PREFERENCE.index(pos), pos))
    if not candidates:
        return None
    return max(candidates)[2]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--wordnet", required=True)
    ap.add_argument("--stopwords", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--size", type=int, default=5000)
    args = ap.parse_args()

    indexes = {p: load_index(f"{args.wordnet}/index.{name}")
               for p, name in (("n", "noun"), ("v", "verb"), ("a", "adj"), ("r", "adv"))}
    stop = {w.strip() for w in open(args.stopwords, encoding="utf-8")
            if w.strip() and not w.startswith("#")}
    irregular = set(IRREGULAR_VERBS)

    rows = []
    for word in top_n_list("en", 40000):
        if len(rows) >= args.size:
            break
        if not re.fullmatch(r"[a-z][a-z'-]*", word) or word in stop or len(word) < 2:
            continue
        if word in irregular:
            pos = "v"
        else:
            pos = best_pos(word, indexes) or inflected_pos(word, indexes)
        if pos is None:
            continue
        if pos == "n" and word in indexes["n"] and \
                only_capitalized(args.wordnet, indexes["n"][word][2], word):
            pos = inflected_pos(word, indexes) or "p"
        rows.append((word, POS_NAMES[pos]))

    with open(args.out, "w", encoding="utf-8") as out:
        out.write("# word<TAB>class, most frequent English words; see tools/data/build_pos_lexicon.py\n")
        for word, cls in sorted(rows):
            out.write(f"{word}\t{cls}\n")


if __name__ == "__main__":
    main()
