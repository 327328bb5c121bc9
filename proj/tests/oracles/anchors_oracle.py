"""Brute-force anchor selection reference.

Writes a pre-tagged 100-sentence corpus and, for each word-type preset, the
vocabulary a plain recount produces. The C++ test reads both files.
"""
import json
import random
import sys
from pathlib import Path

WORDS = [
    ("snow", ["NN"]), ("rain", ["NN"]), ("storm", ["NN"]), ("city", ["NN"]),
    ("house", ["NN", "VB"]), ("dogs", ["NNS"]), ("paris", ["NNP"]),
    ("walk", ["VB", "NN"]), ("falls", ["VBZ", "NNS"]), ("eating", ["VBG"]),
    ("went", ["VBD"]), ("seen", ["VBN"]), ("cold", ["JJ"]), ("quickly", ["RB"]),
    ("bigger", ["JJR"]), ("the", ["DT"]), ("of", ["IN"]), ("today", ["NN"]),
    ("rare", ["JJ"]), ("snowing", ["VBG"]), ("teacher", ["NN"]), ("run", ["VB", "NN"]),
]
PRESETS = {
    "V": {"VB", "VBD", "VBG", "VBN", "VBP", "VBZ"},
    "N": {"NN", "NNP", "NNS"},
}
PRESETS["VN"] = PRESETS["V"] | PRESETS["N"]
PRESETS["VNA"] = PRESETS["VN"] | {"JJ", "JJR", "JJS", "RB", "RBR", "RBS"}


def make_corpus(rng):
    weights = [rng.uniform(0.05, 1.0) for _ in WORDS]
    weights[WORDS.index(("the", ["DT"]))] = 6.0  # near-universal
    weights[WORDS.index(("rare", ["JJ"]))] = 0.02
    corpus = []
    for _ in range(100):
        n = rng.randint(3, 9)
        sent = []
        for w, tags in rng.choices(WORDS, weights=weights, k=n):
            sent.append((w, rng.choice(tags)))
        if rng.random() < 0.97:
            sent.insert(0, ("the", "DT"))
        corpus.append(sent)
    return corpus


def select(corpus, tagset, min_count=10, frac=0.9):
    words = sorted({w for s in corpus for w, _ in s})
    out = []
    for w in words:
        count = sum(1 for s in corpus for x, _ in s if x == w)
        docs = sum(1 for s in corpus if any(x == w for x, _ in s))
        tagged = any(x == w and t in tagset for s in corpus for x, t in s)
        if tagged and count > min_count and docs < frac * len(corpus):
            out.append((w, count, docs))
    out.sort(key=lambda e: (-e[1], e[0]))
    return out


def main():
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent.parent / "data"
    rng = random.Random(20240611)
    corpus = make_corpus(rng)
    with open(out_dir / "anchor_corpus.tsv", "w") as f:
        for s in corpus:
            for w, t in s:
                f.write(f"{w}\t{t}\n")
            f.write("\n")
    expected = {name: [list(e) for e in select(corpus, tags)] for name, tags in PRESETS.items()}
    with open(out_dir / "anchor_expected.json", "w") as f:
        json.dump(expected, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()
