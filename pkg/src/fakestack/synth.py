"""Seeded synthetic Bangla-script corpus for desk-scale experiments.

Authentic articles draw tokens from a shared Zipf-like distribution over a
pseudo-word vocabulary.  Fake articles mix in a second, topic-concentrated
distribution; the mixing weight varies per article so that some fake items
are nearly indistinguishable from authentic ones.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .corpus import AUTHENTIC, FAKE, LabeledDataset, RawArticle
from .text import default_stemmer, default_stopwords

_CONSONANTS = list("কখগঘচছজঝটঠডঢতথদধনপফবভমলশষসহ")
_VOWEL_SIGNS = ["", "", "া", "ি", "ী", "ু", "ূ", "ো", "ৌ"]
_NOISE = ["!", "?", ",", "।", "2021", "১২", "৩০", "#", "@", "%", "news", "BD", "😀", "~", "(", ")"]


def pseudo_vocabulary(size: int, rng: np.random.Generator) -> list[str]:
    stops, stemmer = default_stopwords(), default_stemmer()
    words: list[str] = []
    seen = set()
    while len(words) < size:
        n_syll = int(rng.integers(2, 4))
        w = "".join(_CONSONANTS[rng.integers(len(_CONSONANTS))] + _VOWEL_SIGNS[rng.integers(len(_VOWEL_SIGNS))]
                    for _ in range(n_syll))
        if w in seen or w in stops or stemmer(w) != w:
            continue
        seen.add(w)
        words.append(w)
    return words


def synthetic_corpus(
    n_majority: int = 5000,
    n_minority: int = 150,
    seed: int = 0,
    vocab_size: int = 800,
    topic_size: int = 40,
    doc_length: float = 40.0,
    signal: float = 0.35,
    noise_rate: float = 0.05,
    leak: float = 0.12,
) -> LabeledDataset:
    """Generate ``n_majority`` authentic and ``n_minority`` fake articles.

    ``signal`` is the mean share of a fake article's tokens drawn from the
    fake topic distribution (per-article share ~ Beta with that mean).
    ``leak`` is the same for authentic articles, so the classes overlap.
    """
    rng = np.random.default_rng(seed)
    vocab = np.array(pseudo_vocabulary(vocab_size, rng))
    ranks = rng.permutation(vocab_size) + 1
    common = 1.0 / ranks ** 1.05
    common /= common.sum()
    topic = np.zeros(vocab_size)
    topic_words = rng.choice(vocab_size, topic_size, replace=False)
    topic[topic_words] = rng.dirichlet(np.full(topic_size, 0.8))

    records = []
    labels = np.array([AUTHENTIC] * n_majority + [FAKE] * n_minority)
    labels = labels[rng.permutation(len(labels))]
    for i, label in enumerate(labels):
        length = max(3, int(rng.poisson(doc_length)))
        mean = signal if label == FAKE else leak
        n_topic = rng.binomial(length, rng.beta(2.0, 2.0 * (1.0 - mean) / mean)) if mean > 0 else 0
        toks = list(vocab[rng.choice(vocab_size, length - n_topic, p=common)])
        toks += list(vocab[rng.choice(vocab_size, n_topic, p=topic)])
        order = rng.permutation(len(toks))
        toks = [toks[j] for j in order]
        n_noise = rng.binomial(len(toks), noise_rate)
        for _ in range(n_noise):
            toks.insert(int(rng.integers(len(toks) + 1)), _NOISE[rng.integers(len(_NOISE))])
        records.append(RawArticle(
            id=f"syn{i:06d}", content=" ".join(toks), label=int(label),
            headline=" ".join(toks[:5]), source="synthetic", domain="synthetic.local",
            date="2020-01-01", category="synthetic",
        ))
    return LabeledDataset(tuple(records))


def write_corpus(dataset: LabeledDataset, path: str | Path, delimiter: str = ",") -> None:
    """Write in the column layout ``load_corpus`` reads by default."""
    fields = ["articleID", "domain", "date", "category", "source", "headline", "content", "label"]
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(fields)
        for r in dataset:
            w.writerow([r.id, r.domain, r.date, r.category, r.source, r.headline, r.content, r.label])
