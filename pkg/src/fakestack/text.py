"""Bangla text cleaning: standardization, tokenization, stopword removal and stemming."""
from __future__ import annotations

import functools
import logging
import re
import unicodedata
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import RawArticle

logger = logging.getLogger(__name__)

# Bengali block minus the digits (U+09E6-09EF) and the currency/fraction
# numerals (U+09F2-09FB).
_ALLOWED = "ঀ-৥ৰৱৼ৾"
_NOT_ALLOWED = re.compile(f"[^{_ALLOWED}]+")
_ONLY_ALLOWED = re.compile(f"[{_ALLOWED}]+")
# Joiners sit inside conjuncts such as "র‍্য"; dropping them keeps the word whole.
_JOINERS = dict.fromkeys(map(ord, "‌‍"), None)


def is_bengali_word(token: str) -> bool:
    return bool(_ONLY_ALLOWED.fullmatch(token))


def standardize(text: str) -> str:
    """Keep only Bengali letters and signs, separated by single spaces.

    >>> standardize("খবর! 2021 breaking ২০২১")
    'খবর'
    """
    text = unicodedata.normalize("NFC", text).translate(_JOINERS)
    return " ".join(_NOT_ALLOWED.sub(" ", text).split())


def tokenize(clean: str) -> list[str]:
    return [t for t in clean.split(" ") if t]


@dataclass(frozen=True)
class StopwordSet:
    words: frozenset[str]

    def __contains__(self, token: str) -> bool:
        return token in self.words

    def __len__(self):
        return len(self.words)

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "StopwordSet":
        kept = set()
        for w in words:
            clean = standardize(w)
            if not clean or " " in clean:
                logger.debug("dropping stopword entry %r (not a single Bengali token)", w)
                continue
            kept.add(clean)
        return cls(frozenset(kept))

    @classmethod
    def from_file(cls, path: str | Path) -> "StopwordSet":
        return cls.from_words(_data_lines(Path(path).read_text(encoding="utf-8")))


def _data_lines(text: str) -> list[str]:
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


@functools.lru_cache(maxsize=None)
def default_stopwords() -> StopwordSet:
    text = resources.files("fakestack").joinpath("data/stopwords-bn.txt").read_text(encoding="utf-8")
    return StopwordSet.from_words(_data_lines(text))


def load_stopwords(path: str | Path | None = None) -> StopwordSet:
    return StopwordSet.from_file(path) if path else default_stopwords()


@dataclass(frozen=True)
class SuffixRule:
    suffix: str
    replacement: str
    min_stem_len: int


class Stemmer:
    """Rule-based suffix stripper.

    Rules are tried in table order; the first one whose suffix matches and
    leaves at least ``min_stem_len`` characters fires.  Stripping repeats
    until no rule fires, so ``stem`` is idempotent.  Every replacement must be
    shorter than its suffix, which guarantees termination.
    """

    def __init__(self, rules: Sequence[SuffixRule]):
        for r in rules:
            if not r.suffix:
                raise ValueError("empty suffix in stemmer rule")
            if len(r.replacement) >= len(r.suffix):
                raise ValueError(f"replacement {r.replacement!r} must be shorter than suffix {r.suffix!r}")
            if r.min_stem_len < 1:
                raise ValueError("min_stem_len must be >= 1")
        self.rules = tuple(rules)

    @classmethod
    def from_text(cls, text: str) -> "Stemmer":
        rules = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.rstrip("\r\n").split("\t")
            if len(parts) != 3:
                raise ValueError(f"stemmer rules line {lineno}: expected suffix<TAB>replacement<TAB>min_stem_len")
            suffix, repl, min_len = parts
            rules.append(SuffixRule(
                unicodedata.normalize("NFC", suffix.strip()),
                unicodedata.normalize("NFC", repl.strip()),
                int(min_len),
            ))
        return cls(rules)

    @classmethod
    def from_file(cls, path: str | Path) -> "Stemmer":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def stem_word(self, word: str) -> str:
        while True:
            for r in self.rules:
                if word.endswith(r.suffix):
                    stem = word[: -len(r.suffix)] + r.replacement
                    if len(stem) >= r.min_stem_len:
                        word = stem
                        break
            else:
                return word

    def __call__(self, word: str) -> str:
        return self.stem_word(word)


@functools.lru_cache(maxsize=None)
def default_stemmer() -> Stemmer:
    text = resources.files("fakestack").joinpath("data/stem_rules.tsv").read_text(encoding="utf-8")
    return Stemmer.from_text(text)


def load_stemmer(path: str | Path | None = None) -> Stemmer:
    return Stemmer.from_file(path) if path else default_stemmer()


def remove_stopwords(tokens: Sequence[str], stops: StopwordSet | Iterable[str]) -> list[str]:
    return [t for t in tokens if t not in stops]


def stem(tokens: Sequence[str], stemmer: Stemmer) -> list[str]:
    return [stemmer.stem_word(t) for t in tokens]


@dataclass(frozen=True)
class TokenizedDoc:
    doc_id: str
    tokens: tuple[str, ...]
    label: int


def preprocess(
    article: RawArticle,
    stops: StopwordSet | None = None,
    stemmer: Stemmer | None = None,
) -> TokenizedDoc:
    """standardize -> tokenize -> remove_stopwords -> stem."""
    stops = default_stopwords() if stops is None else stops
    stemmer = default_stemmer() if stemmer is None else stemmer
    tokens = tokenize(standardize(article.content))
    tokens = stem(remove_stopwords(tokens, stops), stemmer)
    return TokenizedDoc(article.id, tuple(tokens), article.label)


def preprocess_all(articles: Iterable[RawArticle], stops=None, stemmer=None) -> list[TokenizedDoc]:
    stops = default_stopwords() if stops is None else stops
    stemmer = default_stemmer() if stemmer is None else stemmer
    # stems repeat heavily across a corpus
    cached = functools.lru_cache(maxsize=1 << 18)(stemmer.stem_word)
    out = []
    for a in articles:
        tokens = [cached(t) for t in tokenize(standardize(a.content)) if t not in stops]
        out.append(TokenizedDoc(a.id, tuple(tokens), a.label))
    return out
