"""Sequence scorers for the perplexity objective.

The built-in surrogate is a character trigram model with add-one smoothing,
trained on a small bundled English corpus, so the whole engine can run and be
tested offline. A remote scorer speaking a tiny JSON protocol can be plugged
in instead.
"""

from __future__ import annotations

import math
from collections import Counter
from importlib import resources
from typing import Optional

START = "\x02"  # context padding symbol, never produced by rendering
UNK = "\x00"


def bundled_corpus_path():
    return resources.files("instructevo.data") / "corpus.txt"


class CharTrigramScorer:
    """exp(mean negative log prob) under an add-one-smoothed char 3-gram model."""

    def __init__(self, corpus_text: str):
        if not corpus_text.strip():
            raise ValueError("scorer corpus must be non-empty")
        self.vocab = sorted(set(corpus_text)) + [UNK]
        self._vocab_set = set(self.vocab)
        self.trigrams: Counter = Counter()
        self.bigrams: Counter = Counter()
        for line in corpus_text.splitlines():
            if not line:
                continue
            seq = START * 2 + line
            for i in range(2, len(seq)):
                self.trigrams[seq[i - 2 : i + 1]] += 1
                self.bigrams[seq[i - 2 : i]] += 1

    @classmethod
    def bundled(cls) -> "CharTrigramScorer":
        return cls(bundled_corpus_path().read_text(encoding="utf-8"))

    def _norm(self, ch: str) -> str:
        return ch if ch in self._vocab_set else UNK

    def perplexity(self, text: str) -> float:
        if not text:
            return 1.0
        v = len(self.vocab)
        seq = START * 2 + "".join(self._norm(c) for c in text)
        total = 0.0
        n = 0
        for i in range(2, len(seq)):
            tri = seq[i - 2 : i + 1]
            bi = seq[i - 2 : i]
            p = (self.trigrams[tri] + 1) / (self.bigrams[bi] + v)
            total += -math.log(p)
            n += 1
        return math.exp(total / n)


class RemoteScorer:
    """POSTs {"text": ...} to an endpoint and reads {"perplexity": ...}."""

    def __init__(self, endpoint: str, timeout: float = 30.0, session=None):
        import requests

        self.endpoint = endpoint
        self.timeout = timeout
        self.session = session or requests.Session()

    def perplexity(self, text: str) -> float:
        if not text:
            return 1.0
        resp = self.session.post(self.endpoint, json={"text": text}, timeout=self.timeout)
        resp.raise_for_status()
        value = float(resp.json()["perplexity"])
        if not math.isfinite(value) or value < 1.0:
            raise ValueError(f"remote scorer returned invalid perplexity {value!r}")
        return value


_bundled: Optional[CharTrigramScorer] = None


def bundled_scorer() -> CharTrigramScorer:
    global _bundled
    if _bundled is None:
        _bundled = CharTrigramScorer.bundled()
    return _bundled
