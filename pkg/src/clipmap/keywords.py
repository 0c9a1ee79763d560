"""Display keywords for clips.

Candidate phrases are the clip's distinct unigrams and adjacent bigrams
after lowercasing and stopword removal, capped at 200 per clip by first
occurrence. Each candidate is embedded with the same provider as the clip
and ranked by cosine similarity to the full clip embedding; the top few
become the clip's badge on the map.
"""

from __future__ import annotations

import numpy as np

from .embedding import EmbeddingProvider, tokenize
from .model import cosine_similarity

MAX_CANDIDATES = 200

DEFAULT_TOP_N = 3

# fixed English stopword list, checked in so results never depend on an
# external download
STOPWORDS = frozenset({
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you",
    "you're", "you've", "you'll", "you'd", "your", "yours", "yourself",
    "yourselves", "he", "him", "his", "himself", "she", "she's", "her",
    "hers", "herself", "it", "it's", "its", "itself", "they", "them",
    "their", "theirs", "themselves", "what", "which", "who", "whom",
    "this", "that", "that'll", "these", "those", "am", "is", "are",
    "was", "were", "be", "been", "being", "have", "has", "had",
    "having", "do", "does", "did", "doing", "a", "an", "the", "and",
    "but", "if", "or", "because", "as", "until", "while", "of", "at",
    "by", "for", "with", "about", "against", "between", "into",
    "through", "during", "before", "after", "above", "below", "to",
    "from", "up", "down", "in", "out", "on", "off", "over", "under",
    "again", "further", "then", "once", "here", "there", "when",
    "where", "why", "how", "all", "any", "both", "each", "few", "more",
    "most", "other", "some", "such", "no", "nor", "not", "only", "own",
    "same", "so", "than", "too", "very", "s", "t", "can", "will",
    "just", "don", "don't", "should", "should've", "now", "d", "ll",
    "m", "o", "re", "ve", "y", "ain", "aren", "aren't", "couldn",
    "couldn't", "didn", "didn't", "doesn", "doesn't", "hadn", "hadn't",
    "hasn", "hasn't", "haven", "haven't", "isn", "isn't", "ma",
    "mightn", "mightn't", "mustn", "mustn't", "needn", "needn't",
    "shan", "shan't", "shouldn", "shouldn't", "wasn", "wasn't",
    "weren", "weren't", "won", "won't", "wouldn", "wouldn't",
})


def candidate_phrases(text: str, limit: int = MAX_CANDIDATES) -> list[str]:
    """Distinct non-stopword unigrams and adjacent bigrams, in first-occurrence order."""
    tokens = tokenize(text)
    keep = [t not in STOPWORDS for t in tokens]
    seen: set[str] = set()
    out: list[str] = []

    def push(phrase: str) -> bool:
        if phrase in seen:
            return True
        seen.add(phrase)
        out.append(phrase)
        return len(out) < limit

    for i, tok in enumerate(tokens):
        if keep[i]:
            if not push(tok):
                return out
        if i + 1 < len(tokens) and keep[i] and keep[i + 1]:
            if not push(f"{tok} {tokens[i + 1]}"):
                return out
    return out


def extract_keywords(
    text: str,
    provider: EmbeddingProvider,
    clip_vector: np.ndarray = None,
    top_n: int = DEFAULT_TOP_N,
) -> list[str]:
    """Rank candidate phrases by cosine to the full clip embedding."""
    candidates = candidate_phrases(text)
    if not candidates:
        return []
    if clip_vector is None:
        clip_vector = provider.embed_texts([text])[0]
    vectors = provider.embed_texts(candidates)
    scored = [
        (cosine_similarity(vec, clip_vector), i)
        for i, vec in enumerate(vectors)
    ]
    scored.sort(key=lambda p: (-p[0], p[1]))
    return [candidates[i] for _, i in scored[:top_n]]
