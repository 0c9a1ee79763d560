import json

import numpy as np
import pytest

from clipmap.embedding import HashedTextEmbedder
from clipmap.workspace import Workspace

TOPICS = {
    "cooking": "carrot roast oven garlic butter recipe simmer braise saute skillet stock broth knife seasoning pepper salt flavor tender crispy golden".split(),
    "gardening": "soil compost seedling mulch prune trellis perennial bloom pollinator raised bed drainage watering sunlight germinate harvest weed root stem leaf".split(),
    "astronomy": "telescope nebula galaxy orbit eclipse aperture comet spectrum luminous parallax quasar supernova planetary transit magnitude stellar cluster redshift cosmic dust".split(),
    "climbing": "belay anchor crimp overhang carabiner chalk dynamic rope pitch rappel traverse slab summit bouldering harness friction hold gear crux approach".split(),
    "woodwork": "chisel dovetail grain mortise tenon plane sandpaper walnut maple lathe joinery clamp veneer finish varnish workshop sawdust jig fence blade".split(),
    "finance": "dividend equity portfolio hedge liquidity margin yield volatility index futures option bond inflation treasury broker asset ledger solvency audit capital".split(),
    "medicine": "diagnosis symptom antibody vaccine dosage clinical trial placebo pathogen immune chronic acute therapy prognosis biopsy oncology cardiology triage suture anesthesia".split(),
    "music": "chord melody rhythm tempo harmony cadence scale arpeggio timbre resonance fret octave crescendo notation ensemble counterpoint motif sonata interval tuning".split(),
}


def make_paragraph(rng: np.random.Generator, words: list[str], salt: str) -> str:
    picks = [words[int(i)] for i in rng.integers(0, len(words), size=16)]
    text = " ".join(picks) + f" entry {salt}"
    while len(text) < 80:
        text += " " + words[int(rng.integers(0, len(words)))]
    return text[0].upper() + text[1:] + "."


def synthetic_records(n_pages: int, paras_per_page: int = 5, seed: int = 7) -> list[dict]:
    """Deterministic JSONL-ready corpus with topical structure."""
    rng = np.random.default_rng(seed)
    names = list(TOPICS)
    records = []
    for p in range(n_pages):
        topic = names[p % len(names)]
        paras = [
            make_paragraph(rng, TOPICS[topic], f"{topic} {p} {j}")
            for j in range(paras_per_page)
        ]
        body = "".join(f"<p>{t}</p>" for t in paras)
        records.append(
            {
                "url": f"https://{topic}.example/page{p}",
                "html": f"<html><head><title>{topic.title()} notes {p}</title></head><body>{body}</body></html>",
                "visited_at": f"2026-02-{(p % 27) + 1:02d}T{p % 24:02d}:00:00Z",
            }
        )
    return records


def write_corpus(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


@pytest.fixture
def embedder() -> HashedTextEmbedder:
    return HashedTextEmbedder()


@pytest.fixture
def workspace(embedder) -> Workspace:
    return Workspace(embedder, data_dir=None, seed=0)


@pytest.fixture
def small_workspace(embedder, tmp_path) -> Workspace:
    ws = Workspace(embedder, data_dir=tmp_path / "data", seed=0)
    corpus = tmp_path / "corpus.jsonl"
    write_corpus(corpus, synthetic_records(4, paras_per_page=3, seed=11))
    ws.ingest_corpus(corpus)
    return ws
