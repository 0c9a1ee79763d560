"""End-to-end acceptance checks for the primary engine.

Each test prints exactly one PASS/FAIL line naming the behavior under
test and the measured numbers, then asserts. The desk-scale fixture
(550 clips, 12 concepts) is built once per module and shared by the
timing and persistence checks.
"""

import math
import shutil
from time import perf_counter

import numpy as np
import pytest

from clipmap.embedding import HashedTextEmbedder
from clipmap.errors import LoadError
from clipmap.extraction import extract_clips, parse_record
from clipmap.graph import Edge, SimilarityGraph, edge_budget, select_clip_edges
from clipmap.index import evaluate_recall
from clipmap.layout import ForceLayout
from clipmap.model import concept_vector, cosine_similarity, normalize_weights
from clipmap.store import EMBEDDINGS_FILE, STORE_FILE, load_store, stores_equal
from clipmap.workspace import Workspace

from conftest import synthetic_records


def report(name: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def desk():
    """Workspace at the scale of a real working set: 550 clips, 12 concepts."""
    ws = Workspace(HashedTextEmbedder(), data_dir=None, seed=0)
    for raw in synthetic_records(110, paras_per_page=5, seed=21):
        ws.ingest_record(parse_record(raw), refresh=False)
    ws.layout_doc()
    rng = np.random.default_rng(3)
    by_topic: dict[str, list[str]] = {}
    for clip in ws.store.clips.values():
        topic = ws.store.pages[clip.page_id].url.split("//")[1].split(".")[0]
        by_topic.setdefault(topic, []).append(clip.id)
    topics = sorted(by_topic)
    for i in range(12):
        ids = sorted(by_topic[topics[i % len(topics)]])
        count = int(rng.integers(3, 7))
        picks = rng.choice(len(ids), size=count, replace=False)
        members = [
            {"clip_id": ids[int(j)], "stars": int(rng.integers(1, 4))} for j in picks
        ]
        ws.create_concept(f"{topics[i % len(topics)]} {i}", members)
    assert len(ws.store.clips) == 550
    assert len(ws.store.concepts) == 12
    return ws


def test_concept_vector_fidelity(desk):
    embedder = HashedTextEmbedder()
    rng = np.random.default_rng(17)
    pool = [
        " ".join(f"w{int(t)}" for t in rng.integers(0, 500, size=12))
        for _ in range(120)
    ]
    vectors = np.stack(embedder.embed_texts(pool))

    t0 = perf_counter()
    worst = 0.0
    for _ in range(1000):
        count = int(rng.integers(1, 11))
        idx = rng.choice(len(pool), size=count, replace=False)
        stars = [int(s) for s in rng.integers(1, 4, size=count)]
        got = concept_vector([vectors[i] for i in idx], normalize_weights(stars))
        oracle = np.average(vectors[idx], axis=0, weights=np.asarray(stars, dtype=np.float64))
        worst = max(worst, float(np.max(np.abs(got - oracle))))
    elapsed = perf_counter() - t0

    stored_worst = 0.0
    for concept in desk.store.concepts.values():
        member_vecs = np.stack([desk.index.get_vector(m.clip_id) for m in concept.members])
        oracle = np.average(
            member_vecs, axis=0, weights=np.asarray([m.stars for m in concept.members], dtype=np.float64)
        )
        stored_worst = max(stored_worst, float(np.max(np.abs(concept.vector - oracle))))

    ok = worst <= 1e-6 and stored_worst <= 1e-6 and elapsed < 5.0
    report(
        "concept-vector-fidelity",
        ok,
        f"1000 random concepts max error {worst:.2e}, 12 stored concepts max error "
        f"{stored_worst:.2e}, {elapsed:.2f}s (budget 5s, tolerance 1e-6)",
    )


def test_cosine_similarity_properties():
    rng = np.random.default_rng(23)
    dims = [2, 3, 4, 8, 32, 256]
    violations: list[str] = []
    for i in range(10000):
        d = dims[i % len(dims)]
        a = rng.standard_normal(d) * (10.0 ** rng.uniform(-3, 3))
        b = rng.standard_normal(d) * (10.0 ** rng.uniform(-3, 3))
        s = cosine_similarity(a, b)
        if not abs(s) <= 1.0 + 1e-9:
            violations.append(f"bound |{s}| at pair {i}")
        if cosine_similarity(b, a) != s:
            violations.append(f"asymmetry at pair {i}")
        if abs(cosine_similarity(a, a) - 1.0) > 1e-9:
            violations.append(f"self-similarity at pair {i}")
        scale = float(10.0 ** rng.uniform(-3, 3))
        if abs(cosine_similarity(scale * a, b) - s) > 1e-9:
            violations.append(f"scale variance at pair {i}")
        if i % 20 == 0:
            num = math.fsum(x * y for x, y in zip(a, b))
            den = math.sqrt(math.fsum(x * x for x in a)) * math.sqrt(
                math.fsum(y * y for y in b)
            )
            if abs(s - num / den) > 1e-9:
                violations.append(f"oracle mismatch at pair {i}")
        if len(violations) >= 5:
            break
    ok = not violations
    report(
        "cosine-similarity-properties",
        ok,
        "10000 random pairs: bound, symmetry, self-similarity, positive-scale "
        "invariance, exact-sum oracle all within 1e-9"
        if ok
        else "; ".join(violations),
    )


def test_extraction_rules():
    s79 = " ".join(["word"] * 16)
    s80 = " ".join(["words"] + ["word"] * 15)
    assert len(s79) == 79 and len(s80) == 80

    p1 = "Slow roasted tomatoes with garlic and fresh basil turn plain pasta into a rich satisfying dinner."
    li1 = "Whisk the eggs with cream and a pinch of salt before they ever touch the heated buttered pan."
    li2 = "Rest the finished loaf on a wire rack for a full hour so the crumb sets before slicing begins."
    o1 = "Fold the dry ingredients into the wet ones gently so the batter keeps all of the air whipped in."
    c1 = "Row cell one holds this measured text piece"
    c2 = "and row cell two carries the rest of the measured sentence here"
    h1 = "Headings are not clip material even when they are long enough to pass the length rule easily."
    d1 = "Bare division text is not clip material even when it is long enough to pass the length rule."
    short = "Too short to keep."
    for text in (p1, li1, li2, o1, h1, d1):
        assert len(text) >= 80
    assert len(c1 + " " + c2) >= 80 and len(c1) < 80

    html = (
        "<html><head><title>Fixture</title></head><body>"
        f"<h1>{h1}</h1>"
        f"<p>{p1}</p>"
        f"<p>{s79}</p>"
        f"<p>{s80}</p>"
        f"<ul><li>{li1}</li><li>{li2}</li></ul>"
        f"<ol><li>{o1}</li></ol>"
        f"<table><tr><td>{c1}</td><td>{c2}</td></tr><tr><td>{short}</td></tr></table>"
        f"<div>{d1}</div>"
        f"<p>{p1}</p>"
        "</body></html>"
    )
    got = extract_clips(html, url="https://fixture.example/").clips
    expected = [p1, s80, li1, li2, o1, c1 + " " + c2]
    ok = got == expected
    report(
        "extraction-rules",
        ok,
        f"paragraph, list, and table-row units extracted exactly; 79-char candidate "
        f"dropped, 80-char kept; duplicate and non-unit text dropped ({len(got)} clips)"
        if ok
        else f"expected {expected!r}, got {got!r}",
    )


def test_edge_selection_rules():
    rng = np.random.default_rng(31)
    k = 0.01
    failures: list[str] = []
    checked_corpora = 0
    for run in range(50):
        n = int(rng.integers(2, 201))
        matrix = rng.standard_normal((n, 32))
        if run % 2 == 0 and n >= 4:
            matrix[1] = matrix[0]
            matrix[3] = matrix[2]
        ids = [f"c{i:04d}" for i in range(n)]
        edges = select_clip_edges(ids, matrix, k=k)

        norms = np.linalg.norm(matrix, axis=1)
        unit = matrix / norms[:, None]
        sims = unit @ unit.T
        iu, ju = np.triu_indices(n, k=1)
        weights = sims[iu, ju]
        positive = weights[weights > 0.0]
        budget = edge_budget(n, k)
        expected_count = min(budget, positive.size)

        if any(e.weight <= 0.0 for e in edges):
            failures.append(f"run {run}: non-positive edge selected")
        if len(edges) != expected_count:
            failures.append(
                f"run {run}: {len(edges)} edges, expected {expected_count} "
                f"(budget {budget}, positive pairs {positive.size})"
            )
        if edges and positive.size > len(edges):
            min_selected = min(e.weight for e in edges)
            unselected = np.sort(positive)[::-1][len(edges):]
            if unselected.size and float(unselected[0]) > min_selected:
                failures.append(
                    f"run {run}: unselected pair weight {unselected[0]:.6f} beats "
                    f"weakest selected {min_selected:.6f}"
                )
        checked_corpora += 1
        if len(failures) >= 5:
            break
    ok = not failures
    report(
        "edge-selection-rules",
        ok,
        f"{checked_corpora} random corpora (N from 2 to 200): positivity, "
        f"budget floor(k*N(N-1)/2) at k=0.01, and top-weight dominance all hold "
        "under full pair enumeration"
        if ok
        else "; ".join(failures),
    )


def test_ann_recall():
    t0 = perf_counter()
    result = evaluate_recall(n=5000, k=20, n_queries=100, dim=256, seed=0)
    elapsed = perf_counter() - t0
    ok = result["recall"] >= 0.9 and elapsed < 30.0
    report(
        "ann-recall",
        ok,
        f"recall@20 {result['recall']:.4f} over 5000 vectors / 100 queries "
        f"(threshold 0.9), total {elapsed:.1f}s (budget 30s, "
        f"build {result['build_seconds']:.1f}s)",
    )


def _random_graph(rng, n, n_edges):
    ids = [f"n{i:03d}" for i in range(n)]
    iu, ju = np.triu_indices(n, k=1)
    picks = rng.choice(iu.size, size=n_edges, replace=False)
    edges = [
        Edge(ids[int(iu[p])], ids[int(ju[p])], float(rng.uniform(0.2, 1.0)))
        for p in picks
    ]
    return ids, SimilarityGraph(clip_ids=ids, concept_ids=[], edges=edges)


def test_layout_pins_never_move():
    rng = np.random.default_rng(41)
    ids, graph = _random_graph(rng, 60, 40)
    pins = {ids[0]: (3.25, -7.5), ids[17]: (12.0, 4.0), ids[41]: (-1.0, 0.125)}
    result = ForceLayout(seed=5).layout(graph, pins=pins, iterations=500)
    moved = [nid for nid, want in pins.items() if result.positions[nid] != want]
    ok = not moved
    report(
        "layout-pinned-nodes",
        ok,
        "3 pinned nodes bitwise unchanged after 500 iterations"
        if ok
        else f"pins moved: {moved}",
    )


def test_layout_connected_pairs_closer():
    wins = 0
    runs = 50
    for run in range(runs):
        rng = np.random.default_rng(100 + run)
        n, n_edges = 100, edge_budget(100, 0.01)
        ids, graph = _random_graph(rng, n, n_edges)
        result = ForceLayout(seed=run).layout(graph, iterations=300)
        pos = np.array([result.positions[i] for i in ids])
        iu, ju = np.triu_indices(n, k=1)
        dists = np.hypot(pos[iu, 0] - pos[ju, 0], pos[iu, 1] - pos[ju, 1])
        connected = np.zeros(iu.size, dtype=bool)
        order = {nid: i for i, nid in enumerate(ids)}
        pair_index = {}
        for idx, (i, j) in enumerate(zip(iu, ju)):
            pair_index[(int(i), int(j))] = idx
        for e in graph.edges:
            i, j = sorted((order[e.a], order[e.b]))
            connected[pair_index[(i, j)]] = True
        if dists[connected].mean() < dists[~connected].mean():
            wins += 1
    ok = wins >= 45
    report(
        "layout-attraction",
        ok,
        f"connected pairs closer than unconnected in {wins}/{runs} random runs "
        "(threshold 45, 100 nodes, 49 edges, 300 iterations)",
    )


FOOD_CLIPS = {
    "carrots": "Carrots: crisp fresh garden produce, leafy salad greens, sweet orange vegetable roots pulled early.",
    "arugula": "Arugula: crisp fresh garden produce, leafy salad greens, peppery bitter vegetable leaves picked small.",
    "asparagus": "Asparagus: crisp fresh garden produce, leafy green vegetable spears, tender stalks bundled nicely.",
    "fish": "Fish: sizzling hearty savory roast, butcher protein meat fillets, seared ocean white flakes, grill smoke.",
    "beef": "Beef: sizzling hearty savory roast, butcher protein meat ribs, braised marbled brisket slices, grill char.",
    "burger": "Burger: sizzling hearty savory roast, butcher protein meat patty, stacked juicy toasted bun, grill flame.",
    "pizza": "Pizza: sizzling hearty savory roast, butcher protein meat pepperoni, baked melted cheese crust, grill oven.",
    "spinach": "Spinach: crisp fresh leafy salad greens, wilted emerald bunches, iron rich dark bowls served tonight.",
    "broccoli": "Broccoli: crisp fresh leafy salad greens, steamed florets, thick stalk crowns, sides plated warm.",
}


def test_layout_two_concept_separation():
    assert all(len(t) >= 80 for t in FOOD_CLIPS.values())
    ws = Workspace(HashedTextEmbedder(), data_dir=None, seed=0, concept_degree=5)
    body = "".join(f"<p>{t}</p>" for t in FOOD_CLIPS.values())
    record = parse_record(
        {"url": "https://meals.example/notes", "html": f"<html><title>Meals</title>{body}</html>"}
    )
    ws.ingest_record(record)
    by_name = {
        name: next(c.id for c in ws.store.clips.values() if c.text == text)
        for name, text in FOOD_CLIPS.items()
    }
    foods = ws.create_concept(
        "foods",
        [{"clip_id": by_name[n], "stars": 1} for n in ("carrots", "arugula", "fish", "beef")],
        position=(10.0, 0.0),
    )
    vegetables = ws.create_concept(
        "vegetables",
        [{"clip_id": by_name[n], "stars": 1} for n in ("carrots", "arugula", "asparagus")],
        position=(-10.0, 0.0),
    )
    graph = ws.graph()
    attached = {foods.id: set(), vegetables.id: set()}
    for e in graph.edges:
        if e.a in attached:
            attached[e.a].add(e.b)
        if e.b in attached:
            attached[e.b].add(e.a)
    only_foods = attached[foods.id] - attached[vegetables.id]
    only_veg = attached[vegetables.id] - attached[foods.id]
    assert only_foods and only_veg
    member_ids = set(foods.member_ids()) | set(vegetables.member_ids())
    assert only_foods - member_ids, "a non-member clip should attach to foods alone"

    doc = ws.relayout()
    nodes = doc["nodes"]
    assert (nodes[foods.id]["x"], nodes[foods.id]["y"]) == (10.0, 0.0)
    assert (nodes[vegetables.id]["x"], nodes[vegetables.id]["y"]) == (-10.0, 0.0)

    def dist(cid, concept):
        node = nodes[cid]
        cx, cy = nodes[concept.id]["x"], nodes[concept.id]["y"]
        return math.hypot(node["x"] - cx, node["y"] - cy)

    misplaced = []
    for cid in only_foods:
        if not dist(cid, foods) < dist(cid, vegetables):
            misplaced.append(cid)
    for cid in only_veg:
        if not dist(cid, vegetables) < dist(cid, foods):
            misplaced.append(cid)
    ok = not misplaced
    names = {v: k for k, v in by_name.items()}
    report(
        "layout-concept-separation",
        ok,
        f"two concepts pinned apart: {sorted(names[c] for c in only_foods)} sit nearer "
        f"foods, {sorted(names[c] for c in only_veg)} nearer vegetables"
        if ok
        else f"misplaced clips: {[names.get(c, c) for c in misplaced]}",
    )


def test_interactive_timing(desk):
    engine = desk.layout_engine
    graph = desk.graph()
    pins = desk._pins()
    positions = desk.get_layout_result().positions
    engine.refine(graph, pins, positions)
    t0 = perf_counter()
    engine.refine(graph, pins, positions)
    refine_ms = (perf_counter() - t0) * 1000.0

    query = next(iter(desk.store.concepts.values())).vector
    desk.index.exact_knn(query, 20)
    t0 = perf_counter()
    ranked = desk.index.exact_knn(query, 20)
    knn_ms = (perf_counter() - t0) * 1000.0

    ok = refine_ms < 500.0 and knn_ms < 50.0 and len(ranked) == 20
    report(
        "interactive-timing",
        ok,
        f"550 clips + 12 concepts: 60-iteration warm layout {refine_ms:.0f}ms "
        f"(budget 500ms), exact k=20 search {knn_ms:.2f}ms (budget 50ms)",
    )


def test_persistence_round_trip(desk, tmp_path):
    good = tmp_path / "good"
    good.mkdir()
    desk.store.save(good)
    loaded = load_store(good)
    round_trip_ok = stores_equal(desk.store, loaded)

    bad = tmp_path / "bad"
    bad.mkdir()
    raw = (good / STORE_FILE).read_bytes()
    (bad / STORE_FILE).write_bytes(raw[: len(raw) // 2])
    shutil.copy(good / EMBEDDINGS_FILE, bad / EMBEDDINGS_FILE)
    corrupt_failed = False
    try:
        load_store(bad)
    except LoadError:
        corrupt_failed = True
    again = load_store(good)
    ok = round_trip_ok and corrupt_failed and stores_equal(loaded, again)
    report(
        "persistence-round-trip",
        ok,
        f"550-clip store deep-equal after save/load ({len(loaded.clips)} clips, "
        f"{len(loaded.concepts)} concepts, {len(loaded.embeddings)} cached vectors); "
        "truncated store file rejected without touching the good copy",
    )
