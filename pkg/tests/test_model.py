import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from clipmap.errors import (
    DegenerateVector,
    DimensionError,
    InvalidConcept,
    InvalidWeight,
)
from clipmap.model import (
    concept_vector,
    cosine_similarity,
    normalize_weights,
    parse_timestamp,
)


class TestNormalizeWeights:
    def test_single_member(self):
        assert normalize_weights([3]) == [1.0]

    def test_mixed_stars(self):
        assert normalize_weights([1, 2, 3]) == [1 / 6, 2 / 6, 3 / 6]

    def test_equal_stars(self):
        assert normalize_weights([2, 2]) == [0.5, 0.5]

    def test_empty_rejected(self):
        with pytest.raises(InvalidConcept):
            normalize_weights([])

    @pytest.mark.parametrize("bad", [0, 4, -1, 2.5, "2", None, True])
    def test_bad_star_rejected(self, bad):
        with pytest.raises(InvalidWeight):
            normalize_weights([1, bad])

    @given(st.lists(st.sampled_from([1, 2, 3]), min_size=1, max_size=40))
    def test_weights_form_probability_vector(self, stars):
        weights = normalize_weights(stars)
        assert len(weights) == len(stars)
        assert all(w > 0 for w in weights)
        assert abs(sum(weights) - 1.0) < 1e-12
        # heavier stars never get smaller weight
        for (si, wi), (sj, wj) in zip(zip(stars, weights), zip(stars[1:], weights[1:])):
            if si < sj:
                assert wi < wj


class TestConceptVector:
    def test_two_member_example(self):
        v1 = np.array([1.0, 0.0])
        v2 = np.array([0.0, 1.0])
        out = concept_vector([v1, v2], normalize_weights([1, 3]))
        assert np.allclose(out, [0.25, 0.75])

    def test_single_member_identity(self):
        v = np.array([0.3, -0.4, 0.5])
        out = concept_vector([v], [1.0])
        assert np.array_equal(out, v)

    def test_uses_raw_member_vectors(self):
        # members are not re-normalized before the weighted sum
        long = np.array([10.0, 0.0])
        short = np.array([0.0, 1.0])
        out = concept_vector([long, short], [0.5, 0.5])
        assert np.allclose(out, [5.0, 0.5])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            concept_vector([np.ones(3), np.ones(4)], [0.5, 0.5])

    def test_count_mismatch(self):
        with pytest.raises(DimensionError):
            concept_vector([np.ones(3)], [0.5, 0.5])

    def test_weights_must_sum_to_one(self):
        with pytest.raises(InvalidWeight):
            concept_vector([np.ones(2), np.ones(2)], [0.5, 0.6])

    def test_empty_rejected(self):
        with pytest.raises(InvalidConcept):
            concept_vector([], [])

    @given(
        st.integers(min_value=1, max_value=6),
        st.integers(min_value=0, max_value=2**31 - 1),
    )
    def test_componentwise_convexity(self, count, seed):
        rng = np.random.default_rng(seed)
        vectors = [rng.standard_normal(8) for _ in range(count)]
        stars = [int(s) for s in rng.integers(1, 4, size=count)]
        out = concept_vector(vectors, normalize_weights(stars))
        stack = np.stack(vectors)
        assert np.all(out >= stack.min(axis=0) - 1e-12)
        assert np.all(out <= stack.max(axis=0) + 1e-12)


class TestCosineSimilarity:
    def test_identical(self):
        v = np.array([1.0, 2.0, 3.0])
        assert cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 5.0]) == 0.0

    def test_opposite(self):
        assert cosine_similarity([1.0, 1.0], [-2.0, -2.0]) == pytest.approx(-1.0, abs=1e-12)

    def test_zero_vector_rejected(self):
        with pytest.raises(DegenerateVector):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])
        with pytest.raises(DegenerateVector):
            cosine_similarity([1.0, 0.0], [0.0, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            cosine_similarity([1.0, 0.0], [1.0, 0.0, 0.0])

    def test_non_finite_rejected(self):
        with pytest.raises(DimensionError):
            cosine_similarity([np.nan, 1.0], [1.0, 0.0])
        with pytest.raises(DimensionError):
            cosine_similarity([np.inf, 1.0], [1.0, 0.0])

    @given(st.integers(min_value=0, max_value=2**31 - 1))
    def test_symmetry_and_bounds(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal(16)
        b = rng.standard_normal(16)
        s = cosine_similarity(a, b)
        assert cosine_similarity(b, a) == s
        assert -1.0 - 1e-9 <= s <= 1.0 + 1e-9

    @given(
        st.integers(min_value=0, max_value=2**31 - 1),
        st.floats(min_value=1e-3, max_value=1e3),
    )
    def test_positive_scale_invariance(self, seed, scale):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal(16)
        b = rng.standard_normal(16)
        assert cosine_similarity(a * scale, b) == pytest.approx(
            cosine_similarity(a, b), abs=1e-9
        )


class TestTimestamps:
    def test_z_suffix(self):
        ts = parse_timestamp("2026-01-02T03:04:05Z")
        assert ts.isoformat() == "2026-01-02T03:04:05+00:00"

    def test_naive_becomes_utc(self):
        ts = parse_timestamp("2026-01-02T03:04:05")
        assert ts.tzinfo is not None

    def test_offset_preserved(self):
        ts = parse_timestamp("2026-01-02T03:04:05+02:00")
        assert ts.utcoffset().total_seconds() == 7200
