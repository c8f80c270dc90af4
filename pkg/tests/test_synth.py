import numpy as np
import pytest

from scalednmf.corpus import tokenize
from scalednmf.synth import SyntheticSpec, generate_synthetic_corpus


def small_spec(**overrides):
    base = dict(k_topics=3, n_docs=40, vocab_size=30, doc_length=(25.0, 0.0), seed=5)
    base.update(overrides)
    return SyntheticSpec(**base)


class TestSpecValidation:
    def test_docs_must_cover_topics(self):
        with pytest.raises(ValueError, match="n_docs"):
            SyntheticSpec(k_topics=5, n_docs=4, vocab_size=20)

    def test_vocab_must_be_twice_topics(self):
        with pytest.raises(ValueError, match="vocab_size"):
            SyntheticSpec(k_topics=5, n_docs=10, vocab_size=9)

    def test_skew_below_one_rejected(self):
        with pytest.raises(ValueError, match="length_skew"):
            small_spec(length_skew=0.5)

    def test_nonpositive_concentration_rejected(self):
        with pytest.raises(ValueError, match="concentration"):
            small_spec(topic_concentration=0.0)


class TestGenerator:
    def test_same_spec_same_corpus(self):
        docs1 = generate_synthetic_corpus(small_spec())
        docs2 = generate_synthetic_corpus(small_spec())
        assert docs1 == docs2

    def test_different_seed_different_corpus(self):
        docs1 = generate_synthetic_corpus(small_spec(seed=1))
        docs2 = generate_synthetic_corpus(small_spec(seed=2))
        assert docs1 != docs2

    def test_single_topic_labels_everything_zero(self):
        docs = generate_synthetic_corpus(small_spec(k_topics=1, vocab_size=10))
        assert {d.label for d in docs} == {"topic0"}

    def test_shapes_and_ids(self):
        docs = generate_synthetic_corpus(small_spec())
        assert len(docs) == 40
        assert len({d.id for d in docs}) == 40
        assert all(d.label.startswith("topic") for d in docs)

    def test_every_document_has_tokens(self):
        docs = generate_synthetic_corpus(small_spec(doc_length=(2.0, 0.5)))
        assert all(d.text for d in docs)

    def test_tokens_survive_the_tokenizer_unchanged(self):
        docs = generate_synthetic_corpus(small_spec())
        for doc in docs[:10]:
            assert tokenize(doc.text) == doc.text.split()

    def test_length_skew_widens_the_length_spread(self):
        flat = generate_synthetic_corpus(small_spec(n_docs=300, length_skew=1.0))
        skewed = generate_synthetic_corpus(small_spec(n_docs=300, length_skew=10.0))
        lengths_flat = np.array([len(d.text.split()) for d in flat], dtype=float)
        lengths_skew = np.array([len(d.text.split()) for d in skewed], dtype=float)
        spread_flat = lengths_flat.max() / lengths_flat.min()
        spread_skew = lengths_skew.max() / lengths_skew.min()
        assert spread_skew > 2 * spread_flat

    def test_roundtrip_spec_dict(self):
        spec = small_spec(zipf_exponent=1.2, length_skew=4.0, topic_concentration=0.07)
        assert SyntheticSpec.from_dict(spec.to_dict()) == spec
