import pytest

from taglab.data.corpus import TaggedSentence
from taglab.data.vocabulary import (
    PAD_ID,
    UNK,
    UNK_ID,
    FeatureFlags,
    Vocabulary,
    build_vocabulary,
    encode_sentence,
)


@pytest.fixture
def train():
    return [
        TaggedSentence(("Saya", "makan", "nasi"), ("PRP", "VB", "NN")),
        TaggedSentence(("saya", "minum", "air"), ("PRP", "VB", "NN")),
        TaggedSentence(("Dia", "makan"), ("PRP", "VB")),
    ]


def test_reserved_ids(train):
    vocab = build_vocabulary(train, word_min=1, affix_min=1)

    assert vocab.word_index[UNK] == UNK_ID == 0
    assert vocab.word_of(PAD_ID) == "<pad>"
    for table in vocab.affix_index.values():
        assert table[UNK] == UNK_ID


def test_word_threshold_keeps_frequent_words(train):
    vocab = build_vocabulary(train, word_min=2, affix_min=1)

    # "saya" and "makan" occur twice once lowercased; singletons are dropped
    assert set(vocab.word_index) == {"<unk>", "<pad>", "makan", "saya"}


def test_tags_are_dense_and_sorted(train):
    vocab = build_vocabulary(train)

    assert vocab.tags == ["NN", "PRP", "VB"]
    assert [vocab.tag_of(i) for i in range(vocab.n_tags)] == vocab.tags


def test_characters_keep_case(train):
    vocab = build_vocabulary(train)

    assert "S" in vocab.char_index
    assert "s" in vocab.char_index


def test_unknown_words_map_to_unk(train):
    vocab = build_vocabulary(train, word_min=2, affix_min=1)
    encoded = encode_sentence(vocab, TaggedSentence(("Saya", "tidur")))

    assert encoded.word_ids == (vocab.word_index["saya"], UNK_ID)
    assert encoded.tag_ids is None


def test_lowercase_lookups_but_not_characters(train):
    vocab = build_vocabulary(train, word_min=1, affix_min=1)
    encoded = encode_sentence(vocab, TaggedSentence(("SAYA",)))

    assert encoded.word_ids == (vocab.word_index["saya"],)
    assert encoded.char_ids[0][0] == vocab.char_index["S"]
    assert encoded.char_ids[0][1] == UNK_ID  # no uppercase "A" in training


def test_keep_case_mode(train):
    flags = FeatureFlags.from_names("words,chars", lowercase_mode="none-with-chars")
    vocab = build_vocabulary(train, word_min=1, affix_min=1, keep_case=flags.keep_case)

    assert "Saya" in vocab.word_index
    assert "saya" in vocab.word_index


def test_unknown_gold_tag(train):
    vocab = build_vocabulary(train)
    with pytest.raises(ValueError):
        encode_sentence(vocab, TaggedSentence(("nasi",), ("XX",)))


def test_empty_training_set():
    with pytest.raises(ValueError):
        build_vocabulary([])


def test_dict_round_trip_preserves_ids(train):
    vocab = build_vocabulary(train, word_min=1, affix_min=1)
    restored = Vocabulary.from_dict(vocab.to_dict())

    assert restored == vocab


def test_feature_flags_from_names():
    flags = FeatureFlags.from_names("words,suffix,chars")

    assert (flags.use_prefix, flags.use_suffix, flags.use_chars) == (False, True, True)
    assert flags.names == "words,suffix,chars"
    with pytest.raises(ValueError):
        FeatureFlags.from_names("words,lemma")
