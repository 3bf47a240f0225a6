from .corpus import (
    TaggedSentence,
    affixes,
    normalize,
    parse_vertical_corpus,
    read_corpus,
    serialize_vertical_corpus,
    write_corpus,
)
from .dataset import TaggedCorpusDataset, collate_sentences
from .vocabulary import (
    EncodedSentence,
    FeatureFlags,
    Vocabulary,
    build_vocabulary,
    encode_sentence,
)

__all__ = [
    "TaggedSentence",
    "affixes",
    "normalize",
    "parse_vertical_corpus",
    "serialize_vertical_corpus",
    "read_corpus",
    "write_corpus",
    "Vocabulary",
    "FeatureFlags",
    "EncodedSentence",
    "build_vocabulary",
    "encode_sentence",
    "TaggedCorpusDataset",
    "collate_sentences",
]
