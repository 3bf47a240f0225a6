import json

import pytest
import torch

from taglab.architectures.baselines import fit_major, fit_memo
from taglab.architectures.crf import CrfConfig, predict_crf, train_crf
from taglab.architectures.neural import NeuralConfig, NeuralTagger
from taglab.data.storage import ModelContainer, Storage, load_model, save_model
from taglab.data.storage.container import FORMAT_VERSION, MAGIC
from taglab.data.vocabulary import build_vocabulary, encode_sentence
from taglab.errors import ModelFormatError, StorageError


@pytest.fixture(scope="module")
def crf_model(small_corpus):
    model, _ = train_crf(
        CrfConfig(max_epochs=2), small_corpus[:30], small_corpus[30:], progress=False
    )
    return model


@pytest.fixture(scope="module")
def neural_model(small_corpus):
    config = NeuralConfig(word_dim=4, affix_dim=2, char_dim=2, char_filters=2, hidden=3)
    config = config.with_features("words,prefix,suffix,chars")
    vocab = build_vocabulary(small_corpus, word_min=1, affix_min=1)
    model = NeuralTagger(config, vocab)
    model.eval()
    return model


def test_baselines_round_trip(small_corpus, tmp_path):
    for fit in (fit_major, fit_memo):
        model = fit(small_corpus)
        loaded = load_model(save_model(model, tmp_path / "baseline.taglab"))
        assert loaded == model


def test_crf_round_trip(crf_model, small_corpus, tmp_path):
    loaded = load_model(save_model(crf_model, tmp_path / "crf.taglab"), kind="crf")

    for name, tensor in crf_model.state_dict().items():
        assert torch.equal(loaded.state_dict()[name], tensor)
    assert loaded.tags == crf_model.tags
    for sentence in small_corpus:
        assert predict_crf(loaded, sentence) == predict_crf(crf_model, sentence)


def test_neural_round_trip(neural_model, small_corpus, tmp_path):
    loaded = load_model(save_model(neural_model, tmp_path / "neural.taglab"), kind="neural")

    assert loaded.config == neural_model.config
    for name, tensor in neural_model.state_dict().items():
        assert torch.equal(loaded.state_dict()[name], tensor)

    flags = neural_model.config.flags
    items = [encode_sentence(neural_model.vocab, s, flags) for s in small_corpus]
    assert loaded.tag(items) == neural_model.tag(items)


def test_save_is_deterministic(crf_model, tmp_path):
    a = save_model(crf_model, tmp_path / "a.taglab", {"seed": 1}).read_bytes()
    b = save_model(crf_model, tmp_path / "b.taglab", {"seed": 1}).read_bytes()
    assert a == b


def test_metadata_is_kept(crf_model, tmp_path):
    path = save_model(crf_model, tmp_path / "crf.taglab", {"seed": 3})
    container = ModelContainer.from_bytes(path.read_bytes())

    assert container.kind == "crf"
    assert container.version == FORMAT_VERSION
    assert container.metadata == {"seed": 3}


def test_header_line(crf_model, tmp_path):
    data = save_model(crf_model, tmp_path / "crf.taglab").read_bytes()
    assert data.startswith(f"{MAGIC} {FORMAT_VERSION}\n".encode())


def test_truncated_file(crf_model, tmp_path):
    path = save_model(crf_model, tmp_path / "crf.taglab")
    path.write_bytes(path.read_bytes()[:-8])

    with pytest.raises(ModelFormatError, match="Truncated"):
        load_model(path)


def test_missing_header(tmp_path):
    path = tmp_path / "empty.taglab"
    path.write_bytes(f"{MAGIC} {FORMAT_VERSION}".encode())

    with pytest.raises(ModelFormatError):
        load_model(path)


def write_container(path, header, payload=b""):
    header = json.dumps(header | {"payload_bytes": len(payload)})
    path.write_bytes(f"{MAGIC} {FORMAT_VERSION}\n{header}\n".encode() + payload)
    return path


def test_header_without_blocks(tmp_path):
    path = write_container(tmp_path / "model.taglab", {"kind": "crf", "config": {}})

    with pytest.raises(ModelFormatError, match="blocks"):
        load_model(path)


@pytest.mark.parametrize(
    "block",
    [
        {"name": "trans", "dtype": "float64", "offset": 0, "nbytes": 16},
        {"name": "trans", "dtype": "float64", "shape": [3, 3], "offset": 0, "nbytes": 16},
        {"name": "trans", "dtype": "no-such-type", "shape": [2], "offset": 0, "nbytes": 16},
    ],
)
def test_malformed_block(tmp_path, block):
    header = {"kind": "crf", "config": {}, "blocks": [block]}
    path = write_container(tmp_path / "model.taglab", header, bytes(16))

    with pytest.raises(ModelFormatError):
        load_model(path)


def test_header_is_not_an_object(tmp_path):
    path = tmp_path / "model.taglab"
    path.write_bytes(f"{MAGIC} {FORMAT_VERSION}\n[1, 2]\n".encode())

    with pytest.raises(ModelFormatError, match="JSON object"):
        load_model(path)


def test_wrong_magic(crf_model, tmp_path):
    path = save_model(crf_model, tmp_path / "crf.taglab")
    path.write_bytes(b"PICKLE" + path.read_bytes()[len(MAGIC) :])

    with pytest.raises(ModelFormatError, match="Not a"):
        load_model(path)


def test_other_version(crf_model, tmp_path):
    path = save_model(crf_model, tmp_path / "crf.taglab")
    data = path.read_bytes().replace(
        f"{MAGIC} {FORMAT_VERSION}\n".encode(), f"{MAGIC} {FORMAT_VERSION + 1}\n".encode(), 1
    )
    path.write_bytes(data)

    with pytest.raises(ModelFormatError, match="version"):
        load_model(path)


def test_kind_mismatch(small_corpus, tmp_path):
    path = save_model(fit_major(small_corpus), tmp_path / "major.taglab")

    with pytest.raises(ModelFormatError, match="Expected a crf model"):
        load_model(path, kind="crf")


def test_missing_file(tmp_path):
    with pytest.raises(StorageError) as excinfo:
        load_model(tmp_path / "absent.taglab")
    assert excinfo.value.exit_code == 3


def test_validate_directory(tmp_path):
    assert Storage.validate_directory(tmp_path) == tmp_path
    with pytest.raises(StorageError):
        Storage.validate_directory(tmp_path / "absent")
    (tmp_path / "file").write_text("x")
    with pytest.raises(StorageError):
        Storage.validate_directory(tmp_path / "file")


def test_resolve_path_accepts_strings(tmp_path):
    assert Storage.resolve_path(str(tmp_path)) == tmp_path


def test_storage_is_abstract():
    with pytest.raises(TypeError):
        Storage()
