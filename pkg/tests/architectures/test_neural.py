from conftest import make_corpus, make_lexicon
import pytest
import torch
import torch.nn.functional as F

from taglab.architectures.neural import (
    ARCHITECTURES,
    CharCNN,
    NeuralConfig,
    NeuralTagger,
    train_neural,
)
from taglab.data.corpus import TaggedSentence
from taglab.data.storage import save_model
from taglab.data.vocabulary import build_vocabulary, encode_sentence
from taglab.evaluation import weighted_f1
from taglab.modeling.autodiff import grad_check
from taglab.modeling.train import TrainConfig

TINY = dict(
    word_dim=3,
    affix_dim=2,
    char_dim=2,
    char_filters=2,
    filter_widths=(2,),
    hidden=3,
    window=1,
    dropout=0.5,
)


@pytest.fixture(scope="module")
def sentences():
    return [
        TaggedSentence(("Saya", "makan", "nasi"), ("PRP", "VB", "NN")),
        TaggedSentence(("dia", "makan"), ("PRP", "VB")),
        TaggedSentence(("nasi", "goreng", "enak"), ("NN", "NN", "JJ")),
    ]


@pytest.fixture(scope="module")
def vocab(sentences):
    return build_vocabulary(sentences, word_min=1, affix_min=1)


def tiny_tagger(vocab, architecture: str, features: str = "words,prefix,suffix,chars", seed=0):
    encoder, predictor = ARCHITECTURES[architecture]
    config = NeuralConfig(encoder=encoder, predictor=predictor, seed=seed, **TINY)
    return NeuralTagger(config.with_features(features), vocab)


def perturb_crf_scores(model: NeuralTagger, seed: int = 0) -> None:
    generator = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for param in (model.trans, model.start, model.end):
            if param is not None:
                param.copy_(torch.randn(param.shape, generator=generator, dtype=param.dtype))


@pytest.mark.parametrize("architecture", list(ARCHITECTURES))
def test_gradients_match_finite_differences(vocab, sentences, architecture):
    def builder():
        model = tiny_tagger(vocab, architecture)
        perturb_crf_scores(model)
        encoded = encode_sentence(vocab, sentences[0], model.config.flags)
        return model, lambda: model.sentence_loss(encoded)

    assert grad_check(builder) < 1e-4


def test_char_cnn_gradients(vocab):
    char_ids = [(2, 3, 4, 5), (3,), (4, 2)]

    def builder():
        torch.manual_seed(0)
        cnn = CharCNN(vocab.n_chars, char_dim=3, n_filters=2, widths=(2, 3))
        with torch.no_grad():
            cnn.embedding.weight.normal_()
        return cnn, lambda: (cnn(char_ids) ** 2).sum()

    assert grad_check(builder) < 1e-4


def test_char_cnn_output_shape(vocab):
    cnn = CharCNN(vocab.n_chars, char_dim=4, n_filters=5, widths=(2, 3, 4))
    out = cnn([(2,), (2, 3, 4, 5, 6)])

    assert out.shape == (2, 15)
    assert cnn.output_dim == 15
    assert torch.isfinite(out).all()


def test_emission_shapes(vocab, sentences):
    for architecture in ARCHITECTURES:
        model = tiny_tagger(vocab, architecture)
        model.eval()
        encoded = encode_sentence(vocab, sentences[2], model.config.flags)
        assert model.emissions(encoded).shape == (3, vocab.n_tags)


@pytest.mark.parametrize(
    "features, dim",
    [("words", 3), ("words,prefix", 3 + 2 * 2), ("words,prefix,suffix,chars", 3 + 4 * 2 + 2)],
)
def test_embedding_dim(vocab, sentences, features, dim):
    model = tiny_tagger(vocab, "bilstm-crf", features)
    encoded = encode_sentence(vocab, sentences[0], model.config.flags)

    assert model.config.embedding_dim == dim
    assert model.embed_tokens(encoded).shape == (3, dim)


def test_feedforward_window_concatenation(vocab, sentences):
    model = tiny_tagger(vocab, "ff-softmax")
    model.eval()
    model.feedforward = lambda z: z

    x = torch.arange(3 * 13, dtype=torch.float64).reshape(3, 13)
    z = model.encode_ff(x)
    pad = model.pad_embedding()

    assert z.shape == (3, 3 * 13)
    torch.testing.assert_close(z[0], torch.cat([pad, x[0], x[1]]))
    torch.testing.assert_close(z[1], torch.cat([x[0], x[1], x[2]]))
    torch.testing.assert_close(z[2], torch.cat([x[1], x[2], pad]))


def test_same_seed_same_parameters(vocab):
    a = tiny_tagger(vocab, "bilstm-crf", seed=3)
    b = tiny_tagger(vocab, "bilstm-crf", seed=3)
    c = tiny_tagger(vocab, "bilstm-crf", seed=4)

    for (name, pa), pb in zip(a.state_dict().items(), b.state_dict().values()):
        torch.testing.assert_close(pa, pb, msg=name)
    assert not torch.equal(a.word_embedding.weight, c.word_embedding.weight)


def test_initialization(vocab):
    model = tiny_tagger(vocab, "bilstm-crf")
    H = model.config.hidden

    bound = (3.0 / model.config.word_dim) ** 0.5
    assert model.word_embedding.weight.abs().max() <= bound
    assert torch.all(model.lstm.bias_ih_l0[H : 2 * H] == 1.0)
    assert torch.all(model.lstm.bias_hh_l0 == 0.0)
    assert torch.all(model.trans == 0.0)
    assert model.output.weight.dtype == torch.float64


def test_eval_mode_is_deterministic(vocab, sentences):
    model = tiny_tagger(vocab, "ff-crf")
    encoded = [encode_sentence(vocab, s, model.config.flags) for s in sentences]
    model.eval()

    assert model.predict(encoded) == model.predict(encoded)
    assert [len(tags) for tags in model.tag(encoded)] == [3, 2, 3]


def test_loss_needs_gold_tags(vocab):
    model = tiny_tagger(vocab, "bilstm-softmax")
    encoded = encode_sentence(vocab, TaggedSentence(("nasi",)))

    with pytest.raises(ValueError):
        model.loss_and_decode(encoded)
    loss, path = model.loss_and_decode(encoded, with_loss=False)
    assert loss is None and len(path) == 1


def test_config_validation_and_round_trip():
    with pytest.raises(ValueError):
        NeuralConfig(encoder="cnn")
    with pytest.raises(ValueError):
        NeuralConfig(dropout=1.0)

    config = NeuralConfig(filter_widths=(2, 3)).with_features("words,chars")
    assert config.architecture == "bilstm-crf"
    assert NeuralConfig.from_dict(config.to_dict()) == config


@pytest.mark.slow
@pytest.mark.parametrize("architecture", list(ARCHITECTURES))
def test_overfits_ten_sentences(tiny_corpus, architecture):
    encoder, predictor = ARCHITECTURES[architecture]
    config = NeuralConfig(encoder=encoder, predictor=predictor, dropout=0.0)
    trainer = TrainConfig(initial_lr=1e-2, max_epochs=200)

    model, history = train_neural(
        config, trainer, tiny_corpus, tiny_corpus, word_min=1, affix_min=1, progress=False
    )

    encoded = [encode_sentence(model.vocab, s, config.flags) for s in tiny_corpus]
    assert weighted_f1([s.tags for s in tiny_corpus], model.tag(encoded)) >= 0.995
    assert max(r.dev_f1 for r in history) >= 0.995


@pytest.mark.slow
def test_suffix_features_beat_words_only():
    # dev sentences use words the training sentences never contain
    train_words = frozenset(make_lexicon(150, seed=0))
    train = make_corpus(n_sentences=400, n_words=150, seed=0)
    dev = make_corpus(n_sentences=100, n_words=200, seed=1, exclude=train_words)
    assert train_words.isdisjoint(w for s in dev for w in s.tokens)
    trainer = TrainConfig(initial_lr=5e-3, max_epochs=20)

    def dev_f1(config):
        model, _ = train_neural(config, trainer, train, dev, progress=False)
        encoded = [encode_sentence(model.vocab, s, model.config.flags) for s in dev]
        return weighted_f1([s.tags for s in dev], model.tag(encoded))

    full = dev_f1(NeuralConfig().with_features("words,prefix,suffix,chars"))
    words_only = dev_f1(NeuralConfig(encoder="ff", predictor="softmax"))

    assert full >= 0.99
    assert words_only < full


def test_crf_without_transitions_matches_softmax(vocab, sentences):
    model = tiny_tagger(vocab, "ff-crf")
    model.eval()
    with torch.no_grad():
        for param in (model.trans, model.start, model.end):
            param.zero_()

    for sentence in sentences:
        encoded = encode_sentence(vocab, sentence, model.config.flags)
        o = model.emissions(encoded)
        loss, path = model.loss_and_decode(encoded)

        gold = torch.as_tensor(encoded.tag_ids, dtype=torch.long)
        torch.testing.assert_close(loss, F.cross_entropy(o, gold, reduction="sum"))
        assert path == o.argmax(dim=-1).tolist()


def test_zero_lstm_weights_give_zero_states(vocab):
    model = tiny_tagger(vocab, "bilstm-softmax")
    with torch.no_grad():
        for param in model.lstm.parameters():
            param.zero_()

    x = torch.randn(4, model.config.embedding_dim, dtype=torch.float64)
    h, _ = model.lstm(x.unsqueeze(0))

    assert h.shape == (1, 4, 2 * model.config.hidden)
    assert torch.all(h == 0.0)


def test_zero_hidden_layer_leaves_output_bias(vocab, sentences):
    model = tiny_tagger(vocab, "ff-softmax")
    model.eval()
    with torch.no_grad():
        model.hidden.weight.zero_()
        model.hidden.bias.zero_()
        model.output.weight.zero_()
        model.output.bias.copy_(torch.arange(vocab.n_tags, dtype=torch.float64))

    encoded = encode_sentence(vocab, sentences[0], model.config.flags)
    o = model.emissions(encoded)

    torch.testing.assert_close(o, model.output.bias.expand(3, -1))


def test_softmax_rows_sum_to_one(vocab, sentences):
    model = tiny_tagger(vocab, "bilstm-softmax")
    model.eval()
    for sentence in sentences:
        encoded = encode_sentence(vocab, sentence, model.config.flags)
        totals = F.softmax(model.emissions(encoded), dim=-1).sum(dim=-1)
        assert torch.all((totals - 1.0).abs() < 1e-12)


def test_same_seed_trains_identical_neural_models(tiny_corpus, tmp_path):
    config = NeuralConfig(seed=7, **TINY)
    trainer = TrainConfig(initial_lr=1e-2, max_epochs=3, seed=7)

    first, history_a = train_neural(
        config, trainer, tiny_corpus, tiny_corpus, word_min=1, affix_min=1, progress=False
    )
    second, history_b = train_neural(
        config, trainer, tiny_corpus, tiny_corpus, word_min=1, affix_min=1, progress=False
    )

    assert history_a == history_b
    a = save_model(first, tmp_path / "a.taglab").read_bytes()
    b = save_model(second, tmp_path / "b.taglab").read_bytes()
    assert a == b
