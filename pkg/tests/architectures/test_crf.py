import pytest
import torch

from taglab.architectures.crf import (
    CrfConfig,
    CrfTagger,
    build_feature_index,
    build_lattice,
    crf_objective,
    extract_features,
    nll_grad,
    predict_crf,
    train_crf,
)
from taglab.architectures.lattice import log_partition, path_score
from taglab.data.corpus import TaggedSentence
from taglab.evaluation import weighted_f1
from taglab.modeling.autodiff import finite_difference_check


@pytest.fixture
def sentences():
    return [
        TaggedSentence(("Saya", "makan", "nasi"), ("PRP", "VB", "NN")),
        TaggedSentence(("dia", "minum"), ("PRP", "VB")),
        TaggedSentence(("air",), ("NN",)),
    ]


def random_crf(sentences, window=1, l2=0.1, seed=0) -> CrfTagger:
    index = build_feature_index(sentences, window)
    tags = sorted({tag for s in sentences for tag in s.tags})
    model = CrfTagger(index, tags, window=window, l2=l2)

    generator = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for param in model.parameters():
            param.copy_(0.5 * torch.randn(param.shape, generator=generator, dtype=param.dtype))
    return model


def test_extract_features_center_only():
    features = extract_features(["saya", "makan", "nasi"], 1, 0)
    assert features == ["w[0]=makan", "p2[0]=ma", "p3[0]=mak", "s2[0]=an", "s3[0]=kan"]


def test_extract_features_pads_outside_sentence():
    features = extract_features(["Saya", "makan"], 0, 1)

    assert "w[-1]=<pad>" in features
    assert "s3[-1]=<pad>" in features
    assert "w[0]=saya" in features
    assert "p2[+1]=ma" in features
    assert len(features) == 3 * 5


def test_extract_features_position_out_of_range():
    with pytest.raises(ValueError):
        extract_features(["a"], 1, 0)


def test_feature_cutoff(sentences):
    full = build_feature_index(sentences, 0, cutoff=1)
    frequent = build_feature_index(sentences, 0, cutoff=2)

    assert len(frequent) < len(full)
    # every sentence-initial token at d=1 sees a left pad
    assert "w[-1]=<pad>" in build_feature_index(sentences, 1, cutoff=3).index


def test_unknown_features_are_dropped(sentences):
    model = random_crf(sentences)
    instance = model.encode(TaggedSentence(("zzzzz",)))

    # only the padded context features are known
    assert all(model.feature_index.features[i].endswith("<pad>") for i in instance.feature_ids)


def test_nll_grad_matches_autograd(sentences):
    model = random_crf(sentences)
    loss, grad = nll_grad(model, sentences, l2_scale=1.0)

    expected = 0.5 * model.l2 * model.squared_norm()
    for s in sentences:
        L = build_lattice(model, s)
        gold = [model.tag_index[t] for t in s.tags]
        expected = expected + log_partition(L) - path_score(L, gold)
    expected.backward()

    assert abs(loss - float(expected)) < 1e-10
    for analytic, param in zip((grad.state, grad.trans, grad.start, grad.end), model.parameters()):
        torch.testing.assert_close(analytic, param.grad, atol=1e-10, rtol=1e-10)


def test_nll_grad_finite_differences(sentences):
    model = random_crf(sentences, window=1, l2=0.3, seed=4)
    instances = [model.encode(s) for s in sentences]
    _, grad = model.nll_grad(instances)

    names = ["state_weights", "trans", "start", "end"]
    errors = finite_difference_check(
        {name: getattr(model, name).data for name in names},
        lambda: model.nll_grad(instances)[0],
        dict(zip(names, (grad.state, grad.trans, grad.start, grad.end))),
    )
    assert max(errors.values()) < 1e-6


def test_objective_is_convex_along_a_line(sentences):
    a = random_crf(sentences, seed=1)
    b = random_crf(sentences, seed=2)
    mid = random_crf(sentences, seed=3)
    with torch.no_grad():
        for pa, pb, pm in zip(a.parameters(), b.parameters(), mid.parameters()):
            pm.copy_(0.5 * (pa + pb))

    fa, fb, fm = (crf_objective(m, sentences) for m in (a, b, mid))
    assert fm <= 0.5 * (fa + fb) + 1e-12


def test_batch_penalties_add_up_to_full_objective(sentences):
    model = random_crf(sentences, l2=0.2)
    instances = [model.encode(s) for s in sentences]
    n = len(instances)

    batches = [instances[:2], instances[2:]]
    total = sum(model.nll_grad(batch, l2_scale=len(batch) / n)[0] for batch in batches)

    assert abs(total - model.objective(instances)) < 1e-10


def test_nll_grad_needs_gold_tags(sentences):
    model = random_crf(sentences)
    with pytest.raises(ValueError):
        model.nll_grad([model.encode(TaggedSentence(("nasi",)))])


def test_unknown_gold_tag(sentences):
    model = random_crf(sentences)
    with pytest.raises(ValueError):
        model.encode(TaggedSentence(("nasi",), ("XX",)))


def test_zero_weights_predict_first_tag(sentences):
    model = CrfTagger(build_feature_index(sentences, 1), ["NN", "PRP", "VB"])
    assert predict_crf(model, TaggedSentence(("a", "b"))) == ["NN", "NN"]


def test_train_on_empty_corpus():
    with pytest.raises(ValueError):
        train_crf(CrfConfig(), [], [])


def test_training_fits_small_corpus(small_corpus):
    model, history = train_crf(
        CrfConfig(window=1, max_epochs=15), small_corpus[:30], small_corpus[30:], progress=False
    )

    assert 1 <= len(history) <= 15
    assert max(r.dev_f1 for r in history) > 0.8
    gold = [s.tags for s in small_corpus[:30]]
    assert weighted_f1(gold, [predict_crf(model, s) for s in small_corpus[:30]]) > 0.9


@pytest.mark.slow
def test_learns_suffix_tags(synthetic_corpus):
    train, dev = synthetic_corpus[:400], synthetic_corpus[400:]
    model, history = train_crf(CrfConfig(window=1, max_epochs=50), train, dev, progress=False)

    gold = [s.tags for s in dev]
    predicted = [predict_crf(model, s) for s in dev]
    assert weighted_f1(gold, predicted) >= 0.99
    assert len(history) <= 50


def minimize(model: CrfTagger, instances, max_iter: int = 500) -> float:
    optimizer = torch.optim.LBFGS(
        model.parameters(),
        max_iter=max_iter,
        tolerance_grad=1e-12,
        tolerance_change=1e-14,
        line_search_fn="strong_wolfe",
    )
    optimizer.step(lambda: torch.tensor(model.batch_loss(instances), dtype=torch.float64))
    return model.objective(instances)


def gradient_norm(model: CrfTagger, instances) -> float:
    _, grad = model.nll_grad(instances)
    return float(sum((g**2).sum() for g in (grad.state, grad.trans, grad.start, grad.end)) ** 0.5)


def test_regularized_optimum_does_not_depend_on_init(sentences):
    a = random_crf(sentences, l2=0.5, seed=1)
    b = random_crf(sentences, l2=0.5, seed=2)
    instances_a = [a.encode(s) for s in sentences]
    instances_b = [b.encode(s) for s in sentences]
    assert abs(a.objective(instances_a) - b.objective(instances_b)) > 1e-2

    fa, fb = minimize(a, instances_a), minimize(b, instances_b)

    assert abs(fa - fb) < 1e-3
    for pa, pb in zip(a.parameters(), b.parameters()):
        torch.testing.assert_close(pa, pb, atol=1e-3, rtol=0)


def test_unregularized_gradient_vanishes_on_one_sentence(sentences):
    model = random_crf(sentences[:1], l2=0.0, seed=3)
    instances = [model.encode(sentences[0])]

    before = gradient_norm(model, instances)
    loss = minimize(model, instances)

    assert loss < 1e-3
    assert gradient_norm(model, instances) < 1e-3 < before
