from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from beartype import beartype
import torch
from torch import Tensor, nn

from taglab.config import logger
from taglab.data.corpus import AFFIX_KINDS, PAD_TOKEN, TaggedSentence, affixes, normalize
from taglab.modeling.train import EpochRecord, TrainConfig, train_loop

from .lattice import Lattice, log_partition, marginals, path_score, viterbi


@dataclass(frozen=True)
class CrfConfig:
    window: int = 1
    l2: float = 1e-2
    lr: float = 5e-2
    max_epochs: int = 50
    seed: int = 0
    feature_cutoff: int = 1
    batch_size: int = 8
    clip_norm: float = 1.0

    def __post_init__(self) -> None:
        if self.window < 0:
            raise ValueError(f"window must be >= 0, got {self.window}")
        if self.l2 < 0:
            raise ValueError(f"l2 must be >= 0, got {self.l2}")


def _offset(o: int) -> str:
    return "0" if o == 0 else f"{o:+d}"


def extract_features(tokens: Sequence[str], t: int, d: int) -> list[str]:
    """
    Feature strings of position ``t`` for a window of ``d`` tokens each side.

    Each offset contributes the lowercased word and its ``p2``, ``p3``, ``s2``
    and ``s3`` affixes. Positions outside the sentence use ``<pad>`` for the
    word and every affix.

    Examples
    --------
    >>> extract_features(["saya", "makan", "nasi"], 1, 0)
    ['w[0]=makan', 'p2[0]=ma', 'p3[0]=mak', 's2[0]=an', 's3[0]=kan']
    """
    if not 0 <= t < len(tokens):
        raise ValueError(f"Position {t} outside a sentence of length {len(tokens)}")

    features = []
    for o in range(-d, d + 1):
        i = t + o
        if 0 <= i < len(tokens):
            word = normalize(tokens[i])
            parts = affixes(word)
        else:
            word, parts = PAD_TOKEN, (PAD_TOKEN,) * len(AFFIX_KINDS)

        tag = _offset(o)
        features.append(f"w[{tag}]={word}")
        features.extend(f"{kind}[{tag}]={affix}" for kind, affix in zip(AFFIX_KINDS, parts))
    return features


@dataclass(frozen=True)
class FeatureIndex:
    """Dense ids of the feature strings seen in training."""

    index: dict[str, int]

    def __len__(self) -> int:
        return len(self.index)

    @property
    def features(self) -> list[str]:
        return sorted(self.index, key=self.index.__getitem__)

    def lookup(self, features: Sequence[str]) -> list[int]:
        """Ids of known features; unknown ones are dropped."""
        return [self.index[f] for f in features if f in self.index]


@beartype
def build_feature_index(
    train: Sequence[TaggedSentence], d: int, cutoff: int = 1
) -> FeatureIndex:
    """Index every feature occurring at least ``cutoff`` times in ``train``."""
    counts: Counter[str] = Counter()
    for sentence in train:
        for t in range(len(sentence)):
            counts.update(extract_features(sentence.tokens, t, d))

    kept = sorted(f for f, c in counts.items() if c >= cutoff)
    logger.info(f"Feature index: {len(kept)} of {len(counts)} features (cutoff {cutoff})")
    return FeatureIndex({f: i for i, f in enumerate(kept)})


@dataclass(frozen=True)
class CrfInstance:
    """Active feature ids of one sentence, flattened with their positions."""

    n: int
    feature_ids: Tensor
    positions: Tensor
    tag_ids: Optional[tuple[int, ...]] = None

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class CrfGradient:
    state: Tensor
    trans: Tensor
    start: Tensor
    end: Tensor


class CrfTagger(nn.Module):
    """
    Linear-chain CRF over string features.

    A feature active at position ``t`` adds ``state_weights[f, j]`` to the score
    of tag ``j`` there; ``trans``, ``start`` and ``end`` score tag pairs and
    sentence boundaries. All weights start at zero.

    Parameters
    ----------
    feature_index : FeatureIndex
    tags : list of str
        Tagset; tag ``j`` is ``tags[j]``.
    window : int
        Context tokens on each side.
    l2 : float
        Coefficient ``c`` of the ``(c / 2) * ||w||^2`` penalty.
    """

    def __init__(
        self,
        feature_index: FeatureIndex,
        tags: list[str],
        window: int = 1,
        l2: float = 1e-2,
        dtype: torch.dtype = torch.float64,
    ):
        super().__init__()
        self.feature_index = feature_index
        self.tags = list(tags)
        self.tag_index = {tag: i for i, tag in enumerate(self.tags)}
        self.window = window
        self.l2 = l2
        self.n_train: Optional[int] = None

        K = len(self.tags)
        self.state_weights = nn.Parameter(torch.zeros(len(feature_index), K, dtype=dtype))
        self.trans = nn.Parameter(torch.zeros(K, K, dtype=dtype))
        self.start = nn.Parameter(torch.zeros(K, dtype=dtype))
        self.end = nn.Parameter(torch.zeros(K, dtype=dtype))

    def encode(self, sentence: TaggedSentence) -> CrfInstance:
        """
        Raises
        ------
        ValueError
            If a gold tag is not in the tagset.
        """
        feature_ids, positions = [], []
        for t in range(len(sentence)):
            ids = self.feature_index.lookup(extract_features(sentence.tokens, t, self.window))
            feature_ids.extend(ids)
            positions.extend([t] * len(ids))

        tag_ids = None
        if sentence.tags is not None:
            missing = [tag for tag in sentence.tags if tag not in self.tag_index]
            if missing:
                raise ValueError(f"Tag(s) {missing} do not occur in the training tagset.")
            tag_ids = tuple(self.tag_index[tag] for tag in sentence.tags)

        return CrfInstance(
            len(sentence),
            torch.tensor(feature_ids, dtype=torch.long),
            torch.tensor(positions, dtype=torch.long),
            tag_ids,
        )

    def lattice(self, instance: CrfInstance) -> Lattice:
        state = torch.zeros(instance.n, len(self.tags), dtype=self.state_weights.dtype)
        state = state.index_add(0, instance.positions, self.state_weights[instance.feature_ids])
        return Lattice(state, self.trans, self.start, self.end)

    def squared_norm(self) -> Tensor:
        return sum(p.pow(2).sum() for p in self.parameters())

    def nll_grad(
        self, batch: Sequence[CrfInstance], l2_scale: float = 1.0
    ) -> tuple[float, CrfGradient]:
        """
        Negative log-likelihood of ``batch`` plus the scaled L2 penalty, with its
        gradient: expected minus observed feature counts, plus ``c * w``.
        """
        with torch.no_grad():
            grad = CrfGradient(*(torch.zeros_like(p) for p in self.parameters()))
            loss = 0.0

            for instance in batch:
                if instance.tag_ids is None:
                    raise ValueError("nll_grad needs gold tags.")
                tags = torch.tensor(instance.tag_ids, dtype=torch.long)
                L = self.lattice(instance)
                loss += float(log_partition(L) - path_score(L, instance.tag_ids))

                node, edge = marginals(L)
                residual = node.clone()
                residual[torch.arange(instance.n), tags] -= 1.0
                grad.state.index_add_(0, instance.feature_ids, residual[instance.positions])

                grad.trans.add_(edge.sum(dim=0))
                if instance.n > 1:
                    ones = torch.ones(instance.n - 1, dtype=grad.trans.dtype)
                    grad.trans.index_put_((tags[:-1], tags[1:]), -ones, accumulate=True)
                grad.start.add_(node[0])
                grad.start[tags[0]] -= 1.0
                grad.end.add_(node[-1])
                grad.end[tags[-1]] -= 1.0

            c = self.l2 * l2_scale
            if c > 0:
                loss += 0.5 * c * float(self.squared_norm())
                for g, p in zip((grad.state, grad.trans, grad.start, grad.end), self.parameters()):
                    g.add_(p, alpha=c)

        return loss, grad

    def objective(self, instances: Sequence[CrfInstance]) -> float:
        """Full regularized objective over a corpus."""
        with torch.no_grad():
            nll = 0.0
            for instance in instances:
                L = self.lattice(instance)
                nll += float(log_partition(L) - path_score(L, instance.tag_ids))
            return nll + 0.5 * self.l2 * float(self.squared_norm())

    def batch_loss(self, batch: list[CrfInstance]) -> float:
        scale = len(batch) / self.n_train if self.n_train else 1.0
        loss, grad = self.nll_grad(batch, l2_scale=scale)
        for p, g in zip(self.parameters(), (grad.state, grad.trans, grad.start, grad.end)):
            p.grad = g
        return loss

    @torch.no_grad()
    def predict(self, items: Sequence[CrfInstance]) -> list[list[int]]:
        return [viterbi(self.lattice(item))[0] for item in items]


def build_lattice(model: CrfTagger, sentence: TaggedSentence) -> Lattice:
    return model.lattice(model.encode(sentence))


def nll_grad(
    model: CrfTagger, batch: Sequence[TaggedSentence], l2_scale: float = 1.0
) -> tuple[float, CrfGradient]:
    return model.nll_grad([model.encode(s) for s in batch], l2_scale)


def crf_objective(model: CrfTagger, sentences: Sequence[TaggedSentence]) -> float:
    return model.objective([model.encode(s) for s in sentences])


def predict_crf(model: CrfTagger, sentence: TaggedSentence) -> list[str]:
    path, _ = viterbi(build_lattice(model, sentence))
    return [model.tags[j] for j in path]


def train_crf(
    config: CrfConfig,
    train: Sequence[TaggedSentence],
    dev: Sequence[TaggedSentence],
    progress: bool = True,
) -> tuple[CrfTagger, list[EpochRecord]]:
    """
    Fit a CRF by mini-batch Adam on the L2-regularized likelihood.

    The penalty is split across batches in proportion to their size, so one
    epoch of batch objectives adds up to the full objective. The returned model
    holds the weights of the epoch with the best dev weighted F1.

    Raises
    ------
    ValueError
        If ``train`` is empty.
    """
    if not train:
        raise ValueError("Cannot train a CRF on an empty training set.")

    feature_index = build_feature_index(list(train), config.window, config.feature_cutoff)
    tags = sorted({tag for sentence in train for tag in sentence.tags})
    model = CrfTagger(feature_index, tags, window=config.window, l2=config.l2)
    model.n_train = len(train)

    train_items = [model.encode(s) for s in train]
    dev_items = [model.encode(s) for s in dev]

    trainer_config = TrainConfig(
        batch_size=config.batch_size,
        clip_norm=config.clip_norm,
        initial_lr=config.lr,
        seed=config.seed,
        max_epochs=config.max_epochs,
    )
    logger.info(f"Training CRF: window={config.window} l2={config.l2} lr={config.lr}")
    return train_loop(model, trainer_config, train_items, dev_items, progress=progress)
