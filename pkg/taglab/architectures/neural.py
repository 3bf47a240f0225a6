"""
Neural taggers in three steps: embedding, encoding and prediction.

Each token is embedded as its word vector, optionally concatenated with
prefix and suffix vectors and a max-pooled character CNN. A feedforward
network over a context window, or a biLSTM, turns the embeddings into per-tag
scores. Tags are then picked greedily under a softmax or by Viterbi under a
CRF layer.
"""

from dataclasses import asdict, dataclass, replace
import math
from typing import Any, Literal, Optional, Sequence

import torch
from torch import Tensor, nn
import torch.nn.functional as F

from taglab.config import logger
from taglab.data.corpus import TaggedSentence
from taglab.data.dataset import TaggedCorpusDataset
from taglab.data.vocabulary import (
    PAD_ID,
    EncodedSentence,
    FeatureFlags,
    LowercaseMode,
    Vocabulary,
    build_vocabulary,
)
from taglab.modeling.autodiff import backward
from taglab.modeling.train import EpochRecord, TrainConfig, train_loop

from .lattice import Lattice, log_partition, path_score, viterbi

type Encoder = Literal["ff", "bilstm"]
type Predictor = Literal["softmax", "crf"]

ARCHITECTURES: dict[str, tuple[str, str]] = {
    "ff-softmax": ("ff", "softmax"),
    "ff-crf": ("ff", "crf"),
    "bilstm-softmax": ("bilstm", "softmax"),
    "bilstm-crf": ("bilstm", "crf"),
}


@dataclass(frozen=True)
class NeuralConfig:
    """
    Architecture and sizes of a neural tagger.

    The defaults are the word, affix and character embedding sizes (100, 20,
    30), 30 filters per CNN width and 100 hidden units.
    """

    use_prefix: bool = False
    use_suffix: bool = False
    use_chars: bool = False
    encoder: Encoder = "bilstm"
    predictor: Predictor = "crf"
    window: int = 2
    dropout: float = 0.5
    filter_widths: tuple[int, ...] = (3,)
    word_dim: int = 100
    affix_dim: int = 20
    char_dim: int = 30
    char_filters: int = 30
    hidden: int = 100
    lowercase_mode: LowercaseMode = "lookups"
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "filter_widths", tuple(self.filter_widths))
        if self.window < 0:
            raise ValueError(f"window must be >= 0, got {self.window}")
        if not 0 <= self.dropout < 1:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.encoder not in ("ff", "bilstm"):
            raise ValueError(f"Unknown encoder {self.encoder!r}")
        if self.predictor not in ("softmax", "crf"):
            raise ValueError(f"Unknown predictor {self.predictor!r}")
        if self.use_chars and not self.filter_widths:
            raise ValueError("Character features need at least one filter width")

    @property
    def architecture(self) -> str:
        return f"{self.encoder}-{self.predictor}"

    @property
    def flags(self) -> FeatureFlags:
        return FeatureFlags(self.use_prefix, self.use_suffix, self.use_chars, self.lowercase_mode)

    @property
    def affix_kinds(self) -> tuple[str, ...]:
        return (("p2", "p3") if self.use_prefix else ()) + (
            ("s2", "s3") if self.use_suffix else ()
        )

    @property
    def embedding_dim(self) -> int:
        chars = self.char_filters * len(self.filter_widths) if self.use_chars else 0
        return self.word_dim + self.affix_dim * len(self.affix_kinds) + chars

    def with_features(self, names: str) -> "NeuralConfig":
        flags = FeatureFlags.from_names(names, self.lowercase_mode)
        return replace(
            self,
            use_prefix=flags.use_prefix,
            use_suffix=flags.use_suffix,
            use_chars=flags.use_chars,
        )

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["filter_widths"] = list(self.filter_widths)
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "NeuralConfig":
        return cls(**data)


class CharCNN(nn.Module):
    """
    Max-pooled convolution over character embeddings.

    Every width contributes ``n_filters`` rectified, max-pooled features. Words
    shorter than the widest filter are padded with the ``<pad>`` character.
    """

    def __init__(
        self,
        n_chars: int,
        char_dim: int = 30,
        n_filters: int = 30,
        widths: Sequence[int] = (3,),
        dtype: torch.dtype = torch.float64,
    ):
        super().__init__()
        self.widths = tuple(widths)
        self.embedding = nn.Embedding(n_chars, char_dim, dtype=dtype)
        self.convs = nn.ModuleList(
            nn.Conv1d(char_dim, n_filters, w, dtype=dtype) for w in self.widths
        )

    @property
    def output_dim(self) -> int:
        return sum(conv.out_channels for conv in self.convs)

    def forward(self, char_ids: Sequence[Sequence[int]]) -> Tensor:
        """
        Parameters
        ----------
        char_ids : sequence of sequence of int
            Character ids of each word.

        Returns
        -------
        Tensor
            ``(n_words, output_dim)``.
        """
        widest = max(self.widths)
        lengths = [max(len(ids), widest) for ids in char_ids]
        longest = max(lengths)

        padded = torch.full((len(char_ids), longest), PAD_ID, dtype=torch.long)
        for i, ids in enumerate(char_ids):
            padded[i, : len(ids)] = torch.as_tensor(list(ids), dtype=torch.long)

        x = self.embedding(padded).transpose(1, 2)
        lengths_t = torch.as_tensor(lengths)

        pooled = []
        for width, conv in zip(self.widths, self.convs):
            out = F.relu(conv(x))
            # a window is valid only inside the word's own padded span
            starts = torch.arange(out.shape[-1])
            invalid = starts.unsqueeze(0) > (lengths_t - width).unsqueeze(1)
            out = out.masked_fill(invalid.unsqueeze(1), -math.inf)
            pooled.append(out.max(dim=-1).values)

        return torch.cat(pooled, dim=-1)


class NeuralTagger(nn.Module):
    """
    Embedding, encoding and prediction steps over one vocabulary.

    Parameters
    ----------
    config : NeuralConfig
    vocab : Vocabulary
    dtype : torch.dtype, optional
        Double precision by default.

    Notes
    -----
    Initialization: embeddings uniform in ``±sqrt(3 / dim)``, dense and
    convolution weights Glorot-uniform, biases zero except an LSTM forget-gate
    bias of 1, CRF scores zero. The same dropout rate is used on the embedding
    output (which is also the biLSTM input) and on the hidden layer.
    """

    def __init__(
        self,
        config: NeuralConfig,
        vocab: Vocabulary,
        dtype: torch.dtype = torch.float64,
    ):
        super().__init__()
        self.config = config
        self.vocab = vocab
        self.dtype = dtype
        K = vocab.n_tags

        self.word_embedding = nn.Embedding(vocab.n_words, config.word_dim, dtype=dtype)
        self.affix_embeddings = nn.ModuleDict(
            {
                kind: nn.Embedding(vocab.n_affixes(kind), config.affix_dim, dtype=dtype)
                for kind in config.affix_kinds
            }
        )
        self.char_cnn = (
            CharCNN(
                vocab.n_chars,
                config.char_dim,
                config.char_filters,
                config.filter_widths,
                dtype=dtype,
            )
            if config.use_chars
            else None
        )
        self.dropout = nn.Dropout(config.dropout)

        E = config.embedding_dim
        if config.encoder == "bilstm":
            self.lstm = nn.LSTM(
                E, config.hidden, bidirectional=True, batch_first=True, dtype=dtype
            )
            ff_input = 2 * config.hidden
        else:
            self.lstm = None
            ff_input = (2 * config.window + 1) * E

        self.hidden = nn.Linear(ff_input, config.hidden, dtype=dtype)
        self.output = nn.Linear(config.hidden, K, dtype=dtype)

        if config.predictor == "crf":
            self.trans = nn.Parameter(torch.zeros(K, K, dtype=dtype))
            self.start = nn.Parameter(torch.zeros(K, dtype=dtype))
            self.end = nn.Parameter(torch.zeros(K, dtype=dtype))
        else:
            self.trans = self.start = self.end = None

        self.reset_parameters(config.seed)
        logger.debug(
            f"Built {config.architecture} tagger, features={config.flags.names}, "
            f"embedding dim {E}, {sum(p.numel() for p in self.parameters())} parameters"
        )

    def reset_parameters(self, seed: int = 0) -> None:
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            with torch.no_grad():
                for module in self.modules():
                    if isinstance(module, nn.Embedding):
                        bound = math.sqrt(3.0 / module.embedding_dim)
                        nn.init.uniform_(module.weight, -bound, bound)
                    elif isinstance(module, (nn.Linear, nn.Conv1d)):
                        nn.init.xavier_uniform_(module.weight)
                        nn.init.zeros_(module.bias)
                    elif isinstance(module, nn.LSTM):
                        H = module.hidden_size
                        for name, param in module.named_parameters():
                            if name.startswith("weight"):
                                nn.init.xavier_uniform_(param)
                            else:
                                nn.init.zeros_(param)
                                if name.startswith("bias_ih"):
                                    # gate order is input, forget, cell, output
                                    param[H : 2 * H] = 1.0

                for crf_param in (self.trans, self.start, self.end):
                    if crf_param is not None:
                        crf_param.zero_()

    # ----------------------------- Embedding -------------------------------- #

    def _embed_ids(
        self,
        word_ids: Sequence[int],
        affix_ids: dict[str, Sequence[int]],
        char_ids: Sequence[Sequence[int]],
    ) -> Tensor:
        parts = [self.word_embedding(torch.as_tensor(list(word_ids), dtype=torch.long))]
        for kind, table in self.affix_embeddings.items():
            parts.append(table(torch.as_tensor(list(affix_ids[kind]), dtype=torch.long)))
        if self.char_cnn is not None:
            parts.append(self.char_cnn(char_ids))
        return torch.cat(parts, dim=-1)

    def embed_tokens(self, sentence: EncodedSentence) -> Tensor:
        """``(n, embedding_dim)`` token vectors, with dropout in training mode."""
        x = self._embed_ids(sentence.word_ids, sentence.affix_ids, sentence.char_ids)
        return self.dropout(x)

    def pad_embedding(self) -> Tensor:
        """Embedding of the ``<pad>`` token, used past the sentence boundaries."""
        kinds = {kind: (PAD_ID,) for kind in self.affix_embeddings}
        return self._embed_ids((PAD_ID,), kinds, ((PAD_ID,),))[0]

    # ----------------------------- Encoding -------------------------------- #

    def feedforward(self, z: Tensor) -> Tensor:
        return self.output(self.dropout(torch.tanh(self.hidden(z))))

    def encode_ff(self, x: Tensor) -> Tensor:
        """Scores from the concatenated embeddings of a ``2d + 1`` token window."""
        d = self.config.window
        pad = self.pad_embedding().unsqueeze(0).repeat(d, 1)
        padded = torch.cat([pad, x, pad], dim=0)
        # (n, E, 2d + 1) -> (n, (2d + 1) * E), oldest token first
        z = padded.unfold(0, 2 * d + 1, 1).transpose(1, 2).reshape(x.shape[0], -1)
        return self.feedforward(z)

    def encode_bilstm(self, x: Tensor) -> Tensor:
        """Scores from the concatenated forward and backward LSTM states."""
        h, _ = self.lstm(x.unsqueeze(0))
        return self.feedforward(h.squeeze(0))

    def emissions(self, sentence: EncodedSentence) -> Tensor:
        x = self.embed_tokens(sentence)
        if self.config.encoder == "bilstm":
            return self.encode_bilstm(x)
        return self.encode_ff(x)

    # ----------------------------- Prediction -------------------------------- #

    def lattice(self, o: Tensor) -> Lattice:
        return Lattice(o, self.trans, self.start, self.end)

    def _loss(self, o: Tensor, tag_ids: Optional[Sequence[int]]) -> Tensor:
        if tag_ids is None:
            raise ValueError("A loss needs gold tags.")
        if self.config.predictor == "softmax":
            gold = torch.as_tensor(tag_ids, dtype=torch.long)
            return F.cross_entropy(o, gold, reduction="sum")
        L = self.lattice(o)
        return log_partition(L) - path_score(L, tag_ids)

    def _decode(self, o: Tensor) -> list[int]:
        if self.config.predictor == "softmax":
            # argmax keeps the first maximal index on ties
            return o.argmax(dim=-1).tolist()
        return viterbi(self.lattice(o))[0]

    def loss_and_decode(
        self, sentence: EncodedSentence, with_loss: bool = True
    ) -> tuple[Optional[Tensor], list[int]]:
        """
        Loss of the gold tags (if requested) and the predicted tag ids.

        The softmax predictor sums per-token cross-entropy and decodes greedily;
        the CRF predictor scores whole paths and decodes with Viterbi.

        Raises
        ------
        ValueError
            If a loss is requested for a sentence without gold tags.
        """
        o = self.emissions(sentence)
        loss = self._loss(o, sentence.tag_ids) if with_loss else None
        return loss, self._decode(o)

    def sentence_loss(self, sentence: EncodedSentence) -> Tensor:
        return self._loss(self.emissions(sentence), sentence.tag_ids)

    def batch_loss(self, batch: list[EncodedSentence]) -> float:
        loss = sum(self.sentence_loss(sentence) for sentence in batch)
        backward(loss, self.parameters())
        return float(loss)

    @torch.no_grad()
    def predict(self, items: Sequence[EncodedSentence]) -> list[list[int]]:
        return [self._decode(self.emissions(item)) for item in items]

    def tag(self, items: Sequence[EncodedSentence]) -> list[list[str]]:
        self.eval()
        tags = self.vocab.tags
        return [[tags[j] for j in path] for path in self.predict(items)]


def train_neural(
    config: NeuralConfig,
    train_config: TrainConfig,
    train: Sequence[TaggedSentence],
    dev: Sequence[TaggedSentence],
    word_min: int = 2,
    affix_min: int = 5,
    progress: bool = True,
) -> tuple[NeuralTagger, list[EpochRecord]]:
    """
    Build a vocabulary from ``train``, then train a tagger with :func:`train_loop`.

    Returns the tagger holding its best dev epoch and the training history.
    """
    flags = config.flags
    vocab = build_vocabulary(list(train), word_min, affix_min, keep_case=flags.keep_case)
    model = NeuralTagger(config, vocab)

    train_items = TaggedCorpusDataset(train, vocab, flags)
    dev_items = TaggedCorpusDataset(dev, vocab, flags)
    logger.info(
        f"Training {config.architecture} tagger with features {flags.names} "
        f"on {len(train_items)} sentences"
    )
    return train_loop(model, train_config, train_items, dev_items.data, progress=progress)
