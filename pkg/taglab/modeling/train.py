"""
Training loop shared by the feature CRF and the neural taggers.

Batches of sentences are scored, gradients are clipped to a global norm and
an Adam step is taken. After every epoch the development weighted F1 drives
the learning-rate schedule: the rate halves after ``patience_epochs`` epochs
without improvement, and training stops once the rate has been halved
``max_decays`` times and the score still does not improve.
"""

from copy import deepcopy
from dataclasses import asdict, dataclass, replace
from enum import Enum
import math
from pathlib import Path
from typing import Any, Protocol, Sequence, Union

import polars as pl
import torch
from torch import Tensor
from torch.utils.data import DataLoader
from tqdm import tqdm

from taglab.config import logger
from taglab.data.dataset import collate_sentences
from taglab.errors import NumericError
from taglab.evaluation import weighted_f1


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 8
    clip_norm: float = 1.0
    patience_epochs: int = 2
    max_decays: int = 5
    initial_lr: float = 1e-3
    seed: int = 0
    max_epochs: int = 200

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.clip_norm > 0:
            raise ValueError(f"clip_norm must be > 0, got {self.clip_norm}")
        if self.initial_lr <= 0:
            raise ValueError(f"initial_lr must be > 0, got {self.initial_lr}")


class Decision(Enum):
    CONTINUE = "continue"
    DECAY = "decay"
    STOP = "stop"


@dataclass(frozen=True)
class TrainState:
    """
    Schedule bookkeeping after each epoch.

    ``lr`` always equals ``initial_lr / 2 ** decay_count``.
    """

    initial_lr: float
    patience_epochs: int = 2
    max_decays: int = 5
    epoch: int = 0
    best_dev_f1: float = -math.inf
    best_epoch: int = 0
    epochs_since_improve: int = 0
    decay_count: int = 0

    @property
    def lr(self) -> float:
        return self.initial_lr / 2**self.decay_count

    @classmethod
    def from_config(cls, config: TrainConfig) -> "TrainState":
        return cls(config.initial_lr, config.patience_epochs, config.max_decays)


def schedule_step(state: TrainState, dev_f1: float) -> tuple[TrainState, Decision]:
    """
    Advance the schedule by one epoch.

    A strict improvement records a new best and resets the patience counter.
    Otherwise, once ``patience_epochs`` stale epochs accumulate, the rate is
    halved and the counter reset; if ``max_decays`` halvings were already spent,
    training stops instead.
    """
    state = replace(state, epoch=state.epoch + 1)

    if dev_f1 > state.best_dev_f1:
        improved = replace(
            state, best_dev_f1=dev_f1, best_epoch=state.epoch, epochs_since_improve=0
        )
        return improved, Decision.CONTINUE

    state = replace(state, epochs_since_improve=state.epochs_since_improve + 1)
    if state.epochs_since_improve < state.patience_epochs:
        return state, Decision.CONTINUE

    if state.decay_count >= state.max_decays:
        return state, Decision.STOP

    decayed = replace(state, decay_count=state.decay_count + 1, epochs_since_improve=0)
    return decayed, Decision.DECAY


def clip_gradients(
    grads: Sequence[Tensor], max_norm: float, names: Sequence[str] | None = None
) -> list[Tensor]:
    """
    Rescale gradients in place so their global L2 norm is at most ``max_norm``.

    Raises
    ------
    NumericError
        If any gradient has a non-finite entry.
    """
    grads = [g for g in grads if g is not None]
    if not grads:
        return grads

    total_norm = torch.nn.utils.get_total_norm(grads, norm_type=2.0)
    if not torch.isfinite(total_norm):
        names = names or [f"#{i}" for i in range(len(grads))]
        bad = [name for name, g in zip(names, grads) if not torch.isfinite(g).all()]
        logger.error(f"Non-finite gradient in {bad}")
        raise NumericError(f"Non-finite gradient norm {float(total_norm)} in {bad}")

    if total_norm > max_norm:
        scale = max_norm / float(total_norm)
        for g in grads:
            g.mul_(scale)

    return grads


class Trainable(Protocol):
    """What :func:`train_loop` needs from a tagger."""

    def train(self, mode: bool = True) -> Any: ...

    def eval(self) -> Any: ...

    def named_parameters(self) -> Any: ...

    def parameters(self) -> Any: ...

    def state_dict(self) -> dict[str, Tensor]: ...

    def load_state_dict(self, state_dict: dict[str, Tensor]) -> Any: ...

    def batch_loss(self, batch: list) -> float:
        """Summed loss of ``batch``; leaves its gradient in each ``.grad``."""
        ...

    def predict(self, items: Sequence) -> list[list[int]]: ...


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    lr: float
    decays: int
    train_loss: float
    dev_f1: float
    decayed: bool
    snapshot: bool


def evaluate_f1(model: Trainable, items: Sequence) -> float:
    model.eval()
    predictions = model.predict(items)
    return weighted_f1([item.tag_ids for item in items], predictions)


def train_loop(
    model: Trainable,
    config: TrainConfig,
    train: Sequence,
    dev: Sequence,
    progress: bool = True,
) -> tuple[Trainable, list[EpochRecord]]:
    """
    Train ``model`` and return it with the parameters of its best dev epoch.

    Parameters
    ----------
    model : Trainable
        A tagger exposing ``batch_loss`` and ``predict``.
    config : TrainConfig
    train, dev : sequence
        Encoded items with gold ``tag_ids``.
    progress : bool, optional
        Show a progress bar over epochs.

    Returns
    -------
    model : Trainable
        The same object, loaded with the best snapshot.
    history : list of EpochRecord

    Raises
    ------
    NumericError
        On a non-finite loss or gradient.
    """
    torch.manual_seed(config.seed)
    generator = torch.Generator().manual_seed(config.seed)
    loader = DataLoader(
        train,
        batch_size=config.batch_size,
        shuffle=True,
        generator=generator,
        collate_fn=collate_sentences,
    )

    named = [(name, p) for name, p in model.named_parameters() if p.requires_grad]
    optimizer = torch.optim.Adam([p for _, p in named], lr=config.initial_lr)

    state = TrainState.from_config(config)
    snapshot = deepcopy(model.state_dict())
    history: list[EpochRecord] = []

    epochs = tqdm(range(config.max_epochs), desc="Training", disable=not progress)
    for _ in epochs:
        lr, decays = state.lr, state.decay_count
        model.train()
        total_loss = 0.0

        for batch in loader:
            optimizer.zero_grad(set_to_none=False)
            loss = model.batch_loss(batch)
            if not math.isfinite(loss):
                logger.error(f"Non-finite loss at epoch {state.epoch + 1}")
                raise NumericError(f"Non-finite training loss {loss}")
            clip_gradients([p.grad for _, p in named], config.clip_norm, [n for n, _ in named])
            optimizer.step()
            total_loss += loss

        dev_f1 = evaluate_f1(model, dev)
        previous_best = state.best_dev_f1
        state, decision = schedule_step(state, dev_f1)

        improved = state.best_dev_f1 > previous_best
        if improved:
            snapshot = deepcopy(model.state_dict())

        if decision is Decision.DECAY:
            for group in optimizer.param_groups:
                group["lr"] = state.lr
            logger.info(f"Epoch {state.epoch}: no improvement, learning rate -> {state.lr:g}")

        history.append(
            EpochRecord(
                epoch=state.epoch,
                lr=lr,
                decays=decays,
                train_loss=total_loss,
                dev_f1=dev_f1,
                decayed=decision is Decision.DECAY,
                snapshot=improved,
            )
        )
        epochs.set_postfix(loss=f"{total_loss:.4f}", dev_f1=f"{dev_f1:.4f}", lr=f"{lr:g}")
        logger.debug(f"Epoch {state.epoch}: loss={total_loss:.6f} dev_f1={dev_f1:.6f}")

        if decision is Decision.STOP:
            logger.info(f"Early stop at epoch {state.epoch} after {state.decay_count} decays")
            break

    model.load_state_dict(snapshot)
    model.eval()
    logger.info(f"Best dev F1 {state.best_dev_f1:.4f} at epoch {state.best_epoch}")
    return model, history


def history_frame(history: Sequence[EpochRecord]) -> pl.DataFrame:
    return pl.DataFrame([asdict(record) for record in history])


def write_history(history: Sequence[EpochRecord], path: Union[str, Path]) -> Path:
    """One JSON record per epoch."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    history_frame(history).write_ndjson(path)
    return path
