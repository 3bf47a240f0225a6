from .baselines import MajorModel, MemoModel, fit_major, fit_memo, predict_baseline
from .crf import CrfConfig, CrfTagger, predict_crf, train_crf
from .lattice import Lattice, log_partition, marginals, path_score, viterbi
from .neural import ARCHITECTURES, NeuralConfig, NeuralTagger, train_neural

__all__ = [
    "Lattice",
    "log_partition",
    "path_score",
    "marginals",
    "viterbi",
    "MajorModel",
    "MemoModel",
    "fit_major",
    "fit_memo",
    "predict_baseline",
    "CrfConfig",
    "CrfTagger",
    "train_crf",
    "predict_crf",
    "ARCHITECTURES",
    "NeuralConfig",
    "NeuralTagger",
    "train_neural",
]
