from taglab.config import logger
from taglab.data.storage import save_model
from taglab.modeling.train import write_history

from .base_command import BaseCommand
from .common import (
    default_model_path,
    fit,
    load_folds,
    output_path,
    read_sentences,
    report_header,
    require,
    select_fold,
)
from .run_config import RunConfig


class TrainCommand(BaseCommand):
    def run(self, config: RunConfig) -> None:
        require(config, "corpus")
        sentences = read_sentences(config.corpus)
        fold = select_fold(load_folds(config, len(sentences)), config.fold)
        train, dev = fold.select(sentences, "train"), fold.select(sentences, "dev")
        logger.info(f"Fold {fold.fold_id}: {len(train)} train, {len(dev)} dev sentences")

        model, history = fit(config, train, dev)
        path = save_model(
            model, output_path(config, default_model_path(config)), report_header(config)
        )

        if history:
            write_history(history, path.with_suffix(".history.jsonl"))
            best = max(record.dev_f1 for record in history)
            logger.info(f"{len(history)} epochs, best dev weighted F1 {best:.4f}")

        logger.success(f"Trained {config.model_kind} model saved to {path}")

    @property
    def name(self) -> str:
        return "train"

    @property
    def help(self) -> str:
        return "Train one model on the train part of a fold, selecting on its dev part"
