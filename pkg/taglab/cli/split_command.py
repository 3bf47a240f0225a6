from taglab.config import Directories, logger
from taglab.data.utils import make_folds, write_split_file

from .base_command import BaseCommand
from .common import output_path, read_sentences, require
from .run_config import RunConfig


class SplitCommand(BaseCommand):
    def run(self, config: RunConfig) -> None:
        require(config, "corpus")
        sentences = read_sentences(config.corpus)

        folds = make_folds(len(sentences), config.k, config.seed)
        path = write_split_file(
            output_path(config, Directories.PROCESSED_DATA_DIR.value / "folds.tsv"), folds
        )

        logger.success(f"Wrote {len(folds)} folds over {len(sentences)} sentences to {path}")

    @property
    def name(self) -> str:
        return "split"

    @property
    def help(self) -> str:
        return "Shuffle a corpus into k train/dev/test folds and write the split file"
