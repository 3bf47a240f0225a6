from pathlib import Path
import sys

from taglab.config import logger
from taglab.data.corpus import TaggedSentence, serialize_vertical_corpus
from taglab.data.storage import load_model

from .base_command import BaseCommand
from .common import read_sentences, require, tag_sentences
from .run_config import RunConfig


class TagCommand(BaseCommand):
    def run(self, config: RunConfig) -> None:
        require(config, "model", "input")
        model = load_model(config.model)
        sentences = read_sentences(config.input, labeled=False)

        predictions = tag_sentences(model, sentences)
        text = serialize_vertical_corpus(
            [TaggedSentence(s.tokens, tuple(tags)) for s, tags in zip(sentences, predictions)]
        )

        if config.out is None:
            sys.stdout.write(text)
        else:
            path = Path(config.out)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
            logger.success(f"Tagged {len(sentences)} sentences into {path}")

    @property
    def name(self) -> str:
        return "tag"

    @property
    def help(self) -> str:
        return "Tag a file of one-token-per-line sentences with a saved model"
