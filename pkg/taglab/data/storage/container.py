"""
Versioned model container.

Layout::

    TAGLAB <version>\\n
    <one-line JSON header>\\n
    <parameter payload>

The header records the model kind, its configuration, the vocabulary or
feature index, and one block per named tensor (name, shape, dtype, byte
offset). The payload holds the tensors' raw little-endian values back to back,
so every scalar round-trips bit for bit.
"""

from dataclasses import dataclass, field
import json
from pathlib import Path
from typing import Any, Literal, Optional, Union

import numpy as np
import torch

from taglab.architectures.baselines import MajorModel, MemoModel, baseline_from_text
from taglab.architectures.crf import CrfTagger, FeatureIndex
from taglab.architectures.neural import NeuralConfig, NeuralTagger
from taglab.config import logger
from taglab.data.vocabulary import Vocabulary
from taglab.errors import ModelFormatError

from .storage import Storage

MAGIC = "TAGLAB"
FORMAT_VERSION = 1

type ModelKind = Literal["major", "memo", "crf", "neural"]
type Model = Union[MajorModel, MemoModel, CrfTagger, NeuralTagger]

_DTYPES = {torch.float64: "<f8", torch.float32: "<f4"}
_TORCH_DTYPES = {v: k for k, v in _DTYPES.items()}


def model_kind(model: Model) -> ModelKind:
    match model:
        case MajorModel():
            return "major"
        case MemoModel():
            return "memo"
        case CrfTagger():
            return "crf"
        case NeuralTagger():
            return "neural"
        case _:
            raise ModelFormatError(f"Cannot store a {type(model).__name__}")


@dataclass
class ModelContainer:
    kind: ModelKind
    config: dict[str, Any]
    blocks: dict[str, np.ndarray] = field(default_factory=dict)
    version: int = FORMAT_VERSION
    metadata: dict[str, Any] = field(default_factory=dict)

    def to_bytes(self) -> bytes:
        descriptors, payload, offset = [], [], 0
        for name, values in self.blocks.items():
            raw = values.tobytes()
            descriptors.append(
                {
                    "name": name,
                    "shape": list(values.shape),
                    "dtype": values.dtype.str,
                    "offset": offset,
                    "nbytes": len(raw),
                }
            )
            payload.append(raw)
            offset += len(raw)

        header = {
            "kind": self.kind,
            "config": self.config,
            "blocks": descriptors,
            "payload_bytes": offset,
            "metadata": self.metadata,
        }
        head = f"{MAGIC} {self.version}\n{json.dumps(header, sort_keys=True)}\n"
        return head.encode("utf-8") + b"".join(payload)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ModelContainer":
        """
        Raises
        ------
        ModelFormatError
            On a wrong magic string, an unsupported version, or a corrupt or
            truncated file.
        """
        try:
            first_end = data.index(b"\n")
            second_end = data.index(b"\n", first_end + 1)
        except ValueError as e:
            raise ModelFormatError("Truncated model file: missing header") from e

        magic_line = data[:first_end].decode("utf-8", errors="replace").split(" ")
        if len(magic_line) != 2 or magic_line[0] != MAGIC:
            raise ModelFormatError(f"Not a {MAGIC} model file")
        if magic_line[1] != str(FORMAT_VERSION):
            raise ModelFormatError(
                f"Unsupported model format version {magic_line[1]} (expected {FORMAT_VERSION})"
            )

        try:
            header = json.loads(data[first_end + 1 : second_end].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise ModelFormatError(f"Corrupt model header: {e}") from e

        if not isinstance(header, dict):
            raise ModelFormatError("Corrupt model header: not a JSON object")

        payload = data[second_end + 1 :]
        if len(payload) != header.get("payload_bytes"):
            raise ModelFormatError(
                f"Truncated or corrupt payload: {len(payload)} bytes, "
                f"expected {header.get('payload_bytes')}"
            )

        try:
            blocks = {}
            for block in header["blocks"]:
                chunk = payload[block["offset"] : block["offset"] + block["nbytes"]]
                values = np.frombuffer(chunk, dtype=np.dtype(block["dtype"]))
                blocks[block["name"]] = values.reshape(block["shape"]).copy()

            return cls(
                kind=header["kind"],
                config=header["config"],
                blocks=blocks,
                version=int(magic_line[1]),
                metadata=header.get("metadata", {}),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ModelFormatError(f"Corrupt model header: {e!r}") from e


def _tensor_blocks(module: torch.nn.Module) -> dict[str, np.ndarray]:
    blocks = {}
    for name, tensor in module.state_dict().items():
        dtype = _DTYPES.get(tensor.dtype)
        if dtype is None:
            raise ModelFormatError(f"Unsupported tensor dtype {tensor.dtype} for {name}")
        blocks[name] = tensor.detach().cpu().numpy().astype(np.dtype(dtype))
    return blocks


def _load_tensors(module: torch.nn.Module, blocks: dict[str, np.ndarray]) -> None:
    expected = module.state_dict()
    if set(expected) != set(blocks):
        missing, extra = set(expected) - set(blocks), set(blocks) - set(expected)
        raise ModelFormatError(f"Parameter mismatch: missing {missing}, unexpected {extra}")

    state = {}
    for name, reference in expected.items():
        values = torch.from_numpy(blocks[name].astype(blocks[name].dtype.newbyteorder("=")))
        if tuple(values.shape) != tuple(reference.shape):
            raise ModelFormatError(
                f"Shape mismatch for {name}: {tuple(values.shape)} vs {tuple(reference.shape)}"
            )
        state[name] = values.to(reference.dtype)
    module.load_state_dict(state)


def to_container(model: Model, metadata: Optional[dict[str, Any]] = None) -> ModelContainer:
    kind = model_kind(model)
    metadata = metadata or {}

    match model:
        case MajorModel() | MemoModel():
            return ModelContainer(kind, {"baseline": model.to_text()}, metadata=metadata)
        case CrfTagger():
            config = {
                "window": model.window,
                "l2": model.l2,
                "tags": model.tags,
                "features": model.feature_index.features,
                "dtype": _DTYPES[model.state_weights.dtype],
            }
            return ModelContainer(kind, config, _tensor_blocks(model), metadata=metadata)
        case NeuralTagger():
            config = {
                "neural": model.config.to_dict(),
                "vocabulary": model.vocab.to_dict(),
                "dtype": _DTYPES[model.output.weight.dtype],
            }
            return ModelContainer(kind, config, _tensor_blocks(model), metadata=metadata)


def from_container(container: ModelContainer) -> Model:
    config = container.config
    try:
        match container.kind:
            case "major" | "memo":
                return baseline_from_text(config["baseline"])
            case "crf":
                index = FeatureIndex({f: i for i, f in enumerate(config["features"])})
                model = CrfTagger(
                    index,
                    config["tags"],
                    window=config["window"],
                    l2=config["l2"],
                    dtype=_TORCH_DTYPES[config["dtype"]],
                )
            case "neural":
                model = NeuralTagger(
                    NeuralConfig.from_dict(config["neural"]),
                    Vocabulary.from_dict(config["vocabulary"]),
                    dtype=_TORCH_DTYPES[config["dtype"]],
                )
            case _:
                raise ModelFormatError(f"Unknown model kind {container.kind!r}")
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"Corrupt {container.kind} model configuration: {e}") from e

    _load_tensors(model, container.blocks)
    model.eval()
    return model


class ModelStorage(Storage):
    """Saves and loads any tagger as a versioned container file."""

    def save(
        self,
        model: Model,
        path: Union[Path, str],
        metadata: Optional[dict[str, Any]] = None,
    ) -> Path:
        path = self.prepare_target(self.resolve_path(path))
        container = to_container(model, metadata)
        path.write_bytes(container.to_bytes())
        logger.info(f"Saved {container.kind} model to {path}")
        return path

    def load(self, path: Union[Path, str], kind: Optional[ModelKind] = None) -> Model:
        """
        Raises
        ------
        StorageError
            If the file does not exist.
        ModelFormatError
            If the file is corrupt, of another version, or not of ``kind``.
        """
        path = self.validate_file(self.resolve_path(path))
        container = ModelContainer.from_bytes(path.read_bytes())
        if kind is not None and container.kind != kind:
            raise ModelFormatError(f"Expected a {kind} model, found {container.kind}")

        logger.debug(f"Loaded {container.kind} container from {path}")
        return from_container(container)


def save_model(model: Model, path: Union[Path, str], metadata=None) -> Path:
    return ModelStorage().save(model, path, metadata)


def load_model(path: Union[Path, str], kind: Optional[ModelKind] = None) -> Model:
    return ModelStorage().load(path, kind)
