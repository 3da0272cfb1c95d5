"""Fine-grained entity type classifier with swappable context encoders."""

from .classifier import decide, predict_proba
from .corpus import Instance, LabelIndex, parse_instance, read_corpus, window
from .embeddings import EmbeddingTable, load_embeddings
from .errors import FinetError
from .metrics import EvalReport, evaluate, f1
from .model import Model, ModelDims, parameter_manifest
from .trainer import TrainConfig, load_checkpoint, save_checkpoint, train

__version__ = "0.1.0"

__all__ = [
    "EmbeddingTable",
    "EvalReport",
    "FinetError",
    "Instance",
    "LabelIndex",
    "Model",
    "ModelDims",
    "TrainConfig",
    "decide",
    "evaluate",
    "f1",
    "load_checkpoint",
    "load_embeddings",
    "parameter_manifest",
    "parse_instance",
    "predict_proba",
    "read_corpus",
    "save_checkpoint",
    "train",
    "window",
]
