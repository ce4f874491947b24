from .config import RunConfig
from .manifest import Manifest, Subject, load_manifest, parse_manifest
from .steps import audit_run, cmd_extract, cmd_graph_export, cmd_predict, cmd_train
from .synth import SynthConfig, generate_corpus

__all__ = [
    "RunConfig", "Manifest", "Subject", "load_manifest", "parse_manifest",
    "audit_run", "cmd_extract", "cmd_graph_export", "cmd_predict", "cmd_train",
    "SynthConfig", "generate_corpus",
]
