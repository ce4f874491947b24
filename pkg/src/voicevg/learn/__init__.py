from .forest import ForestConfig, LabeledDataset, RandomForestModel, Tree, predict_proba, train_random_forest
from .metrics import Metrics, evaluate, f1_from, roc_auc, roc_curve
from .scoring import (
    DEFAULT_C,
    FUSION_STRATEGIES,
    VOICE_FAMILIES,
    PatientAggregate,
    aggregate_patient,
    fuse_scores,
    label_of,
    patient_aggregate,
)

__all__ = [
    "ForestConfig", "LabeledDataset", "RandomForestModel", "Tree", "predict_proba", "train_random_forest",
    "Metrics", "evaluate", "f1_from", "roc_auc", "roc_curve",
    "DEFAULT_C", "FUSION_STRATEGIES", "VOICE_FAMILIES", "PatientAggregate", "aggregate_patient",
    "fuse_scores", "label_of", "patient_aggregate",
]
