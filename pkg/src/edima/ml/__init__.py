from .classifiers import (
    Algorithm,
    Dataset,
    GNBParams,
    KNNParams,
    RFParams,
    Scaler,
    TrainMeta,
    TrainedModel,
    apply_scaler,
    fit_scaler,
    gnb_fit,
    gnb_log_joint,
    gnb_scores,
    predict,
    predict_many,
    train,
)
from .forest import Tree, grow_tree, rf_fit, rf_votes, tree_votes
from .metrics import Metrics, compute_metrics, from_counts
from .serialize import MODEL_VERSION, deserialize_model, model_digest, serialize_model

__all__ = [
    "Algorithm",
    "Dataset",
    "GNBParams",
    "KNNParams",
    "MODEL_VERSION",
    "Metrics",
    "RFParams",
    "Scaler",
    "TrainMeta",
    "TrainedModel",
    "Tree",
    "apply_scaler",
    "compute_metrics",
    "deserialize_model",
    "fit_scaler",
    "from_counts",
    "gnb_fit",
    "gnb_log_joint",
    "gnb_scores",
    "grow_tree",
    "model_digest",
    "predict",
    "predict_many",
    "rf_fit",
    "rf_votes",
    "serialize_model",
    "train",
    "tree_votes",
]
