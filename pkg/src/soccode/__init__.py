"""SOC code prediction from free-text job descriptions."""

from .corpus import CvConfig, Dataset, LabelMap, Record, filter_top_k_labels, generate_synthetic, kfold_split, load_dataset
from .pipeline import Pipeline, load_pipeline, predict_one, save_pipeline, train_pipeline

__version__ = "0.1.0"

__all__ = [
    "CvConfig", "Dataset", "LabelMap", "Pipeline", "Record", "filter_top_k_labels", "generate_synthetic",
    "kfold_split", "load_dataset", "load_pipeline", "predict_one", "save_pipeline", "train_pipeline",
]
