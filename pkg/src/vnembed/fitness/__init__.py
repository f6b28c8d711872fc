from .features import (PlanEvaluator, RatedSample, cpu_candidates, extract_features,
                       normalize_features, oracle_scores, quantile_ratings, random_assignment,
                       read_dataset_csv, synth_ratings, write_dataset_csv)
from .net import (FEATURE_NAMES, MODES, FitnessNet, LossFactors, accuracy, base_fitness,
                  blended_fitness, bp_forward, bp_train_step, gradients, holdout_error, loss,
                  predict, predicted_rating, train)

__all__ = [
    "FEATURE_NAMES", "MODES", "FitnessNet", "LossFactors", "PlanEvaluator", "RatedSample",
    "accuracy", "base_fitness", "blended_fitness", "bp_forward", "bp_train_step",
    "cpu_candidates", "extract_features", "gradients", "holdout_error", "loss",
    "normalize_features", "oracle_scores", "predict", "predicted_rating", "quantile_ratings",
    "random_assignment", "read_dataset_csv", "synth_ratings", "train", "write_dataset_csv",
]
