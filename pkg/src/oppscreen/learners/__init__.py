"""From-scratch binary learners, isotonic calibration and grid search."""

from .grid import GridCellError, GridResult, cross_validate_cells, grid_search, iter_grid
from .isotonic import IsotonicMap, fit_isotonic, pav
from .models import (
    ALGORITHMS,
    DEFAULTS,
    DecisionTreeModel,
    LinearSVC,
    LogisticGD,
    ModelFormatError,
    ProbabilisticModel,
    RandomForestModel,
    TrainConfig,
    TrainingError,
    load_model,
    logistic_loss,
    model_from_json,
    predict_proba,
    save_model,
    train,
)
from .tree import Tree, build_tree

__all__ = [
    "ALGORITHMS",
    "DEFAULTS",
    "DecisionTreeModel",
    "GridCellError",
    "GridResult",
    "IsotonicMap",
    "LinearSVC",
    "LogisticGD",
    "ModelFormatError",
    "ProbabilisticModel",
    "RandomForestModel",
    "TrainConfig",
    "TrainingError",
    "Tree",
    "build_tree",
    "cross_validate_cells",
    "fit_isotonic",
    "grid_search",
    "iter_grid",
    "load_model",
    "logistic_loss",
    "model_from_json",
    "pav",
    "predict_proba",
    "save_model",
    "train",
]
