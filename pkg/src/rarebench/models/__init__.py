"""Regressor suite behind one fit/predict contract."""

from .base import REGISTRY, Regressor, RegressorHandle, fit, make, predict
from .baseline import MeanRegressor
from .dnn import DNN, Network
from .forest import RandomForest, forest_predict
from .gbdt import LeafWiseGBDT, LevelWiseGBDT, gbdt_fit
from .knn import KNN
from .svr import LinearSVR, linear_svr_fit
from .tree import DecisionTree, build_tree, tree_best_split

KINDS = tuple(REGISTRY)

__all__ = [
    "DNN", "KINDS", "KNN", "DecisionTree", "LeafWiseGBDT", "LevelWiseGBDT", "LinearSVR", "MeanRegressor", "Network",
    "REGISTRY", "RandomForest", "Regressor", "RegressorHandle", "build_tree", "fit", "forest_predict",
    "gbdt_fit", "linear_svr_fit", "make", "predict", "tree_best_split",
]
