"""Tree ensembles grown with random splits and no bootstrapping."""

from .forest import ExtraTreesClassifier, ExtraTreesRegressor

__all__ = ["ExtraTreesClassifier", "ExtraTreesRegressor"]
