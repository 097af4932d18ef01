from kac_lab.estimators.base import CSV_COLUMNS, FeynmanKacEstimator, SemigroupEstimate
from kac_lab.estimators.dirichlet import DirichletEstimator
from kac_lab.estimators.free import FreeEstimator
from kac_lab.estimators.gap import KacGapEstimator
from kac_lab.estimators.penalized import PenalizedEstimator
from kac_lab.estimators.penetration import PenetrationEstimator

ESTIMATORS = {
    cls.name: cls
    for cls in (DirichletEstimator, FreeEstimator, KacGapEstimator, PenalizedEstimator, PenetrationEstimator)
}
