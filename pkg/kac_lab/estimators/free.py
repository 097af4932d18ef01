from kac_lab.estimators.base import FeynmanKacEstimator


class FreeEstimator(FeynmanKacEstimator):
    """E[exp(-int V) transport^-1 f(X_t)] with no stopping: the semigroup on all of R^m."""

    name = "free"

    @property
    def simulation_region(self):
        return None
