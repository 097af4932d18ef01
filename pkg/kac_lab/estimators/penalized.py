import numpy as np

from kac_lab.estimators.base import FeynmanKacEstimator


class PenalizedEstimator(FeynmanKacEstimator):
    """Unstopped paths weighted by exp(-n * occupation time of the complement interior)."""

    name = "penalized"

    def __init__(self, region, penalty: float, **kwargs):
        if penalty < 0:
            raise ValueError("Penalty must be nonnegative, got {}".format(penalty))
        super().__init__(region, **kwargs)
        self.penalty = float(penalty)

    @property
    def n_penalty(self):
        return self.penalty

    def stopping_weight(self, block):
        return np.exp(-self.penalty * block.occupation)
