from kac_lab.estimators.base import FeynmanKacEstimator


class KacGapEstimator(FeynmanKacEstimator):
    """Per path 1{t < beta} - 1{t < alpha} = 1{alpha <= t < beta}.

    This is the penetration survival minus the Dirichlet survival for f = 1,
    computed on one ensemble, so both terms see the same paths.
    """

    name = "kac_gap"
    requires_start_inside = True

    def __init__(self, region, **kwargs):
        super().__init__(region, potential=None, eta=None, f=None, **kwargs)

    def samples(self, block):
        return block.survived_penetration.astype(float) - block.survived_exit.astype(float)
