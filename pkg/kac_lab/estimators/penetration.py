from kac_lab.estimators.base import FeynmanKacEstimator


class PenetrationEstimator(FeynmanKacEstimator):
    """Paths are killed at the first penetration time beta into the complement.

    In flat R^m there is no explosion, so min(beta, alpha_M) is beta.
    """

    name = "penetration"
    requires_start_inside = True

    def stopping_weight(self, block):
        return block.survived_penetration.astype(float)
