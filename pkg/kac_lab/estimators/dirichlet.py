from kac_lab.estimators.base import FeynmanKacEstimator


class DirichletEstimator(FeynmanKacEstimator):
    """Paths are killed at the first exit time alpha, barriers included."""

    name = "dirichlet"
    requires_start_inside = True

    def stopping_weight(self, block):
        return block.survived_exit.astype(float)
