from typing import Union

import numpy as np


class RunningMoments:
    """Mergeable first and second moments (Chan et al. pairwise update).

    Values may be real, complex or fixed-shape vectors; the second moment is
    tracked per component as the sum of squared moduli of the deviations.
    Merging blocks in the same order always produces the same bits.
    """

    def __init__(self, shape=()):
        self.count = 0
        self.mean = np.zeros(shape, dtype=complex)
        self.m2 = np.zeros(shape, dtype=float)

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "RunningMoments":
        samples = np.asarray(samples)
        moments = cls(samples.shape[1:])
        if samples.shape[0] == 0:
            return moments
        moments.count = samples.shape[0]
        moments.mean = samples.mean(axis=0).astype(complex)
        moments.m2 = np.sum(np.abs(samples - moments.mean) ** 2, axis=0)
        return moments

    def push(self, samples: np.ndarray) -> "RunningMoments":
        return self.merge(RunningMoments.from_samples(samples))

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        if other.count == 0:
            return self
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean.copy(), other.m2.copy()
            return self
        total = self.count + other.count
        delta = other.mean - self.mean
        self.mean = self.mean + delta * (other.count / total)
        self.m2 = self.m2 + other.m2 + np.abs(delta) ** 2 * (self.count * other.count / total)
        self.count = total
        return self

    @property
    def variance(self) -> np.ndarray:
        if self.count < 2:
            return np.zeros_like(self.m2)
        return self.m2 / (self.count - 1)

    @property
    def stderr(self) -> Union[float, np.ndarray]:
        if self.count == 0:
            return np.zeros_like(self.m2)
        return np.sqrt(self.variance / self.count)
