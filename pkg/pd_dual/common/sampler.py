from typing import Any, List, Optional

import numpy as np


class Sampler:
    """
    Base class of every stochastic component. A sampler owns one
    `numpy.random.Generator` and is therefore stateful: never share an instance
    between concurrent tasks, build one per stream instead (see `spawn`).

    Args:
        rng (`np.random.Generator`, optional):
            The random stream to draw from.
        seed (`int`, optional):
            Seed used to build a fresh stream when `rng` is not given.
    """

    def __init__(self, rng: Optional[np.random.Generator] = None, seed: Optional[int] = None):
        self.rng = rng if rng is not None else np.random.default_rng(seed)

    def sample(self, *args, **kwargs) -> Any:
        raise NotImplementedError

    def samples(self, count: int, *args, **kwargs) -> List[Any]:
        return [self.sample(*args, **kwargs) for _ in range(count)]

    @staticmethod
    def spawn(rng: np.random.Generator, count: int) -> List[np.random.Generator]:
        """
        Split a stream into `count` independent child streams. The split is
        deterministic: child i depends only on the parent's seed sequence and i.

        Args:
            rng (`np.random.Generator`):
                Parent stream.
            count (`int`):
                Number of children.

        Returns:
            `List[np.random.Generator]`: the child streams.
        """
        return rng.spawn(count)
