"""Named random substreams for one training run."""

from dataclasses import dataclass

import numpy as np

STREAM_NAMES = ('init', 'exploration', 'mpbe', 'sampling', 'diagnostics')


@dataclass
class RunStreams:
    """
    Independent generators spawned from one seed.

    ``init`` draws network weights, ``exploration`` the behaviour noise,
    ``mpbe`` the expert's rollout noise, ``sampling`` minibatches and target
    smoothing noise, ``diagnostics`` the state samples used for reports.
    """
    init: np.random.Generator
    exploration: np.random.Generator
    mpbe: np.random.Generator
    sampling: np.random.Generator
    diagnostics: np.random.Generator

    @classmethod
    def from_seed(cls, seed):
        children = np.random.SeedSequence(int(seed)).spawn(len(STREAM_NAMES))
        return cls(**{name: np.random.default_rng(child) for name, child in zip(STREAM_NAMES, children)})
