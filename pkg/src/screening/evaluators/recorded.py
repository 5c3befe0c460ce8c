from __future__ import annotations

import numpy as np

from ..exceptions import StreamExhaustedError
from .base import Evaluator


class RecordedStream(Evaluator):
    """Replays fixed per-alternative observation sequences in order.

    The n-th draw of alternative ``i`` is always ``streams[i][n]``; the ``rng``
    argument is ignored. Each alternative's stream is single-consumer.
    """

    def __init__(self, streams):
        self.streams = [np.asarray(s, dtype=float) for s in streams]
        self.cursor = np.zeros(len(self.streams), dtype=np.int64)
        self.description = f"recorded({len(self.streams)})"

    @property
    def n_alternatives(self):
        return len(self.streams)

    @property
    def horizons(self):
        return np.array([s.shape[0] for s in self.streams])

    def sample(self, alts, rng=None):
        alts = np.asarray(alts, dtype=np.int64)
        out = np.empty(alts.shape[0])
        for j, a in enumerate(alts):
            n = self.cursor[a]
            if n >= self.streams[a].shape[0]:
                raise StreamExhaustedError(f"alternative {a} exhausted after {n} draws")
            out[j] = self.streams[a][n]
            self.cursor[a] = n + 1
        return out

    def reset(self):
        self.cursor[:] = 0
        return self
