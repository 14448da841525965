"""
Syndrome Stream Sources
Pre-sampled streams and streams that release one round every tau_rd seconds
"""
import time
from typing import Callable, Optional

import numpy as np

from .decoding_graph import SyndromeStream


class InMemoryStreamSource:
    """Every round is available immediately"""

    def __init__(self, stream: SyndromeStream):
        self.stream = stream
        self.graph = stream.graph
        self.total_rounds = stream.rounds

    def rounds_available(self) -> int:
        return self.total_rounds

    def seconds_until(self, rounds: int) -> float:
        return 0.0

    def defects(self, start: int, end: int) -> np.ndarray:
        """Flat defect bits of rounds [start, end)"""
        ns = self.graph.n_stabilizers
        return self.stream.flat[start * ns:end * ns]


class RateLimitedStreamSource(InMemoryStreamSource):
    """Releases round r at ``t0 + (r + 1) * tau_rd`` after the first call to start()"""

    def __init__(self, stream: SyndromeStream, tau_rd: float,
                 clock: Callable[[], float] = time.monotonic):
        super().__init__(stream)
        if tau_rd <= 0:
            raise ValueError("tau_rd must be positive")
        self.tau_rd = tau_rd
        self._clock = clock
        self._t0: Optional[float] = None

    def start(self):
        self._t0 = self._clock()

    def rounds_available(self) -> int:
        if self._t0 is None:
            self.start()
        elapsed = self._clock() - self._t0
        return min(self.total_rounds, int(elapsed / self.tau_rd))

    def seconds_until(self, rounds: int) -> float:
        if self._t0 is None:
            self.start()
        ready_at = self._t0 + rounds * self.tau_rd
        return max(0.0, ready_at - self._clock())
