import logging
from collections import Counter, defaultdict

import numpy as np

from generator.genomator import SyntheticRecord
from hapdata.matrix import AlleleMatrix
from seeding import derive_rng

logger = logging.getLogger(__name__)


class MarkovModel:
    def __init__(self, window: int = 10, epsilon: float = 1e-9):
        """
        Initialize a site-ordered Markov chain over haplotype tokens.

        Parameters:
        window (int): Window size w; each token is conditioned on up to w - 1 preceding tokens.
        epsilon (float): Pseudo-count added to every token of a site alphabet when sampling.
        """
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        if epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        self.window = window
        self.epsilon = epsilon

        self.site_alphabets = None
        self.tables = None

    def fit(self, m: AlleleMatrix) -> "MarkovModel":
        """
        Count next-token occurrences per site for every context length 0..min(w - 1, site).

        Parameters:
        m (AlleleMatrix): Training cohort; sites are read in order.

        Returns:
        MarkovModel: self
        """
        cells = m.cells
        self.site_alphabets = m.site_alphabets
        self.tables = []
        for j in range(m.n_sites):
            per_length = []
            for length in range(min(self.window - 1, j) + 1):
                table = defaultdict(Counter)
                contexts = cells[j - length:j].T
                for context, token in zip(map(tuple, contexts.tolist()), cells[j].tolist()):
                    table[context][token] += 1
                per_length.append(dict(table))
            self.tables.append(per_length)
        logger.debug("fitted Markov model with window %d on %d sites x %d samples", self.window, m.n_sites,
                     m.n_samples)
        return self

    def counts(self, site: int, context=()) -> Counter:
        """
        Next-token counts at ``site`` for the longest observed suffix of ``context`` (token ids).

        An unseen context backs off to shorter suffixes, down to the site marginal.
        """
        self._check_fitted()
        tables = self.tables[site]
        context = tuple(context)
        for length in range(min(len(tables) - 1, len(context)), -1, -1):
            suffix = context[len(context) - length:] if length else ()
            if suffix in tables[length]:
                return tables[length][suffix]
        return tables[0][()]

    def conditional(self, site: int, context=()) -> np.ndarray:
        """Smoothed next-token distribution over the site alphabet; sums to 1."""
        counts = self.counts(site, context)
        weights = np.full(len(self.site_alphabets[site]), self.epsilon)
        for token, count in counts.items():
            weights[token] += count
        return weights / weights.sum()

    def sample(self, rng: np.random.Generator) -> tuple:
        self._check_fitted()
        ids = []
        for j in range(len(self.tables)):
            probabilities = self.conditional(j, ids[max(0, j - self.window + 1):])
            ids.append(int(rng.choice(len(probabilities), p=probabilities)))
        return tuple(self.site_alphabets[j][t] for j, t in enumerate(ids))

    def generate(self, count: int, seed: int = 0) -> list:
        """
        Sample ``count`` records left to right.

        Record r draws from derive_rng(seed, "markov", r), so output is fixed by the seed.
        """
        if count < 1:
            raise ValueError(f"record count must be >= 1, got {count}")
        provenance = {"method": "markov", "window": self.window, "seed": seed}
        return [SyntheticRecord(self.sample(derive_rng(seed, "markov", r)), dict(provenance, record=r))
                for r in range(count)]

    def _check_fitted(self):
        if self.tables is None:
            raise ValueError("model is not fitted; call fit first")


def markov_fit(m: AlleleMatrix, window: int = 10) -> MarkovModel:
    return MarkovModel(window).fit(m)


def markov_generate(model: MarkovModel, count: int, seed: int = 0) -> list:
    return model.generate(count, seed)
