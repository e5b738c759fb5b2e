"""
Private and fictitious k-tuples: combinations of (site, token) pairs carried by exactly one cohort sample
or by none, and how often synthetic data reveals them.
"""
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd
from scipy.stats import binomtest

from hapdata.matrix import AlleleMatrix
from seeding import derive_seed

logger = logging.getLogger(__name__)


class TupleClass(Enum):
    PRIVATE = "private"
    FICTITIOUS = "fictitious"
    COMMON = "common"


@dataclass(frozen=True)
class KTupleSpec:
    k: int
    positions: tuple
    tokens: tuple
    klass: TupleClass


@dataclass(frozen=True)
class KTupleSample:
    """
    Attributes:
    - tuples (list of KTupleSpec): Accepted tuples.
    - requested (int): Tuples asked for.
    - complete (bool): False when the draw budget ran out first.
    """
    tuples: list
    requested: int
    complete: bool


@dataclass(frozen=True)
class RevelationReport:
    """
    Attributes:
    - private_rate (float): Share of private tuples occurring in the synthetic corpus.
    - fictitious_rate (float): Same for fictitious tuples.
    - corpus_records (int): Synthetic records over all datasets.
    - n_private (int), n_fictitious (int): Tuples of each class evaluated.
    - per_dataset (bool): Whether occurrence was averaged per dataset instead of pooled.
    """
    private_rate: float
    fictitious_rate: float
    corpus_records: int
    n_private: int
    n_fictitious: int
    per_dataset: bool = False

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def holders(m: AlleleMatrix, positions, tokens) -> np.ndarray:
    """Indices of the samples carrying every (position, token) pair."""
    match = np.ones(m.n_samples, dtype=bool)
    for j, token in zip(positions, tokens):
        alphabet = m.site_alphabets[j]
        if token not in alphabet:
            return np.zeros(0, dtype=np.int64)
        match &= m.cells[j] == alphabet.index(token)
    return np.flatnonzero(match)


def classify(m: AlleleMatrix, positions, tokens) -> TupleClass:
    count = len(holders(m, positions, tokens))
    if count == 0:
        return TupleClass.FICTITIOUS
    if count == 1:
        return TupleClass.PRIVATE
    return TupleClass.COMMON


def sample_ktuples(m: AlleleMatrix, k: int, klass: TupleClass, count: int, seed: int = 0,
                   max_draws: int = None) -> KTupleSample:
    """
    Rejection-sample ``count`` tuples of class ``klass``.

    Positions are k distinct sites drawn uniformly. With probability 1/2 the tokens are copied from a
    random cohort sample, otherwise each is drawn uniformly from its site alphabet.

    Parameters:
    m (AlleleMatrix): The cohort the classes refer to.
    k (int): Tuple order, 1 <= k <= S.
    klass (TupleClass): Class to keep.
    count (int): Tuples wanted.
    seed (int): Sampling seed.
    max_draws (int): Proposal budget, default 1000 * count.

    Returns:
    KTupleSample: The tuples found, flagged incomplete when the budget ran out.
    """
    if not 1 <= k <= m.n_sites:
        raise ValueError(f"tuple order {k} must be between 1 and the site count {m.n_sites}")
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    klass = TupleClass(klass)
    budget = max_draws if max_draws is not None else 1000 * count
    rng = np.random.default_rng(derive_seed(seed, "ktuples", k))
    found = []
    draws = 0
    while len(found) < count and draws < budget:
        draws += 1
        positions = tuple(int(j) for j in np.sort(rng.choice(m.n_sites, size=k, replace=False)))
        if rng.random() < 0.5:
            donor = int(rng.integers(m.n_samples))
            tokens = tuple(m.token(j, donor) for j in positions)
        else:
            tokens = tuple(m.site_alphabets[j][int(rng.integers(len(m.site_alphabets[j])))] for j in positions)
        if classify(m, positions, tokens) == klass:
            found.append(KTupleSpec(k, positions, tokens, klass))
    complete = len(found) == count
    if not complete:
        logger.warning("found %d of %d %s %d-tuples within %d draws", len(found), count, klass.value, k, budget)
    return KTupleSample(found, count, complete)


def occurs(spec: KTupleSpec, dataset: AlleleMatrix) -> bool:
    if max(spec.positions) >= dataset.n_sites:
        raise ValueError(f"tuple position {max(spec.positions)} is beyond the {dataset.n_sites} corpus sites")
    return len(holders(dataset, spec.positions, spec.tokens)) > 0


def _rate(tuples, corpus, per_dataset: bool) -> float:
    if not tuples:
        return float("nan")
    if not corpus:
        return 0.0
    if per_dataset:
        return float(np.mean([np.mean([occurs(t, d) for t in tuples]) for d in corpus]))
    return float(np.mean([any(occurs(t, d) for d in corpus) for t in tuples]))


def revelation_rates(tuples, corpus, per_dataset: bool = False) -> RevelationReport:
    """
    Share of private and of fictitious tuples that occur in a synthetic corpus.

    A tuple occurs when some record carries all of its (position, token) pairs; pooled over all datasets
    by default, or averaged over datasets with ``per_dataset``.
    """
    corpus = list(corpus)
    private = [t for t in tuples if t.klass == TupleClass.PRIVATE]
    fictitious = [t for t in tuples if t.klass == TupleClass.FICTITIOUS]
    records = sum(d.n_samples for d in corpus)
    return RevelationReport(_rate(private, corpus, per_dataset), _rate(fictitious, corpus, per_dataset),
                            records, len(private), len(fictitious), per_dataset)


def revelation_table(rows) -> pd.DataFrame:
    """``rows`` holds (label, RevelationReport) pairs."""
    return pd.DataFrame([{"label": label, **report.to_dict()} for label, report in rows])


def sign_test(lower, higher) -> float:
    """
    One-sided sign test that paired values in ``lower`` tend to be below those in ``higher``.

    Ties are dropped; with no untied pair the p-value is 1.
    """
    lower, higher = np.asarray(lower, dtype=np.float64), np.asarray(higher, dtype=np.float64)
    if lower.shape != higher.shape:
        raise ValueError(f"paired samples differ in shape: {lower.shape} vs {higher.shape}")
    untied = lower != higher
    n = int(np.count_nonzero(untied))
    if n == 0:
        return 1.0
    wins = int(np.count_nonzero(lower[untied] < higher[untied]))
    return float(binomtest(wins, n, 0.5, alternative="greater").pvalue)
