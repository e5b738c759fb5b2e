"""
Signature tables: which cluster members answer each (site, token) query with True.

A signature is stored as an integer code over the N (deduplicated) members with member 0 as the most
significant bit, so integer order is the lexicographic False<True order and the complement of a code is
``code ^ (2**N - 1)``.
"""
import logging
from dataclasses import dataclass, replace

import numpy as np

from hapdata.matrix import AlleleMatrix

logger = logging.getLogger(__name__)

MAX_MEMBERS = 62


@dataclass(frozen=True)
class Signature:
    """
    One unique signature and the queries that produce it.

    Attributes:
    - bits (tuple of bool): Answer of each member, member 0 first.
    - origins (tuple): (site, token, positive) queries answered exactly by ``bits``.
    """
    bits: tuple
    origins: tuple

    def __str__(self):
        return "".join("T" if b else "F" for b in self.bits)


@dataclass(frozen=True)
class SignatureTable:
    """
    Sorted unique signatures of a cluster and, once mapped, their literals.

    Attributes:
    - n_members (int): Members N after column deduplication.
    - members (tuple of int): Column of the cluster view each member was taken from.
    - codes (np.ndarray): Sorted unique int64 codes; complement-closed, so the count is even.
    - positive (np.ndarray): (S, Amax) int64 code of each positive query, -1 past a site's alphabet.
    - site_alphabets (tuple of tuple of str): Alphabets of the cluster's sites.
    - literals (np.ndarray or None): Literal per code, set by ``map_variables``.
    """
    n_members: int
    members: tuple
    codes: np.ndarray
    positive: np.ndarray
    site_alphabets: tuple
    literals: np.ndarray = None

    @property
    def n(self) -> int:
        """Number of variables: half the unique signatures."""
        return len(self.codes) // 2

    @property
    def n_sites(self) -> int:
        return self.positive.shape[0]

    @property
    def full_mask(self) -> int:
        return (1 << self.n_members) - 1

    def bits(self, code: int) -> tuple:
        return tuple(bool((int(code) >> (self.n_members - 1 - i)) & 1) for i in range(self.n_members))

    def complement(self, code: int) -> int:
        return int(code) ^ self.full_mask

    def index_of(self, code: int) -> int:
        i = int(np.searchsorted(self.codes, code))
        if i == len(self.codes) or self.codes[i] != code:
            raise KeyError(f"code {code} is not a stored signature")
        return i

    def literal_of(self, code: int) -> int:
        """f(s): the literal standing for signature ``code``."""
        self._require_mapping()
        return int(self.literals[self.index_of(code)])

    def literals_of(self, codes: np.ndarray) -> np.ndarray:
        """Vectorised f(s); entries of -1 (padding) map to 0."""
        self._require_mapping()
        codes = np.asarray(codes, dtype=np.int64)
        out = np.zeros(codes.shape, dtype=np.int64)
        valid = codes >= 0
        out[valid] = self.literals[np.searchsorted(self.codes, codes[valid])]
        return out

    def positive_literals(self) -> np.ndarray:
        """(S, Amax) literal of every positive query, 0 past a site's alphabet."""
        return self.literals_of(self.positive)

    def at_least_one_groups(self) -> list:
        """Per site, the literals of its positive-query signatures in alphabet order."""
        table = self.positive_literals()
        return [tuple(int(l) for l in row if l != 0) for row in table]

    def signature(self, index: int) -> Signature:
        code = int(self.codes[index])
        origins = []
        full = self.full_mask
        for j, k in zip(*np.nonzero(self.positive == code)):
            origins.append((int(j), self.site_alphabets[j][k], True))
        for j, k in zip(*np.nonzero((self.positive ^ full) == code)):
            if self.positive[j, k] >= 0:
                origins.append((int(j), self.site_alphabets[j][k], False))
        return Signature(self.bits(code), tuple(sorted(origins, key=lambda o: (o[0], not o[2]))))

    def _require_mapping(self):
        if self.literals is None:
            raise RuntimeError("signature table has no variable mapping; call map_variables first")


def unique_members(cluster: AlleleMatrix) -> tuple:
    """Column indices of the first occurrence of every distinct sample column."""
    _, first = np.unique(cluster.cells.T, axis=0, return_index=True)
    return tuple(int(i) for i in sorted(first))


def build_signatures(cluster: AlleleMatrix) -> SignatureTable:
    """
    Collect the positive and negative signature of every (site, token) query.

    Duplicate sample columns are collapsed first; tokens of the site alphabet that no member carries
    produce the all-False signature and its all-True complement.

    Raises:
    ValueError: If more than 62 distinct members remain.
    """
    members = unique_members(cluster)
    n_members = len(members)
    if n_members > MAX_MEMBERS:
        raise ValueError(f"clusters are limited to {MAX_MEMBERS} distinct members, got {n_members}")

    cells = cluster.cells[:, list(members)]
    sizes = cluster.alphabet_sizes
    a_max = int(sizes.max())
    weights = np.left_shift(np.int64(1), np.arange(n_members - 1, -1, -1, dtype=np.int64))
    tokens = np.arange(a_max, dtype=np.int32)

    positive = np.empty((cluster.n_sites, a_max), dtype=np.int64)
    for start in range(0, cluster.n_sites, 4096):
        block = cells[start:start + 4096]
        hits = block[:, None, :] == tokens[None, :, None]
        positive[start:start + 4096] = hits.astype(np.int64) @ weights
    positive[tokens[None, :] >= sizes[:, None]] = -1

    full = (1 << n_members) - 1
    present = positive[positive >= 0]
    codes = np.unique(np.concatenate([present, present ^ full]))
    logger.debug("%d sites, %d members: %d unique signatures", cluster.n_sites, n_members, len(codes))
    return SignatureTable(n_members, members, codes, positive, cluster.site_alphabets)


def map_variables(table: SignatureTable) -> SignatureTable:
    """
    Assign x1..xn to the first half of the sorted codes and not-xn..not-x1 to the second half.

    Raises:
    RuntimeError: If the unique count is odd or the complement pairing is broken.
    """
    count = len(table.codes)
    if count % 2:
        raise RuntimeError(f"odd number of unique signatures ({count})")
    n = count // 2
    if not np.array_equal(table.codes[::-1], table.codes ^ table.full_mask):
        raise RuntimeError("sorted signatures are not complement-paired")
    index = np.arange(count, dtype=np.int64)
    literals = np.where(index < n, index + 1, -(2 * n - index))
    return replace(table, literals=literals)
