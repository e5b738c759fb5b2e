from collections.abc import Sequence

import numpy as np


class AlleleMatrix:
    """
    An immutable cohort of categorical sequences: S sites by M samples.

    Tokens are interned per site: cell (j, i) holds the index of sample i's token in
    ``site_alphabets[j]``.

    Attributes:
    -----------
    cells : np.ndarray
        Read-only int32 array of shape (S, M) with token ids.
    site_alphabets : tuple of tuple of str
        Ordered, duplicate-free token list per site.
    sample_ids : tuple of str
        Label per sample (column).
    site_ids : tuple of str
        Label per site (row).
    """

    def __init__(self, cells, site_alphabets, sample_ids, site_ids):
        cells = np.array(cells, dtype=np.int32, copy=True)
        if cells.ndim != 2:
            raise ValueError(f"cells must be two-dimensional, got shape {cells.shape}")
        n_sites, n_samples = cells.shape
        if n_sites < 1 or n_samples < 1:
            raise ValueError(f"a matrix needs at least one site and one sample, got {cells.shape}")

        site_alphabets = tuple(tuple(str(t) for t in alphabet) for alphabet in site_alphabets)
        sample_ids = tuple(str(s) for s in sample_ids)
        site_ids = tuple(str(s) for s in site_ids)
        if len(site_alphabets) != n_sites:
            raise ValueError(f"expected {n_sites} site alphabets, got {len(site_alphabets)}")
        if len(sample_ids) != n_samples:
            raise ValueError(f"expected {n_samples} sample ids, got {len(sample_ids)}")
        if len(site_ids) != n_sites:
            raise ValueError(f"expected {n_sites} site ids, got {len(site_ids)}")

        for j, alphabet in enumerate(site_alphabets):
            if not alphabet:
                raise ValueError(f"site {site_ids[j]} has an empty alphabet")
            if len(set(alphabet)) != len(alphabet):
                raise ValueError(f"site {site_ids[j]} has duplicate tokens in its alphabet")

        sizes = np.array([len(a) for a in site_alphabets], dtype=np.int32)
        if (cells < 0).any() or (cells >= sizes[:, None]).any():
            raise ValueError("every cell must index a token of its site alphabet")

        cells.flags.writeable = False
        sizes.flags.writeable = False
        self._cells = cells
        self._sizes = sizes
        self._site_alphabets = site_alphabets
        self._sample_ids = sample_ids
        self._site_ids = site_ids
        self._lookup = None

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[str]], sample_ids=None, site_ids=None, alphabet=None):
        """
        Build a matrix from site-major token rows.

        Parameters:
        rows (sequence of sequences of str): One row of M tokens per site.
        sample_ids (sequence of str): Column labels, defaults to "0".."M-1".
        site_ids (sequence of str): Row labels, defaults to "site1".."siteS".
        alphabet (sequence of str): Optional declared alphabet shared by every site. Without it, each
            site's alphabet is its tokens in order of first appearance.

        Returns:
        AlleleMatrix: The interned matrix.

        Raises:
        ValueError: If rows are ragged or a token is outside the declared alphabet.
        """
        rows = [list(r) for r in rows]
        if not rows or not rows[0]:
            raise ValueError("a matrix needs at least one site and one sample")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValueError("all rows must have the same number of tokens")

        declared = tuple(alphabet) if alphabet is not None else None
        alphabets = []
        cells = np.empty((len(rows), width), dtype=np.int32)
        for j, row in enumerate(rows):
            site_alphabet = declared if declared is not None else tuple(dict.fromkeys(row))
            index = {t: k for k, t in enumerate(site_alphabet)}
            for i, token in enumerate(row):
                if token not in index:
                    raise ValueError(f"token {token!r} at site {j} is not in the declared alphabet")
                cells[j, i] = index[token]
            alphabets.append(site_alphabet)

        if sample_ids is None:
            sample_ids = [str(i) for i in range(width)]
        if site_ids is None:
            site_ids = [f"site{j + 1}" for j in range(len(rows))]
        return cls(cells, alphabets, sample_ids, site_ids)

    @property
    def cells(self) -> np.ndarray:
        return self._cells

    @property
    def site_alphabets(self):
        return self._site_alphabets

    @property
    def sample_ids(self):
        return self._sample_ids

    @property
    def site_ids(self):
        return self._site_ids

    @property
    def n_sites(self) -> int:
        return self._cells.shape[0]

    @property
    def n_samples(self) -> int:
        return self._cells.shape[1]

    @property
    def alphabet_sizes(self) -> np.ndarray:
        return self._sizes

    def token(self, site: int, sample: int) -> str:
        return self._site_alphabets[site][self._cells[site, sample]]

    def row(self, site: int) -> tuple:
        alphabet = self._site_alphabets[site]
        return tuple(alphabet[t] for t in self._cells[site])

    def column(self, sample: int) -> tuple:
        self._check_sample(sample)
        return tuple(self._site_alphabets[j][t] for j, t in enumerate(self._cells[:, sample]))

    def token_id(self, site: int, token: str) -> int:
        """Return the id of ``token`` in the alphabet of ``site``; ValueError if absent."""
        if self._lookup is None:
            self._lookup = [{t: k for k, t in enumerate(a)} for a in self._site_alphabets]
        try:
            return self._lookup[site][token]
        except KeyError:
            raise ValueError(f"token {token!r} is not in the alphabet of site {self._site_ids[site]}")

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        """Map one token per site to token ids."""
        if len(tokens) != self.n_sites:
            raise ValueError(f"expected {self.n_sites} tokens, got {len(tokens)}")
        return np.array([self.token_id(j, t) for j, t in enumerate(tokens)], dtype=np.int32)

    def subset(self, indices) -> "AlleleMatrix":
        """Return the samples at ``indices`` as a new matrix sharing this matrix's alphabets."""
        indices = [int(i) for i in indices]
        for i in indices:
            self._check_sample(i)
        return AlleleMatrix(self._cells[:, indices], self._site_alphabets,
                            [self._sample_ids[i] for i in indices], self._site_ids)

    def select_sites(self, sites) -> "AlleleMatrix":
        """Return the rows at ``sites`` as a new matrix."""
        sites = [int(j) for j in sites]
        return AlleleMatrix(self._cells[sites, :], [self._site_alphabets[j] for j in sites],
                            self._sample_ids, [self._site_ids[j] for j in sites])

    def codes_like(self, reference: "AlleleMatrix") -> np.ndarray:
        """
        Express this matrix's cells in the token ids of ``reference``.

        Tokens the reference alphabet does not contain map to -1, so they never match.
        """
        if reference.n_sites != self.n_sites:
            raise ValueError(f"site count mismatch: {self.n_sites} vs {reference.n_sites}")
        out = np.empty_like(self._cells)
        for j in range(self.n_sites):
            ref_index = {t: k for k, t in enumerate(reference.site_alphabets[j])}
            mapping = np.array([ref_index.get(t, -1) for t in self._site_alphabets[j]], dtype=np.int32)
            out[j] = mapping[self._cells[j]]
        return out

    def _check_sample(self, sample: int):
        if not 0 <= sample < self.n_samples:
            raise IndexError(f"sample index {sample} out of range for {self.n_samples} samples")

    def __eq__(self, other):
        if not isinstance(other, AlleleMatrix):
            return NotImplemented
        return (self._site_alphabets == other._site_alphabets
                and self._sample_ids == other._sample_ids
                and self._site_ids == other._site_ids
                and np.array_equal(self._cells, other._cells))

    def __hash__(self):
        return hash((self._cells.tobytes(), self._site_alphabets, self._sample_ids, self._site_ids))

    def __repr__(self):
        return f"AlleleMatrix(sites={self.n_sites}, samples={self.n_samples})"


def hamming(a: int, b: int, m: AlleleMatrix) -> int:
    """
    Count the sites where samples ``a`` and ``b`` carry different tokens.

    Raises:
    IndexError: If either index is out of range.
    """
    for i in (a, b):
        if not 0 <= i < m.n_samples:
            raise IndexError(f"sample index {i} out of range for {m.n_samples} samples")
    return int(np.count_nonzero(m.cells[:, a] != m.cells[:, b]))


def hamming_to_all(sample: int, m: AlleleMatrix) -> np.ndarray:
    """Hamming distance from ``sample`` to every sample of ``m``."""
    if not 0 <= sample < m.n_samples:
        raise IndexError(f"sample index {sample} out of range for {m.n_samples} samples")
    return np.count_nonzero(m.cells != m.cells[:, [sample]], axis=0)


def nearest_distances(targets: np.ndarray, pool: np.ndarray) -> np.ndarray:
    """
    Hamming distance from every target column to its nearest pool column.

    Parameters:
    targets (np.ndarray): (S, T) token ids.
    pool (np.ndarray): (S, P) token ids in the same id space.

    Returns:
    np.ndarray: T minimum distances.
    """
    if targets.shape[0] != pool.shape[0]:
        raise ValueError(f"site count mismatch: {targets.shape[0]} vs {pool.shape[0]}")
    if pool.shape[1] == 0:
        raise ValueError("the pool must contain at least one sequence")
    out = np.empty(targets.shape[1], dtype=np.int64)
    for t in range(targets.shape[1]):
        out[t] = np.count_nonzero(pool != targets[:, [t]], axis=0).min()
    return out
