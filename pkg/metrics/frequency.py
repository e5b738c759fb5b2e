import numpy as np
import pandas as pd
from scipy.stats import pearsonr

from hapdata.matrix import AlleleMatrix


def allele_frequency(m: AlleleMatrix, site: int, token: str) -> float:
    """
    Fraction of samples carrying ``token`` at ``site``.

    Raises:
        ValueError: If the token is not in the site alphabet.
    """
    token_id = m.token_id(site, token)
    return float(np.count_nonzero(m.cells[site] == token_id) / m.n_samples)


def site_frequencies(m: AlleleMatrix, reference: AlleleMatrix = None) -> np.ndarray:
    """
    Frequencies of every (site, token) of the reference alphabets, concatenated site by site.

    Tokens of ``m`` unknown to the reference are left out.
    """
    reference = m if reference is None else reference
    codes = m.codes_like(reference) if reference is not m else m.cells
    out = []
    for j, alphabet in enumerate(reference.site_alphabets):
        counts = np.bincount(codes[j][codes[j] >= 0], minlength=len(alphabet))
        out.append(counts / m.n_samples)
    return np.concatenate(out)


def frequency_table(m: AlleleMatrix) -> pd.DataFrame:
    """Long-format table with one row per (site, token): site, site_id, token, count, frequency."""
    rows = []
    for j, alphabet in enumerate(m.site_alphabets):
        counts = np.bincount(m.cells[j], minlength=len(alphabet))
        for k, token in enumerate(alphabet):
            rows.append({"site": j, "site_id": m.site_ids[j], "token": token, "count": int(counts[k]),
                         "frequency": counts[k] / m.n_samples})
    return pd.DataFrame(rows, columns=["site", "site_id", "token", "count", "frequency"])


def frequency_correlation(real: AlleleMatrix, synth: AlleleMatrix) -> float:
    """
    Pearson correlation between the allele frequencies of two matrices over the real alphabets.

    Returns nan when either frequency vector is constant.
    """
    if real.n_sites != synth.n_sites:
        raise ValueError(f"site count mismatch: {real.n_sites} vs {synth.n_sites}")
    x = site_frequencies(real)
    y = site_frequencies(synth, reference=real)
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return float("nan")
    return float(pearsonr(x, y).statistic)
