"""
Linkage disequilibrium: squared correlation between minor-allele dosages of site pairs, and the error
with which a synthetic matrix reproduces it.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from hapdata.matrix import AlleleMatrix

logger = logging.getLogger(__name__)

LD_MODES = ("binned", "windowed")


def minor_tokens(m: AlleleMatrix) -> list:
    """Least frequent observed token per site, ties broken by alphabet order."""
    out = []
    for j, alphabet in enumerate(m.site_alphabets):
        counts = np.bincount(m.cells[j], minlength=len(alphabet)).astype(np.float64)
        counts[counts == 0] = np.inf
        out.append(alphabet[int(np.argmin(counts))])
    return out


def dosage_matrix(m: AlleleMatrix, reference: AlleleMatrix = None) -> np.ndarray:
    """
    (S, M) 0/1 matrix marking the minor token of each site, minor-vs-rest.

    With ``reference`` the minor tokens are those of the reference, so that two matrices share one
    encoding.
    """
    reference = m if reference is None else reference
    if reference.n_sites != m.n_sites:
        raise ValueError(f"site count mismatch: {m.n_sites} vs {reference.n_sites}")
    out = np.zeros(m.cells.shape, dtype=np.float64)
    for j, token in enumerate(minor_tokens(reference)):
        alphabet = m.site_alphabets[j]
        if token in alphabet:
            out[j] = m.cells[j] == alphabet.index(token)
    return out


def r2_matrix(dosage: np.ndarray) -> np.ndarray:
    """Pairwise squared Pearson correlation of dosage rows; nan where a row has zero variance."""
    centred = dosage - dosage.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.einsum("ij,ij->i", centred, centred))
    valid = norms > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (centred @ centred.T) / np.outer(norms, norms)
    r2 = np.clip(r * r, 0.0, 1.0)
    r2[~valid, :] = np.nan
    r2[:, ~valid] = np.nan
    diagonal = np.flatnonzero(valid)
    r2[diagonal, diagonal] = 1.0
    return r2


def ld_r2(m: AlleleMatrix, site_a: int, site_b: int) -> float:
    """r^2 between two sites of ``m``; nan if either site has zero variance."""
    dosage = dosage_matrix(m)[[site_a, site_b]]
    return float(r2_matrix(dosage)[0, 1])


@dataclass(frozen=True)
class LdReport:
    """
    Attributes:
    - r2_real (np.ndarray), r2_synth (np.ndarray): Pairwise r^2 matrices.
    - binned (pd.Series): Mean square error per index distance.
    - binned_error (float): Mean over the non-empty bins.
    - windowed (dict): Window size -> mean over sliding windows of the within-window mean square error.
    - overall_error (float): Mean square error over all defined pairs.
    - reference_ld (float): Mean r^2 of the real matrix over defined pairs.
    - percent_error (float): overall_error as a percentage of reference_ld.
    - mode (str): "binned" or "windowed".
    """
    r2_real: np.ndarray
    r2_synth: np.ndarray
    binned: pd.Series
    binned_error: float
    overall_error: float
    reference_ld: float
    percent_error: float
    mode: str = "binned"
    windowed: dict = field(default_factory=dict)

    @property
    def error(self) -> float:
        """The headline error of the report's mode."""
        if self.mode == "windowed":
            return float(np.mean(list(self.windowed.values())))
        return self.binned_error

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "error": self.error,
            "binned_error": self.binned_error,
            "windowed": {str(k): v for k, v in self.windowed.items()},
            "overall_error": self.overall_error,
            "reference_ld": self.reference_ld,
            "percent_error": self.percent_error,
        }


def _window_error(sq: np.ndarray, defined: np.ndarray, w: int) -> float:
    """Mean over start positions of the mean defined square error inside each w-site window."""
    n = sq.shape[0]
    w = min(w, n)
    totals = np.zeros((n + 1, n + 1))
    counts = np.zeros((n + 1, n + 1))
    totals[1:, 1:] = np.where(defined, sq, 0.0).cumsum(0).cumsum(1)
    counts[1:, 1:] = defined.cumsum(0).cumsum(1)
    means = []
    for s in range(n - w + 1):
        e = s + w
        total = totals[e, e] - totals[s, e] - totals[e, s] + totals[s, s]
        count = counts[e, e] - counts[s, e] - counts[e, s] + counts[s, s]
        if count:
            means.append(total / count)
    return float(np.mean(means)) if means else float("nan")


def compare_r2(r2_real: np.ndarray, r2_synth: np.ndarray, mode: str = "binned", windows=()) -> LdReport:
    """
    LD reproduction errors from two r^2 matrices over the same sites.

    Only pairs i < j with r^2 defined in both matrices count.
    """
    if r2_real.shape != r2_synth.shape:
        raise ValueError(f"r2 shape mismatch: {r2_real.shape} vs {r2_synth.shape}")
    if mode not in LD_MODES:
        raise ValueError(f"unknown LD mode {mode!r}; expected one of {LD_MODES}")
    n = r2_real.shape[0]
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    defined = upper & ~np.isnan(r2_real) & ~np.isnan(r2_synth)
    sq = np.where(defined, (np.nan_to_num(r2_synth) - np.nan_to_num(r2_real)) ** 2, 0.0)

    bins = {}
    for d in range(1, n):
        mask = np.diagonal(defined, offset=d)
        if mask.any():
            bins[d] = float(np.diagonal(sq, offset=d)[mask].mean())
    binned = pd.Series(bins, name="square_error", dtype=np.float64)
    binned.index.name = "distance"
    binned_error = float(binned.mean()) if len(binned) else float("nan")

    windowed = {}
    for w in windows:
        if w < 2:
            raise ValueError(f"window size must be >= 2, got {w}")
        windowed[int(w)] = _window_error(sq, defined, int(w))

    overall = float(sq[defined].mean()) if defined.any() else float("nan")
    real_defined = upper & ~np.isnan(r2_real)
    reference = float(r2_real[real_defined].mean()) if real_defined.any() else float("nan")
    percent = overall / reference * 100 if reference else float("nan")
    return LdReport(r2_real, r2_synth, binned, binned_error, overall, reference, percent, mode, windowed)


def ld_square_error(real: AlleleMatrix, synth: AlleleMatrix, mode: str = "binned", window: int = None,
                    windows=()) -> LdReport:
    """
    How well ``synth`` reproduces the LD of ``real``.

    Parameters:
    real (AlleleMatrix): Reference matrix; its minor tokens define both dosage encodings.
    synth (AlleleMatrix): Synthetic matrix over the same sites.
    mode (str): "binned" (mean per index distance, then mean over distances) or "windowed".
    window (int): Window size for windowed mode.
    windows (iterable of int): Further window sizes evaluated in the same call.

    Returns:
    LdReport

    Raises:
    ValueError: On a site count mismatch or a windowed request without a window size.
    """
    if real.n_sites != synth.n_sites:
        raise ValueError(f"site count mismatch: {real.n_sites} vs {synth.n_sites}")
    sizes = list(windows)
    if mode == "windowed":
        if window is None and not sizes:
            raise ValueError("windowed mode needs a window size")
        if window is not None and window not in sizes:
            sizes.insert(0, window)
    r2_real = r2_matrix(dosage_matrix(real, reference=real))
    r2_synth = r2_matrix(dosage_matrix(synth, reference=real))
    report = compare_r2(r2_real, r2_synth, mode, sizes)
    logger.info("LD %s error %.6g over %d sites", mode, report.error, real.n_sites)
    return report
