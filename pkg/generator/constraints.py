import logging

import numpy as np

from generator.signatures import SignatureTable
from satcore.formula import Formula

logger = logging.getLogger(__name__)


def draw_thresholds(z_max: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """z = floor(uniform[0, z_max)), identically 0 when z_max <= 1."""
    if z_max <= 1:
        return np.zeros(count, dtype=np.int64)
    return np.floor(rng.random(count) * z_max).astype(np.int64)


def emit_pair_constraints(table: SignatureTable, z_max: float, seed: int, formula: Formula) -> Formula:
    """
    Add (f(s1) or f(s2)) for every unordered pair of unique signatures, self-pairs included, whose
    number of positions where both are False is at most the drawn z.

    Row i of the pair scan draws its thresholds from a generator keyed on (seed, i), so the clause set
    does not depend on scan order and rising z_max never removes a clause for the same draws.
    """
    codes, literals = table.codes, table.literals
    if literals is None:
        raise RuntimeError("signature table has no variable mapping; call map_variables first")
    full = np.int64(table.full_mask)
    count = len(codes)
    added = 0
    for i in range(count):
        rest = codes[i:]
        both_false = np.bitwise_count(~(codes[i] | rest) & full)
        if z_max > 1:
            z = draw_thresholds(z_max, count - i, np.random.default_rng([seed, i]))
        else:
            z = 0
        for j in np.flatnonzero(both_false <= z):
            formula.add_clause((int(literals[i]), int(literals[i + j])))
            added += 1
    logger.debug("pair scan over %d signatures (z_max=%s) emitted %d clauses", count, z_max, added)
    return formula


def emit_at_least_one(table: SignatureTable, formula: Formula) -> Formula:
    """One clause per site over the literals of its positive queries, in site order."""
    before = len(formula.clauses)
    for group in table.at_least_one_groups():
        formula.add_clause(group)
    logger.debug("%d sites yield %d at-least-one clauses", table.n_sites, len(formula.clauses) - before)
    return formula


def mismatch_literals(table: SignatureTable, tokens) -> tuple:
    """
    Literals asserting the output differs from ``tokens`` at each site.

    Returns:
    tuple: (literals, forced) where forced counts sites whose token is outside the site alphabet, which
    every output differs from.
    """
    if len(tokens) != table.n_sites:
        raise ValueError(f"expected {table.n_sites} tokens, got {len(tokens)}")
    positive = table.positive_literals()
    literals, forced = [], 0
    for j, token in enumerate(tokens):
        alphabet = table.site_alphabets[j]
        if token not in alphabet:
            forced += 1
            continue
        literals.append(-int(positive[j, alphabet.index(token)]))
    return literals, forced


def add_diversity_constraints(formula: Formula, table: SignatureTable, others, d: int) -> Formula:
    """
    Require the output to differ from each of ``others`` (token sequences) at no fewer than d sites.

    Raises:
    ValueError: If d is negative or exceeds the site count.
    """
    if d < 0:
        raise ValueError(f"diversity distance must be >= 0, got {d}")
    if d > table.n_sites:
        raise ValueError(f"diversity distance {d} exceeds the site count {table.n_sites}")
    if d == 0:
        return formula
    for tokens in others:
        literals, forced = mismatch_literals(table, tokens)
        if forced < d:
            formula.at_least(literals, d - forced)
    return formula
