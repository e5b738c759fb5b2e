import itertools

import numpy as np
import pytest

from hapdata.matrix import AlleleMatrix

DNA = ("A", "T", "G", "C")
TOY_SAMPLES = ("ATGCT", "TGCAG", "CATGG", "ATGCG", "ATCGT")


def toy_cohort() -> AlleleMatrix:
    rows = [[s[j] for s in TOY_SAMPLES] for j in range(5)]
    return AlleleMatrix.from_rows(rows, sample_ids=[f"s{i}" for i in range(5)], alphabet=DNA)


@pytest.fixture
def toy():
    """Five samples over five sites with the shared alphabet A, T, G, C."""
    return toy_cohort()


def false_queries(record, m: AlleleMatrix) -> list:
    """Every (site, token, positive) query that ``record`` answers False."""
    out = []
    for j, token in enumerate(record):
        for v in m.site_alphabets[j]:
            if v == token:
                out.append((j, v, False))
            else:
                out.append((j, v, True))
    return out


def member_false(m: AlleleMatrix, members, queries) -> np.ndarray:
    """(members, queries) 0/1 matrix: does the member answer the query False?"""
    out = np.zeros((len(members), len(queries)), dtype=np.int64)
    for a, i in enumerate(members):
        for b, (j, v, positive) in enumerate(queries):
            carries = m.token(j, i) == v
            out[a, b] = (not carries) if positive else carries
    return out


def forward_feasible(record, m: AlleleMatrix, members) -> bool:
    """At z = 0: every pair of queries the record answers False is answered False together by a member."""
    f = member_false(m, members, false_queries(record, m))
    return bool((f.T @ f > 0).all())


def all_outputs(m: AlleleMatrix, members) -> list:
    """Every token string a zero-threshold cluster ``members`` can produce, by exhaustion."""
    return [r for r in itertools.product(*m.site_alphabets) if forward_feasible(r, m, members)]


def reverse_feasible_sets(record, m: AlleleMatrix, n: int) -> list:
    """Every size-n subset of samples that could have produced ``record`` at z = 0."""
    return [c for c in itertools.combinations(range(m.n_samples), n) if forward_feasible(record, m, c)]


def brute_force_posterior(record, m: AlleleMatrix, target: int, n: int) -> float:
    """Membership posterior under a uniform prior over size-n subsets and uniform outputs per subset."""
    sets = reverse_feasible_sets(record, m, n)
    weights = {c: 1 / len(all_outputs(m, c)) for c in sets}
    inside = sum(w for c, w in weights.items() if target in c)
    return inside / sum(weights.values())
