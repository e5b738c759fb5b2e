"""
DIMACS CNF with a cardinality extension.

    p cnf <vars> <clauses>
    <lit> ... 0                      one line per clause
    h <k> <kind> <lit> ... 0         kind 0 = at_least, 1 = at_most, 2 = exactly

The header counts clause lines only; ``h`` lines are extra. An unsatisfiable formula carries an empty
clause line ``0``. Lines starting with ``c`` are comments.
"""
import logging
from pathlib import Path

from satcore.formula import CardinalityConstraint, CardinalityKind, Formula

logger = logging.getLogger(__name__)


def export_dimacs(formula: Formula) -> bytes:
    """Serialise ``formula`` as DIMACS CNF plus ``h`` cardinality lines."""
    n_clauses = len(formula.clauses) + (1 if formula.unsat else 0)
    out = [f"p cnf {formula.num_vars} {n_clauses}"]
    out.extend(" ".join(map(str, clause)) + " 0" for clause in formula.clauses)
    if formula.unsat:
        out.append("0")
    for c in formula.cardinality:
        out.append(f"h {c.k} {int(c.kind)} " + " ".join(map(str, c.literals)) + " 0")
    return ("\n".join(out) + "\n").encode("ascii")


def write_dimacs(formula: Formula, path):
    Path(path).write_bytes(export_dimacs(formula))
    logger.info("wrote %s: %d vars, %d clauses, %d cardinality constraints", path, formula.num_vars,
                len(formula.clauses), len(formula.cardinality))


def _ints(words, line_no: int) -> list:
    try:
        values = [int(w) for w in words]
    except ValueError:
        raise ValueError(f"line {line_no}: non-integer token in {' '.join(words)!r}")
    if not values or values[-1] != 0:
        raise ValueError(f"line {line_no}: line must end with 0")
    if 0 in values[:-1]:
        raise ValueError(f"line {line_no}: 0 may only terminate a line")
    return values[:-1]


def import_dimacs(data) -> Formula:
    """
    Parse DIMACS CNF with ``h`` extension lines back into a Formula.

    Raises:
    ValueError: On a missing or malformed header, a bad literal or a clause count mismatch.
    """
    text = data.decode("ascii") if isinstance(data, (bytes, bytearray)) else data
    formula = None
    expected = 0
    seen = 0
    for line_no, line in enumerate(text.splitlines(), start=1):
        words = line.split()
        if not words or words[0] == "c":
            continue
        if words[0] == "p":
            if formula is not None or len(words) != 4 or words[1] != "cnf":
                raise ValueError(f"line {line_no}: malformed header {line!r}")
            formula = Formula(int(words[2]))
            expected = int(words[3])
            continue
        if formula is None:
            raise ValueError(f"line {line_no}: content before the 'p cnf' header")
        if words[0] == "h":
            if len(words) < 4:
                raise ValueError(f"line {line_no}: malformed cardinality line {line!r}")
            k, kind = int(words[1]), int(words[2])
            if kind not in (0, 1, 2):
                raise ValueError(f"line {line_no}: unknown cardinality kind {kind}")
            formula.add_cardinality(CardinalityConstraint(_ints(words[3:], line_no), CardinalityKind(kind), k))
        else:
            formula.add_clause(_ints(words, line_no))
            seen += 1
    if formula is None:
        raise ValueError("missing 'p cnf' header")
    if seen != expected:
        raise ValueError(f"header declares {expected} clauses, found {seen}")
    return formula
