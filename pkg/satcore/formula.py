"""
Formulas over signed integer literals: clauses plus native cardinality constraints.

Variable ``v`` (1-based) appears as literal ``v`` and its negation as ``-v``, as in DIMACS.
"""
from dataclasses import dataclass, field
from enum import IntEnum


@dataclass(frozen=True)
class Literal:
    """A variable (var >= 1) or its negation."""
    var: int
    negated: bool = False

    def __post_init__(self):
        if self.var < 1:
            raise ValueError(f"variable index must be >= 1, got {self.var}")

    @classmethod
    def from_int(cls, lit: int) -> "Literal":
        if lit == 0:
            raise ValueError("0 is not a literal")
        return cls(abs(lit), lit < 0)

    def negate(self) -> "Literal":
        return Literal(self.var, not self.negated)

    def __int__(self):
        return -self.var if self.negated else self.var

    def __neg__(self):
        return self.negate()


def _as_int(lit) -> int:
    value = int(lit)
    if value == 0:
        raise ValueError("0 is not a literal")
    return value


@dataclass(frozen=True)
class Clause:
    """A disjunction of literals."""
    literals: tuple

    def __init__(self, literals):
        object.__setattr__(self, "literals", tuple(_as_int(l) for l in literals))

    def normalized(self):
        """
        Literals with duplicates removed, first occurrence kept.

        Returns None for a tautology (a literal together with its negation).
        """
        unique = tuple(dict.fromkeys(self.literals))
        seen = set(unique)
        if any(-l in seen for l in unique):
            return None
        return unique


class CardinalityKind(IntEnum):
    AT_LEAST = 0
    AT_MOST = 1
    EXACTLY = 2


@dataclass(frozen=True)
class CardinalityConstraint:
    """
    At least / at most / exactly ``k`` of ``literals`` are true.

    ``literals`` is a multiset: a literal listed twice counts twice.
    """
    literals: tuple
    kind: CardinalityKind
    k: int

    def __init__(self, literals, kind, k: int):
        object.__setattr__(self, "literals", tuple(_as_int(l) for l in literals))
        object.__setattr__(self, "kind", CardinalityKind(kind))
        object.__setattr__(self, "k", int(k))
        if self.k < 0:
            raise ValueError(f"cardinality bound must be >= 0, got {self.k}")

    def count_true(self, assignment) -> int:
        return sum(1 for l in self.literals if literal_value(l, assignment))

    def satisfied_by(self, assignment) -> bool:
        count = self.count_true(assignment)
        if self.kind == CardinalityKind.AT_LEAST:
            return count >= self.k
        if self.kind == CardinalityKind.AT_MOST:
            return count <= self.k
        return count == self.k


def literal_value(lit: int, assignment) -> bool:
    """Truth of ``lit`` under ``assignment`` (sequence of bools, index 0 is variable 1)."""
    value = bool(assignment[abs(lit) - 1])
    return not value if lit < 0 else value


@dataclass
class Formula:
    """
    A CNF formula with native cardinality constraints.

    Attributes:
    - num_vars (int): Number of variables; every referenced variable is <= num_vars.
    - clauses (list of tuple of int): Normalized clauses.
    - cardinality (list of CardinalityConstraint): Native cardinality constraints.
    - decision_seed (int): Default seed for the solver's randomized decisions.
    - unsat (bool): Set once an empty clause or an unsatisfiable bound has been added.
    """
    num_vars: int
    clauses: list = field(default_factory=list)
    cardinality: list = field(default_factory=list)
    decision_seed: int = 0
    unsat: bool = False

    def __post_init__(self):
        if self.num_vars < 0:
            raise ValueError(f"num_vars must be >= 0, got {self.num_vars}")

    def _check_range(self, literals):
        for l in literals:
            if abs(l) > self.num_vars:
                raise ValueError(f"literal {l} refers to a variable beyond num_vars={self.num_vars}")

    def add_clause(self, clause) -> "Formula":
        """
        Record ``clause`` (a Clause or an iterable of literals) after normalization.

        Tautologies are dropped; an empty clause sets the unsat marker.
        """
        if not isinstance(clause, Clause):
            clause = Clause(clause)
        self._check_range(clause.literals)
        literals = clause.normalized()
        if literals is None:
            return self
        if not literals:
            self.unsat = True
            return self
        self.clauses.append(literals)
        return self

    def add_cardinality(self, constraint: CardinalityConstraint) -> "Formula":
        """
        Record a cardinality constraint for the solver's counting propagator.

        Trivial constraints (at least 0, at most |literals| or more) are no-ops; a bound above
        |literals| for at_least/exactly sets the unsat marker.
        """
        self._check_range(constraint.literals)
        size = len(constraint.literals)
        kind, k = constraint.kind, constraint.k
        if kind in (CardinalityKind.AT_LEAST, CardinalityKind.EXACTLY) and k > size:
            self.unsat = True
            return self
        if kind == CardinalityKind.AT_LEAST and k == 0:
            return self
        if kind == CardinalityKind.AT_MOST and k >= size:
            return self
        self.cardinality.append(constraint)
        return self

    def at_least(self, literals, k: int) -> "Formula":
        return self.add_cardinality(CardinalityConstraint(literals, CardinalityKind.AT_LEAST, k))

    def at_most(self, literals, k: int) -> "Formula":
        return self.add_cardinality(CardinalityConstraint(literals, CardinalityKind.AT_MOST, k))

    def exactly(self, literals, k: int) -> "Formula":
        return self.add_cardinality(CardinalityConstraint(literals, CardinalityKind.EXACTLY, k))

    def copy(self) -> "Formula":
        return Formula(self.num_vars, list(self.clauses), list(self.cardinality), self.decision_seed,
                       self.unsat)


def verify(formula: Formula, assignment) -> bool:
    """
    Evaluate every clause and cardinality constraint directly.

    Shares no state with the solver.
    """
    if formula.unsat or len(assignment) != formula.num_vars:
        return False
    for clause in formula.clauses:
        if not any(literal_value(l, assignment) for l in clause):
            return False
    return all(c.satisfied_by(assignment) for c in formula.cardinality)
