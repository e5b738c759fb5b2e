"""
CDCL SAT solver with two watched literals, dedicated binary-clause lists and a counting
propagator for at-most-k constraints (at-least and exactly are rewritten onto it).

Internally variable ``v`` (0-based) has literals ``2v`` (positive) and ``2v + 1`` (negated);
``lit ^ 1`` is the negation. Reasons are literal lists whose implied literal is first.
"""
import heapq
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from satcore.formula import CardinalityKind, Formula, verify

logger = logging.getLogger(__name__)

_TRUE, _FALSE, _UNDEF = 1, 0, -1


class SolveStatus(Enum):
    SAT = "sat"
    UNSAT = "unsat"
    TIMEOUT = "timeout"


class SolverTimeoutError(RuntimeError):
    """The conflict budget ran out before the search finished."""


@dataclass(frozen=True)
class SolveOutcome:
    """
    Result of one solve call.

    Attributes:
    - status (SolveStatus): sat, unsat or timeout.
    - assignment (tuple of bool or None): Value per variable (index 0 is variable 1), present iff sat.
    - conflicts (int): Conflicts encountered by this call.
    """
    status: SolveStatus
    assignment: tuple = None
    conflicts: int = 0

    @property
    def is_sat(self) -> bool:
        return self.status == SolveStatus.SAT

    def true_vars(self) -> list:
        return [v + 1 for v, value in enumerate(self.assignment or ()) if value]


@dataclass(frozen=True)
class SolverOptions:
    max_conflicts: int = 10 ** 7
    restart_base: int = 100
    var_decay: float = 0.95
    random_polarity: bool = True


@dataclass(frozen=True)
class Enumeration:
    models: list
    exhausted: bool


def _luby(y: float, x: int) -> float:
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x = x % size
    return y ** seq


def _to_internal(lit: int) -> int:
    return 2 * (abs(lit) - 1) + (1 if lit < 0 else 0)


def _to_external(lit: int) -> int:
    v = (lit >> 1) + 1
    return -v if lit & 1 else v


class Solver:
    """
    Incremental CDCL solver.

    Clauses may be added between solve calls (the solver returns to decision level 0 first), which
    is how model enumeration blocks previous models.
    """

    def __init__(self, num_vars: int, seed: int = 0, options: SolverOptions = None):
        self.options = options or SolverOptions()
        self.num_vars = num_vars
        n_lits = 2 * num_vars
        self._value = [_UNDEF] * n_lits
        self._level = [0] * num_vars
        self._reason = [None] * num_vars
        self._seen = [False] * num_vars
        self._trail = []
        self._trail_lim = []
        self._qhead = 0
        self._watches = [[] for _ in range(n_lits)]
        self._binary = [[] for _ in range(n_lits)]
        self._card_occurs = [[] for _ in range(n_lits)]
        self._cards = []
        self._card_count = []
        self._clause_keys = set()
        self._ok = True

        self._rng = np.random.default_rng(seed)
        self._activity = [float(a) for a in self._rng.random(num_vars) * 1e-3]
        self._var_inc = 1.0
        self._heap = [(-a, v) for v, a in enumerate(self._activity)]
        heapq.heapify(self._heap)
        self._coins = []

    @classmethod
    def from_formula(cls, formula: Formula, seed: int = None, options: SolverOptions = None) -> "Solver":
        solver = cls(formula.num_vars, formula.decision_seed if seed is None else seed, options)
        if formula.unsat:
            solver._ok = False
            return solver
        for clause in formula.clauses:
            solver.add_clause(clause)
        for c in formula.cardinality:
            lits = list(c.literals)
            if c.kind in (CardinalityKind.AT_MOST, CardinalityKind.EXACTLY):
                solver.add_at_most(lits, c.k)
            if c.kind in (CardinalityKind.AT_LEAST, CardinalityKind.EXACTLY):
                solver.add_at_most([-l for l in lits], len(lits) - c.k)
        return solver

    # -- construction -------------------------------------------------------------------------

    def add_clause(self, literals):
        """Add a clause of external (signed, 1-based) literals."""
        if not self._ok:
            return
        self._cancel_until(0)
        lits = []
        for lit in dict.fromkeys(_to_internal(int(l)) for l in literals):
            value = self._value[lit]
            if value == _TRUE or (lit ^ 1) in lits:
                return
            if value == _UNDEF:
                lits.append(lit)
        key = tuple(sorted(lits))
        if key in self._clause_keys:
            return
        self._clause_keys.add(key)

        if not lits:
            self._ok = False
        elif len(lits) == 1:
            self._assign(lits[0], None)
            if self._propagate() is not None:
                self._ok = False
        elif len(lits) == 2:
            a, b = lits
            self._binary[a].append(b)
            self._binary[b].append(a)
        else:
            self._watches[lits[0]].append(lits)
            self._watches[lits[1]].append(lits)

    def add_at_most(self, literals, k: int):
        """At most ``k`` of the external ``literals`` (a multiset) are true."""
        if not self._ok:
            return
        self._cancel_until(0)
        lits = [_to_internal(int(l)) for l in literals]
        if k >= len(lits):
            return
        if k == 0:
            for lit in dict.fromkeys(lits):
                self.add_clause([_to_external(lit ^ 1)])
            return
        index = len(self._cards)
        self._cards.append((lits, k))
        self._card_count.append(sum(1 for l in lits if self._value[l] == _TRUE))
        for lit in lits:
            self._card_occurs[lit].append(index)
        if self._propagate_card(index) is not None or self._propagate() is not None:
            self._ok = False

    # -- trail ----------------------------------------------------------------------------------

    def _assign(self, lit: int, reason):
        self._value[lit] = _TRUE
        self._value[lit ^ 1] = _FALSE
        v = lit >> 1
        self._level[v] = len(self._trail_lim)
        self._reason[v] = reason
        self._trail.append(lit)
        for index in self._card_occurs[lit]:
            self._card_count[index] += 1

    def _cancel_until(self, level: int):
        if len(self._trail_lim) <= level:
            return
        limit = self._trail_lim[level]
        value, activity, heap = self._value, self._activity, self._heap
        for i in range(len(self._trail) - 1, limit - 1, -1):
            lit = self._trail[i]
            v = lit >> 1
            value[lit] = _UNDEF
            value[lit ^ 1] = _UNDEF
            self._reason[v] = None
            for index in self._card_occurs[lit]:
                self._card_count[index] -= 1
            heapq.heappush(heap, (-activity[v], v))
        del self._trail[limit:]
        del self._trail_lim[level:]
        self._qhead = len(self._trail)

    # -- propagation ----------------------------------------------------------------------------

    def _propagate_card(self, index: int):
        lits, k = self._cards[index]
        count = self._card_count[index]
        if count < k:
            return None
        value = self._value
        trues = list(dict.fromkeys(l for l in lits if value[l] == _TRUE))
        explanation = [t ^ 1 for t in trues]
        if count > k:
            return explanation
        for lit in lits:
            if value[lit] == _UNDEF:
                implied = lit ^ 1
                self._assign(implied, [implied] + explanation)
        return None

    def _propagate(self):
        """Unit propagation to fixpoint; returns a conflicting clause (all literals false) or None."""
        value, trail = self._value, self._trail
        while self._qhead < len(trail):
            p = trail[self._qhead]
            self._qhead += 1
            false_lit = p ^ 1

            for other in self._binary[false_lit]:
                state = value[other]
                if state == _TRUE:
                    continue
                if state == _FALSE:
                    return [other, false_lit]
                self._assign(other, [other, false_lit])

            watchers = self._watches[false_lit]
            if watchers:
                kept = []
                i, total = 0, len(watchers)
                while i < total:
                    clause = watchers[i]
                    i += 1
                    if clause[0] == false_lit:
                        clause[0], clause[1] = clause[1], false_lit
                    first = clause[0]
                    if value[first] == _TRUE:
                        kept.append(clause)
                        continue
                    for k in range(2, len(clause)):
                        candidate = clause[k]
                        if value[candidate] != _FALSE:
                            clause[1], clause[k] = candidate, false_lit
                            self._watches[candidate].append(clause)
                            break
                    else:
                        kept.append(clause)
                        if value[first] == _FALSE:
                            kept.extend(watchers[i:])
                            self._watches[false_lit] = kept
                            return clause
                        self._assign(first, clause)
                self._watches[false_lit] = kept

            for index in self._card_occurs[p]:
                conflict = self._propagate_card(index)
                if conflict is not None:
                    return conflict
        return None

    # -- conflict analysis ----------------------------------------------------------------------

    def _bump(self, v: int):
        self._activity[v] += self._var_inc
        if self._activity[v] > 1e100:
            self._activity = [a * 1e-100 for a in self._activity]
            self._var_inc *= 1e-100
            self._rebuild_heap()
        else:
            heapq.heappush(self._heap, (-self._activity[v], v))

    def _rebuild_heap(self):
        self._heap = [(-a, v) for v, a in enumerate(self._activity) if self._value[2 * v] == _UNDEF]
        heapq.heapify(self._heap)

    def _analyze(self, conflict):
        """First-UIP learning; returns (learnt clause, backjump level)."""
        seen, level, trail = self._seen, self._level, self._trail
        current = len(self._trail_lim)
        learnt = [None]
        touched = []
        pending = 0
        p = -1
        index = len(trail) - 1
        clause = conflict
        while True:
            for q in clause:
                v = q >> 1
                if p != -1 and v == (p >> 1):
                    continue
                if not seen[v] and level[v] > 0:
                    seen[v] = True
                    touched.append(v)
                    self._bump(v)
                    if level[v] >= current:
                        pending += 1
                    else:
                        learnt.append(q)
            while not seen[trail[index] >> 1]:
                index -= 1
            p = trail[index]
            index -= 1
            clause = self._reason[p >> 1]
            seen[p >> 1] = False
            pending -= 1
            if pending <= 0:
                break
        learnt[0] = p ^ 1
        for v in touched:
            seen[v] = False

        if len(learnt) == 1:
            return learnt, 0
        best = 1
        for i in range(2, len(learnt)):
            if level[learnt[i] >> 1] > level[learnt[best] >> 1]:
                best = i
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, level[learnt[1] >> 1]

    def _learn(self, learnt):
        if len(learnt) == 1:
            self._assign(learnt[0], None)
        elif len(learnt) == 2:
            a, b = learnt
            self._binary[a].append(b)
            self._binary[b].append(a)
            self._assign(a, [a, b])
        else:
            self._watches[learnt[0]].append(learnt)
            self._watches[learnt[1]].append(learnt)
            self._assign(learnt[0], learnt)

    # -- search ---------------------------------------------------------------------------------

    def _coin(self) -> int:
        if not self._coins:
            self._coins = self._rng.integers(0, 2, size=1024).tolist()
        return self._coins.pop()

    def _pick_branch(self):
        heap, value, activity = self._heap, self._value, self._activity
        while heap:
            negative, v = heapq.heappop(heap)
            if value[2 * v] != _UNDEF or -negative != activity[v]:
                continue
            return v
        return None

    def solve(self) -> SolveOutcome:
        """Search for a model; the result is reproducible for a fixed seed."""
        if not self._ok:
            return SolveOutcome(SolveStatus.UNSAT)
        self._cancel_until(0)
        if self._propagate() is not None:
            self._ok = False
            return SolveOutcome(SolveStatus.UNSAT)

        options = self.options
        conflicts = 0
        restarts = 0
        since_restart = 0
        restart_limit = options.restart_base * _luby(2, restarts)
        while True:
            conflict = self._propagate()
            if conflict is not None:
                conflicts += 1
                since_restart += 1
                if not self._trail_lim:
                    self._ok = False
                    return SolveOutcome(SolveStatus.UNSAT, conflicts=conflicts)
                learnt, backjump = self._analyze(conflict)
                self._cancel_until(backjump)
                self._learn(learnt)
                self._var_inc /= options.var_decay
                if conflicts >= options.max_conflicts:
                    self._cancel_until(0)
                    logger.warning("conflict budget of %d exhausted", options.max_conflicts)
                    return SolveOutcome(SolveStatus.TIMEOUT, conflicts=conflicts)
                continue

            if since_restart >= restart_limit:
                restarts += 1
                since_restart = 0
                restart_limit = options.restart_base * _luby(2, restarts)
                self._cancel_until(0)
                continue

            if len(self._heap) > 4 * self.num_vars + 1024:
                self._rebuild_heap()
            v = self._pick_branch()
            if v is None:
                model = tuple(self._value[2 * i] == _TRUE for i in range(self.num_vars))
                self._cancel_until(0)
                return SolveOutcome(SolveStatus.SAT, model, conflicts)
            polarity = self._coin() if options.random_polarity else 1
            self._trail_lim.append(len(self._trail))
            self._assign(2 * v + polarity, None)


def solve(formula: Formula, seed: int = None, options: SolverOptions = None) -> SolveOutcome:
    """
    Solve ``formula``; decisions are randomized by ``seed`` (default: formula.decision_seed).

    Every sat assignment is re-checked by the independent verifier.

    Raises:
    RuntimeError: If the solver returns an assignment that fails verification.
    """
    outcome = Solver.from_formula(formula, seed, options).solve()
    if outcome.is_sat and not verify(formula, outcome.assignment):
        raise RuntimeError("solver returned an assignment that violates the formula")
    logger.debug("solve: %s after %d conflicts (%d vars, %d clauses, %d cardinality)", outcome.status.value,
                 outcome.conflicts, formula.num_vars, len(formula.clauses), len(formula.cardinality))
    return outcome


def enumerate_solutions(formula: Formula, limit: int, seed: int = None,
                        options: SolverOptions = None) -> Enumeration:
    """
    Collect up to ``limit`` distinct models by blocking each one found.

    Returns:
    Enumeration: The verified models and whether the model set was exhausted.

    Raises:
    ValueError: If limit < 1.
    SolverTimeoutError: If a solve call exhausts its conflict budget.
    """
    if limit < 1:
        raise ValueError(f"limit must be >= 1, got {limit}")
    solver = Solver.from_formula(formula, seed, options)
    models = []
    exhausted = False
    while len(models) < limit:
        outcome = solver.solve()
        if outcome.status == SolveStatus.TIMEOUT:
            raise SolverTimeoutError(f"timed out after {len(models)} models")
        if outcome.status == SolveStatus.UNSAT:
            exhausted = True
            break
        if not verify(formula, outcome.assignment):
            raise RuntimeError("solver returned an assignment that violates the formula")
        models.append(outcome.assignment)
        solver.add_clause([-(v + 1) if value else v + 1 for v, value in enumerate(outcome.assignment)])
    return Enumeration(models, exhausted)
