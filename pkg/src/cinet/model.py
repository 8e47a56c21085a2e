"""Domain types for discrete belief networks with factored cause-effect families.

A network is a DAG of named discrete variables. Every variable carries exactly
one family: a prior (a tabular family with no parents), a full conditional
table, or a :class:`CIFamily` that represents a multi-cause interaction as one
transition distribution per cause plus a combination function that merges the
per-cause effect summaries.

Conventions used throughout the engine:

* Domain objects store state *indices*; state labels appear only at the
  serialization boundary (``serialize``).
* Probability tables are row-major and iterate parent-state combinations with
  the last parent fastest.
* Networks are immutable after construction; every operation that "changes" a
  network returns a new one. Validation reports violations as data and never
  raises.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import EngineError

#: Tolerance used when checking that probability rows normalize to one.
PROB_TOL = 1e-9

#: Binary combination functions that are defined for every effect cardinality
#: (``or`` is the exception: it requires a binary effect).
NAMED_COMBINERS = ("or", "max", "sum", "xor")


def named_binary_matrix(name: str, cardinality: int) -> np.ndarray:
    """Realize a named binary combiner as a (k, k) table of state indices.

    ``or`` is boolean disjunction and requires k == 2. ``max`` is the join on
    the state order, ``sum`` adds indices and saturates at the top state, and
    ``xor`` is addition modulo k (plain exclusive-or when k == 2).
    """
    k = cardinality
    i = np.arange(k)
    if name == "or":
        if k != 2:
            raise EngineError("combiner 'or' requires a binary effect")
        return i[:, None] | i[None, :]
    if name == "max":
        return np.maximum(i[:, None], i[None, :])
    if name == "sum":
        return np.minimum(i[:, None] + i[None, :], k - 1)
    if name == "xor":
        return (i[:, None] + i[None, :]) % k
    raise EngineError(f"unknown named combiner {name!r}")


@dataclass(frozen=True)
class Variable:
    """A named discrete variable with an ordered, finite state space."""

    name: str
    states: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))

    @property
    def cardinality(self) -> int:
        return len(self.states)


@dataclass(frozen=True, eq=False)
class TabularCPD:
    """A full conditional probability table p(child | parents).

    ``table`` has one row per parent-state combination (last parent fastest)
    and one column per child state. A prior is the degenerate case with no
    parents and a single row.
    """

    child: str
    parents: tuple[str, ...]
    table: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "parents", tuple(self.parents))
        t = np.array(self.table, dtype=np.float64)
        t.setflags(write=False)
        object.__setattr__(self, "table", t)


@dataclass(frozen=True, eq=False)
class CauseLink:
    """One cause's contribution to a CIFamily.

    ``transition`` is p(effect summary | cause): one row per cause state over
    the effect's states. The row for the distinguished cause state must put
    all mass on the family baseline, which is what makes the distinguished
    state inert.
    """

    cause: str
    distinguished: int
    transition: np.ndarray

    def __post_init__(self) -> None:
        t = np.array(self.transition, dtype=np.float64)
        t.setflags(write=False)
        object.__setattr__(self, "transition", t)

    @property
    def cause_cardinality(self) -> int:
        return self.transition.shape[0]


@dataclass(frozen=True, eq=False)
class CombinationFunction:
    """A total discrete function over effect states.

    Exactly one representation is populated:

    * ``named``: one of ``or | max | sum | xor``, generic over cardinality;
    * ``binary_table``: an explicit (k, k) table of state indices, folded
      pairwise like a named combiner;
    * ``table``: an explicit n-argument table, flattened row-major with the
      last argument fastest, together with ``arity``.
    """

    named: str | None = None
    binary_table: np.ndarray | None = None
    table: np.ndarray | None = None
    arity: int | None = None

    def __post_init__(self) -> None:
        for attr in ("binary_table", "table"):
            value = getattr(self, attr)
            if value is not None:
                arr = np.array(value, dtype=np.int64)
                arr.setflags(write=False)
                object.__setattr__(self, attr, arr)

    @classmethod
    def named_op(cls, name: str) -> "CombinationFunction":
        if name not in NAMED_COMBINERS:
            raise EngineError(f"unknown named combiner {name!r}")
        return cls(named=name)

    @classmethod
    def from_binary(cls, matrix) -> "CombinationFunction":
        return cls(binary_table=np.asarray(matrix))

    @classmethod
    def from_table(cls, flat, arity: int) -> "CombinationFunction":
        return cls(table=np.asarray(flat).reshape(-1), arity=int(arity))

    @property
    def is_binary(self) -> bool:
        """True for combiners applied by pairwise folding."""
        return self.named is not None or self.binary_table is not None

    def binary_matrix(self, cardinality: int) -> np.ndarray:
        """The (k, k) index table of a binary combiner."""
        if self.named is not None:
            return named_binary_matrix(self.named, cardinality)
        if self.binary_table is not None:
            return self.binary_table
        raise EngineError("combiner is an n-argument table, not a binary function")

    def nary_table(self, cardinality: int) -> np.ndarray:
        """The explicit n-argument table reshaped to (k, ..., k)."""
        if self.table is None:
            raise EngineError("combiner is binary, not an n-argument table")
        return self.table.reshape((cardinality,) * self.arity)


@dataclass(frozen=True, eq=False)
class CIFamily:
    """A multi-cause interaction expressed per cause.

    ``links`` are ordered; their declaration order is the default chain
    ordering. ``baseline`` is the effect state obtained when every cause sits
    at its distinguished state. ``leak``, when present, is a distribution over
    effect states contributed by an always-active background cause; it enters
    any fold or explicit table as a virtual first argument.
    """

    effect: str
    baseline: int
    links: tuple[CauseLink, ...]
    combiner: CombinationFunction
    leak: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "links", tuple(self.links))
        if self.leak is not None:
            lk = np.array(self.leak, dtype=np.float64)
            lk.setflags(write=False)
            object.__setattr__(self, "leak", lk)

    @property
    def causes(self) -> tuple[str, ...]:
        return tuple(link.cause for link in self.links)

    @property
    def effect_cardinality(self) -> int:
        return self.links[0].transition.shape[1] if self.links else 0

    @property
    def table_arity(self) -> int:
        """Arity an explicit combiner table must have (leak counts as one)."""
        return len(self.links) + (1 if self.leak is not None else 0)


Family = TabularCPD | CIFamily


@dataclass(frozen=True, eq=False)
class Network:
    """An immutable DAG of variables, each carrying exactly one family."""

    variables: tuple[Variable, ...]
    families: dict[str, Family]

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(
            self, "_index", {v.name: i for i, v in enumerate(self.variables)}
        )

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def has_variable(self, name: str) -> bool:
        return name in self._index

    def variable(self, name: str) -> Variable:
        return self.variables[self._index[name]]

    def index(self, name: str) -> int:
        return self._index[name]

    def cardinality(self, name: str) -> int:
        return self.variable(name).cardinality

    def states(self, name: str) -> tuple[str, ...]:
        return self.variable(name).states

    def parents_of(self, name: str) -> tuple[str, ...]:
        """Graph parents of a variable: CPD parents, or the causes of a CIFamily."""
        family = self.families.get(name)
        if family is None:
            return ()
        if isinstance(family, TabularCPD):
            return family.parents
        return family.causes

    def state_index(self, name: str, label: str) -> int:
        states = self.states(name)
        try:
            return states.index(label)
        except ValueError:
            raise EngineError(f"variable {name!r} has no state {label!r}") from None


@dataclass
class ValidationReport:
    """Outcome of structural validation; violations are data, not failures."""

    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_doc(self) -> dict:
        return {"ok": self.ok, "violations": list(self.violations)}


def _check_rows_normalized(table: np.ndarray, what: str, out: list[str]) -> None:
    for r, row in enumerate(np.atleast_2d(table)):
        if np.any(row < -PROB_TOL) or np.any(row > 1.0 + PROB_TOL):
            out.append(f"{what}: row {r} has probabilities outside [0, 1]")
        if abs(float(row.sum()) - 1.0) > PROB_TOL:
            out.append(f"{what}: row {r} not normalized (sums to {float(row.sum()):.6g})")


def _validate_tabular(net: Network, cpd: TabularCPD, out: list[str]) -> None:
    what = f"tabular family for {cpd.child!r}"
    for p in cpd.parents:
        if not net.has_variable(p):
            out.append(f"{what}: unknown parent {p!r}")
            return
    if cpd.table.ndim != 2:
        out.append(f"{what}: table must be two-dimensional")
        return
    n_rows = 1
    for p in cpd.parents:
        n_rows *= net.cardinality(p)
    want = (n_rows, net.cardinality(cpd.child))
    if cpd.table.shape != want:
        out.append(f"{what}: table shape {cpd.table.shape} != expected {want}")
        return
    _check_rows_normalized(cpd.table, what, out)


def _validate_ci(net: Network, fam: CIFamily, out: list[str]) -> None:
    what = f"interaction family for {fam.effect!r}"
    k = net.cardinality(fam.effect)
    if not fam.links:
        out.append(f"{what}: must have at least one cause link")
        return
    if not 0 <= fam.baseline < k:
        out.append(f"{what}: baseline index {fam.baseline} out of range")
        return
    seen: set[str] = set()
    for link in fam.links:
        if link.cause in seen:
            out.append(f"{what}: duplicate cause {link.cause!r}")
        seen.add(link.cause)
        if not net.has_variable(link.cause):
            out.append(f"{what}: unknown cause {link.cause!r}")
            continue
        kc = net.cardinality(link.cause)
        lw = f"{what}, link {link.cause!r}"
        if link.transition.shape != (kc, k):
            out.append(
                f"{lw}: transition shape {link.transition.shape} != expected {(kc, k)}"
            )
            continue
        if not 0 <= link.distinguished < kc:
            out.append(f"{lw}: distinguished index {link.distinguished} out of range")
            continue
        _check_rows_normalized(link.transition, lw, out)
        row = link.transition[link.distinguished]
        if abs(float(row[fam.baseline]) - 1.0) > PROB_TOL:
            out.append(f"{lw}: distinguished row must be point mass on baseline")
    if fam.leak is not None:
        if fam.leak.shape != (k,):
            out.append(f"{what}: leak shape {fam.leak.shape} != expected {(k,)}")
        else:
            _check_rows_normalized(fam.leak[None, :], f"{what}, leak", out)
    comb = fam.combiner
    if comb.named is not None:
        if comb.named not in NAMED_COMBINERS:
            out.append(f"{what}: unknown combiner {comb.named!r}")
        elif comb.named == "or" and k != 2:
            out.append(f"{what}: combiner 'or' requires a binary effect")
    elif comb.binary_table is not None:
        if comb.binary_table.shape != (k, k):
            out.append(f"{what}: binary combiner table must be {k}x{k}")
        elif np.any(comb.binary_table < 0) or np.any(comb.binary_table >= k):
            out.append(f"{what}: binary combiner table not closed over the effect states")
    elif comb.table is not None:
        if comb.arity != fam.table_arity:
            out.append(
                f"{what}: combiner arity {comb.arity} != expected {fam.table_arity}"
                " (leak counts as one argument)"
            )
        elif comb.table.size != k**comb.arity:
            out.append(f"{what}: combiner table has {comb.table.size} entries,"
                       f" expected {k**comb.arity}")
        elif np.any(comb.table < 0) or np.any(comb.table >= k):
            out.append(f"{what}: combiner table not closed over the effect states")
    else:
        out.append(f"{what}: combiner has no representation")


def validate(net: Network) -> ValidationReport:
    """Check every structural invariant; returns all violations found."""
    out: list[str] = []
    seen_names: set[str] = set()
    for v in net.variables:
        if v.name in seen_names:
            out.append(f"duplicate variable name {v.name!r}")
        seen_names.add(v.name)
        if v.cardinality < 1:
            out.append(f"variable {v.name!r} must have at least one state")
        if len(set(v.states)) != len(v.states):
            out.append(f"variable {v.name!r} has duplicate state labels")

    for name in net.families:
        if not net.has_variable(name):
            out.append(f"family declared for unknown variable {name!r}")
    for v in net.variables:
        fam = net.families.get(v.name)
        if fam is None:
            out.append(f"variable {v.name!r} has no family or prior")
        elif isinstance(fam, TabularCPD) and fam.child != v.name:
            out.append(f"family keyed by {v.name!r} declares child {fam.child!r}")
        elif isinstance(fam, CIFamily) and fam.effect != v.name:
            out.append(f"family keyed by {v.name!r} declares effect {fam.effect!r}")

    if out:
        return ValidationReport(out)

    for v in net.variables:
        fam = net.families[v.name]
        if isinstance(fam, TabularCPD):
            _validate_tabular(net, fam, out)
        else:
            _validate_ci(net, fam, out)

    # Kahn's algorithm over resolvable parent references.
    remaining = {v.name for v in net.variables}
    indeg = {
        name: sum(1 for p in net.parents_of(name) if net.has_variable(p))
        for name in remaining
    }
    children: dict[str, list[str]] = {name: [] for name in remaining}
    for name in remaining:
        for p in net.parents_of(name):
            if p in children:
                children[p].append(name)
    queue = [name for name in net.names if indeg[name] == 0]
    while queue:
        name = queue.pop()
        remaining.discard(name)
        for c in children[name]:
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    if remaining:
        cyc = ", ".join(sorted(remaining))
        out.append(f"graph has a cycle involving: {cyc}")

    return ValidationReport(out)


def parameter_count(kind: str, n: int, k: int = 2) -> int:
    """Free parameters needed to assess an n-cause interaction.

    ``full-table``: a general conditional table over n k-state causes,
    k**n combinations times (k - 1) free values each (2**n when binary).

    ``temporal``: a stage-chain assessment, one k*k-row table per stage plus
    the initial value: n * k**2 * (k - 1) + (k - 1), i.e. 4n + 1 when binary.

    ``decomposed``: per-cause activation rows with a known shared combiner and
    no leak: n * (k - 1)**2, i.e. n when binary.
    """
    if n < 1:
        raise EngineError("cause count must be at least 1")
    if k < 2:
        raise EngineError("state cardinality must be at least 2")
    if kind == "full-table":
        return k**n * (k - 1)
    if kind == "temporal":
        return n * k * k * (k - 1) + (k - 1)
    if kind == "decomposed":
        return n * (k - 1) ** 2
    raise EngineError(f"unsupported interaction descriptor {kind!r}")
