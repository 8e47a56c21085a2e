"""Ground-truth expansion of cause-interaction families and their algebra.

Three concerns live here:

* ``expand_to_cpd`` turns a :class:`CIFamily` into the full conditional table
  it denotes, by literal enumeration of every joint draw of the per-cause
  effect summaries (and the leak draw). This is the reference semantics that
  every network rewrite elsewhere in the engine is checked against.

* ``decompose_for_ordering`` decides whether an explicit combination table
  factors into a chain of two-argument stages under a given cause ordering,
  and constructs the stage functions when it does. The chain value after the
  first i causes is pinned to the table applied with the remaining arguments
  at the baseline (the "anchor" of the prefix); a chain exists exactly when
  equal anchors always lead to equal continuations. Intermediate chain values
  live in the effect's own state space; no enlarged alphabets are considered.

* ``classify`` places a combination table in a hierarchy of interaction
  classes, from a fully general table down to chains built from one shared
  commutative-associative binary function:

    1 general-table            full conditional table, no structure assumed
    2 causal-inputs-only       per-cause summaries merged by an arbitrary f
    3 singly-decomposable      some ordering admits a two-argument chain
    4 fully-decomposable       every ordering admits a chain
    5 fully-decomposable-equal one binary function serves at every stage
    6 continuous-unsupported   continuous linear interactions (out of scope)

Everything here is a pure function of immutable inputs and safe to call
concurrently.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import EngineError
from .model import CIFamily, CombinationFunction, TabularCPD, named_binary_matrix

#: Orderings are enumerated exhaustively up to this many causes.
FULL_ENUMERATION_LIMIT = 8

#: Beyond the exhaustive limit, this many orderings are sampled (seeded).
SAMPLED_ORDERINGS = 1000

#: Hard ceiling on classify's input size.
MAX_CLASSIFY_ARITY = 12

CLASS_LABELS = {
    1: "general-table",
    2: "causal-inputs-only",
    3: "singly-decomposable",
    4: "fully-decomposable",
    5: "fully-decomposable-equal",
    6: "continuous-unsupported",
}


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Witness chain for one ordering.

    ``stages[i]`` is the (k, k) index table of the stage applied when cause
    ``order[i + 1]`` enters: value = stages[i][new summary, previous chain
    value]. The first stage has no table; the chain starts at the raw first
    summary. For a single cause the witness is trivially empty.
    """

    order: tuple[int, ...]
    cardinality: int
    baseline: int
    stages: tuple[np.ndarray, ...]

    def fold(self) -> np.ndarray:
        """Apply the witness chain to every argument tuple; the result axes
        follow ``order`` (axis i is the summary of cause order[i])."""
        k = self.cardinality
        acc = np.arange(k)
        for mat in self.stages:
            # acc axes so far: (x_order[0], ..., x_order[i-1]); append the next
            acc = np.moveaxis(mat[:, acc], 0, -1)
        return acc


class AlgebraReport(NamedTuple):
    commutative: bool
    associative: bool


@dataclass(frozen=True, eq=False)
class InteractionClass:
    """Most specific interaction class of a combination table."""

    number: int
    witness_order: tuple[int, ...] | None = None
    witness: Decomposition | None = None
    shared_matrix: np.ndarray | None = None
    shared_name: str | None = None
    sampled: bool = False

    @property
    def label(self) -> str:
        return CLASS_LABELS[self.number]

    def to_doc(self) -> dict:
        return {
            "class": self.number,
            "label": self.label,
            "witness_order": None
            if self.witness_order is None
            else [i + 1 for i in self.witness_order],
            "shared_function": self.shared_name,
            "sampled": self.sampled,
        }


# ---------------------------------------------------------------------------
# family expansion (the reference semantics)


def fold_matrix_table(
    matrix: np.ndarray, n_args: int, cardinality: int, seed: int, leak_first: bool
) -> np.ndarray:
    """Materialize a pairwise fold as an explicit table.

    Folds ``acc = matrix[x_i, acc]`` over arguments in order, starting from
    the constant ``seed`` or, when ``leak_first`` is set, from the value of a
    leading leak argument. Result axes are (leak?, x_1, ..., x_n).
    """
    k = cardinality
    acc = np.arange(k) if leak_first else np.asarray(seed)
    for _ in range(n_args):
        acc = np.moveaxis(matrix[:, acc], 0, -1)
    return acc


def family_table(family: CIFamily, cardinality: int) -> np.ndarray:
    """The explicit combination table a family denotes, axes (leak?, links...)."""
    n = len(family.links)
    has_leak = family.leak is not None
    if family.combiner.is_binary:
        matrix = family.combiner.binary_matrix(cardinality)
        return fold_matrix_table(matrix, n, cardinality, family.baseline, has_leak)
    return family.combiner.nary_table(cardinality)


def expand_to_cpd(family: CIFamily) -> TabularCPD:
    """Expand a cause-interaction family into its full conditional table.

    For every combination of cause states, every joint assignment of the
    per-cause summaries (plus the leak draw, when present) is enumerated; the
    product of its probabilities is accumulated into the combination
    function's output state. Rows come out normalized because the summary
    draws are independent distributions.
    """
    k = family.effect_cardinality
    table = family_table(family, k)
    out_flat = table.reshape(-1)
    cause_cards = tuple(link.cause_cardinality for link in family.links)

    rows = []
    for combo in np.ndindex(*cause_cards):
        joint = family.leak if family.leak is not None else np.ones(())
        for link, c in zip(family.links, combo):
            joint = np.multiply.outer(joint, link.transition[c])
        rows.append(np.bincount(out_flat, weights=joint.reshape(-1), minlength=k))
    return TabularCPD(family.effect, family.causes, np.array(rows))


# ---------------------------------------------------------------------------
# chain decomposition


def _anchor_vector(g: np.ndarray, i: int, k: int, n: int, baseline: int) -> np.ndarray:
    """Anchors of all length-i prefixes: g with the last n-i axes at baseline,
    flattened to shape (k**i,)."""
    if i == n:
        return g.reshape(-1)
    suffix = int(np.ravel_multi_index((baseline,) * (n - i), (k,) * (n - i)))
    return g.reshape(k**i, k ** (n - i))[:, suffix]


def decompose_for_ordering(
    table: np.ndarray,
    order: tuple[int, ...],
    cardinality: int,
    baseline: int,
    arity: int | None = None,
) -> Decomposition | None:
    """Factor a combination table into a two-argument chain under ``order``.

    Returns the witness chain, or None when the table does not factor. The
    check: for every prefix length i, any two prefixes with equal anchors must
    agree on every completion. Stage tables are read off the anchors; the
    second stage is keyed by the raw first summary (the chain starts there),
    later stages by the previous anchor. Stage cells that no prefix can reach
    are filled with the previous value, which the chain never consults.
    """
    k = cardinality
    f = np.asarray(table)
    if f.ndim == 1:
        if arity is None:
            raise EngineError("flat combination table needs an explicit arity")
        f = f.reshape((k,) * arity)
    n = f.ndim
    order = tuple(order)
    if sorted(order) != list(range(n)):
        raise EngineError(f"ordering {order!r} is not a permutation of 0..{n - 1}")
    g = np.transpose(f, order)

    for i in range(1, n):
        anchors = _anchor_vector(g, i, k, n, baseline)
        completions = g.reshape(k**i, k ** (n - i))
        for value in range(k):
            block = completions[anchors == value]
            if block.shape[0] > 1 and (block != block[0]).any():
                return None

    stages = []
    for i in range(2, n + 1):
        prev = np.arange(k) if i == 2 else _anchor_vector(g, i - 1, k, n, baseline)
        cur = _anchor_vector(g, i, k, n, baseline).reshape(k ** (i - 1), k)
        mat = np.tile(np.arange(k), (k, 1))  # unreached columns pass through
        for p in range(k ** (i - 1)):
            mat[:, prev[p]] = cur[p]
        stages.append(mat)
    return Decomposition(order, k, baseline, tuple(stages))


def _orderings(n: int) -> tuple[list[tuple[int, ...]], bool]:
    if n <= FULL_ENUMERATION_LIMIT:
        return list(itertools.permutations(range(n))), False
    rng = np.random.default_rng(0)
    seen = {tuple(range(n))}
    out = [tuple(range(n))]
    while len(out) < SAMPLED_ORDERINGS:
        perm = tuple(int(x) for x in rng.permutation(n))
        if perm not in seen:
            seen.add(perm)
            out.append(perm)
    return out, True


def _match_named(matrix: np.ndarray, k: int, baseline: int) -> str | None:
    for name in ("or", "max", "sum", "xor"):
        if name == "or" and k != 2:
            continue
        if np.array_equal(matrix, named_binary_matrix(name, k)):
            return name
    if np.all(matrix == matrix.reshape(-1)[0]):
        return "constant"
    return None


def check_commutative_associative(matrix: np.ndarray) -> AlgebraReport:
    """Exhaustively test a binary table over all pairs and triples."""
    m = np.asarray(matrix)
    commutative = bool(np.array_equal(m, m.T))
    associative = bool(np.array_equal(m[m], m[:, m]))
    return AlgebraReport(commutative, associative)


def check_identity(matrix: np.ndarray, baseline: int) -> bool:
    """True when the baseline is an identity element of the binary table.

    The right-identity law f(x, e0) = x must hold for every x; when the table
    is commutative the symmetric law f(e0, x) = x is checked as well.
    """
    m = np.asarray(matrix)
    k = m.shape[0]
    ident = np.arange(k)
    ok = bool(np.array_equal(m[:, baseline], ident))
    if ok and check_commutative_associative(m).commutative:
        ok = bool(np.array_equal(m[baseline, :], ident))
    return ok


def classify(
    table: np.ndarray,
    cardinality: int,
    baseline: int,
    arity: int | None = None,
) -> InteractionClass:
    """Most specific interaction class of an explicit combination table.

    Runs the chain factoring check for each ordering (all of them up to
    8 arguments, a fixed seeded sample of 1000 beyond that). A single
    succeeding ordering gives class 3 with the lexicographically first
    witness; all orderings give class 4; class 5 additionally requires one
    binary function that reproduces the table as a chain under every
    enumerated ordering and is commutative and associative.
    """
    k = cardinality
    f = np.asarray(table)
    if f.ndim == 1:
        if arity is None:
            raise EngineError("flat combination table needs an explicit arity")
        f = f.reshape((k,) * arity)
    n = f.ndim
    if n > MAX_CLASSIFY_ARITY:
        raise EngineError(f"classification is limited to {MAX_CLASSIFY_ARITY} arguments")

    orders, sampled = _orderings(n)
    witnesses: dict[tuple[int, ...], Decomposition | None] = {
        order: decompose_for_ordering(f, order, k, baseline) for order in orders
    }
    succeeded = [order for order in orders if witnesses[order] is not None]
    if not succeeded:
        return InteractionClass(2)
    if len(succeeded) < len(orders):
        best = min(succeeded)
        return InteractionClass(
            3, witness_order=best, witness=witnesses[best], sampled=sampled
        )

    if n == 1:
        # No chain stages exist, so the equal-functions condition is vacuous.
        return InteractionClass(5, sampled=sampled)

    pad = (baseline,) * (n - 2)
    candidate = np.empty((k, k), dtype=np.int64)
    for y in range(k):
        for x in range(k):
            candidate[x, y] = f[(y, x) + pad]
    algebra = check_commutative_associative(candidate)
    shared = algebra.commutative and algebra.associative
    if shared:
        for order in orders:
            folded = fold_matrix_table(candidate, n - 1, k, 0, leak_first=True)
            if not np.array_equal(folded, np.transpose(f, order)):
                shared = False
                break
    if not shared:
        return InteractionClass(4, sampled=sampled)
    name = _match_named(candidate, k, baseline) or "custom"
    return InteractionClass(
        5, shared_matrix=candidate, shared_name=name, sampled=sampled
    )
