"""Rewrites of cause-interaction families into explicit chain subnetworks.

A family over causes c_1..c_n is replaced by a ladder of effect-valued chain
variables, one stage per cause in a caller-chosen order. Three wirings are
supported; all three leave the joint distribution over the original variables
unchanged:

* ``collapsed``: one probabilistic summary node per cause (`…__ep<i>`) holding
  the link's transition rows, plus deterministic chain nodes (`…__e<i>`); the
  final stage is the effect variable itself.
* ``epsilon``: like collapsed, but each summary is made deterministic by an
  explicit root mechanism node (`…__eps<i>`) whose states are the distinct
  outcome patterns of the link's transition rows.
* ``temporal``: no summary nodes; each chain stage is probabilistic with the
  cause and the previous stage as parents, folding the transition rows and the
  stage function into one table.

A leak enters as the seed of the chain: a root node (`…__leak`) that becomes a
second parent of the first stage, so an n-cause family always produces exactly
n chain stages. Every added node has at most two parents.

Rewrites are pure: they build a new network and never touch other families.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EngineError, NotDecomposableError
from .model import CIFamily, Network, TabularCPD, Variable
from .semantics import decompose_for_ordering, family_table

STYLES = ("collapsed", "epsilon", "temporal")


@dataclass(frozen=True)
class PlanEntry:
    """Expansion directive for one family: a link ordering (0-based positions
    into the declaration order) and a wiring style."""

    order: tuple[int, ...]
    style: str = "collapsed"

    def __post_init__(self) -> None:
        object.__setattr__(self, "order", tuple(int(i) for i in self.order))
        if self.style not in STYLES:
            raise EngineError(f"unknown expansion style {self.style!r}")


#: A plan maps effect names to PlanEntry values; families not named stay put.
ExpansionPlan = dict[str, PlanEntry]


def declaration_plan(net: Network, style: str = "collapsed") -> ExpansionPlan:
    """A plan covering every CI family in link declaration order."""
    plan: ExpansionPlan = {}
    for v in net.variables:
        fam = net.families[v.name]
        if isinstance(fam, CIFamily):
            plan[v.name] = PlanEntry(tuple(range(len(fam.links))), style)
    return plan


def _stage_maps(
    family: CIFamily, order: tuple[int, ...], k: int
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Stage functions for the chain under ``order``.

    Returns (first, rest): ``first`` maps the first summary (plus the leak
    value as a second axis, when present) to the first chain value; ``rest``
    holds one (summary, previous) -> value table per later stage.
    """
    n = len(family.links)
    has_leak = family.leak is not None
    if family.combiner.is_binary:
        matrix = family.combiner.binary_matrix(k)
        first = matrix if has_leak else matrix[:, family.baseline]
        return first, [matrix] * (n - 1)

    table = family_table(family, k)
    if has_leak:
        extended_order = (0,) + tuple(i + 1 for i in order)
        witness = decompose_for_ordering(table, extended_order, k, family.baseline)
        if witness is None:
            raise NotDecomposableError(
                f"family for {family.effect!r} does not factor under the"
                f" requested ordering (leak included)"
            )
        # extended stage 2 keys (summary, leak); later stages shift by one
        return witness.stages[0], list(witness.stages[1:])
    witness = decompose_for_ordering(table, order, k, family.baseline)
    if witness is None:
        raise NotDecomposableError(
            f"family for {family.effect!r} does not factor under the requested ordering"
        )
    if n == 1:
        return table, []  # a unary table: the effect is a function of one summary
    return np.arange(k), list(witness.stages)


def _deterministic_rows(mapping: np.ndarray, k: int) -> np.ndarray:
    """One-hot CPD rows for an index mapping whose axes are the parents."""
    return np.eye(k)[np.asarray(mapping).reshape(-1)]


def _mechanism_atoms(transition: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split [0, 1) into atoms on which every transition row is constant.

    Returns (probabilities, patterns); patterns[a, c] is the effect index the
    mechanism atom ``a`` produces under cause state ``c``. Atoms with
    identical patterns are merged, so the mechanism alphabet is minimal.
    """
    t = np.asarray(transition, dtype=np.float64)
    kc, _ = t.shape
    cums = [np.cumsum(t[c]) for c in range(kc)]
    points = sorted({0.0, 1.0} | {float(x) for cum in cums for x in cum[:-1]})
    edges = [points[0]]
    for x in points[1:]:
        if x - edges[-1] > 1e-12:
            edges.append(x)
    if edges[-1] != 1.0:
        edges[-1] = 1.0

    merged: dict[tuple[int, ...], float] = {}
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = (lo + hi) / 2.0
        pattern = tuple(
            int(min(np.searchsorted(cums[c], mid, side="right"), t.shape[1] - 1))
            for c in range(kc)
        )
        merged[pattern] = merged.get(pattern, 0.0) + (hi - lo)
    patterns = np.array(list(merged.keys()), dtype=np.int64)
    probs = np.array(list(merged.values()), dtype=np.float64)
    return probs / probs.sum(), patterns


def expand_family(net: Network, effect: str, entry: PlanEntry) -> Network:
    """Replace one family with its chain subnetwork; returns a new network."""
    if not net.has_variable(effect):
        raise EngineError(f"unknown variable {effect!r}")
    family = net.families[effect]
    if not isinstance(family, CIFamily):
        raise EngineError(f"variable {effect!r} does not carry an interaction family")
    n = len(family.links)
    if sorted(entry.order) != list(range(n)):
        raise EngineError(
            f"ordering for {effect!r} must be a permutation of its {n} links"
        )
    k = net.cardinality(effect)
    estates = net.states(effect)
    first_map, rest_maps = _stage_maps(family, entry.order, k)

    def fresh(name: str) -> str:
        if net.has_variable(name):
            raise EngineError(
                f"cannot expand {effect!r}: variable {name!r} already exists"
            )
        return name

    new_vars: list[Variable] = []
    new_fams: dict[str, TabularCPD] = {}

    leak_name = None
    if family.leak is not None:
        leak_name = fresh(f"{effect}.__leak")
        new_vars.append(Variable(leak_name, estates))
        new_fams[leak_name] = TabularCPD(leak_name, (), family.leak.reshape(1, -1))

    # summary inputs per stage: (node name, cause name, transition rows)
    stage_inputs: list[tuple[str, str, np.ndarray]] = []
    for pos, link_index in enumerate(entry.order, start=1):
        link = family.links[link_index]
        if entry.style == "temporal":
            stage_inputs.append(("", link.cause, link.transition))
            continue
        ep = fresh(f"{effect}.__ep{pos}")
        if entry.style == "epsilon":
            probs, patterns = _mechanism_atoms(link.transition)
            eps = fresh(f"{effect}.__eps{pos}")
            new_vars.append(Variable(eps, tuple(f"m{j}" for j in range(len(probs)))))
            new_fams[eps] = TabularCPD(eps, (), probs.reshape(1, -1))
            new_vars.append(Variable(ep, estates))
            new_fams[ep] = TabularCPD(
                ep, (link.cause, eps), _deterministic_rows(patterns.T, k)
            )
        else:
            new_vars.append(Variable(ep, estates))
            new_fams[ep] = TabularCPD(ep, (link.cause,), np.array(link.transition))
        stage_inputs.append((ep, link.cause, link.transition))

    chain_names = [f"{effect}.__e{i}" for i in range(1, n)] + [effect]
    for name in chain_names[:-1]:
        fresh(name)
        new_vars.append(Variable(name, estates))

    for i, name in enumerate(chain_names):
        ep, cause, transition = stage_inputs[i]
        prev = chain_names[i - 1] if i > 0 else None
        if entry.style == "temporal":
            eye = np.eye(k)
            if i == 0:
                if leak_name is None:
                    # p(v | c) folds the transition rows through the first map
                    rows = transition @ eye[first_map]
                    cpd = TabularCPD(name, (cause,), rows)
                else:
                    rows = np.einsum("cx,xlv->clv", transition, eye[first_map])
                    cpd = TabularCPD(name, (cause, leak_name), rows.reshape(-1, k))
            else:
                rows = np.einsum("cx,xpv->cpv", transition, eye[rest_maps[i - 1]])
                cpd = TabularCPD(name, (cause, prev), rows.reshape(-1, k))
        else:
            if i == 0:
                if leak_name is None:
                    cpd = TabularCPD(name, (ep,), _deterministic_rows(first_map, k))
                else:
                    cpd = TabularCPD(
                        name, (ep, leak_name), _deterministic_rows(first_map, k)
                    )
            else:
                cpd = TabularCPD(
                    name, (ep, prev), _deterministic_rows(rest_maps[i - 1], k)
                )
        new_fams[name] = cpd

    families: dict[str, TabularCPD | CIFamily] = {
        name: fam for name, fam in net.families.items() if name != effect
    }
    families.update(new_fams)
    return Network(net.variables + tuple(new_vars), families)


def transform_network(net: Network, plan: ExpansionPlan) -> Network:
    """Apply a plan entry per family, in variable declaration order."""
    for effect in plan:
        if not net.has_variable(effect):
            raise EngineError(f"plan names unknown variable {effect!r}")
        if not isinstance(net.families[effect], CIFamily):
            raise EngineError(f"plan names {effect!r}, which has no interaction family")
    out = net
    for v in net.variables:
        if v.name in plan:
            out = expand_family(out, v.name, plan[v.name])
    return out
