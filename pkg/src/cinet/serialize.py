"""Network file format and canonical JSON output.

A network document is a UTF-8 JSON object with keys ``variables``, ``priors``,
``tabular_families`` and ``ci_families``. Tables are row-major with parent
combinations iterated last-parent-fastest. Combiners are encoded as one of
``"or" | "max" | "sum" | "xor"``, ``{"binary_table": [[labels]]}``, or
``{"table": [labels]}``. State references use labels in documents and indices
in memory; this module is the only place that translates between the two.

``canonical_json`` renders any document with sorted keys and floats fixed to
12 significant digits so repeated runs are byte-identical.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .errors import InvalidNetworkError
from .model import (
    CauseLink,
    CIFamily,
    CombinationFunction,
    Network,
    TabularCPD,
    Variable,
)


def canonical_json(obj: Any) -> str:
    """Serialize with sorted keys and %.12g floats; stable across runs."""
    return _render(_plain(obj))


def _plain(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return [_plain(x) for x in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(x) for x in obj]
    return obj


def _render(obj: Any) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if obj != obj or obj in (float("inf"), float("-inf")):
            raise InvalidNetworkError("cannot serialize non-finite number")
        return format(obj, ".12g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, list):
        return "[" + ", ".join(_render(x) for x in obj) + "]"
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ", ".join(f"{json.dumps(k)}: {_render(v)}" for k, v in items) + "}"
    raise InvalidNetworkError(f"cannot serialize value of type {type(obj).__name__}")


# ---------------------------------------------------------------------------
# network documents


def _combiner_to_doc(comb: CombinationFunction, states: tuple[str, ...]):
    if comb.named is not None:
        return comb.named
    if comb.binary_table is not None:
        return {"binary_table": [[states[i] for i in row] for row in comb.binary_table]}
    return {"table": [states[i] for i in comb.table]}


def _combiner_from_doc(doc, states: tuple[str, ...], arity: int) -> CombinationFunction:
    index = {s: i for i, s in enumerate(states)}

    def idx(label) -> int:
        if label not in index:
            raise InvalidNetworkError(f"combiner references unknown state {label!r}")
        return index[label]

    if isinstance(doc, str):
        return CombinationFunction.named_op(doc)
    if isinstance(doc, dict) and "binary_table" in doc:
        rows = doc["binary_table"]
        return CombinationFunction.from_binary([[idx(x) for x in row] for row in rows])
    if isinstance(doc, dict) and "table" in doc:
        flat = [idx(x) for x in doc["table"]]
        return CombinationFunction.from_table(flat, arity)
    raise InvalidNetworkError(f"unrecognized combiner encoding: {doc!r}")


def network_to_doc(net: Network) -> dict:
    """Render a network as a plain document (JSON-compatible dict)."""
    doc: dict[str, Any] = {
        "variables": [{"name": v.name, "states": list(v.states)} for v in net.variables],
        "priors": {},
        "tabular_families": [],
        "ci_families": [],
    }
    for v in net.variables:
        fam = net.families[v.name]
        if isinstance(fam, TabularCPD):
            if not fam.parents:
                doc["priors"][v.name] = fam.table[0].tolist()
            else:
                doc["tabular_families"].append(
                    {
                        "child": fam.child,
                        "parents": list(fam.parents),
                        "table": fam.table.tolist(),
                    }
                )
        else:
            states = net.states(fam.effect)
            entry: dict[str, Any] = {
                "effect": fam.effect,
                "baseline": states[fam.baseline],
                "links": [
                    {
                        "cause": link.cause,
                        "distinguished": net.states(link.cause)[link.distinguished],
                        "transition": link.transition.tolist(),
                    }
                    for link in fam.links
                ],
                "combiner": _combiner_to_doc(fam.combiner, states),
            }
            if fam.leak is not None:
                entry["leak"] = fam.leak.tolist()
            doc["ci_families"].append(entry)
    return doc


def _as_float_array(value, what: str) -> np.ndarray:
    try:
        return np.array(value, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidNetworkError(f"{what}: not a rectangular numeric table") from exc


def network_from_doc(doc: dict) -> Network:
    """Parse a network document. Raises InvalidNetworkError on malformed input;
    semantic problems are left for ``validate`` to report."""
    if not isinstance(doc, dict):
        raise InvalidNetworkError("network document must be a JSON object")
    try:
        var_docs = doc["variables"]
    except KeyError:
        raise InvalidNetworkError("network document missing 'variables'") from None

    variables = []
    for vd in var_docs:
        try:
            variables.append(Variable(str(vd["name"]), tuple(str(s) for s in vd["states"])))
        except (KeyError, TypeError) as exc:
            raise InvalidNetworkError(f"malformed variable entry: {vd!r}") from exc
    by_name = {v.name: v for v in variables}

    def states_of(name: str, what: str) -> tuple[str, ...]:
        if name not in by_name:
            raise InvalidNetworkError(f"{what}: unknown variable {name!r}")
        return by_name[name].states

    families: dict[str, TabularCPD | CIFamily] = {}

    def put(name: str, fam) -> None:
        if name in families:
            raise InvalidNetworkError(f"variable {name!r} declared more than one family")
        families[name] = fam

    for name, row in dict(doc.get("priors", {})).items():
        table = _as_float_array(row, f"prior for {name!r}").reshape(1, -1)
        put(str(name), TabularCPD(str(name), (), table))

    for fd in doc.get("tabular_families", []):
        try:
            child = str(fd["child"])
            parents = tuple(str(p) for p in fd["parents"])
            table = _as_float_array(fd["table"], f"table for {child!r}")
        except (KeyError, TypeError) as exc:
            raise InvalidNetworkError(f"malformed tabular family: {fd!r}") from exc
        put(child, TabularCPD(child, parents, table))

    for fd in doc.get("ci_families", []):
        try:
            effect = str(fd["effect"])
            baseline_label = str(fd["baseline"])
            link_docs = fd["links"]
            combiner_doc = fd["combiner"]
        except (KeyError, TypeError) as exc:
            raise InvalidNetworkError(f"malformed interaction family: {fd!r}") from exc
        estates = states_of(effect, f"family for {effect!r}")
        if baseline_label not in estates:
            raise InvalidNetworkError(
                f"family for {effect!r}: baseline {baseline_label!r} is not a state"
            )
        links = []
        for ld in link_docs:
            try:
                cause = str(ld["cause"])
                dist_label = str(ld["distinguished"])
                transition = _as_float_array(
                    ld["transition"], f"transition for {cause!r}"
                )
            except (KeyError, TypeError) as exc:
                raise InvalidNetworkError(f"malformed cause link: {ld!r}") from exc
            cstates = states_of(cause, f"link {cause!r} of {effect!r}")
            if dist_label not in cstates:
                raise InvalidNetworkError(
                    f"link {cause!r} of {effect!r}: "
                    f"distinguished {dist_label!r} is not a state"
                )
            links.append(CauseLink(cause, cstates.index(dist_label), transition))
        leak = fd.get("leak")
        leak_arr = None if leak is None else _as_float_array(leak, f"leak for {effect!r}")
        arity = len(links) + (0 if leak_arr is None else 1)
        combiner = _combiner_from_doc(combiner_doc, estates, arity)
        put(
            effect,
            CIFamily(effect, estates.index(baseline_label), tuple(links), combiner, leak_arr),
        )

    return Network(tuple(variables), families)


def load_network(path: str) -> Network:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidNetworkError(f"{path}: not valid JSON ({exc})") from exc
    return network_from_doc(doc)


def dump_network(net: Network) -> str:
    return canonical_json(network_to_doc(net))


# ---------------------------------------------------------------------------
# standalone combination-function documents (used by `classify`)


def function_from_doc(doc: dict) -> tuple[np.ndarray, int, int, tuple[str, ...]]:
    """Parse ``{"states", "baseline", "table", "arity"?}`` into
    (flat index table, baseline index, arity, states)."""
    if not isinstance(doc, dict):
        raise InvalidNetworkError("function document must be a JSON object")
    try:
        states = tuple(str(s) for s in doc["states"])
        baseline_label = str(doc["baseline"])
        entries = doc["table"]
    except (KeyError, TypeError) as exc:
        raise InvalidNetworkError("function document needs 'states', 'baseline', 'table'") from exc
    if baseline_label not in states:
        raise InvalidNetworkError(f"baseline {baseline_label!r} is not a state")
    k = len(states)
    index = {s: i for i, s in enumerate(states)}
    try:
        flat = np.array([index[str(x)] for x in entries], dtype=np.int64)
    except KeyError as exc:
        raise InvalidNetworkError(f"table references unknown state {exc.args[0]!r}") from exc
    if "arity" in doc:
        arity = int(doc["arity"])
    else:
        if k < 2:
            raise InvalidNetworkError("arity is required when there are fewer than 2 states")
        arity = 0
        size = 1
        while size < flat.size:
            size *= k
            arity += 1
    if k**arity != flat.size:
        raise InvalidNetworkError(
            f"table has {flat.size} entries; expected {k}^arity for some integer arity"
        )
    return flat, states.index(baseline_label), arity, states
