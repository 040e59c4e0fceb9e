"""Graph equality up to blank node relabeling.

Ground triples must match exactly. Blank nodes are matched by iterated
signature refinement (a color-refinement pass over their neighborhoods),
then a backtracking search within equal-signature groups settles any
remaining ambiguity, e.g. symmetric structures.
"""

from __future__ import annotations

import hashlib

from .terms import BlankNode, Graph, Subject, Term, TripleType, format_term

_REFINEMENT_ROUNDS = 4


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _bnodes(graph: Graph) -> "set[BlankNode]":
    out: "set[BlankNode]" = set()
    for s, _, o in graph:
        if isinstance(s, BlankNode):
            out.add(s)
        if isinstance(o, BlankNode):
            out.add(o)
    return out


def _ground_triples(graph: Graph) -> "set[TripleType]":
    return {
        (s, p, o)
        for s, p, o in graph
        if not isinstance(s, BlankNode) and not isinstance(o, BlankNode)
    }


def _signatures(graph: Graph) -> "dict[BlankNode, str]":
    """A structural fingerprint per blank node, stable under relabeling.

    Each round folds the neighbors' previous-round fingerprints in and
    hashes the result, so signatures stay fixed-size however dense the
    graph is.
    """
    sig = {node: "" for node in _bnodes(graph)}
    for _ in range(_REFINEMENT_ROUNDS):
        nxt: "dict[BlankNode, list[str]]" = {node: [] for node in sig}
        for s, p, o in graph:
            s_b = isinstance(s, BlankNode)
            o_b = isinstance(o, BlankNode)
            if s_b:
                other = sig[o] if o_b else format_term(o)
                nxt[s].append(f"out|{format_term(p)}|{other}")
            if o_b:
                other = sig[s] if s_b else format_term(s)
                nxt[o].append(f"in|{format_term(p)}|{other}")
        sig = {node: _digest("&".join(sorted(parts))) for node, parts in nxt.items()}
    return sig


def _apply_mapping(graph: Graph, mapping: "dict[BlankNode, BlankNode]") -> "set[TripleType]":
    out: "set[TripleType]" = set()
    for s, p, o in graph:
        ms: Subject = mapping[s] if isinstance(s, BlankNode) else s
        mo: Term = mapping[o] if isinstance(o, BlankNode) else o
        out.add((ms, p, mo))
    return out


def graph_isomorphic(a: Graph, b: Graph) -> bool:
    """True when relabeling a's blank nodes can turn it into b exactly."""
    if len(a) != len(b):
        return False
    if _ground_triples(a) != _ground_triples(b):
        return False

    sig_a = _signatures(a)
    sig_b = _signatures(b)
    if len(sig_a) != len(sig_b):
        return False
    if not sig_a:
        return True

    groups_a: "dict[str, list[BlankNode]]" = {}
    groups_b: "dict[str, list[BlankNode]]" = {}
    for node, sig in sig_a.items():
        groups_a.setdefault(sig, []).append(node)
    for node, sig in sig_b.items():
        groups_b.setdefault(sig, []).append(node)
    if set(groups_a) != set(groups_b):
        return False
    if any(len(groups_a[s]) != len(groups_b[s]) for s in groups_a):
        return False

    target = {(s, p, o) for s, p, o in b}

    # Backtrack over candidate pairings, one signature group at a time.
    order = [node for sig in sorted(groups_a) for node in sorted(groups_a[sig], key=lambda n: n.label)]
    candidates = {
        node: sorted(groups_b[sig_a[node]], key=lambda n: n.label) for node in order
    }

    def extend(idx: int, mapping: "dict[BlankNode, BlankNode]", taken: "set[BlankNode]") -> bool:
        if idx == len(order):
            return _apply_mapping(a, mapping) == target
        node = order[idx]
        for cand in candidates[node]:
            if cand in taken:
                continue
            mapping[node] = cand
            taken.add(cand)
            if extend(idx + 1, mapping, taken):
                return True
            del mapping[node]
            taken.discard(cand)
        return False

    return extend(0, {}, set())
