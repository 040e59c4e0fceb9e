"""Named-graph quad store with file-backed persistence.

Layout on disk: an index graph (index.ttl) maps each graph name to a
numbered Turtle file (g_1.ttl, g_2.ttl, ...). Files are written to a
temporary name and moved into place, index last, so a crash mid-save
never leaves the index pointing at a missing or truncated file.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

from .terms import Graph, Iri, Literal, Quad, Subject, Term, TripleType, format_term, triple_key
from .turtle import parse_turtle, serialize_turtle

INDEX_FILE = "index.ttl"
GRAPH_FILE_PREDICATE = Iri("http://persemid.bfh.ch/vocab/store#file")


@dataclass(frozen=True, slots=True)
class QuadPattern:
    """A quad with optional positions; None matches anything."""

    graph: Optional[Iri] = None
    subject: Optional[Subject] = None
    predicate: Optional[Iri] = None
    object: Optional[Term] = None

    def matches(self, quad: Quad) -> bool:
        if self.graph is not None and quad.graph != self.graph:
            return False
        if self.subject is not None and quad.subject != self.subject:
            return False
        if self.predicate is not None and quad.predicate != self.predicate:
            return False
        if self.object is not None and quad.object != self.object:
            return False
        return True


class QuadStore:
    """An in-memory set of quads partitioned into named graphs.

    All operations take an internal lock, so a store can back a threaded
    HTTP server directly. The version counter increments on every change
    that actually altered content; callers use it to invalidate caches.
    """

    def __init__(self) -> None:
        self._graphs: "dict[Iri, Graph]" = {}
        self._lock = threading.RLock()
        self._version = 0

    @property
    def version(self) -> int:
        with self._lock:
            return self._version

    def __len__(self) -> int:
        with self._lock:
            return sum(len(g) for g in self._graphs.values())

    def graph_names(self) -> "list[Iri]":
        with self._lock:
            return sorted(self._graphs, key=lambda i: i.value)

    def graph(self, name: Iri) -> Graph:
        """Snapshot of one named graph; empty when absent."""
        with self._lock:
            g = self._graphs.get(name)
            return g.copy() if g is not None else Graph()

    def has_graph(self, name: Iri) -> bool:
        with self._lock:
            return name in self._graphs

    def insert(self, quad: Quad) -> bool:
        with self._lock:
            g = self._graphs.get(quad.graph)
            if g is None:
                g = Graph()
                self._graphs[quad.graph] = g
            added = g.add(quad.triple)
            if added:
                self._version += 1
            elif not len(g):
                # Freshly created but duplicate insert is impossible; keep tidy.
                del self._graphs[quad.graph]
            return added

    def insert_all(self, quads: Iterable[Quad]) -> int:
        count = 0
        with self._lock:
            for q in quads:
                if self.insert(q):
                    count += 1
        return count

    def delete(self, quad: Quad) -> bool:
        with self._lock:
            g = self._graphs.get(quad.graph)
            if g is None:
                return False
            removed = g.discard(quad.triple)
            if removed:
                self._version += 1
                if not g:
                    del self._graphs[quad.graph]
            return removed

    def delete_matching(self, pattern: QuadPattern) -> int:
        with self._lock:
            victims = self.match(pattern)
            for q in victims:
                self.delete(q)
            return len(victims)

    def replace_graph(self, name: Iri, graph: Graph) -> None:
        """Swap the full contents of one named graph."""
        with self._lock:
            current = self._graphs.get(name)
            if current is not None and current == graph:
                return
            if len(graph):
                self._graphs[name] = graph.copy()
            else:
                self._graphs.pop(name, None)
            self._version += 1

    def remove_graph(self, name: Iri) -> bool:
        with self._lock:
            if name in self._graphs:
                del self._graphs[name]
                self._version += 1
                return True
            return False

    def match(self, pattern: QuadPattern = QuadPattern()) -> "list[Quad]":
        """All quads matching the pattern, in canonical order."""
        with self._lock:
            if pattern.graph is not None:
                names = [pattern.graph] if pattern.graph in self._graphs else []
            else:
                names = sorted(self._graphs, key=lambda i: i.value)
            out: "list[Quad]" = []
            for name in names:
                for s, p, o in self._graphs[name].triples(pattern.subject, pattern.predicate, pattern.object):
                    out.append(Quad(name, s, p, o))
            out.sort(key=lambda q: (q.graph.value, triple_key(q.triple)))
            return out

    def quads(self) -> "list[Quad]":
        return self.match()


def _graph_filename(ordinal: int) -> str:
    return f"g_{ordinal}.ttl"


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def save_store(store: QuadStore, directory: Union[str, Path], prefixes: Optional["dict[str, str]"] = None) -> None:
    """Persist every named graph plus the index, atomically per file.

    Numbering follows sorted graph names, so saving an unchanged store
    rewrites identical bytes.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = store.graph_names()
    index = Graph()
    live_files = {INDEX_FILE}
    for ordinal, name in enumerate(names, start=1):
        filename = _graph_filename(ordinal)
        live_files.add(filename)
        _atomic_write(directory / filename, serialize_turtle(store.graph(name), prefixes))
        index.add((name, GRAPH_FILE_PREDICATE, Literal(filename)))
    _atomic_write(directory / INDEX_FILE, serialize_turtle(index, prefixes))
    for stale in directory.glob("g_*.ttl"):
        if stale.name not in live_files:
            stale.unlink()


class StoreLoadError(ValueError):
    """Raised when the on-disk layout cannot be read back."""


def load_store(directory: Union[str, Path]) -> QuadStore:
    """Load a store saved by save_store; an absent directory is empty."""
    directory = Path(directory)
    store = QuadStore()
    index_path = directory / INDEX_FILE
    if not index_path.exists():
        return store
    index = parse_turtle(index_path.read_text(encoding="utf-8"))
    for name, _, filename in sorted(index.triples(None, GRAPH_FILE_PREDICATE, None), key=triple_key):
        if not isinstance(name, Iri) or not isinstance(filename, Literal):
            raise StoreLoadError(f"malformed index entry: {format_term(name)}")
        graph_path = directory / filename.lexical
        if graph_path.parent != directory:
            raise StoreLoadError(f"index references a file outside the store: {filename.lexical!r}")
        if not graph_path.exists():
            raise StoreLoadError(f"index references a missing file: {filename.lexical!r}")
        graph = parse_turtle(graph_path.read_text(encoding="utf-8"))
        for s, p, o in graph:
            store.insert(Quad(name, s, p, o))
    return store
