from __future__ import annotations

from typing import Iterable, TypeVar

T = TypeVar("T")


def cyclic_components(nodes: Iterable[T], edges: Iterable[tuple[T, T]]) -> list[list[T]]:
    """Strongly connected components that contain at least one cycle.

    Self-loops count. Each component is sorted; the list of components too.
    """
    adjacency: dict[T, list[T]] = {n: [] for n in nodes}
    self_loops = set()
    for s, t in edges:
        adjacency.setdefault(s, []).append(t)
        adjacency.setdefault(t, [])
        if s == t:
            self_loops.add(s)

    index: dict[T, int] = {}
    low: dict[T, int] = {}
    on_stack: set[T] = set()
    stack: list[T] = []
    found: list[list[T]] = []
    counter = 0

    def strongconnect(v: T) -> None:
        nonlocal counter
        index[v] = low[v] = counter
        counter += 1
        stack.append(v)
        on_stack.add(v)
        for w in adjacency[v]:
            if w not in index:
                strongconnect(w)
                low[v] = min(low[v], low[w])
            elif w in on_stack:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            component = []
            while True:
                w = stack.pop()
                on_stack.discard(w)
                component.append(w)
                if w == v:
                    break
            if len(component) > 1 or v in self_loops:
                found.append(sorted(component))

    for n in sorted(adjacency):
        if n not in index:
            strongconnect(n)
    return sorted(found)
