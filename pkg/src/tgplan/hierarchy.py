"""Rooted tree of entity types with subtype and lowest-common-ancestor queries."""

from __future__ import annotations

from dataclasses import dataclass, field


class UnknownTypeError(KeyError):
    """Raised when a type name is not part of the hierarchy."""


@dataclass(frozen=True)
class EntityType:
    name: str
    parent: str | None = None


@dataclass(frozen=True)
class TypeHierarchy:
    """Immutable type tree. Parent links must form a single rooted tree."""

    types: tuple[EntityType, ...]
    root: str = field(init=False)
    _chains: dict[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)
    _chain_sets: dict[str, frozenset[str]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_name: dict[str, EntityType] = {}
        for t in self.types:
            if t.name in by_name:
                raise ValueError(f"duplicate type name: {t.name}")
            by_name[t.name] = t
        roots = [t.name for t in self.types if t.parent is None]
        if len(roots) != 1:
            raise ValueError(f"hierarchy must have exactly one root, got {roots}")
        chains: dict[str, tuple[str, ...]] = {}
        for t in self.types:
            chain = [t.name]
            seen = {t.name}
            cur = t
            while cur.parent is not None:
                if cur.parent not in by_name:
                    raise ValueError(f"unknown parent {cur.parent!r} of {cur.name!r}")
                if cur.parent in seen:
                    raise ValueError(f"cycle through {cur.parent!r}")
                seen.add(cur.parent)
                cur = by_name[cur.parent]
                chain.append(cur.name)
            chains[t.name] = tuple(chain)
        object.__setattr__(self, "root", roots[0])
        object.__setattr__(self, "_chains", chains)
        object.__setattr__(
            self, "_chain_sets", {n: frozenset(c) for n, c in chains.items()}
        )

    @classmethod
    def from_edges(cls, root: str, edges: dict[str, list[str]]) -> TypeHierarchy:
        """Build from a parent -> children mapping."""
        types = [EntityType(root)]
        for parent, children in edges.items():
            types.extend(EntityType(c, parent) for c in children)
        return cls(tuple(types))

    def __contains__(self, name: str) -> bool:
        return name in self._chains

    def _chain(self, name: str) -> tuple[str, ...]:
        try:
            return self._chains[name]
        except KeyError:
            raise UnknownTypeError(name) from None

    def ancestors(self, name: str) -> tuple[str, ...]:
        """Chain from the type itself up to the root, inclusive."""
        return self._chain(name)

    def is_subtype(self, child: str, ancestor: str) -> bool:
        """True iff ancestor lies on the path from child to the root (inclusive)."""
        if ancestor not in self._chains:
            raise UnknownTypeError(ancestor)
        return ancestor in self._chain_sets[self._chain(child)[0]]

    def lca(self, a: str, b: str) -> str:
        """Deepest type that is an ancestor-or-equal of both a and b."""
        bset = self._chain_sets[self._chain(b)[0]]
        for t in self._chain(a):
            if t in bset:
                return t
        raise ValueError(f"no common ancestor of {a!r} and {b!r}")  # unreachable: single root

    def depth(self, name: str) -> int:
        return len(self._chain(name)) - 1

    def to_dict(self) -> dict:
        return {"types": [{"name": t.name, "parent": t.parent} for t in self.types]}

    @classmethod
    def from_dict(cls, data: dict) -> TypeHierarchy:
        return cls(tuple(EntityType(d["name"], d.get("parent")) for d in data["types"]))
