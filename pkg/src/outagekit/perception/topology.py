"""Service topology: entity aliases and dependency edges."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import yaml

from ..errors import TopologyUnavailable
from .types import EntityRef


@dataclass
class Topology:
    # canonical_name -> (kind, aliases)
    entities: dict[str, tuple[str, list[str]]] = field(default_factory=dict)
    edges: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        # alias (lowercase) -> canonical name; longest alias wins on overlap
        self._alias_map: dict[str, str] = {}
        for name, (kind, aliases) in self.entities.items():
            for alias in list(aliases) + [name]:
                self._alias_map[alias.lower()] = name
        self._alias_order = sorted(self._alias_map, key=len, reverse=True)
        self._neighbors: dict[str, set[str]] = {}
        for src, dst in self.edges:
            self._neighbors.setdefault(src, set()).add(dst)
            self._neighbors.setdefault(dst, set()).add(src)

    @classmethod
    def load(cls, path: str) -> "Topology":
        try:
            with open(path, encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise TopologyUnavailable(str(exc)) from exc
        entities = {}
        for ent in data.get("entities", []):
            entities[ent["canonical_name"]] = (
                ent.get("kind", "component"),
                list(ent.get("aliases", [])),
            )
        edges = [(e["from"], e["to"]) for e in data.get("edges", [])]
        return cls(entities=entities, edges=edges)

    def resolve(self, mention: str) -> EntityRef | None:
        canonical = self._alias_map.get(mention.strip().lower())
        if canonical is None:
            return None
        kind, _ = self.entities[canonical]
        return EntityRef(kind=kind, canonical_name=canonical,
                         aliases_matched=(mention,))

    def find_mentions(self, text: str) -> list[EntityRef]:
        """Longest-match alias scan over free text."""
        lowered = text.lower()
        found: dict[str, list[str]] = {}
        claimed: list[tuple[int, int]] = []
        for alias in self._alias_order:
            start = 0
            while True:
                idx = lowered.find(alias, start)
                if idx < 0:
                    break
                end = idx + len(alias)
                boundary_ok = (
                    (idx == 0 or not lowered[idx - 1].isalnum())
                    and (end == len(lowered) or not lowered[end].isalnum())
                )
                overlaps = any(idx < c_end and end > c_start
                               for c_start, c_end in claimed)
                if boundary_ok and not overlaps:
                    claimed.append((idx, end))
                    found.setdefault(self._alias_map[alias], []).append(
                        text[idx:end])
                start = end
        refs = []
        for canonical in sorted(found):
            kind, _ = self.entities[canonical]
            refs.append(EntityRef(kind=kind, canonical_name=canonical,
                                  aliases_matched=tuple(found[canonical])))
        return refs

    def neighbors(self, canonical_name: str) -> list[str]:
        return sorted(self._neighbors.get(canonical_name, ()))


_KIND_ATTRS = ("service", "region", "component", "team")


def entities_from_attrs(attrs: dict, topology: Topology) -> list[EntityRef]:
    """Structured attrs may name entities directly; unknown names are kept
    but flagged unresolved."""
    refs = []
    for kind in _KIND_ATTRS:
        value = attrs.get(kind)
        if not value:
            continue
        resolved = topology.resolve(value)
        if resolved is not None:
            refs.append(resolved)
        else:
            refs.append(EntityRef(kind=kind, canonical_name=value,
                                  aliases_matched=(value,), unresolved=True))
    return refs


def canonicalize_payload(payload: str) -> str:
    return re.sub(r"\s+", " ", payload.strip()).lower()
