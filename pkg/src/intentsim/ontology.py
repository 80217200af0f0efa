"""Noun ontology: a category tree plus synonym sets.

The ontology grounds categorical prompts ("pick up a drink") and gives the
simulated detector a closed vocabulary. File format:

    {"categories": {"soda_can": "drink", "drink": "food", ...},
     "synonyms": {"mug": ["cup"], ...}}

Keys of "categories" map each node to its parent; roots appear only as
parents. Leaves (nodes that are never parents) are the object labels.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import ParseError, ValidationError


class Ontology:
    def __init__(self, parents: dict[str, str], synonyms: dict[str, list[str]] | None = None):
        self._parents = {str(k): str(v) for k, v in parents.items()}
        self._check_acyclic()
        syn = synonyms or {}
        self._canonical: dict[str, str] = {}
        for label, alts in syn.items():
            for alt in alts:
                self._canonical[str(alt)] = str(label)
        self._synonyms = {str(k): tuple(str(a) for a in v) for k, v in syn.items()}
        category_nodes = set(self._parents.values())
        all_nodes = set(self._parents) | category_nodes
        self.labels: frozenset[str] = frozenset(all_nodes - category_nodes)
        self.categories: frozenset[str] = frozenset(category_nodes)
        self.vocabulary: frozenset[str] = frozenset(all_nodes | set(self._canonical))
        self._children: dict[str, list[str]] = {}
        for node, parent in self._parents.items():
            self._children.setdefault(parent, []).append(node)

    def _check_acyclic(self) -> None:
        for start in self._parents:
            seen = {start}
            node = start
            while node in self._parents:
                node = self._parents[node]
                if node in seen:
                    raise ValidationError(f"ontology: cycle through '{node}'")
                seen.add(node)

    @classmethod
    def load(cls, path: str | Path) -> "Ontology":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except OSError as e:
            raise ParseError(f"cannot read ontology file {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ParseError(f"malformed ontology file {path}: {e}") from e
        if not isinstance(raw, dict) or "categories" not in raw:
            raise ParseError(f"ontology file {path}: expected object with 'categories'")
        return cls(raw["categories"], raw.get("synonyms"))

    def parent(self, node: str) -> str | None:
        return self._parents.get(node)

    def canonical(self, token: str) -> str | None:
        """Canonical label for a token, resolving synonyms; None if unknown."""
        if token in self.labels:
            return token
        return self._canonical.get(token)

    def synonymous(self, a: str, b: str) -> bool:
        ca, cb = self.canonical(a), self.canonical(b)
        return ca is not None and ca == cb

    def is_or_descends(self, node: str, ancestor: str) -> bool:
        while node is not None:
            if node == ancestor:
                return True
            node = self._parents.get(node)
        return False

    def members(self, category: str) -> list[str]:
        """All leaf labels at or below a category, sorted."""
        if category in self.labels:
            return [category]
        out = []
        stack = [category]
        while stack:
            node = stack.pop()
            kids = self._children.get(node)
            if not kids:
                if node in self.labels:
                    out.append(node)
                continue
            stack.extend(kids)
        return sorted(out)

    def validate_labels(self, labels, where: str = "scenario") -> None:
        """Raise unless every given label is in the vocabulary."""
        missing = sorted({l for l in labels if l not in self.vocabulary})
        if missing:
            raise ValidationError(f"{where}: labels not in ontology vocabulary: {missing}")
