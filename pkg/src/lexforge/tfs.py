"""Typed feature structures with coindexation, unification and subsumption.

Structures are immutable.  Reentrancy is object identity: two paths that
reach the same :class:`FeatureStructure` instance share one node.  Tags are
entry-local integers and are rendered as ``[n]`` in the textual syntax (see
``docs/fs-syntax.md``).
"""
from __future__ import annotations

import re
from types import MappingProxyType
from typing import Callable, Iterable, Iterator, Mapping, Sequence

TOP = "*top*"


class FSError(Exception):
    pass


class IllTypedError(FSError):
    """A structure mentions a type the hierarchy does not know."""


class UnificationFailure(FSError):
    """Two structures have no common specialisation.

    This signals that a rule does not apply; it is not a fault.
    """


class FSParseError(FSError):
    def __init__(self, message: str, text: str = "", pos: int = 0):
        if text:
            message = f"{message} at column {pos + 1}: {text!r}"
        super().__init__(message)
        self.pos = pos


class TypeHierarchy:
    """A DAG of type symbols under the single top type ``*top*``."""

    def __init__(self, types: Mapping[str, Iterable[str]] | None = None):
        self._parents: dict[str, tuple[str, ...]] = {TOP: ()}
        self._ancestors: dict[str, frozenset[str]] = {TOP: frozenset({TOP})}
        self._meet_cache: dict[tuple[str, str], str | None] = {}
        for name, parents in (types or {}).items():
            self.add(name, parents)

    def add(self, name: str, parents: Iterable[str] = (TOP,)) -> None:
        parents = tuple(parents) or (TOP,)
        if name in self._parents:
            if set(parents) != set(self._parents[name]):
                raise ValueError(f"type {name!r} redefined with different parents")
            return
        for p in parents:
            if p not in self._parents:
                raise IllTypedError(f"unknown parent type {p!r} for {name!r}")
        self._parents[name] = parents
        anc = {name}
        for p in parents:
            anc |= self._ancestors[p]
        self._ancestors[name] = frozenset(anc)
        self._meet_cache.clear()

    def __contains__(self, name: object) -> bool:
        return name in self._parents

    def __iter__(self) -> Iterator[str]:
        return iter(self._parents)

    def __len__(self) -> int:
        return len(self._parents)

    def parents(self, name: str) -> tuple[str, ...]:
        self._check(name)
        return self._parents[name]

    def ancestors(self, name: str) -> frozenset[str]:
        self._check(name)
        return self._ancestors[name]

    def is_subtype(self, sub: str, sup: str) -> bool:
        self._check(sub)
        self._check(sup)
        return sup in self._ancestors[sub]

    def meet(self, a: str, b: str) -> str | None:
        """Greatest common subtype, or None when there is none or it is ambiguous."""
        key = (a, b) if a <= b else (b, a)
        if key in self._meet_cache:
            return self._meet_cache[key]
        self._check(a)
        self._check(b)
        if a in self._ancestors[b]:
            result: str | None = b
        elif b in self._ancestors[a]:
            result = a
        else:
            common = [t for t, anc in self._ancestors.items() if a in anc and b in anc]
            maximal = [
                t for t in common
                if not any(u != t and u in self._ancestors[t] for u in common)
            ]
            result = maximal[0] if len(maximal) == 1 else None
        self._meet_cache[key] = result
        return result

    def check(self, fs: "FeatureStructure") -> None:
        for node in fs.nodes():
            self._check(node.type)

    def _check(self, name: str) -> None:
        if name not in self._parents:
            raise IllTypedError(f"unknown type {name!r}")


class FeatureStructure:
    """An immutable typed attribute-value node.

    ``features`` maps attribute names to child nodes; children may be shared
    between several parents.
    """

    __slots__ = ("type", "tag", "_features", "_hash")

    def __init__(
        self,
        type: str = TOP,
        features: Mapping[str, "FeatureStructure"] | None = None,
        tag: int | None = None,
    ):
        feats = dict(features or {})
        for name, value in feats.items():
            if not isinstance(value, FeatureStructure):
                raise TypeError(f"feature {name!r} must hold a FeatureStructure")
        object.__setattr__(self, "type", type)
        object.__setattr__(self, "tag", tag)
        object.__setattr__(self, "_features", feats)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("FeatureStructure is immutable")

    @property
    def features(self) -> Mapping[str, "FeatureStructure"]:
        return MappingProxyType(self._features)

    def __getitem__(self, name: str) -> "FeatureStructure":
        return self._features[name]

    def __contains__(self, name: object) -> bool:
        return name in self._features

    def get(self, path: str | Sequence[str], default=None):
        node = self
        for name in _split_path(path):
            if name not in node._features:
                return default
            node = node._features[name]
        return node

    def evolve(
        self,
        type: str | None = None,
        features: Mapping[str, "FeatureStructure"] | None = None,
        drop: Iterable[str] = (),
        tag: int | None | object = ...,
    ) -> "FeatureStructure":
        """Copy of this node with a new type, features or tag; children stay shared."""
        dropped = set(drop)
        feats = {k: v for k, v in self._features.items() if k not in dropped}
        feats.update(features or {})
        return FeatureStructure(
            self.type if type is None else type,
            feats,
            self.tag if tag is ... else tag,
        )

    def nodes(self) -> Iterator["FeatureStructure"]:
        """Every distinct node, depth first, each once."""
        seen: set[int] = set()
        stack = [self]
        while stack:
            node = stack.pop()
            if id(node) in seen:
                continue
            seen.add(id(node))
            yield node
            stack.extend(reversed(list(node._features.values())))

    def tags(self) -> dict[int, "FeatureStructure"]:
        return {n.tag: n for n in self.nodes() if n.tag is not None}

    def paths(self) -> dict[tuple[str, ...], "FeatureStructure"]:
        out: dict[tuple[str, ...], FeatureStructure] = {}

        def visit(node, path):
            out[path] = node
            for name, child in node._features.items():
                visit(child, path + (name,))

        visit(self, ())
        return out

    def is_atomic(self) -> bool:
        return not self._features

    def equivalent(self, other: "FeatureStructure") -> bool:
        """Isomorphic, reentrancy included, ignoring tag numbers."""
        return _isomorphic(self, other, compare_tags=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureStructure):
            return NotImplemented
        return _isomorphic(self, other, compare_tags=True)

    def __hash__(self) -> int:
        if self._hash is None:
            h = hash((self.type, tuple(sorted(
                (k, v.type) for k, v in self._features.items()))))
            object.__setattr__(self, "_hash", h)
        return self._hash

    def __repr__(self) -> str:
        return f"FeatureStructure({format_fs(self)!r})"

    def __str__(self) -> str:
        return format_fs(self)


def fs(type: str = TOP, tag: int | None = None, **features: FeatureStructure) -> FeatureStructure:
    """Shorthand constructor; feature names use ``_`` for ``-``."""
    return FeatureStructure(type, {k.replace("_", "-"): v for k, v in features.items()}, tag)


def _split_path(path: str | Sequence[str]) -> Sequence[str]:
    if isinstance(path, str):
        return [p for p in path.split(".") if p]
    return path


def _isomorphic(a: FeatureStructure, b: FeatureStructure, compare_tags: bool) -> bool:
    fwd: dict[int, FeatureStructure] = {}
    back: dict[int, FeatureStructure] = {}
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if id(x) in fwd or id(y) in back:
            if fwd.get(id(x)) is not y or back.get(id(y)) is not x:
                return False
            continue
        fwd[id(x)] = y
        back[id(y)] = x
        if x.type != y.type or x._features.keys() != y._features.keys():
            return False
        if compare_tags and x.tag != y.tag:
            return False
        for name, child in x._features.items():
            stack.append((child, y._features[name]))
    return True


# ---------------------------------------------------------------------------
# unification over a union-find copy of both operands


class _Node:
    __slots__ = ("type", "arcs", "rep", "tags")

    def __init__(self, type: str, tags=()):
        self.type = type
        self.arcs: dict[str, _Node] = {}
        self.rep: _Node | None = None
        self.tags: set[tuple[int, int]] = set(tags)


def _find(n: _Node) -> _Node:
    root = n
    while root.rep is not None:
        root = root.rep
    while n.rep is not None:
        n.rep, n = root, n.rep
    return root


def _import(fs: FeatureStructure, side: int, memo: dict[int, _Node]) -> _Node:
    if id(fs) in memo:
        return memo[id(fs)]
    node = _Node(fs.type, {(side, fs.tag)} if fs.tag is not None else ())
    memo[id(fs)] = node
    for name, child in fs._features.items():
        node.arcs[name] = _import(child, side, memo)
    return node


def _merge(a: _Node, b: _Node, meet: Callable[[str, str], str | None]) -> None:
    pending = [(a, b)]
    while pending:
        x, y = pending.pop()
        x, y = _find(x), _find(y)
        if x is y:
            continue
        t = meet(x.type, y.type)
        if t is None:
            raise UnificationFailure(f"types {x.type!r} and {y.type!r} do not unify")
        y.rep = x
        x.type = t
        x.tags |= y.tags
        for name, child in y.arcs.items():
            if name in x.arcs:
                pending.append((x.arcs[name], child))
            else:
                x.arcs[name] = child


def _export(roots: Sequence[_Node]) -> list[FeatureStructure]:
    """Freeze union-find nodes; reentrancy is kept, cycles fail."""
    reps_in_order: list[_Node] = []
    seen: set[int] = set()

    def order(n: _Node, active: set[int]):
        n = _find(n)
        if id(n) in active:
            raise UnificationFailure("unification would create a cyclic structure")
        if id(n) in seen:
            return
        seen.add(id(n))
        reps_in_order.append(n)
        active.add(id(n))
        for child in n.arcs.values():
            order(child, active)
        active.discard(id(n))

    for r in roots:
        order(r, set())

    chosen: dict[int, int] = {}
    used: set[int] = set()
    # tags from the earlier operand win; later operands keep theirs unless taken
    for side in sorted({s for n in reps_in_order for s, _ in n.tags}):
        for n in reps_in_order:
            if id(n) in chosen:
                continue
            mine = sorted(t for s, t in n.tags if s == side)
            if not mine:
                continue
            tag = mine[0]
            if tag in used:
                tag = max(used) + 1
            chosen[id(n)] = tag
            used.add(tag)

    built: dict[int, FeatureStructure] = {}

    def build(n: _Node) -> FeatureStructure:
        n = _find(n)
        if id(n) in built:
            return built[id(n)]
        children = {name: build(c) for name, c in n.arcs.items()}
        out = FeatureStructure(n.type, children, chosen.get(id(n)))
        built[id(n)] = out
        return out

    return [build(r) for r in roots]


def unify(a: FeatureStructure, b: FeatureStructure, hierarchy: TypeHierarchy) -> FeatureStructure:
    """Most general structure subsumed by both ``a`` and ``b``.

    The operands' tags are standardised apart: a tag number shared between
    ``a`` and ``b`` does not by itself identify nodes.  Raises
    :class:`UnificationFailure` on a type clash or a cyclic result.
    """
    hierarchy.check(a)
    hierarchy.check(b)
    ra = _import(a, 0, {})
    rb = _import(b, 1, {})
    _merge(ra, rb, hierarchy.meet)
    return _export([ra])[0]


def coindex(fs: FeatureStructure, path_a: str, path_b: str, hierarchy: TypeHierarchy) -> FeatureStructure:
    """Force the nodes at two paths of ``fs`` to be one node."""
    root = _import(fs, 0, {})

    def walk(path):
        node = root
        for name in _split_path(path):
            node = _find(node)
            if name not in node.arcs:
                node.arcs[name] = _Node(TOP)
            node = node.arcs[name]
        return node

    _merge(walk(path_a), walk(path_b), hierarchy.meet)
    return _export([root])[0]


def subsumes(general: FeatureStructure, specific: FeatureStructure, hierarchy: TypeHierarchy) -> bool:
    """True iff every type, path and reentrancy constraint of ``general`` holds in ``specific``."""
    hierarchy.check(general)
    hierarchy.check(specific)
    image: dict[int, FeatureStructure] = {}
    stack = [(general, specific)]
    while stack:
        g, s = stack.pop()
        if id(g) in image:
            if image[id(g)] is not s:
                return False
            continue
        image[id(g)] = s
        if not hierarchy.is_subtype(s.type, g.type):
            return False
        for name, child in g._features.items():
            if name not in s._features:
                return False
            stack.append((child, s._features[name]))
    return True


# ---------------------------------------------------------------------------
# textual syntax

_TOKEN = re.compile(r"\s*(?:(?P<tag>\[\s*\d+\s*\])|(?P<punct>[\[\],:])|(?P<name>[A-Za-z_*][\w*\-]*))")


class _Raw:
    __slots__ = ("tag", "type", "feats")

    def __init__(self, tag, type, feats):
        self.tag, self.type, self.feats = tag, type, feats


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens: list[tuple[str, str, int]] = []
        i = 0
        while True:
            while i < len(text) and text[i].isspace():
                i += 1
            if i >= len(text):
                break
            m = _TOKEN.match(text, i)
            if not m or m.end() == i:
                raise FSParseError("unexpected character", text, i)
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            i = m.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, len(self.text))

    def take(self, value=None):
        tok = self.peek()
        if tok[0] is None or (value is not None and tok[1] != value):
            raise FSParseError(f"expected {value or 'token'!r}", self.text, tok[2])
        self.i += 1
        return tok

    def parse(self) -> _Raw:
        node = self.fs()
        if self.peek()[0] is not None:
            raise FSParseError("trailing input", self.text, self.peek()[2])
        return node

    def fs(self) -> _Raw:
        tag = type_ = feats = None
        kind, value, pos = self.peek()
        if kind == "tag":
            self.i += 1
            tag = int(value.strip("[] \t"))
            kind, value, pos = self.peek()
        if kind == "name":
            self.i += 1
            type_ = value
            kind, value, pos = self.peek()
        if kind == "punct" and value == "[":
            feats = self.block()
        if tag is None and type_ is None and feats is None:
            raise FSParseError("expected a feature structure", self.text, pos)
        return _Raw(tag, type_, feats or [])

    def block(self) -> list[tuple[str, _Raw]]:
        self.take("[")
        feats: list[tuple[str, _Raw]] = []
        names: set[str] = set()
        while True:
            kind, value, pos = self.peek()
            if kind == "punct" and value == "]":
                self.i += 1
                return feats
            if kind == "punct" and value == "," and feats:
                self.i += 1
                continue
            if kind != "name":
                raise FSParseError("expected attribute name", self.text, pos)
            self.i += 1
            if value in names:
                raise FSParseError(f"duplicate attribute {value!r}", self.text, pos)
            names.add(value)
            self.take(":")
            feats.append((value, self.fs()))


def parse_zones(texts: Sequence[str], hierarchy: TypeHierarchy | None = None) -> list[FeatureStructure]:
    """Parse several structures that share one tag namespace.

    A tag may occur bare (``[11]``) before or after the occurrence that
    carries its content; all occurrences denote one node.
    """
    raws = [_Parser(t).parse() for t in texts]
    meet = hierarchy.meet if hierarchy is not None else _flat_meet
    table: dict[int, _Node] = {}

    def build(raw: _Raw) -> _Node:
        if raw.tag is not None:
            node = table.get(raw.tag)
            if node is None:
                node = table[raw.tag] = _Node(TOP, {(0, raw.tag)})
        else:
            node = _Node(TOP)
        if raw.type is not None:
            if hierarchy is not None and raw.type not in hierarchy:
                raise IllTypedError(f"unknown type {raw.type!r}")
            probe = _Node(raw.type)
            _merge(node, probe, meet)
        for name, child_raw in raw.feats:
            child = build(child_raw)
            target = _find(node)
            if name in target.arcs:
                _merge(target.arcs[name], child, meet)
            else:
                target.arcs[name] = child
        return node

    try:
        roots = [build(r) for r in raws]
        return _export(roots)
    except UnificationFailure as exc:
        raise FSParseError(f"inconsistent tag content: {exc}") from exc


def parse_fs(text: str, hierarchy: TypeHierarchy | None = None) -> FeatureStructure:
    return parse_zones([text], hierarchy)[0]


def _flat_meet(a: str, b: str) -> str | None:
    if a == b or b == TOP:
        return a
    if a == TOP:
        return b
    return None


def format_zones(structures: Sequence[FeatureStructure]) -> list[str]:
    """Render structures sharing one tag namespace.

    Content is printed at the first occurrence of a node (in argument order);
    later occurrences print only its tag.  Shared nodes without a tag get a
    fresh one.
    """
    indegree: dict[int, int] = {}
    all_nodes: dict[int, FeatureStructure] = {}
    for root in structures:
        indegree[id(root)] = indegree.get(id(root), 0) + 1
        for node in root.nodes():
            if id(node) in all_nodes:
                continue
            all_nodes[id(node)] = node
            for child in node._features.values():
                indegree[id(child)] = indegree.get(id(child), 0) + 1
    used = {n.tag for n in all_nodes.values() if n.tag is not None}
    labels: dict[int, int] = {}
    next_tag = max(used, default=-1) + 1
    for root in structures:
        for node in root.nodes():
            if id(node) in labels:
                continue
            if node.tag is not None:
                labels[id(node)] = node.tag
            elif indegree.get(id(node), 0) > 1:
                labels[id(node)] = next_tag
                next_tag += 1

    printed: set[int] = set()

    def render(node: FeatureStructure) -> str:
        label = labels.get(id(node))
        prefix = f"[{label}]" if label is not None else ""
        if id(node) in printed:
            return prefix
        printed.add(id(node))
        head = node.type if node.type != TOP or (not node._features and label is None) else ""
        if node._features:
            head += "[" + ", ".join(f"{k}: {render(v)}" for k, v in node._features.items()) + "]"
        return f"{prefix} {head}".strip()

    return [render(r) for r in structures]


def format_fs(fs: FeatureStructure) -> str:
    return format_zones([fs])[0]
