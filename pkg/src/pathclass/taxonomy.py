"""Class hierarchy handling: tree construction, depth normalization, path enumeration.

The hierarchy is a single-rooted tree. Classifiers in this package predict
root-to-leaf *paths*, so every leaf must sit at the same depth; shallow leaves
are padded with dummy nodes, which are excluded again at evaluation time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

ROOT_NAME = "ROOT"

# Dummy nodes get names "<leaf>~1", "<leaf>~2", ... per extra depth level.
DUMMY_SEP = "~"


class TaxonomyError(ValueError):
    """Raised for structurally invalid hierarchies."""


@dataclass(frozen=True)
class TaxonomyNode:
    id: int
    name: str
    depth: int           # root = 0
    parent: int | None   # node id, None for the root
    is_dummy: bool = False


@dataclass(frozen=True)
class Taxonomy:
    """Immutable rooted tree of class nodes.

    ``levels[k-1]`` lists the node ids at depth k sorted by node name; that
    ordering is the canonical "node index" used for similarity vectors and
    argmax tie-breaking.
    """

    nodes: tuple[TaxonomyNode, ...]        # indexed by node id
    root: int
    depth: int                             # d = depth of the deepest leaf
    children: tuple[tuple[int, ...], ...]  # per node id, sorted by child name
    levels: tuple[tuple[int, ...], ...]
    _by_name: dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        if not self._by_name:
            object.__setattr__(self, "_by_name", {n.name: n.id for n in self.nodes})

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def node(self, name: str) -> TaxonomyNode:
        try:
            return self.nodes[self._by_name[name]]
        except KeyError:
            raise TaxonomyError(f"unknown node name: {name!r}") from None

    def id_of(self, name: str) -> int:
        return self.node(name).id

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def level_sizes(self) -> tuple[int, ...]:
        return tuple(len(level) for level in self.levels)

    def leaves(self) -> tuple[int, ...]:
        return tuple(n.id for n in self.nodes if not self.children[n.id])

    def is_leaf(self, nid: int) -> bool:
        return not self.children[nid]

    def is_original_leaf(self, nid: int) -> bool:
        """True for a non-dummy node whose children (if any) are all dummies."""
        node = self.nodes[nid]
        if node.is_dummy:
            return False
        return all(self.nodes[c].is_dummy for c in self.children[nid])

    @property
    def is_normalized(self) -> bool:
        return all(self.nodes[leaf].depth == self.depth for leaf in self.leaves())

    def ancestors(self, nid: int) -> tuple[int, ...]:
        """Chain root..parent of ``nid``, root first, ``nid`` excluded."""
        chain = []
        cur = self.nodes[nid].parent
        while cur is not None:
            chain.append(cur)
            cur = self.nodes[cur].parent
        return tuple(reversed(chain))

    def chain_from_root(self, nid: int) -> tuple[int, ...]:
        """Nodes at depths 1..depth(nid) ending in ``nid`` (root excluded)."""
        return tuple(i for i in (*self.ancestors(nid), nid) if i != self.root)

    def dummy_extension(self, nid: int) -> tuple[int, ...]:
        """The chain of dummy descendants below an original leaf, shallow first."""
        chain = []
        cur = nid
        while self.children[cur]:
            kids = self.children[cur]
            if len(kids) != 1 or not self.nodes[kids[0]].is_dummy:
                return ()
            cur = kids[0]
            chain.append(cur)
        return tuple(chain)

    def eval_classes(self) -> tuple[int, ...]:
        """All node ids except the root and dummies, in (depth, name) order."""
        out = [n.id for level in self.levels for n in map(self.nodes.__getitem__, level)
               if not n.is_dummy]
        return tuple(out)


@dataclass(frozen=True)
class PathTable:
    """Indexed root-to-leaf paths of a depth-normalized taxonomy.

    Paths are sorted lexicographically by their node-name tuples so the path
    order is reproducible across runs. ``paths[j][k-1]`` is the node id at
    depth k of path j (the root is excluded).
    """

    paths: tuple[tuple[int, ...], ...]
    names: tuple[tuple[str, ...], ...]
    dummies: tuple[tuple[bool, ...], ...]
    leaf_to_path: dict[int, int] = field(compare=False)

    @property
    def num_paths(self) -> int:
        return len(self.paths)

    @property
    def depth(self) -> int:
        return len(self.paths[0]) if self.paths else 0

    @cached_property
    def matrix(self) -> np.ndarray:
        """(num_paths, depth) array of node ids."""
        return np.asarray(self.paths, dtype=np.int64).reshape(self.num_paths, self.depth)

    @cached_property
    def dummy_matrix(self) -> np.ndarray:
        return np.asarray(self.dummies, dtype=bool).reshape(self.num_paths, self.depth)

    def non_dummy_nodes(self, j: int) -> tuple[int, ...]:
        """Real (non-dummy) node ids of path j, shallow first."""
        return tuple(n for n, dummy in zip(self.paths[j], self.dummies[j]) if not dummy)


def _assemble(entries: list[tuple[str, str | None, bool]]) -> Taxonomy:
    """Build a Taxonomy from (name, parent_name, is_dummy) rows; parent=None marks the root."""
    roots = [name for name, parent, _ in entries if parent is None]
    if len(roots) != 1:
        raise TaxonomyError(f"expected exactly one root, found {len(roots)}")

    by_name = {name: (parent, dummy) for name, parent, dummy in entries}
    if len(by_name) != len(entries):
        raise TaxonomyError("node names must be unique")
    child_names: dict[str, list[str]] = {name: [] for name in by_name}
    for name, (parent, _) in by_name.items():
        if parent is not None:
            if parent not in by_name:
                raise TaxonomyError(f"unknown parent node: {parent!r}")
            child_names[parent].append(name)

    # BFS from the root with name-sorted children; assigns ids and depths and
    # detects unreachable nodes (which, given single-parent edges, mean a cycle).
    nodes: list[TaxonomyNode] = []
    ids: dict[str, int] = {}
    queue = [roots[0]]
    while queue:
        name = queue.pop(0)
        parent, dummy = by_name[name]
        pid = ids[parent] if parent is not None else None
        depth = 0 if pid is None else nodes[pid].depth + 1
        ids[name] = len(nodes)
        nodes.append(TaxonomyNode(len(nodes), name, depth, pid, dummy))
        queue.extend(sorted(child_names[name]))

    if len(ids) != len(by_name):
        missing = sorted(set(by_name) - set(ids))
        raise TaxonomyError(f"cycle detected involving node {missing[0]!r}")

    children = tuple(tuple(ids[c] for c in sorted(child_names[name])) for name in
                     (n.name for n in nodes))
    depth = max(n.depth for n in nodes)
    if depth < 1:
        raise TaxonomyError("hierarchy must have at least one class below the root")
    levels = tuple(
        tuple(sorted((n.id for n in nodes if n.depth == k), key=lambda i: nodes[i].name))
        for k in range(1, depth + 1)
    )
    return Taxonomy(tuple(nodes), ids[roots[0]], depth, children, levels)


def build_taxonomy(edges: list[tuple[str, str]], *, add_root_if_forest: bool = False) -> Taxonomy:
    """Build a validated Taxonomy from (parent name, child name) edges.

    With ``add_root_if_forest`` a synthetic ``ROOT`` node is inserted above
    multiple top-level classes; otherwise multiple roots are an error.
    """
    if not edges:
        raise TaxonomyError("no edges given")
    parent_of: dict[str, str] = {}
    seen: set[tuple[str, str]] = set()
    for parent, child in edges:
        if not parent or not child:
            raise TaxonomyError("empty node name in edge")
        if parent == child:
            raise TaxonomyError(f"self-edge on {child!r}")
        if (parent, child) in seen:
            continue
        seen.add((parent, child))
        if child in parent_of and parent_of[child] != parent:
            raise TaxonomyError(
                f"node {child!r} listed under two parents: {parent_of[child]!r} and {parent!r}")
        parent_of[child] = parent

    names = set(parent_of) | {p for p, _ in seen}
    tops = sorted(names - set(parent_of))
    if not tops:
        raise TaxonomyError("cycle detected: every node has a parent")
    if len(tops) > 1:
        if not add_root_if_forest:
            raise TaxonomyError(f"multiple roots: {', '.join(tops)}")
        if ROOT_NAME in names:
            raise TaxonomyError(f"{ROOT_NAME} is reserved but appears alongside other roots")
        for top in tops:
            parent_of[top] = ROOT_NAME
        names.add(ROOT_NAME)
        tops = [ROOT_NAME]

    entries = [(name, parent_of.get(name), False) for name in sorted(names)]
    return _assemble(entries)


def normalize_depth(t: Taxonomy) -> Taxonomy:
    """Pad every shallow leaf with a chain of dummy children down to depth d.

    Original nodes keep their ids; the operation is idempotent.
    """
    if t.is_normalized:
        return t
    entries = [(n.name, None if n.parent is None else t.nodes[n.parent].name, n.is_dummy)
               for n in t.nodes]
    taken = {n.name for n in t.nodes}
    for leaf in t.leaves():
        node = t.nodes[leaf]
        prev = node.name
        for i in range(1, t.depth - node.depth + 1):
            dummy = f"{node.name}{DUMMY_SEP}{i}"
            if dummy in taken:
                raise TaxonomyError(f"dummy name collides with existing node: {dummy!r}")
            taken.add(dummy)
            entries.append((dummy, prev, True))
            prev = dummy
    return _assemble(entries)


def enumerate_paths(t: Taxonomy) -> PathTable:
    """Enumerate all root-to-leaf paths of a depth-normalized taxonomy."""
    if not t.is_normalized:
        raise TaxonomyError("taxonomy has leaves at mixed depths; call normalize_depth first")
    chains = [t.chain_from_root(leaf) for leaf in t.leaves()]
    chains.sort(key=lambda chain: tuple(t.nodes[i].name for i in chain))
    return PathTable(
        paths=tuple(chains),
        names=tuple(tuple(t.nodes[i].name for i in chain) for chain in chains),
        dummies=tuple(tuple(t.nodes[i].is_dummy for i in chain) for chain in chains),
        leaf_to_path={chain[-1]: j for j, chain in enumerate(chains)},
    )


def is_consistent_prediction(node_ids: tuple[int, ...], t: Taxonomy) -> bool:
    """Whether root + the predicted nodes form a root-to-leaf chain of real classes."""
    if not node_ids:
        return False
    by_depth = sorted(node_ids, key=lambda i: t.nodes[i].depth)
    prev = t.root
    for nid in by_depth:
        node = t.nodes[nid]
        if node.is_dummy or node.parent != prev:
            return False
        prev = nid
    return t.is_original_leaf(prev)


def read_hierarchy_file(path: str) -> list[tuple[str, str]]:
    """Read ``parent<TAB>child`` edges; blank lines and '#' comments are skipped."""
    edges = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise TaxonomyError(f"{path}:{lineno}: expected 'parent<TAB>child', got {line!r}")
            edges.append((parts[0].strip(), parts[1].strip()))
    if not edges:
        raise TaxonomyError(f"{path}: no edges found")
    return edges


def load_hierarchy(path: str, *, normalize: bool = True) -> Taxonomy:
    """Load, build, and (by default) depth-normalize a hierarchy file.

    Files listing several top-level classes get a synthetic ``ROOT`` inserted.
    """
    t = build_taxonomy(read_hierarchy_file(path), add_root_if_forest=True)
    return normalize_depth(t) if normalize else t
