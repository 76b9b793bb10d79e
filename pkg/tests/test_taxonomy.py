import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathclass.taxonomy import (DUMMY_SEP, TaxonomyError, build_taxonomy, enumerate_paths,
                                is_consistent_prediction, load_hierarchy, normalize_depth,
                                read_hierarchy_file)

DATA_20NG = "data/20ng_hierarchy.txt"


def test_build_basic_tree():
    t = build_taxonomy([("root", "a"), ("root", "b"), ("a", "a1"), ("a", "a2"), ("b", "b1")])
    assert t.depth == 2
    assert {t.nodes[i].name for i in t.leaves()} == {"a1", "a2", "b1"}
    assert t.nodes[t.root].name == "root"
    assert t.node("a1").parent == t.id_of("a")
    assert t.level_sizes == (2, 3)


def test_build_rejects_cycle():
    with pytest.raises(TaxonomyError, match="cycle"):
        build_taxonomy([("root", "a"), ("a", "root")])


def test_build_rejects_disconnected_cycle_component():
    with pytest.raises(TaxonomyError, match="cycle"):
        build_taxonomy([("root", "a"), ("c", "d"), ("d", "c")])


def test_build_rejects_duplicate_parenthood():
    with pytest.raises(TaxonomyError, match="two parents"):
        build_taxonomy([("root", "a"), ("root", "b"), ("a", "x"), ("b", "x")])


def test_build_rejects_multiple_roots_by_default():
    with pytest.raises(TaxonomyError, match="multiple roots"):
        build_taxonomy([("a", "a1"), ("b", "b1")])


def test_forest_gets_synthetic_root():
    t = build_taxonomy([("a", "a1"), ("b", "b1")], add_root_if_forest=True)
    assert t.nodes[t.root].name == "ROOT"
    assert t.depth == 2
    assert len(t.leaves()) == 2


def test_duplicate_identical_edges_are_deduped():
    t = build_taxonomy([("root", "a"), ("root", "a"), ("a", "a1")])
    assert t.num_nodes == 3


def test_twenty_newsgroups_hierarchy_counts():
    t = load_hierarchy(DATA_20NG)
    assert t.num_nodes == 27
    assert t.depth == 2
    assert len(t.leaves()) == 20
    assert enumerate_paths(t).num_paths == 20


def test_reuters_style_tree_has_35_paths():
    # 56 nodes at depth 3: root + 4 + 16 internals + 35 leaves.
    edges = [("ROOT", f"t{i}") for i in range(4)]
    edges += [(f"t{i}", f"t{i}.{j}") for i in range(4) for j in range(4)]
    leaves_per_l2 = [3, 3, 3] + [2] * 13   # 35 leaves over 16 mid-level nodes
    edges += [(f"t{i}.{j}", f"t{i}.{j}.{k}")
              for i in range(4) for j in range(4)
              for k in range(leaves_per_l2[i * 4 + j])]
    t = normalize_depth(build_taxonomy(edges))
    assert t.num_nodes == 1 + 4 + 16 + 35 == 56
    assert t.depth == 3
    assert enumerate_paths(t).num_paths == 35


def test_normalize_adds_flagged_dummy(ragged_tree):
    t = normalize_depth(ragged_tree)
    assert t.is_normalized
    dummy = t.node(f"b{DUMMY_SEP}1")
    assert dummy.is_dummy and dummy.depth == 2
    assert dummy.parent == t.id_of("b")
    # original nodes unchanged
    for node in ragged_tree.nodes:
        kept = t.nodes[node.id]
        assert (kept.name, kept.depth, kept.parent, kept.is_dummy) == \
            (node.name, node.depth, node.parent, node.is_dummy)


def test_normalize_uniform_tree_is_identity(two_branch):
    t, _ = two_branch
    assert normalize_depth(t) == t
    assert sum(n.is_dummy for n in t.nodes) == 0


def test_normalize_chains_two_dummies():
    t = build_taxonomy([("r", "a"), ("a", "a1"), ("a1", "a1x"), ("r", "b")])
    t = normalize_depth(t)
    assert t.depth == 3
    assert t.node(f"b{DUMMY_SEP}1").depth == 2
    assert t.node(f"b{DUMMY_SEP}2").depth == 3
    assert t.node(f"b{DUMMY_SEP}2").parent == t.id_of(f"b{DUMMY_SEP}1")


def test_normalize_is_idempotent(ragged_tree):
    once = normalize_depth(ragged_tree)
    assert normalize_depth(once) == once


def test_enumerate_requires_normalized(ragged_tree):
    with pytest.raises(TaxonomyError, match="mixed depths"):
        enumerate_paths(ragged_tree)


def test_enumerate_two_branch(two_branch):
    t, paths = two_branch
    assert paths.num_paths == 6
    assert paths.names[0] == ("c1_1", "c2_1")
    assert paths.names == tuple(sorted(paths.names))


def test_enumerate_single_chain():
    t = normalize_depth(build_taxonomy([("root", "a"), ("a", "b")]))
    paths = enumerate_paths(t)
    assert paths.num_paths == 1
    assert paths.names == (("a", "b"),)


def test_path_table_invariants(two_branch):
    t, paths = two_branch
    # one path per leaf, every leaf used exactly once
    assert sorted(paths.leaf_to_path) == sorted(t.leaves())
    assert len(set(paths.paths)) == paths.num_paths == len(t.leaves())
    # node at position k has depth k, consecutive nodes are parent-linked
    for chain in paths.paths:
        for k, nid in enumerate(chain, start=1):
            assert t.nodes[nid].depth == k
        for above, below in zip(chain, chain[1:]):
            assert t.nodes[below].parent == above
    # every non-root node appears in at least one path
    on_paths = {nid for chain in paths.paths for nid in chain}
    assert on_paths == {n.id for n in t.nodes if n.id != t.root}


def test_dummy_removal_recovers_original_leaves(ragged_tree):
    t = normalize_depth(ragged_tree)
    paths = enumerate_paths(t)
    recovered = set()
    for j in range(paths.num_paths):
        recovered.add(max(paths.non_dummy_nodes(j), key=lambda i: t.nodes[i].depth))
    assert {t.nodes[i].name for i in recovered} == \
        {ragged_tree.nodes[i].name for i in ragged_tree.leaves()}


@st.composite
def random_edge_lists(draw):
    """Small random trees as edge lists, depth up to 3."""
    n_top = draw(st.integers(1, 3))
    edges = []
    names = [f"n{i}" for i in range(12)]
    pool = iter(names)
    tops = [next(pool) for _ in range(n_top)]
    edges += [("top", name) for name in tops]
    for parent in tops:
        for _ in range(draw(st.integers(0, 2))):
            child = next(pool)
            edges.append((parent, child))
            if draw(st.booleans()):
                edges.append((child, f"{child}x"))
    return edges


@settings(max_examples=30, deadline=None)
@given(random_edge_lists())
def test_normalize_idempotent_property(edges):
    t = normalize_depth(build_taxonomy(edges))
    assert t.is_normalized
    assert normalize_depth(t) == t
    paths = enumerate_paths(t)
    assert paths.num_paths == len(t.leaves())


def test_consistent_prediction_check(two_branch, ragged_tree):
    t, paths = two_branch
    assert is_consistent_prediction(paths.non_dummy_nodes(0), t)
    # nodes from two different branches do not chain
    bad = (t.id_of("c1_1"), t.id_of("c2_4"))
    assert not is_consistent_prediction(bad, t)
    assert not is_consistent_prediction((), t)
    # internal node alone is not a full chain to an original leaf
    assert not is_consistent_prediction((t.id_of("c1_1"),), t)
    # with dummies the chain ends at the original (shallow) leaf
    rt = normalize_depth(ragged_tree)
    assert is_consistent_prediction((rt.id_of("b"),), rt)


def test_hierarchy_file_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("a b no tab here\n")
    with pytest.raises(TaxonomyError, match="bad.txt:1"):
        read_hierarchy_file(str(bad))
    empty = tmp_path / "empty.txt"
    empty.write_text("# only a comment\n")
    with pytest.raises(TaxonomyError, match="no edges"):
        read_hierarchy_file(str(empty))


def test_root_name_reserved(tmp_path):
    f = tmp_path / "h.txt"
    f.write_text("a\ta1\nb\tROOT\n")
    with pytest.raises(TaxonomyError, match="reserved"):
        load_hierarchy(str(f))
