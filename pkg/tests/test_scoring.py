import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathclass.corpus import Document, GoldLabels, WeakSimilarities, expand_gold
from pathclass.scoring import (hard_scores_for, node_scores_from_gold, path_scores,
                               scores_from_weak, soft_scores_from_posterior)
from pathclass.taxonomy import build_taxonomy, enumerate_paths, normalize_depth


def test_partial_credit_vector(two_branch):
    """Labels at depth 1 and 2 grade sibling paths: (1, 2, 1, 0, 0, 0)."""
    t, paths = two_branch
    labels = GoldLabels.from_nodes([t.id_of("c1_1"), t.id_of("c2_2")], t)
    scores = path_scores(node_scores_from_gold(labels, t), paths)
    np.testing.assert_array_equal(scores.values, [1, 2, 1, 0, 0, 0])
    assert not scores.soft


def test_node_scores_indicator_only(two_branch):
    t, _ = two_branch
    ns = node_scores_from_gold({2: t.id_of("c2_2")}, t)
    assert ns[t.id_of("c2_2")] == 1
    assert ns[t.id_of("c1_1")] == 0   # ancestors stay 0 unless explicitly listed
    assert ns.sum() == 1


def test_node_scores_empty_and_errors(two_branch):
    t, _ = two_branch
    assert node_scores_from_gold({}, t).sum() == 0
    with pytest.raises(ValueError, match="depth 7"):
        node_scores_from_gold({7: t.id_of("c2_2")}, t)
    with pytest.raises(ValueError, match="keyed as"):
        node_scores_from_gold({1: t.id_of("c2_2")}, t)


def test_zero_node_scores_give_zero_paths(two_branch):
    t, paths = two_branch
    values = path_scores(np.zeros(t.num_nodes), paths).values
    np.testing.assert_array_equal(values, np.zeros(6))


def test_depth3_full_path_grading(cube_tree):
    t, paths = cube_tree
    gold = expand_gold([t.id_of("a0x1")], t, implied_ancestors=True)
    values = path_scores(node_scores_from_gold(gold, t), paths).values
    true_j = paths.leaf_to_path[t.id_of("a0x1")]
    assert values[true_j] == 3
    for j in range(paths.num_paths):
        shared = len(set(paths.paths[j]) & set(gold.by_depth.values()))
        assert values[j] == shared
        if j != true_j:
            assert values[j] <= 2
    # sibling leaf (same depth-2 parent) scores exactly 2
    sibling = paths.leaf_to_path[t.id_of("a0x0")]
    assert values[sibling] == 2


def test_weak_equals_gold_on_argmax_nodes(two_branch):
    t, paths = two_branch
    sims = WeakSimilarities({1: np.array([0.9, 0.1]),
                             2: np.array([0.2, 0.7, 0.1, 0.0, 0.0, 0.0])})
    weak = scores_from_weak(sims, t, paths)
    gold = path_scores(node_scores_from_gold(
        GoldLabels.from_nodes([t.id_of("c1_1"), t.id_of("c2_2")], t), t), paths)
    np.testing.assert_array_equal(weak.values, gold.values)
    np.testing.assert_array_equal(weak.values, [1, 2, 1, 0, 0, 0])


def test_weak_inconsistent_argmaxes_split_credit(two_branch):
    """Depth-1 argmax in one branch, depth-2 argmax in the other: two disjoint
    path groups each score 1 and nothing reaches 2."""
    t, paths = two_branch
    sims = WeakSimilarities({1: np.array([0.9, 0.1]),
                             2: np.array([0.0, 0.0, 0.0, 0.8, 0.1, 0.1])})
    values = scores_from_weak(sims, t, paths).values
    assert values.max() == 1
    np.testing.assert_array_equal(values, [1, 1, 1, 1, 0, 0])


def test_weak_flat_hierarchy_one_hot():
    t = normalize_depth(build_taxonomy([("r", "x"), ("r", "y"), ("r", "z")]))
    paths = enumerate_paths(t)
    sims = WeakSimilarities({1: np.array([0.1, 0.5, 0.2])})
    values = scores_from_weak(sims, t, paths).values
    np.testing.assert_array_equal(values, [0, 1, 0])


def test_soft_scores_validation():
    soft = soft_scores_from_posterior(np.full(6, 1 / 6))
    assert soft.soft and soft.values.sum() == pytest.approx(1)
    one_hot = soft_scores_from_posterior(np.array([0, 0, 1.0]))
    np.testing.assert_array_equal(one_hot.values, [0, 0, 1])
    vec = soft_scores_from_posterior(np.array([0.5, 0.3, 0.2]))
    assert vec.soft and vec.values.max() < 2   # any soft entry stays below any depth
    with pytest.raises(ValueError, match="sums to"):
        soft_scores_from_posterior(np.array([0.5, 0.6]))
    with pytest.raises(ValueError, match="negative"):
        soft_scores_from_posterior(np.array([-0.1, 1.1]))


def test_hard_scores_bounded_by_depth(cube_tree):
    t, paths = cube_tree
    gold = expand_gold([t.id_of("b1x0")], t, implied_ancestors=True)
    doc = Document("d", {}, gold=gold)
    values = hard_scores_for(doc, t, paths).values
    assert values.max() == t.depth == 3
    assert ((values >= 0) & (values <= t.depth)).all()
    assert values.dtype == np.float64 and (values == values.astype(int)).all()


def test_hard_scores_require_labels(two_branch):
    t, paths = two_branch
    with pytest.raises(ValueError, match="no labels"):
        hard_scores_for(Document("d", {}), t, paths)


def test_dummy_inheritance_keeps_full_depth(ragged_tree):
    t = normalize_depth(ragged_tree)
    paths = enumerate_paths(t)
    gold = expand_gold([t.id_of("b")], t, implied_ancestors=True)
    values = path_scores(node_scores_from_gold(gold, t), paths).values
    j = paths.leaf_to_path[t.id_of("b~1")]
    assert values[j] == t.depth == 2


@st.composite
def consistent_sims(draw):
    """Similarities on the two-branch tree whose argmaxes form a real path."""
    branch = draw(st.integers(0, 1))
    leaf = draw(st.integers(0, 2))
    d1 = np.zeros(2)
    d1[branch] = 1.0
    d2 = np.zeros(6)
    d2[branch * 3 + leaf] = 1.0
    return WeakSimilarities({1: d1, 2: d2})


@settings(max_examples=20, deadline=None)
@given(consistent_sims())
def test_weak_gold_functional_equality(sims):
    from tests.conftest import two_branch_tree
    from pathclass.corpus import weak_label_nodes

    t = two_branch_tree()
    paths = enumerate_paths(t)
    chosen = weak_label_nodes(sims, t)
    weak = scores_from_weak(sims, t, paths)
    gold = path_scores(node_scores_from_gold(
        GoldLabels.from_nodes(list(chosen.values()), t), t), paths)
    np.testing.assert_array_equal(weak.values, gold.values)


def test_dump_scores_csv(two_branch, tmp_path):
    from pathclass.scoring import dump_scores_csv, hard_score_matrix

    t, paths = two_branch
    labels = GoldLabels.from_nodes([t.id_of("c1_1"), t.id_of("c2_2")], t)
    docs = [Document("d1", {}, gold=labels), Document("d2", {}, gold=labels)]
    out = tmp_path / "scores.csv"
    dump_scores_csv(docs, hard_score_matrix(docs, t, paths), str(out))
    lines = out.read_text().splitlines()
    assert lines[0] == "doc_id,path_index,score"
    assert "d1,1,2.0" in lines and "d1,0,1.0" in lines
    assert len(lines) == 1 + 2 * 3   # zero entries omitted
