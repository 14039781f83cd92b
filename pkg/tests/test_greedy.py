import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mhdeoct.data import build_threshold_sets
from mhdeoct.greedy import (
    BudgetExceeded,
    best_split_gini,
    best_split_misclass,
    cart_train,
    exact_depth2,
    naive_fitness_oracle,
)
from mhdeoct.tree import TreeParams, objective

from conftest import make_dataset, random_dataset, random_tree


def brute_force_split(ds, th, alpha=0.0, n_min=1):
    """Quadratic scan: try every (feature, threshold) and score the stump directly."""
    base = naive_fitness_oracle(TreeParams(1, [0], [0]), ds, alpha, n_min)
    best = (base, 0, 0.0)
    for p in range(1, ds.P + 1):
        for b in th[p]:
            f = naive_fitness_oracle(TreeParams(1, [p], [b]), ds, alpha, n_min)
            if f < best[0]:
                best = (f, p, float(b))
    return best


def brute_force_depth2(ds, th, alpha=0.0, n_min=1):
    options = [(0, 0.0)] + [(p, float(b)) for p in range(1, ds.P + 1) for b in th[p]]
    return min(
        naive_fitness_oracle(TreeParams(2, [r[0], l[0], q[0]], [r[1], l[1], q[1]]), ds, alpha, n_min)
        for r, l, q in itertools.product(options, repeat=3)
    )


def test_toy_split(toy, toy_th):
    cand = best_split_misclass(toy, toy_th)
    assert (cand.feature, cand.threshold, cand.loss) == (1, 0.4, 0)


def test_pure_and_constant_give_no_split():
    pure = make_dataset([[0.1], [0.5], [0.9]], [2, 2, 2])
    assert best_split_misclass(pure, build_threshold_sets(pure)) is None
    const = make_dataset([[0.0, 0.0]] * 4, [1, 2, 1, 2])
    assert best_split_misclass(const, build_threshold_sets(const)) is None


def test_xor_depth1_and_depth2(xor):
    th = build_threshold_sets(xor)
    # no single axis-aligned split helps on balanced XOR: 2 of 4 stay wrong
    assert best_split_misclass(xor, th) is None
    assert brute_force_split(xor, th)[0] == 2
    assert objective(cart_train(xor, 1, impurity="misclassification"), xor).misclassified == 2
    # an exact depth-2 search does separate it
    assert objective(exact_depth2(xor, th), xor).misclassified == 0


def test_xor_greedy_depth2_stalls(xor):
    # no root split reduces impurity, so greedy growth stops at the root
    for impurity in ("gini", "misclassification"):
        tree = cart_train(xor, 2, impurity=impurity)
        assert tree.active_splits == 0
        assert objective(tree, xor).misclassified == 2


def test_exact_solves_xor_with_unbalanced_root():
    xor = make_dataset([[0, 0], [0, 1], [1, 0], [1, 1], [1, 1]], [1, 2, 2, 1, 1])
    th = build_threshold_sets(xor)
    assert objective(exact_depth2(xor, th), xor).misclassified == 0
    assert objective(cart_train(xor, 2), xor).misclassified == 0


@given(st.integers(0, 10_000), st.floats(0, 3), st.integers(1, 4))
def test_best_split_matches_brute_force(seed, alpha, n_min):
    rng = np.random.default_rng(seed)
    ds = random_dataset(rng, n=int(rng.integers(2, 25)), P=3, K=3, levels=5)
    th = build_threshold_sets(ds)
    f, p, b = brute_force_split(ds, th, alpha, n_min)
    cand = best_split_misclass(ds, th, alpha, n_min)
    if p == 0:
        assert cand is None
    else:
        assert (cand.feature, cand.threshold) == (p, b)
        assert cand.cost == pytest.approx(f)
        assert cand.loss == objective(cand.as_tree(), ds).misclassified


@given(st.integers(0, 10_000), st.sampled_from([0.0, 0.5, 2.0]), st.sampled_from([1, 3]))
def test_exact_depth2_matches_enumeration(seed, alpha, n_min):
    rng = np.random.default_rng(seed)
    ds = random_dataset(rng, n=int(rng.integers(2, 14)), P=2, K=3, levels=3)
    th = build_threshold_sets(ds)
    tree = exact_depth2(ds, th, alpha, n_min)
    got = naive_fitness_oracle(tree, ds, alpha, n_min)
    assert got == pytest.approx(brute_force_depth2(ds, th, alpha, n_min))


def test_exact_depth2_beats_random_trees():
    rng = np.random.default_rng(5)
    ds = random_dataset(rng, n=80, P=3, K=3, levels=8)
    th = build_threshold_sets(ds)
    best = objective(exact_depth2(ds, th), ds).fitness
    rand = [objective(random_tree(rng, th, 2), ds).fitness for _ in range(10_000)]
    assert best <= min(rand)


@given(st.integers(0, 10_000), st.sampled_from([0.0, 1.0]), st.sampled_from([1, 2, 5]))
def test_fitness_ordering_exact_then_cart(seed, alpha, n_min):
    rng = np.random.default_rng(seed)
    ds = random_dataset(rng, n=40, P=3, K=2, levels=6)
    th = build_threshold_sets(ds)
    f_exact = objective(exact_depth2(ds, th, alpha, n_min), ds, alpha, n_min).fitness
    c2 = cart_train(ds, 2, n_min, "misclassification", th, alpha)
    c1 = cart_train(ds, 1, n_min, "misclassification", th, alpha)
    f2 = objective(c2, ds, alpha, n_min).fitness
    f1 = objective(c1, ds, alpha, n_min).fitness
    assert f_exact <= f2 + 1e-9
    assert f2 <= f1 + 1e-9


@given(st.integers(0, 10_000), st.sampled_from(["gini", "misclassification"]))
def test_cart_error_non_increasing_in_depth(seed, impurity):
    rng = np.random.default_rng(seed)
    ds = random_dataset(rng, n=50, P=3, K=3)
    th = build_threshold_sets(ds)
    errs = [objective(cart_train(ds, d, impurity=impurity, th=th), ds).misclassified for d in (1, 2, 3, 4)]
    assert errs == sorted(errs, reverse=True)


def test_cart_separable_and_padding():
    ds = make_dataset(np.linspace(0, 1, 10)[:, None], [1] * 4 + [2] * 6)
    tree = cart_train(ds, 1)
    assert objective(tree, ds).misclassified == 0
    deep = cart_train(ds, 3)
    assert deep.active_splits == 1  # children are pure, padded with artificial nodes
    assert deep.a.shape == (7,)


def test_cart_respects_n_min():
    ds = make_dataset([[0.0], [0.5], [1.0]], [1, 2, 1])
    assert cart_train(ds, 2, n_min=3).active_splits == 0


def test_cart_thresholds_come_from_sets():
    rng = np.random.default_rng(2)
    ds = random_dataset(rng, n=60, P=3)
    th = build_threshold_sets(ds)
    tree = cart_train(ds, 4, th=th)
    for p, b in zip(tree.a, tree.b):
        if p:
            assert b in th[p]


def test_gini_split_on_clear_signal():
    ds = make_dataset([[0.1, 0.3], [0.2, 0.9], [0.8, 0.1], [0.9, 0.7]], [1, 1, 2, 2])
    cand = best_split_gini(ds, build_threshold_sets(ds))
    assert cand.feature == 1 and cand.loss == 0


def test_budget_guard():
    rng = np.random.default_rng(0)
    ds = random_dataset(rng, n=3000, P=2)
    with pytest.raises(BudgetExceeded, match="5000"):
        exact_depth2(ds, build_threshold_sets(ds))


def test_naive_oracle_examples(toy):
    assert naive_fitness_oracle(TreeParams(1, [1], [0.4]), toy) == 0
    assert naive_fitness_oracle(TreeParams(1, [0], [0]), toy) == 2
