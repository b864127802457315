import numpy as np
import pytest
from scipy import sparse

from textguard import svm
from textguard.corpus import TASK_A, TASK_B


def two_points():
    return np.array([[1.0, 0.0], [-1.0, 0.0]]), ["HOF", "NOT"]


def test_separable_two_points():
    X, y = two_points()
    model = svm.train_svm(X, y, TASK_A, lam=0.01, epochs=100, seed=0)
    assert svm.predict_many(model, X) == y
    zero = svm.LinearModel(TASK_A, np.zeros((2, 2)), np.zeros(2))
    assert svm.hinge_objective(model, X, y, 0.01) <= svm.hinge_objective(zero, X, y, 0.01)


def test_zero_epochs_predicts_first_class():
    X, y = two_points()
    model = svm.train_svm(X, y, TASK_A, epochs=0)
    assert not model.weights.any() and not model.bias.any()
    assert svm.predict_many(model, X) == ["NOT", "NOT"]


def test_deterministic():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 6))
    y = np.where(X[:, 0] > 0, "HOF", "NOT")
    a = svm.train_svm(X, y, TASK_A, lam=1e-3, epochs=5, seed=9)
    b = svm.train_svm(X, y, TASK_A, lam=1e-3, epochs=5, seed=9)
    assert np.array_equal(a.weights, b.weights) and np.array_equal(a.bias, b.bias)


def test_sparse_and_dense_agree():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(40, 8)) * (rng.random((40, 8)) < 0.4)
    y = rng.integers(0, 4, size=40)
    y[:4] = [0, 1, 2, 3]
    dense = svm.train_svm(X, y, TASK_B, lam=1e-2, epochs=3, seed=2)
    sp = svm.train_svm(sparse.csr_matrix(X), y, TASK_B, lam=1e-2, epochs=3, seed=2)
    assert np.allclose(dense.weights, sp.weights, atol=1e-12)
    assert np.allclose(dense.bias, sp.bias, atol=1e-12)


def test_tie_rules():
    model = svm.LinearModel(TASK_A, np.zeros((2, 1)), np.array([0.9, -0.3]))
    assert svm.predict(model, [0.0]) == "NOT"
    model = svm.LinearModel(TASK_A, np.zeros((2, 3)), np.zeros(2))
    assert svm.predict(model, [1.0, 2.0, 3.0]) == "NOT"
    model = svm.LinearModel(TASK_B, np.zeros((4, 1)), np.array([0.1, 0.5, 0.5, -1.0]))
    assert svm.predict(model, [0.0]) == "HATE"


def test_errors():
    X, y = two_points()
    with pytest.raises(svm.SVMError, match="no training examples"):
        svm.train_svm(X, ["NOT", "NOT"], TASK_A)
    with pytest.raises(svm.SVMError):
        svm.train_svm(X, y, TASK_A, lam=0)
    model = svm.train_svm(X, y, TASK_A, epochs=1)
    with pytest.raises(svm.SVMError, match="dimension"):
        svm.predict(model, [1.0, 2.0, 3.0])


def test_hinge_objective_values():
    X, y = two_points()
    zero = svm.LinearModel(TASK_A, np.zeros((2, 2)), np.zeros(2))
    assert svm.hinge_objective(zero, X, y, 0.5) == 1.0
    assert svm.hinge_objective(zero, X, y, 0.0) == 1.0
    perfect = svm.LinearModel(TASK_A, np.array([[-2.0, 0.0], [2.0, 0.0]]), np.zeros(2))
    assert svm.hinge_objective(perfect, X, y, 0.1) == pytest.approx(0.05 * 8)


def test_objective_close_to_exact_optimum():
    # 1-D, one class per side: the regularized optimum is known in closed form
    X = np.array([[1.0], [-1.0]] * 10)
    y = ["HOF", "NOT"] * 10
    lam = 0.1
    model = svm.train_svm(X, y, TASK_A, lam=lam, epochs=200, seed=0)
    # per class w = 1 minimizes lam/2 w^2 + hinge; objective = lam (two classes)
    assert svm.hinge_objective(model, X, y, lam) == pytest.approx(lam, abs=0.02)


def test_standardized_training_scores_raw_features():
    rng = np.random.default_rng(3)
    X = rng.normal(loc=5.0, scale=[0.01, 10.0, 1.0], size=(60, 3))
    y = np.where(X[:, 0] > 5.0, "HOF", "NOT")
    X[:, 2] = 7.0  # constant column
    model = svm.train_standardized(X, y, TASK_A, lam=1e-3, epochs=30, seed=0)
    mu, sd = X.mean(0), X.std(0)
    sd[sd < 1e-12] = 1.0
    inner = svm.train_svm((X - mu) / sd, y, TASK_A, lam=1e-3, epochs=30, seed=0)
    assert np.allclose(model.scores(X), inner.scores((X - mu) / sd))
    assert (np.array(svm.predict_many(model, X)) == y).mean() > 0.9


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    model = svm.LinearModel(TASK_B, rng.normal(size=(4, 5)), rng.normal(size=4))
    svm.save_svm(model, tmp_path / "svm.tsv")
    again = svm.load_svm(tmp_path / "svm.tsv")
    assert again.schema == TASK_B
    assert np.array_equal(again.weights, model.weights) and np.array_equal(again.bias, model.bias)
