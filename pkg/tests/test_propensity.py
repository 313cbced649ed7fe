import numpy as np
import pytest
from scipy import stats

from fairgap import (DimensionError, ForestConfig, LogisticConfig, RngStream,
                     ValidationError, fit_forest, fit_logistic, generate_synthetic,
                     inject, oracle_fit, predict, stable_sigmoid)

from conftest import classify_spec, constant_logit_recipe, mar_recipe


def _labels_from_logit(gen, X, A, intercept, coef_a):
    z = intercept + coef_a * A
    return (gen.random(len(A)) < stable_sigmoid(z)).astype(float)


def test_recovers_group_logit_at_large_n():
    gen = np.random.default_rng(0)
    n = 100_000
    A = (gen.random(n) < 0.5).astype(int)
    X = gen.normal(size=(n, 2))
    labels = _labels_from_logit(gen, X, A, 0.25, -0.5)
    fit = fit_logistic(X, labels, sensitive=A)
    assert fit.converged and not fit.fallback_used
    assert abs(fit.coef[0] - 0.25) < 0.05      # intercept
    assert abs(fit.coef[-1] - (-0.5)) < 0.05   # sensitive-attribute coefficient
    assert abs(fit.coef[1]) < 0.05 and abs(fit.coef[2]) < 0.05


def test_degenerate_labels_with_ridge():
    gen = np.random.default_rng(1)
    X = gen.normal(size=(200, 3))
    fit = fit_logistic(X, np.ones(200), cfg=LogisticConfig(ridge=1e-4))
    assert np.isfinite(fit.coef).all()
    p = predict(fit, X)
    assert (p > 0).all() and (p < 1).all()


def test_degenerate_labels_without_ridge_rejected():
    with pytest.raises(ValidationError):
        fit_logistic(np.zeros((10, 1)), np.ones(10), cfg=LogisticConfig(ridge=0.0))


def _heldout_logloss(fit, X, A, labels):
    p = predict(fit, X, sensitive=A)
    return float(-(labels * np.log(p) + (1 - labels) * np.log1p(-p)).mean())


def test_identity_beats_cubed_when_truth_is_linear():
    # paired simulation, sign test on held-out log-loss
    wins = 0
    reps = 100
    for r in range(reps):
        gen = np.random.default_rng(1000 + r)
        n = 10_000
        X = gen.normal(1.0, 1.0, size=(n, 3))
        z = -1.0 + X @ np.array([0.8, -0.5, 0.3])
        labels = (gen.random(n) < stable_sigmoid(z)).astype(float)
        half = n // 2
        fit_id = fit_logistic(X[:half], labels[:half], "identity")
        fit_cu = fit_logistic(X[:half], labels[:half], "cubed")
        if (_heldout_logloss(fit_id, X[half:], None, labels[half:])
                < _heldout_logloss(fit_cu, X[half:], None, labels[half:])):
            wins += 1
    assert stats.binomtest(wins, reps, 0.5, alternative="greater").pvalue < 0.05


def test_forest_stump_predicts_global_mean():
    gen = np.random.default_rng(2)
    X = gen.normal(size=(300, 4))
    labels = (gen.random(300) < 0.3).astype(float)
    fit = fit_forest(X, labels, ForestConfig(n_trees=1, max_depth=0, bootstrap=False, seed=5))
    p = predict(fit, X)
    assert np.allclose(p, labels.mean())


def test_forest_pure_labels_hit_clip_not_01():
    gen = np.random.default_rng(3)
    X = gen.normal(size=(60, 3))
    fit = fit_forest(X, np.ones(60), ForestConfig(n_trees=5, seed=1))
    p = predict(fit, X)
    assert np.all(p == fit.clip[1]) and np.all(p < 1.0)


def test_forest_separable_threshold():
    gen = np.random.default_rng(4)
    X = gen.normal(size=(1000, 5))
    labels = (X[:, 2] > 0.0).astype(float)
    fit = fit_forest(X, labels, ForestConfig(n_trees=20, max_depth=4, seed=9))
    acc = ((predict(fit, X) >= 0.5).astype(float) == labels).mean()
    assert acc >= 0.95


def test_predict_oracle_and_zero_model():
    ds = generate_synthetic(classify_spec((50, 50)), RngStream(1))
    _, oracle = inject(ds, constant_logit_recipe(0.8), RngStream(2))
    ofit = oracle_fit(oracle)
    p = predict(ofit, ds.features, sensitive=ds.sensitive, response=ds.response)
    assert np.allclose(p, stable_sigmoid(np.array([0.8]))[0])

    zero = fit_logistic(np.zeros((4, 2)), np.array([0.0, 1.0, 0.0, 1.0]),
                        cfg=LogisticConfig(max_iterations=1, ridge=1.0))
    zero = zero.__class__(**{**zero.__dict__, "coef": np.zeros(3)})
    assert np.allclose(predict(zero, np.ones((3, 2))), 0.5)


def test_mar_recipe_fit_accuracy():
    # pi_hat within 0.03 MAE of the true pi on held-out rows at n = 10^4
    ds = generate_synthetic(classify_spec((5000, 5000)), RngStream(3))
    injected, oracle = inject(ds, mar_recipe(), RngStream(4))
    labels = injected.complete_indicator().astype(float)
    obs = ds.features[:, :5]
    fit = fit_logistic(obs, labels, sensitive=ds.sensitive)
    fresh = generate_synthetic(classify_spec((5000, 5000)), RngStream(5))
    pi_hat = predict(fit, fresh.features[:, :5], sensitive=fresh.sensitive)
    pi = oracle.evaluate(fresh.features, fresh.sensitive, fresh.response)
    assert np.mean(np.abs(pi_hat - pi)) <= 0.03


def test_clipping_bounds_hold():
    gen = np.random.default_rng(6)
    X = gen.normal(size=(500, 4)) * 10
    labels = (X[:, 0] > 0).astype(float)
    for fit in (fit_logistic(X, labels), fit_forest(X, labels, ForestConfig(n_trees=10, seed=2))):
        p = predict(fit, X)
        lo, hi = fit.clip
        assert (p >= lo).all() and (p <= hi).all()
        assert 0 < lo < hi < 1


def test_determinism():
    gen = np.random.default_rng(7)
    X = gen.normal(size=(400, 3))
    labels = (gen.random(400) < stable_sigmoid(X[:, 0])).astype(float)
    f1 = fit_logistic(X, labels)
    f2 = fit_logistic(X, labels)
    assert np.array_equal(f1.coef, f2.coef)
    t1 = fit_forest(X, labels, ForestConfig(n_trees=8, seed=42))
    t2 = fit_forest(X, labels, ForestConfig(n_trees=8, seed=42))
    assert predict(t1, X).tobytes() == predict(t2, X).tobytes()


def test_coefficient_error_shrinks_with_n():
    # correctly specified model: median coefficient error decreases as n grows
    truth = np.array([-0.5, 0.7, -0.3])
    med = []
    for ni, n in enumerate((1000, 4000, 16000)):
        errs = []
        for r in range(50):
            gen = np.random.default_rng(900 + 97 * ni + r)
            X = gen.normal(size=(n, 2))
            z = truth[0] + X @ truth[1:]
            labels = (gen.random(n) < stable_sigmoid(z)).astype(float)
            fit = fit_logistic(X, labels)
            errs.append(np.max(np.abs(fit.coef - truth)))
        med.append(np.median(errs))
    assert med[0] > med[1] > med[2]


def test_dimension_mismatch():
    gen = np.random.default_rng(8)
    X = gen.normal(size=(100, 3))
    labels = (gen.random(100) < 0.5).astype(float)
    fit = fit_logistic(X, labels)
    with pytest.raises(DimensionError):
        predict(fit, np.ones((5, 4)))


def test_fit_serialization_roundtrip_text():
    gen = np.random.default_rng(9)
    X = gen.normal(size=(100, 2))
    labels = (gen.random(100) < 0.5).astype(float)
    doc = fit_logistic(X, labels).to_text()
    assert doc["format"] == 1 and doc["kind"] == "logistic" and len(doc["coef"]) == 3
    doc2 = fit_forest(X, labels, ForestConfig(n_trees=2, seed=0)).to_text()
    assert doc2["kind"] == "random_forest" and len(doc2["trees"]) == 2
