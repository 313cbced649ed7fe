import numpy as np
import pytest

from fairgap import (EmptyGroupError, LogitTerm, MissingnessSpec, RngStream,
                     ValidationError, complete_cases, generate_synthetic, inject,
                     stable_sigmoid)
from fairgap.dataset import dataset_all_observed

from conftest import classify_spec, constant_logit_recipe, group_logit_recipe, mar_recipe


def test_constant_logit_complete_case_fraction():
    # the COMPAS MCAR recipe: logit 0.8 -> pi = sigmoid(0.8) ~ 0.6900
    spec = constant_logit_recipe(0.8)
    ds = generate_synthetic(classify_spec((5000, 5000)), RngStream(1))
    injected, oracle = inject(ds, spec, RngStream(2))
    pi = float(stable_sigmoid(np.array([0.8]))[0])
    assert abs(pi - 0.6900) < 5e-4
    frac = injected.complete_indicator().mean()
    assert abs(frac - pi) < 4 / np.sqrt(ds.n)
    assert np.allclose(oracle.pi_by_row, pi)


def test_huge_logit_keeps_everything():
    spec = constant_logit_recipe(1e6)
    ds = generate_synthetic(classify_spec((200, 200)), RngStream(1))
    injected, _ = inject(ds, spec, RngStream(2))
    assert injected.mask.all() and injected.response_observed.all()
    assert injected.features.tobytes() == ds.features.tobytes()


def test_mar_recipe_validates_and_reads_only_observed():
    spec = mar_recipe()
    spec.validate(p=10)
    assert all(t.index < 5 for t in spec.logit_terms if t.kind == "feature")
    ds = generate_synthetic(classify_spec((2000, 2000)), RngStream(3))
    injected, oracle = inject(ds, spec, RngStream(4))
    cc = complete_cases(injected)
    # oracle evaluation on complete cases never touches a masked column:
    # zeroing the masked block must not change pi
    doctored = injected.features.copy()
    doctored[:, 5:] = 0.0
    pi_doctored = oracle.evaluate(doctored[cc.indices], cc.data.sensitive)
    assert np.array_equal(pi_doctored, oracle.pi_of_rows(cc.indices))


def test_mechanism_validation_rules():
    with pytest.raises(ValidationError):  # MCAR may not read features
        MissingnessSpec("MCAR", (LogitTerm("feature", 1.0, 0),), frozenset({1})).validate()
    with pytest.raises(ValidationError):  # MAR may not read a target column
        MissingnessSpec("MAR", (LogitTerm("feature", 1.0, 1),), frozenset({1})).validate()
    with pytest.raises(ValidationError):  # MAR may not read a targeted response
        MissingnessSpec("MAR", (LogitTerm("response", 1.0),), frozenset({1}), True).validate()
    with pytest.raises(ValidationError):  # MNAR must read a target column
        MissingnessSpec("MNAR", (LogitTerm("feature", 1.0, 0),), frozenset({1})).validate()
    with pytest.raises(ValidationError):  # empty target set
        MissingnessSpec("MCAR", (LogitTerm("intercept", 1.0),), frozenset()).validate()
    # MNAR referencing the targeted response is valid (COMPAS recipe)
    MissingnessSpec("MNAR", (LogitTerm("response", -2.0), LogitTerm("feature", -2.0, 8)),
                    frozenset({8}), True).validate(p=9)


def test_inject_alters_only_the_mask():
    ds = generate_synthetic(classify_spec((500, 500)), RngStream(5))
    injected, _ = inject(ds, mar_recipe(), RngStream(6))
    assert injected.features.tobytes() == ds.features.tobytes()
    assert injected.response.tobytes() == ds.response.tobytes()
    incomplete = ~injected.complete_indicator()
    assert incomplete.any()
    assert (~injected.mask[incomplete][:, 5:]).all()
    assert injected.mask[:, :5].all()


def test_oracle_bit_identical_to_injection():
    ds = generate_synthetic(classify_spec((300, 300)), RngStream(7))
    injected, oracle = inject(ds, mar_recipe(), RngStream(8))
    recomputed = oracle.evaluate(ds.features, ds.sensitive, ds.response)
    assert np.array_equal(recomputed, oracle.pi_by_row)


def test_mnar_oracle_uses_shadow_values():
    # MNAR spec reads a targeted column; pi stays evaluable on masked rows
    spec = MissingnessSpec("MNAR", (LogitTerm("intercept", 1.0), LogitTerm("feature", -2.0, 9)),
                           frozenset({9}))
    ds = generate_synthetic(classify_spec((400, 400)), RngStream(9))
    injected, oracle = inject(ds, spec, RngStream(10))
    hidden = ~injected.complete_indicator()
    assert hidden.any()
    expect = stable_sigmoid(1.0 - 2.0 * ds.features[hidden, 9])
    assert np.array_equal(oracle.pi_of_rows(np.flatnonzero(hidden)), expect)


def test_sigmoid_stable_far_out():
    with np.errstate(over="raise"):
        v = stable_sigmoid(np.array([-800.0, -50.0, 0.0, 50.0, 800.0]))
    assert (v > 0).all() and (v < 1).all()
    assert v[2] == 0.5


def test_complete_cases_identity_when_fully_observed():
    ds = generate_synthetic(classify_spec((20, 20)), RngStream(11))
    cc = complete_cases(ds)
    assert list(cc.indices) == list(range(40))
    assert (cc.n0, cc.n1) == (20, 20)


def test_complete_cases_picks_rows():
    X = np.arange(8, dtype=float).reshape(4, 2)
    mask = np.array([[1, 1], [0, 1], [1, 1], [1, 0]], dtype=bool)
    ds = dataset_all_observed(X, np.zeros(4), np.array([0, 0, 1, 1]))
    ds = ds.__class__(ds.features, ds.response, ds.sensitive, mask, ds.response_observed)
    cc = complete_cases(ds)
    assert list(cc.indices) == [0, 2]
    assert (cc.n0, cc.n1) == (1, 1)


def test_empty_group_error():
    ds = generate_synthetic(classify_spec((10, 10)), RngStream(12))
    mask = ds.mask.copy()
    mask[ds.sensitive == 0, 5] = False
    broken = ds.__class__(ds.features, ds.response, ds.sensitive, mask, ds.response_observed)
    with pytest.raises(EmptyGroupError, match="A=0"):
        complete_cases(broken)


def test_group_logit_recipe_constant_within_group():
    ds = generate_synthetic(classify_spec((100, 100)), RngStream(13))
    _, oracle = inject(ds, group_logit_recipe(), RngStream(14))
    pi0 = oracle.pi_by_row[ds.sensitive == 0]
    pi1 = oracle.pi_by_row[ds.sensitive == 1]
    assert np.all(pi0 == pi0[0]) and np.all(pi1 == pi1[0])
    assert abs(pi0[0] - 0.5622) < 1e-4 and abs(pi1[0] - 0.4378) < 1e-4


def test_inject_rejects_spec_dataset_mismatch():
    ds = generate_synthetic(classify_spec((10, 10)), RngStream(15))
    bad = MissingnessSpec("MAR", (LogitTerm("feature", 1.0, 3),), frozenset({11}))
    with pytest.raises(ValidationError):
        inject(ds, bad, RngStream(16))
