import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from mediv.discrete import (
    DiscreteModel,
    MomentSpecDiscrete,
    attainable_range,
    bayes_update,
    coin_model,
    me_update,
    tilted_update,
)
from mediv.errors import (
    DegenerateConstraint,
    StalledAtDegenerate,
    InvalidOutcome,
    UnattainableTarget,
    ZeroEvidence,
)


@pytest.fixture
def coin():
    return coin_model([0.25, 0.75])


def test_bayes_coin(coin):
    post = bayes_update(coin, "heads")
    # 0.5*0.25 and 0.5*0.75 normalised
    np.testing.assert_allclose(post.weights, [0.25, 0.75], rtol=0, atol=1e-15)
    assert post.beta == 0.0
    assert post.log_zeta == pytest.approx(math.log(0.5))


def test_uninformative_data_returns_prior():
    model = DiscreteModel(["a", "b", "c"], [0.2, 0.3, 0.5], [[1.0, 1.0, 1.0]])
    np.testing.assert_allclose(bayes_update(model, 0).weights, [0.2, 0.3, 0.5], atol=1e-15)


def test_degenerate_prior_is_fixed_point():
    model = coin_model([0.25, 0.75], prior=[1.0, 0.0])
    np.testing.assert_array_equal(bayes_update(model, "tails").weights, [1.0, 0.0])


def test_invalid_outcome(coin):
    with pytest.raises(InvalidOutcome):
        bayes_update(coin, "edge")


def test_zero_evidence():
    model = coin_model([0.0, 1.0], prior=[1.0, 0.0])
    with pytest.raises(ZeroEvidence):
        bayes_update(model, "heads")
    with pytest.raises(ZeroEvidence):
        me_update(model, "heads", MomentSpecDiscrete([0.0, 1.0], 0.5))
    with pytest.raises(ZeroEvidence):
        attainable_range(model, "heads", [0.0, 1.0])


def test_model_validation():
    with pytest.raises(ValueError):
        DiscreteModel([], [], [[]])
    with pytest.raises(ValueError):
        DiscreteModel([0, 1], [1, 1], [[0.5, 0.5]])  # rows do not sum to 1 over x
    with pytest.raises(ValueError):
        DiscreteModel([0, 1], [1, -1], [[1.0, 1.0]])
    model = DiscreteModel([0, 1], [2.0, 6.0], [[1.0, 1.0]])
    assert model.prior.sum() == pytest.approx(1.0, abs=1e-12)


def test_me_two_point_closed_form(coin):
    # 0.25 e^{0.25 b} = 0.75 e^{0.75 b}  =>  b = -2 ln 3
    post = me_update(coin, "heads", MomentSpecDiscrete([0.25, 0.75], 0.5))
    assert post.beta == pytest.approx(-2 * math.log(3), abs=1e-8)
    np.testing.assert_allclose(post.weights, [0.5, 0.5], atol=1e-10)
    assert post.residual <= 1e-10
    # log zeta = log(0.5 * (0.25 * 3^-0.5 + 0.75 * 3^-1.5))
    expected = math.log(0.5 * (0.25 * 3 ** -0.5 + 0.75 * 3 ** -1.5))
    assert post.log_zeta == pytest.approx(expected, rel=1e-9)


def test_me_target_at_bayes_mean(coin):
    post = me_update(coin, "heads", MomentSpecDiscrete([0.25, 0.75], 0.625))
    assert post.beta == 0.0
    np.testing.assert_allclose(post.weights, [0.25, 0.75], atol=1e-15)


@pytest.mark.parametrize("target", [0.9, 0.75, 0.25, 0.1])
def test_me_unattainable(coin, target):
    with pytest.raises(UnattainableTarget) as exc:
        me_update(coin, "heads", MomentSpecDiscrete([0.25, 0.75], target))
    assert exc.value.interval == (0.25, 0.75)


def test_degenerate_constraint():
    model = DiscreteModel([0, 1, 2], [1, 1, 1], [[0.5, 0.5, 0.0], [0.5, 0.5, 1.0]])
    with pytest.raises(DegenerateConstraint):
        me_update(model, 0, MomentSpecDiscrete([3.0, 3.0, 7.0], 4.0))
    post = me_update(model, 0, MomentSpecDiscrete([3.0, 3.0, 7.0], 3.0))
    assert post.beta == 0.0
    np.testing.assert_allclose(post.weights, [0.5, 0.5, 0.0])


def test_near_constant_f_stalls():
    # f spread of 6e-8 needs |beta| ~ 1e7 to move the mean by half the range
    model = DiscreteModel([0, 1, 2], [0.0, 1.0, 0.5], [[1.0, 1.0, 1.0]])
    f = np.array([0.0, 0.0, 6e-8])
    with pytest.raises(StalledAtDegenerate):
        me_update(model, 0, MomentSpecDiscrete(f, 3e-8))


def test_attainable_range():
    coin = coin_model([0.25, 0.75])
    assert attainable_range(coin, "heads", [0.25, 0.75]) == (0.25, 0.75)
    single = coin_model([0.25, 0.75], prior=[1.0, 0.0])
    assert attainable_range(single, "heads", [0.25, 0.75]) == (0.25, 0.25)
    # middle point has zero likelihood for outcome 0; support = {0, 2}
    model = DiscreteModel([0, 1, 2], [1, 1, 1], [[0.3, 0.0, 0.6], [0.7, 1.0, 0.4]])
    assert attainable_range(model, 0, [5.0, -10.0, 2.0]) == (2.0, 5.0)


def test_single_support_point_endpoint_attained():
    single = coin_model([0.25, 0.75], prior=[1.0, 0.0])
    post = me_update(single, "heads", MomentSpecDiscrete([0.25, 0.75], 0.25))
    np.testing.assert_array_equal(post.weights, [1.0, 0.0])


def test_extreme_tilt_is_finite():
    theta = np.linspace(0.01, 0.99, 9)
    model = coin_model(theta)
    post = me_update(model, "heads", MomentSpecDiscrete(theta * 1000.0, 985.0))
    assert np.isfinite(post.log_zeta)
    assert abs(post.weights @ theta * 1000.0 - 985.0) <= 1e-10


models = st.integers(2, 8).flatmap(
    lambda k: st.tuples(
        st.lists(st.floats(0.0, 1.0), min_size=k, max_size=k),
        st.lists(st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k), min_size=1, max_size=4),
        st.lists(st.floats(-5.0, 5.0), min_size=k, max_size=k),
    )
)


def _build(prior, rows):
    lik = np.array(rows)
    lik = lik / lik.sum(axis=0)
    prior = np.array(prior)
    if prior.sum() == 0:
        prior[0] = 1.0
    return DiscreteModel(list(range(len(prior))), prior, lik)


@settings(max_examples=200, deadline=None)
@given(models)
def test_bayes_recovery_property(spec):
    prior, rows, _ = spec
    model = _build(prior, rows)
    for x in model.outcomes:
        a = bayes_update(model, x).weights
        b = me_update(model, x).weights
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(models, st.floats(0.05, 0.95))
def test_constraint_satisfied_and_sign(spec, frac):
    prior, rows, f = spec
    model = _build(prior, rows)
    f = np.array(f)
    lo, hi = attainable_range(model, 0, f)
    if hi - lo < 1e-6:
        return
    target = lo + frac * (hi - lo)
    post = me_update(model, 0, MomentSpecDiscrete(f, target))
    assert abs(post.weights @ f - target) <= 1e-10
    assert post.weights.sum() == pytest.approx(1.0, abs=1e-12)
    base = bayes_update(model, 0).weights @ f
    if target > base + 1e-9:
        assert post.beta >= 0
    elif target < base - 1e-9:
        assert post.beta <= 0


@settings(max_examples=100, deadline=None)
@given(models, st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_scale_invariance(spec, c1, c2):
    prior, rows, f = spec
    model = _build(prior, rows)
    joint = model.joint(0)
    if not (joint > 0).any():
        return
    f = np.array(f)
    lo, hi = attainable_range(model, 0, f)
    target = 0.5 * (lo + hi) if hi - lo >= 1e-6 else None
    fv = f if target is not None else None
    a = tilted_update(joint, fv, target)
    b = tilted_update((c1 * model.prior) * (c2 * model.row(0)), fv, target)
    np.testing.assert_allclose(a.weights, b.weights, rtol=0, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(models)
def test_mean_monotone_in_beta(spec):
    prior, rows, f = spec
    model = _build(prior, rows)
    joint = model.joint(0)
    if not (joint > 0).any():
        return
    f = np.array(f)
    from mediv.discrete import _support_log_weights, _tilt

    logq = _support_log_weights(joint)
    means = [_tilt(logq, f, b)[2] for b in np.linspace(-20, 20, 81)]
    assert np.all(np.diff(means) >= -1e-12)


def _max_relative_entropy(q, f, target):
    """Independent oracle: maximise -sum P log(P/q) s.t. sum P = 1, <f> = target."""
    support = q > 0
    qs, fs = q[support] / q[support].sum(), f[support]

    def neg_entropy(p):
        p = np.clip(p, 1e-300, None)
        return float(np.sum(p * np.log(p / qs)))

    def grad(p):
        p = np.clip(p, 1e-300, None)
        return np.log(p / qs) + 1.0

    cons = [
        {"type": "eq", "fun": lambda p: p.sum() - 1.0, "jac": lambda p: np.ones_like(p)},
        {"type": "eq", "fun": lambda p: p @ fs - target, "jac": lambda p: fs},
    ]
    res = minimize(neg_entropy, qs, jac=grad, constraints=cons, method="SLSQP",
                   bounds=[(0.0, 1.0)] * qs.size, options={"ftol": 1e-15, "maxiter": 1000})
    assert res.success, res.message
    out = np.zeros_like(q)
    out[support] = res.x
    return out


@pytest.mark.parametrize("seed", range(25))
def test_brute_force_entropy_maximisation(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 6))
    prior = rng.uniform(0.1, 1.0, k)
    lik = rng.uniform(0.05, 1.0, (3, k))
    lik /= lik.sum(axis=0)
    model = DiscreteModel(list(range(k)), prior, lik)
    f = rng.normal(size=k)
    lo, hi = attainable_range(model, 1, f)
    target = lo + rng.uniform(0.2, 0.8) * (hi - lo)
    post = me_update(model, 1, MomentSpecDiscrete(f, target))
    oracle = _max_relative_entropy(model.joint(1), f, target)
    np.testing.assert_allclose(post.weights, oracle, atol=1e-6)
