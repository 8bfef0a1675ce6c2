import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bleprox.errors import AllZeroWeights, ConfigError, EmptySequence, InfeasibleStratification
from bleprox.ingest import Scenario, TransformMode
from bleprox.models import DiscriminativeModel, ModelForm
from bleprox.simulate import proximity_corpus
from bleprox.training import (
    default_search_space,
    proximity_loss,
    proximity_objective,
    risk_loss,
    stratified_folds,
    train_discriminative,
)

LOG, RAW = TransformMode.LOG_NEG_RSSI, TransformMode.RAW_RSSI


def test_proximity_loss_examples():
    assert proximity_loss([np.ones(5)], [np.ones(5)]) == 0.0
    assert proximity_loss([np.ones(5)], [np.full(5, 2.0)]) == 1.0


def test_risk_loss_examples():
    assert risk_loss([np.ones(3)], [np.ones(3)], [1.0]) == 0.0
    assert risk_loss([np.ones(1)], [np.full(1, 2.0)], [1.0]) == pytest.approx((1 / 60 - 1 / 240) ** 2, abs=1e-15)
    one = risk_loss([np.ones(4)], [np.full(4, 2.0)], [1.0])
    # an all-far truth still has positive weight, so compare against a weight-zero stand-in
    both = risk_loss([np.ones(4), np.ones(4)], [np.full(4, 2.0), np.full(4, 2.0)], [1.0, 1.0])
    assert both == pytest.approx(one)


def test_risk_loss_zero_weight_scenario_is_ignored(monkeypatch):
    import bleprox.training as tr

    real = tr.scenario_risk

    def fake(d, dt):
        r = real(d, dt)
        return r if d[0] < 10 else type(r)(r.per_step, 0.0)

    monkeypatch.setattr(tr, "scenario_risk", fake)
    truth_a, inf_a = np.ones(4), np.full(4, 2.0)
    truth_b, inf_b = np.full(4, 20.0), np.full(4, 0.5)
    alone = risk_loss([truth_a], [inf_a], [1.0])
    assert risk_loss([truth_a, truth_b], [inf_a, inf_b], [1.0, 1.0]) == pytest.approx(alone)
    with pytest.raises(AllZeroWeights):
        risk_loss([truth_b], [inf_b], [1.0])


@given(st.lists(st.floats(0.01, 20), min_size=1, max_size=20), st.floats(0.1, 5))
def test_losses_zero_on_truth_and_non_negative(d, dt):
    d = np.array(d)
    assert proximity_loss([d], [d]) == 0.0
    assert risk_loss([d], [d], [dt]) == 0.0
    assert proximity_loss([d], [d + 1]) > 0
    assert risk_loss([d], [d * 3], [dt]) >= 0


def test_objective_small_at_true_theta():
    model = DiscriminativeModel("scaled", 1.0, 0.0, 1e-4, q=0.01, mode=LOG)
    corpus = proximity_corpus(model, per_level=1, steps=200, q_sim=0.01, dropout=0.0, seed=3)
    theta = {"theta_mu1": 1.0, "theta_mu2": 0.0, "theta_r": 1e-4, "q": 0.01}
    assert proximity_objective(theta, corpus, "scaled", LOG) < 0.05


def test_objective_needs_truth():
    s = Scenario(id="s", delta_t=1.0, x=np.array([3.9]), mode=LOG)
    theta = {"theta_mu1": 1.0, "theta_mu2": 0.0, "theta_r": 0.3, "q": 0.01}
    with pytest.raises(ConfigError):
        proximity_objective(theta, [s], "scaled", LOG)


def test_default_boxes():
    sp = default_search_space("scaled", LOG)
    assert dict(sp.bounds) == {
        "theta_mu1": (0.8, 1.2), "theta_mu2": (0.5, 5.0), "theta_r": (0.3, 1.5), "q": (0.01, 0.05),
    }
    sp = default_search_space("loglinear", LOG)
    assert sp.bounds["theta_mu1"] == (0.01, 1.0) and sp.bounds["theta_mu2"] == (3.5, 4.5)
    assert sp.bounds["theta_r"] == (0.2, 1.5)
    sp = default_search_space("scaled", RAW)
    assert sp.free == ["theta_mu2", "theta_r", "q"]
    assert sp.bounds["theta_mu1"] == (1.0, 1.0) and sp.bounds["theta_r"] == (1e-3, 300.0)
    sp = default_search_space("loglinear", RAW)
    assert sp.bounds["theta_mu1"] == (-20.0, -1.0) and sp.bounds["theta_mu2"] == (-100.0, -10.0)


def test_folds_cover_every_label():
    labels = [lvl for lvl in range(8) for _ in range(3)]
    folds = stratified_folds(labels, 3, seed=0)
    for f in range(3):
        val = {l for l, g in zip(labels, folds) if g == f}
        train = {l for l, g in zip(labels, folds) if g != f}
        assert val == train == set(labels)
    assert np.bincount(folds).tolist() == [8, 8, 8]


def test_folds_infeasible_and_deterministic():
    with pytest.raises(InfeasibleStratification):
        stratified_folds([0, 0, 0, 1], 3)
    labels = [0, 1] * 6
    np.testing.assert_array_equal(stratified_folds(labels, 3, 5), stratified_folds(labels, 3, 5))


def test_empty_corpus():
    with pytest.raises(EmptySequence):
        train_discriminative([], form="scaled", mode=LOG)


@pytest.mark.parametrize("objective", ["proximity", "risk"])
def test_training_stays_in_box(objective):
    model = DiscriminativeModel("scaled", 1.0, 0.0, 0.5, q=0.02, mode=LOG)
    corpus = proximity_corpus(model, levels=(0.5, 1.0, 2.0), per_level=3, steps=80, seed=1)
    fitted, report = train_discriminative(
        corpus, form="scaled", objective=objective, init_points=3, rounds=2, seed=0
    )
    sp = default_search_space("scaled", LOG)
    assert sp.contains(fitted.theta)
    assert len(report.folds) == 3
    assert report.best_value == min(c["value"] for c in report.trace)
    assert fitted.form is ModelForm.SCALED_BASE
