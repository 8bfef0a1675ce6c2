import csv
import json

import numpy as np
import pytest

from bleprox.errors import DegenerateLabels
from bleprox.evaluation import EVAL_COLUMNS, evaluate_scenarios, write_evaluation
from bleprox.ingest import Scenario, TransformMode
from bleprox.models import known_device_model
from bleprox.risk import H1_BOUND_M, bound_risk
from bleprox.simulate import two_class_corpus

MODEL = known_device_model()


@pytest.fixture(scope="module")
def corpus():
    return two_class_corpus(MODEL, n=40, steps=300, seed=0)


def test_two_class_auc(corpus):
    rep = evaluate_scenarios(corpus, MODEL)
    assert rep["auc"] >= 0.8
    assert len(rep["scenarios"]) == 40


def test_label_inversion(corpus):
    a = evaluate_scenarios(corpus, MODEL)["auc"]
    b = evaluate_scenarios(corpus, MODEL, positive="H0")["auc"]
    assert a + b == pytest.approx(1.0, abs=1e-12)


def test_single_class(corpus):
    only_h1 = [s for s in corpus if s.label == "H1"]
    with pytest.raises(DegenerateLabels):
        evaluate_scenarios(only_h1, MODEL)


def test_bound_risk_defaults_from_label():
    s = Scenario(id="a", delta_t=1.0, x=np.full(30, 3.9), mode=TransformMode.LOG_NEG_RSSI, label="H1")
    u = Scenario(id="b", delta_t=1.0, x=np.full(30, 4.2), mode=TransformMode.LOG_NEG_RSSI, label="H0")
    rows = evaluate_scenarios([s, u], MODEL)["scenarios"]
    assert rows[0]["bound_risk"] == pytest.approx(bound_risk(H1_BOUND_M, 30))
    assert rows[0]["relative_risk"] == pytest.approx(rows[0]["total_risk"] - rows[0]["bound_risk"])


def test_written_files(corpus, tmp_path):
    rep = evaluate_scenarios(corpus[:4], MODEL)
    jpath, cpath = write_evaluation(rep, tmp_path)
    assert json.loads(jpath.read_text()) == rep
    with open(cpath) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4 and tuple(rows[0]) == EVAL_COLUMNS
