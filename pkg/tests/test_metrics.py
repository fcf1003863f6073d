import json

import numpy as np
import pytest

from covmap.baselines import bfsg_manifold
from covmap.coverage import CoverageManifold
from covmap.errors import InputDomainError
from covmap.metrics import EvalReport, avg, dataset_error, l1, render_table


def _m(values, tile_id=0, gamma_db=0.0):
    return CoverageManifold(tile_id=tile_id, gamma_db=gamma_db, values=np.asarray(values, float))


def _rand(shape, seed, tile_id=0):
    return _m(np.random.default_rng(seed).uniform(size=shape), tile_id=tile_id)


def test_l1_identity_is_zero():
    a = _rand((8, 8), 1)
    assert l1(a, a) == 0.0


def test_l1_constant_offset():
    a = _m(np.full((4, 4), 0.3))
    b = _m(np.full((4, 4), 0.4))
    assert l1(a, b) == pytest.approx(0.1, rel=1e-12)


def test_l1_half_split_vs_constant_half():
    vals = np.zeros((4, 4))
    vals[:2] = 1.0
    assert l1(_m(vals), _m(np.full((4, 4), 0.5))) == 0.5


def test_l1_shape_mismatch_rejected():
    with pytest.raises(InputDomainError):
        l1(_rand((4, 4), 1), _rand((8, 8), 2))


def test_l1_metric_axioms():
    a, b, c = (_rand((6, 6), s) for s in (1, 2, 3))
    assert l1(a, b) >= 0.0
    assert l1(a, b) == l1(b, a)
    assert l1(a, b) <= l1(a, c) + l1(c, b) + 1e-15
    assert l1(a, b) > 0.0  # distinct random manifolds


def test_avg():
    assert avg(_m(np.ones((4, 4)))) == 1.0
    vals = np.zeros((4, 4))
    vals[:2] = 1.0
    assert avg(_m(vals)) == 0.5
    m = _rand((8, 8), 5)
    assert avg(bfsg_manifold(m)) == pytest.approx(avg(m), rel=1e-12)


def test_dataset_error_single_tile():
    t = _rand((4, 4), 1, tile_id=7)
    p = _rand((4, 4), 2, tile_id=7)
    rep = dataset_error({7: p}, {7: t}, predictor="x")
    assert rep.tile_count == 1
    assert rep.mean_error == pytest.approx(l1(p, t))


def test_dataset_error_identity_zero():
    truth = {i: _rand((4, 4), i, tile_id=i) for i in range(5)}
    rep = dataset_error(truth, truth)
    assert rep.mean_error == 0.0


def test_dataset_error_key_mismatch():
    truth = {1: _rand((4, 4), 1), 2: _rand((4, 4), 2)}
    with pytest.raises(InputDomainError, match=r"\[2\]"):
        dataset_error({1: truth[1]}, truth)


def test_dataset_error_permutation_invariant():
    truth = {i: _rand((4, 4), i, tile_id=i) for i in range(6)}
    pred = {i: _rand((4, 4), 100 + i, tile_id=i) for i in range(6)}
    a = dataset_error(pred, truth).mean_error
    rev = dict(reversed(list(pred.items())))
    b = dataset_error(rev, truth).mean_error
    assert a == b


def test_bfsg_dominates_offset_constants():
    # a constant further than twice the MAD from the mean must lose to BFSG
    truth = {i: _rand((8, 8), i, tile_id=i) for i in range(4)}
    bfsg = {i: bfsg_manifold(m) for i, m in truth.items()}
    bfsg_err = dataset_error(bfsg, truth).mean_error
    for i, m in truth.items():
        mad = np.abs(m.values - m.values.mean()).mean()
        shifted = np.clip(m.values.mean() + 2.5 * mad, 0.0, 1.0)
        const = {j: _m(np.full((8, 8), shifted if j == i else truth[j].values.mean()),
                       tile_id=j) for j in truth}
        assert dataset_error(const, truth).mean_error >= bfsg_err


def test_report_json_schema():
    rep = EvalReport(predictor="ppp", gamma_db=5.0, per_tile_errors={3: 0.25, 1: 0.75})
    doc = json.loads(rep.to_json())
    assert doc["predictor"] == "ppp"
    assert doc["gamma_db"] == 5.0
    assert doc["K"] == 2
    assert doc["mean_error"] == pytest.approx(0.5)
    assert doc["per_tile"] == [{"tile_id": 1, "error": 0.75}, {"tile_id": 3, "error": 0.25}]


def test_render_table_layout():
    reports = [EvalReport("ppp", g, {0: e}) for g, e in ((0.0, 0.2), (5.0, 0.3))]
    reports += [EvalReport("bfsg", g, {0: e}) for g, e in ((0.0, 0.1), (5.0, 0.25))]
    table = render_table(reports)
    lines = table.splitlines()
    assert "0 dB" in lines[0] and "5 dB" in lines[0]
    assert lines[2].startswith("ppp")
    assert lines[3].startswith("bfsg")
    assert "0.1000" in lines[3]
