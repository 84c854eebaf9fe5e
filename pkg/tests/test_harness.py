import csv
import io
import json

import numpy as np
import pytest

from underlay_secrecy import harness, nn
from underlay_secrecy.model import ScenarioParams, SystemParams, effective_gains, leakage

PARAMS = SystemParams()
SC = ScenarioParams(100.0, 6.0)


def interpolating_net(ds: harness.LabeledDataset) -> nn.Mlp:
    """ReLU net whose output is the piecewise-linear interpolant of the labels along h_s."""
    x = ds.features[:, 0]
    order = np.argsort(x)
    xs, ys = x[order], ds.labels[order]
    assert np.all(np.diff(xs) > 0)
    slopes = np.diff(ys) / np.diff(xs)
    k = len(xs) - 1
    w1 = np.zeros((k, 8))
    w1[:, 0] = 1.0
    b1 = -xs[:-1]
    w2 = np.concatenate([[slopes[0]], np.diff(slopes)])[None, :]
    return nn.Mlp((8, k, 1), [w1, w2], [b1, np.array([ys[0]])])


def zero_net() -> nn.Mlp:
    m = nn.xavier_init((8, 4, 1), 0)
    return m.with_params([np.zeros_like(w) for w in m.weights], [np.zeros_like(b) for b in m.biases])


@pytest.fixture(scope="module")
def mixed():
    return harness.gen_mixed_dataset(60, PARAMS, SC, (0.1, 0.1, 0.1), seed=5)


def test_gen_deterministic():
    a = harness.gen_dataset(3, PARAMS, SC, (0.05, 0.05, 0.05), 9, robust=True)
    b = harness.gen_dataset(3, PARAMS, SC, (0.05, 0.05, 0.05), 9, robust=True)
    assert np.array_equal(a.features, b.features) and np.array_equal(a.labels, b.labels)
    assert a.header == b.header


def test_gen_rows_do_not_depend_on_n():
    small = harness.gen_dataset(5, PARAMS, SC, (0, 0, 0), 3, robust=False)
    large = harness.gen_dataset(20, PARAMS, SC, (0, 0, 0), 3, robust=False)
    assert np.array_equal(small.features, large.features[:5])


def test_robust_zero_profile_matches_perfect():
    perfect = harness.gen_dataset(100, PARAMS, SC, (0, 0, 0), 4, robust=False)
    robust = harness.gen_dataset(100, PARAMS, SC, (0, 0, 0), 4, robust=True)
    assert np.array_equal(perfect.features, robust.features)
    assert np.max(np.abs(perfect.labels - robust.labels)) <= 1e-6 * SC.max_power


def test_perfect_rows_carry_zero_radii():
    ds = harness.gen_dataset(10, PARAMS, SC, (0.1, 0.1, 0.1), 1, robust=False)
    assert np.all(ds.features[:, 5:] == 0)
    assert ds.header.uncertainty_profile == (0.0, 0.0, 0.0)


def test_mixed_layout(mixed):
    assert mixed.header.solver == "mixed" and mixed.header.n_perfect == 30
    assert np.all(mixed.features[:30, 5:] == 0)
    assert np.all(mixed.features[30:, 5:] == 0.1)


def test_labels_feasible(mixed):
    assert harness.check_labels(mixed).all()
    for i in range(len(mixed)):
        ch = mixed.channel(i)
        assert 0 <= mixed.labels[i] <= SC.max_power
        assert leakage(mixed.labels[i], effective_gains(ch, PARAMS, worst_case=True)) <= SC.leakage_cap + 1e-9


def test_check_labels_flags_violations(mixed):
    bad = mixed.subset(np.arange(len(mixed)))
    bad.labels = bad.labels.copy()
    bad.labels[0] = SC.max_power + 1
    bad.labels[1] = -1
    mask = harness.check_labels(bad)
    assert not mask[0] and not mask[1] and mask[2:].all()


def test_gen_validation():
    with pytest.raises(ValueError):
        harness.gen_dataset(0, PARAMS, SC, (0, 0, 0), 0, robust=False)
    with pytest.raises(ValueError):
        harness.gen_dataset(2, PARAMS, SC, (-0.1, 0, 0), 0, robust=True)


def test_split_sizes_and_union():
    ds = harness.gen_dataset(600, PARAMS, SC, (0, 0, 0), 2, robust=False)
    train, val = harness.split(ds, 5 / 6, seed=1)
    assert (len(train), len(val)) == (500, 100)
    assert train.header.n == 500 and val.header.scenario == ds.header.scenario
    joined = np.vstack([train.features, val.features])
    assert sorted(map(tuple, joined)) == sorted(map(tuple, ds.features))
    again, _ = harness.split(ds, 5 / 6, seed=1)
    assert np.array_equal(again.labels, train.labels)
    with pytest.raises(ValueError):
        harness.split(ds, 1.0)


def test_dataset_round_trip(tmp_path, mixed):
    path = tmp_path / "d.csv"
    harness.save_dataset(mixed, path)
    back = harness.load_dataset(path)
    assert back.header == mixed.header
    assert np.array_equal(back.features, mixed.features)
    assert np.array_equal(back.labels, mixed.labels)
    assert np.array_equal(back.rates, mixed.rates)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ") and lines[1] == ",".join(harness.DATA_COLUMNS)


def test_load_dataset_rejects_garbage(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        harness.load_dataset(p)


def test_evaluate_perfect_predictions(mixed):
    er = harness.evaluate({"none": interpolating_net(mixed)}, mixed)
    assert er.rate_ratio == pytest.approx(100.0, abs=1e-6)
    assert er.satisfaction == 100.0
    assert er.mean_rate_conv == pytest.approx(float(np.mean(mixed.rates)), rel=1e-9)
    assert er.n_test == len(mixed)


def test_evaluate_zero_power(mixed):
    er = harness.evaluate({s: zero_net() for s in harness.SCHEMES}, mixed)
    assert er.mean_rate_conv > 0
    assert er.rate_ratio == 0.0 and er.satisfaction == 100.0
    assert set(er.schemes) == set(harness.SCHEMES)


def test_evaluate_summary_takes_worst_scheme(mixed):
    full = nn.Mlp((8, 1), [np.zeros((1, 8))], [np.array([SC.max_power])])
    er = harness.evaluate({"none": interpolating_net(mixed), "l1": full}, mixed)
    assert er.satisfaction == er.schemes["l1"].satisfaction < 100.0
    assert er.rate_ratio == min(s.rate_ratio for s in er.schemes.values())


def test_evaluate_scenario_mismatch(mixed):
    m = zero_net()
    m.info["scenario"] = harness.scenario_tag(
        harness.DatasetHeader(PARAMS, ScenarioParams(100.0, 1.0), (0, 0, 0), "golden", 0, 1)
    )
    with pytest.raises(ValueError):
        harness.evaluate({"none": m}, mixed)
    with pytest.raises(ValueError):
        harness.evaluate({}, mixed)


def test_report_formats(tmp_path, mixed):
    er = harness.evaluate({s: zero_net() for s in harness.SCHEMES}, mixed)
    text = harness.report(er, "csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == harness.REPORT_COLUMNS
    assert [r[0] for r in rows[1:]] == ["none", "l1", "l2", "summary"]
    for r in rows[1:]:
        for col in ("rate_ratio_pct", "time_ratio_pct", "satisfaction_pct"):
            value = r[harness.REPORT_COLUMNS.index(col)]
            assert len(value.split(".")[1]) == 2
    path = tmp_path / "r.json"
    harness.report(er, "json", str(path))
    assert harness.load_report(path) == er
    assert json.loads(path.read_text())["n_test"] == len(mixed)
    with pytest.raises(ValueError):
        harness.report(er, "xml")


def test_train_on_dataset_tags_model(mixed):
    res = harness.train_on_dataset(mixed, nn.TrainConfig(hidden=(4,), epochs=1, regularization="l2"))
    assert res.model.info["regularization"] == "l2"
    assert res.model.info["scenario"] == harness.scenario_tag(mixed.header)


@pytest.mark.parametrize(
    "curve, ok",
    [
        (list(np.linspace(10, 1, 50)), True),
        ([10.0] * 25 + [1.0] * 25, True),
        (list(np.linspace(10, 1, 25)) + list(np.linspace(1, 3, 25)), False),
        ([1.0] * 50, False),
        ([5.0, 4.0], False),
    ],
)
def test_val_curve_settles(curve, ok):
    assert harness.val_curve_settles(curve) == ok
