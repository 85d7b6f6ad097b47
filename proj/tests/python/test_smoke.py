import json

import numpy as np
import pytest

import stsg


def test_haar_round_trip():
    dec = stsg.build_decomposition(stsg.SensorGraph.path(8), 3)
    x = np.random.default_rng(0).normal(size=(5, 8))
    values = stsg.haar_analyze(dec, x)
    assert values.shape == (5, 14)
    assert len(stsg.haar_channels(dec)) == 14
    np.testing.assert_allclose(stsg.haar_synthesize(dec, values), x, atol=1e-12)


def test_haar_matches_folder_sums():
    dec = stsg.build_decomposition(stsg.SensorGraph.path(4), 2)
    x = np.array([[1.0, 2.0, 4.0, 8.0]])
    np.testing.assert_array_equal(stsg.haar_analyze(dec, x)[0], [3, -1, 12, -4, 15, -9])


def test_overlap_has_no_inverse():
    dec = stsg.build_decomposition(stsg.SensorGraph.path(6), 2, overlap="center")
    assert dec.overlapping
    with pytest.raises(stsg.UnsupportedDecomposition):
        stsg.haar_synthesize(dec, stsg.haar_analyze(dec, np.zeros((2, 6))))


def test_filter_bank_and_moments():
    fb = stsg.FilterBank(256, J=6, q1=2)
    assert len(fb.paths()) == 43
    assert fb.littlewood_paley_max(1) <= 1 + 1e-6
    x = np.random.default_rng(1).normal(size=256)
    m = stsg.scattering_moments(x, fb)
    np.testing.assert_allclose(stsg.scattering_moments(np.roll(x, 17), fb), m, atol=1e-12)
    np.testing.assert_allclose(stsg.windowed_scattering(x, fb).mean(axis=0), m, atol=1e-10)


def test_stsg_moments_compose():
    dec = stsg.build_decomposition(stsg.SensorGraph.path(4), 2)
    fb = stsg.FilterBank(64, J=4, q1=2)
    x = np.random.default_rng(2).normal(size=(64, 4))
    channels = stsg.haar_analyze(dec, x)
    want = np.concatenate([stsg.scattering_moments(channels[:, c], fb) for c in range(channels.shape[1])])
    got = stsg.stsg_moments(x, dec, J=4, q1=2)
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-12)


def test_baselines_shapes():
    x = np.random.default_rng(3).normal(size=(128, 8))
    assert stsg.moment_features(x).shape == (16,)
    assert stsg.stft_features(x, window=32, hop=16).size > 0


def test_pca():
    x = np.random.default_rng(4).normal(size=(30, 5)) @ np.diag([5, 3, 1, 0.5, 0.1])
    model = stsg.pca_fit(x, 2)
    np.testing.assert_allclose(model.components.T @ model.components, np.eye(2), atol=1e-12)
    assert model.project(x).shape == (30, 2)
    assert model.variances[0] >= model.variances[1]


def test_forest_classification_and_serialization():
    rng = np.random.default_rng(5)
    y = np.arange(200) % 2
    x = rng.normal(size=(200, 2))
    x[:, 0] += 10 * y
    forest = stsg.train_forest(x, y.tolist(), n_trees=20, seed=3, standardize=False)
    assert forest.classification
    assert forest.error(x, y.tolist()) == 0.0
    again = stsg.Forest.from_json(forest.to_json())
    assert again.predict(x) == forest.predict(x)
    mean, std, folds = stsg.cross_validate(x, y.tolist(), folds=5, n_trees=20, standardize=False)
    assert mean == 0.0 and len(folds) == 5


def test_forest_regression():
    rng = np.random.default_rng(6)
    x = rng.uniform(-1, 1, size=(150, 2))
    t = 2.0 * x[:, 0]
    forest = stsg.train_forest(x, t, n_trees=20, use_pca=False)
    assert not forest.classification
    assert forest.error(x, t) < 0.25


def test_synthetic_experiment(tmp_path):
    cfg = stsg.ExperimentConfig.from_json(json.dumps({
        "seed": 3,
        "features": ["stsg", "moments"],
        "stsg": {"J": 4, "q1": 2},
        "forest": {"n_trees": 10, "standardize": False},
        "folds": 3,
        "synth": {"gases": ["acetone", "methane"], "positions": [1, 5], "trials": 3, "length": 128},
    }))
    recs = stsg.synth_generate(cfg)
    assert len(recs) == 2 * 2 * 3 * 9
    manifest = stsg.save_dataset(tmp_path / "data", recs)
    loaded = stsg.load_dataset(manifest)
    assert [r.key for r in loaded] == [r.key for r in recs]
    mats = [stsg.extract_features(recs, cfg, k) for k in ("stsg", "moments")]
    assert mats[0].features.shape[0] == len(recs)
    assert mats[0].classes == ["acetone", "methane"]
    table, results = stsg.cross_validate_features(mats, cfg)
    assert "STSG" in table
    assert stsg.render_report(results) == stsg.render_report(results)


def test_errors_map_to_value_error():
    with pytest.raises(ValueError):
        stsg.ExperimentConfig.from_json("{}")
    with pytest.raises(ValueError):
        stsg.FilterBank(32, J=6, q1=1)
