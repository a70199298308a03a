import math

import numpy as np
import pytest

import fvein


def small_config():
    c = fvein.PipelineConfig()
    c.image_height = 24
    c.image_width = 36
    c.ga_population = 6
    c.ga_generations = 3
    c.patch_side = 5
    c.patch_count = 3000
    c.retained_dim = 20
    c.hidden_dim = 10
    c.max_iterations = 25
    c.pool_rows = 2
    c.pool_cols = 2
    c.folds = 3
    return c


@pytest.fixture(scope="module")
def records():
    s = fvein.SynthConfig()
    s.subjects = 4
    s.fingers = 2
    s.image_height = 32
    s.image_width = 48
    return fvein.synthesize(s)


@pytest.fixture(scope="module")
def bundle(records):
    return fvein.learn_features(records, small_config())


def test_synthesize_shape(records):
    assert len(records) == 4 * 2 * 6
    assert records[0].subject_id == "001"
    assert records[0].image.shape == (32, 48)
    assert 0.0 <= records[0].image.min() and records[0].image.max() <= 1.0


def test_config_round_trip():
    c = small_config()
    back = fvein.PipelineConfig.from_text(c.to_text())
    assert back.to_text() == c.to_text()


def test_bad_config_raises_with_kind():
    with pytest.raises(fvein.FveinError) as info:
        fvein.PipelineConfig.from_text("rho = 2\n")
    assert info.value.args[0] == "config"
    assert "rho" in info.value.args[1]


def test_kl_reference_value():
    assert fvein.kl_divergence(0.5, np.array([0.25])) == pytest.approx(0.1438, abs=1e-3)
    assert fvein.kl_divergence(0.3, np.array([0.3])) == 0.0


def test_gradient_matches_finite_difference():
    rng = np.random.default_rng(3)
    w1, b1 = rng.normal(size=(3, 4)) * 0.5, rng.normal(size=3) * 0.5
    w2, b2 = rng.normal(size=(4, 3)) * 0.5, rng.normal(size=4) * 0.5
    batch = rng.uniform(size=(4, 5))
    _, g = fvein.autoencoder_cost(w1, b1, w2, b2, batch, 1e-3, 2.0, 0.1)
    h = 1e-6
    w1p = w1.copy()
    w1p[1, 2] += h
    w1m = w1.copy()
    w1m[1, 2] -= h
    num = (fvein.autoencoder_cost(w1p, b1, w2, b2, batch, 1e-3, 2.0, 0.1)[0]
           - fvein.autoencoder_cost(w1m, b1, w2, b2, batch, 1e-3, 2.0, 0.1)[0]) / (2 * h)
    # W1 is flattened row-major first.
    assert g[1 * 4 + 2] == pytest.approx(num, rel=1e-6, abs=1e-9)


def test_whitening_gives_identity_covariance():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(5, 5)) @ rng.normal(size=(5, 4000)) + 2.0
    mean, proj, _ = fvein.fit_whitening(x, 5, 1e-9)
    z = proj @ (x - mean[:, None])
    cov = z @ z.T / x.shape[1]
    assert np.abs(cov - np.eye(5)).max() < 1e-5


def test_metrics_extremes():
    assert fvein.eer([3, 4, 5], [0, 1, 2]) == 0.0
    assert fvein.auc([3, 4, 5], [0, 1, 2]) == 1.0
    assert fvein.eer([1, 2, 3], [1, 2, 3]) == 0.5
    pts = fvein.roc([1.0, 2.0], [0.5])
    assert pts[0] == (0.0, 0.0) and pts[-1] == (1.0, 1.0)


def test_bundle_save_load_enroll_verify(bundle, records, tmp_path):
    path = tmp_path / "model.fvab"
    bundle.save(path)
    loaded = fvein.Bundle.load(path)
    assert loaded.hidden_dim == 10
    assert loaded.kernels.shape == (10, 25)
    enrolled, replaced = loaded.enroll(records, ["001", "002"])
    assert enrolled == ["001", "002"] and replaced == []
    assert loaded.users == ["001", "002"]
    probe = next(r for r in records if r.subject_id == "001" and r.sample_index == 6
                 and r.hand == "right" and r.finger == "index")
    accepted, score = loaded.verify("001", probe.image)
    assert isinstance(accepted, bool) and math.isfinite(score)
    with pytest.raises(fvein.FveinError) as info:
        loaded.verify("004", probe.image)
    assert "004" in info.value.args[1]


def test_represent_length(bundle, records):
    v = bundle.represent(records[0].image)
    assert v.shape == (10 * 2 * 2,)


def test_evaluate_is_deterministic(bundle, records):
    a = bundle.evaluate(records)
    b = bundle.evaluate(records)
    assert a == b
    assert len(a["per_fold_eer"]) == 3
    assert 0.0 <= a["mean_eer"] <= 1.0


def test_missing_bundle_is_io_error(tmp_path):
    with pytest.raises(fvein.FveinError) as info:
        fvein.Bundle.load(tmp_path / "nope.fvab")
    assert info.value.args[0] == "io"
