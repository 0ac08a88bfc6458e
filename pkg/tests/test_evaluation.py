import numpy as np
import pytest

from timegci.data import fit_normalizer, generate_sines, normalize
from timegci.evaluation import (
    DataScaleModel,
    EvalReport,
    expected_quality_difference,
    format_table,
    perturbation_forecast_mse,
    predictive_score,
    write_reports_csv,
    xcorr_details,
    xcorr_score,
)
from timegci.theory import PersistenceModel
from timegci.toy import SineSimulator, ToySource


@pytest.fixture(scope="module")
def sines():
    x = generate_sines(4000, seed=0).values
    return x[:3000], x[3000:]


@pytest.mark.slow
def test_trtr_baseline_and_noise_ordering(sines):
    train, test = sines
    trtr = predictive_score(train, test, 1, seed=0)
    assert trtr <= 0.11
    noise = np.random.default_rng(0).uniform(size=train.shape)
    assert predictive_score(noise, test, 1, seed=0) > trtr


def test_constant_synthetic_scores_mean_abs_deviation(sines):
    train, test = sines
    const = np.full_like(train, 0.5)
    got = predictive_score(const, test, 1, seed=0, steps=300)
    want = np.abs(test[:, 1:, -1] - 0.5).mean()
    assert got == pytest.approx(want, abs=0.01)


def test_mode_collapse_scores_worse(sines):
    train, test = sines
    collapsed = np.repeat(train[:1], len(train), axis=0)
    full = predictive_score(train, test, 1, seed=0, steps=1500)
    assert predictive_score(collapsed, test, 1, seed=0, steps=1500) > full


def test_predictive_score_determinism_and_errors(sines):
    train, test = sines
    a = predictive_score(train[:500], test, 3, seed=4, steps=20)
    assert a == predictive_score(train[:500], test, 3, seed=4, steps=20)
    with pytest.raises(ValueError):
        predictive_score(train, test, 24)
    with pytest.raises(ValueError):
        predictive_score(train[:, :, :3], test, 1)


def test_xcorr_identity_symmetry_and_degenerate(sines):
    train, test = sines
    assert xcorr_score(test, test) == 0.0
    assert xcorr_score(train, test) == pytest.approx(xcorr_score(test, train), abs=1e-12)
    assert xcorr_score(train[..., :1], test[..., :1]) == 0.0
    with pytest.raises(ValueError):
        xcorr_score(test[:10], test[:10])


def test_xcorr_perfectly_correlated_pair_limit():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((20000, 4, 1))
    real = np.concatenate([a, 2 * a + 1], axis=-1)
    syn = rng.standard_normal((20000, 4, 2))
    assert xcorr_score(real, syn) == pytest.approx(2.0, abs=0.05)


def test_xcorr_counts_zero_variance_features():
    rng = np.random.default_rng(1)
    real = rng.uniform(size=(100, 3, 2))
    syn = real.copy()
    syn[..., 1] = 0.3
    d = xcorr_details(real, syn)
    assert d["zero_variance_synthetic"] == 3 and d["zero_variance_real"] == 0
    assert np.isfinite(d["score"])


def test_expected_quality_difference():
    src = ToySource(T=4, D=1)
    same = expected_quality_difference(src, src, 5000, np.random.default_rng(0), latent=True)
    assert abs(same.value) <= 3 * same.se
    bad = expected_quality_difference(src, src.shifted(0.5), 5000, np.random.default_rng(1), latent=True)
    assert bad.value > 3 * bad.se
    big = expected_quality_difference(src, src.shifted(0.5), 10000, np.random.default_rng(2), latent=True)
    assert bad.se / big.se == pytest.approx(np.sqrt(2), rel=0.2)
    with pytest.raises(ValueError):
        expected_quality_difference(src, src, 999)


def test_perturbation_grid_monotone_and_deterministic():
    sim = SineSimulator()
    a = perturbation_forecast_mse(PersistenceModel(), sim, scales=(1, 3, 5), horizons=(1, 5), episodes=400)
    b = perturbation_forecast_mse(PersistenceModel(), sim, scales=(1, 3, 5), horizons=(1, 5), episodes=400)
    assert a == b
    for t in (1, 5):
        assert a[(1, t)].mse < a[(3, t)].mse < a[(5, t)].mse
    with pytest.raises(ValueError):
        perturbation_forecast_mse(PersistenceModel(), sim, horizons=(24,), episodes=10)


def test_perturbation_error_is_against_the_clean_path():
    sim = SineSimulator(T=6, D=1, freq_range=(0.0, 0.0), phase_range=(0.3, 0.3))
    # constant clean series: a persistence forecast is off only by the kick at K
    cells = perturbation_forecast_mse(PersistenceModel(), sim, sigma=0.01, scales=(1,), horizons=(1,), episodes=4000)
    assert cells[(1, 1)].mse == pytest.approx(0.01 ** 2, rel=0.1)


def test_data_scale_model_round_trip():
    ds = generate_sines(200, seed=3)
    norm = fit_normalizer(ds)

    class Echo:
        def sample(self, n, T, rng, prefix=None, deterministic=False):
            return np.repeat(prefix[:, -1:], T, axis=1), np.zeros((n, T))

    m = DataScaleModel(Echo(), norm)
    pref = ds.values[:5, :3]
    out, _ = m.sample(5, 2, None, prefix=pref)
    np.testing.assert_allclose(out[:, 0], pref[:, -1], atol=1e-5)
    assert normalize(ds, norm).values.max() <= 1.0


def test_report_table_and_csv(tmp_path):
    reps = [EvalReport("a", "sines", 0.1, 0.2, 0.3, 1.0, seed=s) for s in range(3)]
    reps.append(EvalReport("b", "sines", 0.2, 0.3, 0.4, 2.0))
    text = format_table(reps)
    assert "Predictive Score" in text and "0.100 +- 0.000" in text
    write_reports_csv(reps, tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0].startswith("method,dataset,predictive_score_1") and len(lines) == 5
