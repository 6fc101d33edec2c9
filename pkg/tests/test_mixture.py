import numpy as np
import pytest

from mcpd.errors import ContractViolation, DataFormatError, NumericalError
from mcpd.mixture import (
    MixtureModel,
    ObservationRecord,
    fit_em,
    ingest_csv,
    load_model,
    planted_stream,
    posterior,
    posterior_sequence,
    save_model,
    write_csv,
)


def gaussian_records(rng, n, means, scale=1.0):
    half = n // len(means)
    records = []
    for mu in means:
        for _ in range(half):
            records.append(
                ObservationRecord(len(records), rng.normal(mu, scale, 1), np.empty(0))
            )
    rng.shuffle(records)
    return records


def test_em_recovers_separated_means():
    rng = np.random.default_rng(2)
    records = gaussian_records(rng, 2000, [0.0, 5.0])
    model = fit_em(records, 2, rng=np.random.default_rng(3))
    got = np.sort(model.means.ravel())
    assert abs(got[0] - 0.0) <= 0.1
    assert abs(got[1] - 5.0) <= 0.1


def test_em_log_likelihood_monotone():
    rng = np.random.default_rng(4)
    records = gaussian_records(rng, 400, [0.0, 4.0])
    model = fit_em(records, 2, rng=np.random.default_rng(5))
    diffs = np.diff(model.train_log_likelihoods)
    assert np.all(diffs >= -1e-9)


def test_em_preconditions():
    rng = np.random.default_rng(6)
    records = gaussian_records(rng, 50, [0.0])
    with pytest.raises(ContractViolation):
        fit_em(records, 1)
    with pytest.raises(ContractViolation):
        fit_em(records[:3], 8)
    with pytest.raises(ContractViolation):
        fit_em([], 2)


def test_em_determinism():
    rng = np.random.default_rng(7)
    records = gaussian_records(rng, 300, [0.0, 3.0])
    a = fit_em(records, 3, rng=np.random.default_rng(11))
    b = fit_em(records, 3, rng=np.random.default_rng(11))
    assert np.array_equal(a.weights, b.weights)
    assert np.array_equal(a.means, b.means)
    assert np.array_equal(a.variances, b.variances)


def two_component_model(mu0=0.0, mu1=0.0, var=1.0):
    return MixtureModel(
        weights=np.array([0.5, 0.5]),
        means=np.array([[mu0], [mu1]]),
        variances=np.array([[var], [var]]),
        bernoulli=np.empty((2, 0)),
    )


def test_posterior_symmetry():
    model = two_component_model()
    rec = ObservationRecord(0, np.array([0.3]), np.empty(0))
    assert posterior(model, rec) == pytest.approx([0.5, 0.5], abs=1e-12)


def test_posterior_concentrates_at_component_mean():
    model = two_component_model(mu0=0.0, mu1=3.0, var=1e-4)
    rec = ObservationRecord(0, np.array([3.0]), np.empty(0))
    assert posterior(model, rec)[1] > 0.99


def test_posterior_normalised_for_random_inputs():
    rng = np.random.default_rng(8)
    records = gaussian_records(rng, 120, [0.0, 2.0])
    model = fit_em(records, 4, rng=np.random.default_rng(9))
    post = posterior_sequence(model, records)
    assert np.allclose(post.sum(axis=1), 1.0, atol=1e-9)
    assert np.all(post >= 0)


def test_posterior_total_underflow_raises():
    model = two_component_model(mu0=1e200, mu1=-1e200, var=1e-6)
    rec = ObservationRecord(0, np.array([0.0]), np.empty(0))
    with np.errstate(over="ignore"):
        with pytest.raises(NumericalError, match="underflowed"):
            posterior(model, rec)


def test_csv_round_trip(tmp_path):
    records, _ = planted_stream(length=40, boundaries=(20,), rng=np.random.default_rng(1))
    path = tmp_path / "stream.csv"
    write_csv(path, records)
    back = ingest_csv(path)
    assert len(back) == len(records)
    for a, b in zip(records, back):
        assert a.t == b.t
        assert np.array_equal(a.real_features, b.real_features)
        assert np.array_equal(a.binary_features, b.binary_features)


def test_ingest_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    assert ingest_csv(path) == []
    path.write_text("t,real:x,bin:b\n")
    assert ingest_csv(path) == []


def test_ingest_rejects_bad_binary_value(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,real:x,bin:b\n0,1.5,0\n1,2.5,2\n")
    with pytest.raises(DataFormatError, match="line 3"):
        ingest_csv(path)


def test_ingest_rejects_malformed_rows(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,real:x,bin:b\n0,1.5\n")
    with pytest.raises(DataFormatError, match="line 2"):
        ingest_csv(path)
    path.write_text("t,real:x,bin:b\n0,abc,1\n")
    with pytest.raises(DataFormatError, match="line 2"):
        ingest_csv(path)
    path.write_text("t,real:x,widgets\n")
    with pytest.raises(DataFormatError, match="line 1"):
        ingest_csv(path)


def test_model_json_round_trip(tmp_path):
    rng = np.random.default_rng(10)
    records = gaussian_records(rng, 80, [0.0, 2.0])
    model = fit_em(records, 2, rng=np.random.default_rng(11))
    save_model(tmp_path / "m.json", model)
    back = load_model(tmp_path / "m.json")
    assert np.array_equal(back.weights, model.weights)
    assert np.array_equal(back.means, model.means)
    assert np.array_equal(back.variances, model.variances)


def test_planted_stream_structure():
    records, bounds = planted_stream(rng=np.random.default_rng(0))
    assert len(records) == 300
    assert bounds == [75, 150, 225]
    with pytest.raises(ContractViolation):
        planted_stream(length=100, boundaries=(0,))
