"""Tests for file formats: schema, dataset CSV, posterior container, reports."""
import numpy as np
import pytest

from vafactor import io
from vafactor.data import Dataset, SymptomSpec
from vafactor.model import ChainMeta, PosteriorSamples

SPECS = (
    SymptomSpec("fever", "binary"),
    SymptomSpec("days_ill", "count"),
    SymptomSpec("weight", "continuous-identity"),
    SymptomSpec("enzyme", "continuous-log"),
    SymptomSpec("severity", "categorical", ("none", "mild", "severe")),
)


def mixed_dataset():
    # expanded width 6: severity becomes two dummy columns
    values = np.array([
        [1.0, 3.0, 70.5, 1.25, 0.0, 0.0],
        [0.0, 0.0, np.nan, 0.5, 1.0, 0.0],
        [1.0, np.nan, 65.0, 2.0, 0.0, 1.0],
        [0.0, 2.0, 80.25, np.nan, np.nan, np.nan],
    ])
    x = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 1.0], [1.0, 0.0]])
    y = np.array([0, 2, -1, 1])
    return Dataset(specs_raw=SPECS, values=values, x=x, y=y, n_causes=3,
                   ids=("a1", "a2", "a3", "a4"))


def synthetic_samples(seed=0):
    rng = np.random.default_rng(seed)
    t, n_causes, p, l, k, b, n = 3, 2, 3, 2, 2, 2, 4
    return PosteriorSamples(
        theta=rng.standard_normal((t, n_causes, p, l)),
        delta=rng.standard_normal((t, p, l)),
        tau=rng.gamma(2.0, 1.0, (t, l)),
        beta=rng.standard_normal((t, n_causes, l, k, b)),
        alpha=rng.standard_normal((t, n_causes, k, b)),
        sigma2=rng.gamma(2.0, 1.0, (t, p)),
        pi=np.full((t, n_causes), 0.5),
        z=rng.standard_normal((t, n, p)),
        eta=rng.standard_normal((t, n, k)),
        y=rng.integers(0, n_causes, (t, n)),
        meta=ChainMeta(iterations=30, burn_in=10, thinning=2, seed=7),
    )


# ------------------------------------------------------------- schema

def test_schema_round_trip():
    text = io.schema_to_text(SPECS, 3)
    specs, n_causes = io.schema_from_text(text)
    assert specs == SPECS
    assert n_causes == 3
    assert text.splitlines()[0] == "causes: 3"
    assert "severity: categorical(none|mild|severe)" in text


def test_schema_parse_errors():
    with pytest.raises(ValueError, match="causes"):
        io.schema_from_text("fever: binary\n")
    with pytest.raises(ValueError, match="integer"):
        io.schema_from_text("causes: many\n")
    with pytest.raises(ValueError, match="malformed"):
        io.schema_from_text("causes: 2\nonly-a-name\n")
    with pytest.raises(ValueError, match="unknown symptom kind"):
        io.schema_from_text("causes: 2\nfever: boolean\n")


def test_schema_file_round_trip(tmp_path):
    path = tmp_path / "schema.txt"
    io.write_schema(path, SPECS, 3)
    specs, n_causes = io.read_schema(path)
    assert specs == SPECS and n_causes == 3


# -------------------------------------------------------- dataset CSV

def test_dataset_round_trip(tmp_path):
    data = mixed_dataset()
    csv_path = tmp_path / "d.csv"
    schema_path = tmp_path / "d.schema"
    io.write_schema(schema_path, data.specs_raw, data.n_causes)
    io.write_dataset(csv_path, data, covariate_names=["site"])
    back = io.read_dataset(csv_path, schema_path)
    np.testing.assert_array_equal(back.values, data.values)
    np.testing.assert_array_equal(back.x, data.x)
    np.testing.assert_array_equal(back.y, data.y)
    assert back.ids == data.ids
    assert back.specs_raw == data.specs_raw
    assert back.n_causes == 3
    header = csv_path.read_text().splitlines()[0]
    assert header == "id,cause,x_site,fever,days_ill,weight,enzyme,severity"
    # unknown cause serializes as an empty field
    assert csv_path.read_text().splitlines()[3].startswith("a3,,")


def test_dataset_parse_errors(tmp_path):
    data = mixed_dataset()
    schema_path = tmp_path / "d.schema"
    io.write_schema(schema_path, data.specs_raw, data.n_causes)
    bad_header = tmp_path / "bad1.csv"
    bad_header.write_text("id,cause,fever\n")
    with pytest.raises(ValueError, match="symptom columns"):
        io.read_dataset(bad_header, schema_path)
    bad_cause = tmp_path / "bad2.csv"
    bad_cause.write_text(
        "id,cause,fever,days_ill,weight,enzyme,severity\n"
        "r1,9,1,2,70,1.5,none\n")
    with pytest.raises(ValueError, match="out of range"):
        io.read_dataset(bad_cause, schema_path)
    short_row = tmp_path / "bad3.csv"
    short_row.write_text(
        "id,cause,fever,days_ill,weight,enzyme,severity\nr1,1,1\n")
    with pytest.raises(ValueError, match="field count"):
        io.read_dataset(short_row, schema_path)
    empty = tmp_path / "bad4.csv"
    empty.write_text("")
    with pytest.raises(ValueError, match="empty"):
        io.read_dataset(empty, schema_path)


def test_dataset_without_ids_gets_stable_row_names(tmp_path):
    data = Dataset(specs_raw=(SymptomSpec("s0", "binary"),),
                   values=np.array([[1.0], [0.0]]), x=np.ones((2, 1)),
                   y=np.array([0, -1]), n_causes=2)
    csv_path = tmp_path / "d.csv"
    schema_path = tmp_path / "d.schema"
    io.write_schema(schema_path, data.specs_raw, 2)
    io.write_dataset(csv_path, data)
    back = io.read_dataset(csv_path, schema_path)
    assert back.ids == ("r0000", "r0001")


# ----------------------------------------------------- posterior file

def test_posterior_round_trip(tmp_path):
    samples = synthetic_samples()
    path = tmp_path / "fit.post"
    scales = np.array([1.0, 2.0, 0.5])
    io.write_posterior(path, samples, SPECS, 3, ("site",), scales)
    back = io.read_posterior(path)
    for name in PosteriorSamples.ARRAY_FIELDS:
        np.testing.assert_array_equal(getattr(back.samples, name),
                                      getattr(samples, name))
    assert back.samples.meta == samples.meta
    assert back.specs == SPECS
    assert back.n_causes == 3
    assert back.covariates == ("site",)
    np.testing.assert_array_equal(back.scales, scales)


def test_posterior_writes_are_byte_identical(tmp_path):
    samples = synthetic_samples()
    first = tmp_path / "a.post"
    second = tmp_path / "b.post"
    io.write_posterior(first, samples, SPECS, 3, (), np.ones(3))
    io.write_posterior(second, samples, SPECS, 3, (), np.ones(3))
    assert first.read_bytes() == second.read_bytes()


def test_posterior_rejects_corruption(tmp_path):
    samples = synthetic_samples()
    path = tmp_path / "fit.post"
    io.write_posterior(path, samples, SPECS, 3, (), np.ones(3))
    blob = path.read_bytes()
    bad_magic = tmp_path / "m.post"
    bad_magic.write_bytes(b"NOTAFILE" + blob[8:])
    with pytest.raises(ValueError, match="not a posterior file"):
        io.read_posterior(bad_magic)
    bad_version = tmp_path / "v.post"
    bad_version.write_bytes(blob[:8] + bytes([99]) + blob[9:])
    with pytest.raises(ValueError, match="version"):
        io.read_posterior(bad_version)
    truncated = tmp_path / "t.post"
    truncated.write_bytes(blob[:len(blob) // 2])
    with pytest.raises(ValueError, match="truncated"):
        io.read_posterior(truncated)


# ------------------------------------------------------------ reports

def test_predictions_round_trip(tmp_path):
    path = tmp_path / "pred.csv"
    probs = np.array([[0.25, 0.75], [0.9, 0.1]])
    io.write_predictions(path, ("a", "b"), probs, np.array([1, 0]))
    ids, got_probs, top = io.read_predictions(path)
    assert ids == ("a", "b")
    np.testing.assert_array_equal(got_probs, probs)
    np.testing.assert_array_equal(top, [1, 0])
    assert path.read_text().splitlines()[0] == "id,top_cause,p_cause1,p_cause2"
    # external file is 1-based
    assert path.read_text().splitlines()[1].split(",")[1] == "2"


def test_csmf_round_trip(tmp_path):
    path = tmp_path / "csmf.csv"
    io.write_csmf(path, np.array([0.6, 0.4]), np.array([0.5, 0.3]),
                  np.array([0.7, 0.5]))
    mean, lo, hi = io.read_csmf(path)
    np.testing.assert_array_equal(mean, [0.6, 0.4])
    np.testing.assert_array_equal(lo, [0.5, 0.3])
    np.testing.assert_array_equal(hi, [0.7, 0.5])
    other = tmp_path / "other.csv"
    other.write_text("id,top_cause\n")
    with pytest.raises(ValueError, match="CSMF"):
        io.read_csmf(other)


def test_truth_and_metrics_round_trip(tmp_path):
    truth_path = tmp_path / "truth.json"
    io.write_truth(truth_path, ("a", "b", "c"), np.array([0, 2, 1]), 3)
    labels, n_causes = io.read_truth(truth_path)
    assert labels == {"a": 0, "b": 2, "c": 1}
    assert n_causes == 3
    assert '"b": 3' in truth_path.read_text()    # 1-based on disk
    metrics_path = tmp_path / "metrics.json"
    io.write_metrics(metrics_path, {"acc1": 0.5, "acc_csmf": 0.8, "ccc": 1 / 3})
    got = io.read_metrics(metrics_path)
    assert got == {"acc1": 0.5, "acc_csmf": 0.8, "ccc": 1 / 3}
