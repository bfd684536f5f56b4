import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lindstab import io as lio
from lindstab.core import LindbladPair, diag_state
from lindstab.dynamics import integrate
from lindstab.errors import ConfigParse, IoFailure
from lindstab.synthesis import SynthesisConfig, synthesize
from lindstab.verify import certify

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5).flatmap(lambda n: arrays(np.float64, (n, n, 2), elements=finite)))
def test_matrix_round_trip_exact(parts):
    m = parts[..., 0] + 1j * parts[..., 1]
    back = lio.matrix_from_obj(json.loads(lio.dumps(lio.matrix_to_obj(m))))
    assert np.array_equal(back, m)


def test_density_and_pair_round_trip(tmp_path):
    rho = diag_state([0.5, 0.3, 0.2])
    lio.write_json(tmp_path / "rho.json", lio.density_to_obj(rho))
    back = lio.load_density(tmp_path / "rho.json")
    assert np.array_equal(back.matrix, rho.matrix)
    assert lio.read_json(tmp_path / "rho.json")["spectrum"] == [0.5, 0.3, 0.2]

    pair = LindbladPair(np.diag([1.0, 2.0]), [[0, 1j], [0.5, 0]], (np.eye(2),))
    lio.write_json(tmp_path / "pair.json", lio.pair_to_obj(pair, {"M": 2.0}))
    back, prov = lio.load_pair(tmp_path / "pair.json")
    assert prov == {"M": 2.0}
    for a, b in zip(back.channels, pair.channels):
        assert np.array_equal(a, b)


def test_certificate_round_trip(tmp_path):
    cfg = SynthesisConfig([0.6, 0.3, 0.1], auto_m=True)
    cert = certify(diag_state(cfg.spectrum), synthesize(cfg).pair, cfg)
    lio.write_json(tmp_path / "c.json", cert.to_dict())
    assert lio.load_certificate(tmp_path / "c.json").to_dict() == cert.to_dict()


def test_trace_csv_round_trip():
    cfg = SynthesisConfig([0.7, 0.3], auto_m=True)
    pair = synthesize(cfg).pair
    tr = integrate(pair, diag_state([0.2, 0.8]), 2.0, target=np.diag(cfg.spectrum), n_records=4)
    header, data = lio.read_csv(lio.trace_csv(tr, np.diag(cfg.spectrum)))
    assert header == ["t", "trace_distance", "fidelity", "p_1", "p_2"]
    assert np.array_equal(data[:, 0], tr.times)
    assert np.array_equal(data[:, 1], tr.distances)
    assert np.allclose(data[:, 3] + data[:, 4], 1.0)


def test_eigenvalue_csv_round_trip():
    lam = np.array([-1.0 + 0.5j, -1.0 - 0.5j, 0.0])
    header, data = lio.read_csv(lio.eigenvalue_csv(lam))
    assert header == ["re", "im"]
    assert np.array_equal(data[:, 0] + 1j * data[:, 1], lam)


def test_config_parse_and_format():
    text = "# comment\nspectrum = 0.5,0.3,0.2\nauto_M = true  # inline\n\nout_dir=x\n"
    cfg = lio.parse_config(text)
    assert cfg == {"spectrum": "0.5,0.3,0.2", "auto_M": "true", "out_dir": "x"}
    assert lio.parse_config(lio.format_config(cfg)) == cfg
    assert lio.parse_floats(cfg["spectrum"]) == [0.5, 0.3, 0.2]


@pytest.mark.parametrize("text", ["novalue\n", "= 3\n", "a = 1\na = 2\n"])
def test_config_errors(text):
    with pytest.raises(ConfigParse):
        lio.parse_config(text)


def test_bad_inputs(tmp_path):
    with pytest.raises(IoFailure):
        lio.read_text(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ConfigParse):
        lio.read_json(tmp_path / "bad.json")
    with pytest.raises(ConfigParse):
        lio.matrix_from_obj({"dim": 2, "entries": [[[1, 0]]]})
    with pytest.raises(ConfigParse):
        lio.parse_floats("1,x")
