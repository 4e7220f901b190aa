import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trilemma import serialization as ser
from trilemma.channels import random_operation
from trilemma.instruments import instrument_choi_distance, luders_instrument, random_instrument
from trilemma.measproc import induced_instrument, ozawa_dilation, random_process, thermo_construction
from trilemma.qobjects import random_povm, random_state, random_unitary

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _objects(seed):
    obs = random_povm(2, 3, seed)
    return {
        "state": random_state(3, seed),
        "observable": obs,
        "operation": random_operation(2, 3, 2, seed=seed),
        "instrument": random_instrument(2, 2, seed=seed),
        "process": random_process(2, 2, 2, seed=seed),
        "unitaries": [random_unitary(2, seed), random_unitary(2, seed + 1)],
    }


@pytest.mark.parametrize("kind", sorted(ser.ENCODERS))
def test_round_trip_byte_identical(tmp_path, kind):
    obj = _objects(7)[kind]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    ser.save(obj, kind, a)
    ser.save(ser.load(a, kind), kind, b)
    assert a.read_bytes() == b.read_bytes()


@given(seeds)
@settings(max_examples=15, deadline=None)
def test_round_trip_property(seed):
    for kind, obj in _objects(seed).items():
        text = ser.dumps(ser.ENCODERS[kind](obj))
        back = ser.DECODERS[kind](json.loads(text))
        assert ser.dumps(ser.ENCODERS[kind](back)) == text


def test_floats_exact():
    x = 0.1 + 0.2
    m = np.array([[x, 1 / 3], [np.pi, -np.e]])
    back = ser.decode_matrix(json.loads(ser.dumps(ser.encode_matrix(m))))
    np.testing.assert_array_equal(back, m.astype(complex))


def test_process_round_trip_preserves_behaviour(fixture_obs):
    proc = thermo_construction(fixture_obs, [np.eye(2)] * 2)
    back = ser.decode_process(json.loads(ser.dumps(ser.encode_process(proc))))
    assert instrument_choi_distance(induced_instrument(back), luders_instrument(fixture_obs)) <= 1e-9
    assert back.metadata == proc.metadata


def test_dilation_metadata_survives(fixture_obs):
    proc = ozawa_dilation(luders_instrument(fixture_obs))
    back = ser.decode_process(json.loads(ser.dumps(ser.encode_process(proc))))
    assert back.metadata == json.loads(json.dumps(proc.metadata))


def test_parse_error_missing_key():
    with pytest.raises(ser.ParseError) as err:
        ser.decode_observable({"effects": [{"label": "0"}]})
    assert err.value.location == "$.effects[0]"


def test_parse_error_bad_scalar():
    doc = {"matrix": [[[1, 0], [0, 0]], [[0, 0], [0]]]}
    with pytest.raises(ser.ParseError) as err:
        ser.decode_state(doc)
    assert err.value.location == "$.matrix[1][1]"


def test_parse_error_ragged():
    with pytest.raises(ser.ParseError) as err:
        ser.decode_matrix([[[1, 0]], [[0, 0], [1, 0]]])
    assert err.value.location == "$[1]"


def test_parse_error_invalid_state_wrapped():
    with pytest.raises(ser.ParseError) as err:
        ser.decode_state({"matrix": [[[2, 0]]]})
    assert err.value.location == "$"


def test_parse_error_dims_mismatch():
    doc = ser.encode_operation(random_operation(2, 2, 1, seed=1))
    doc["in_dim"] = 3
    with pytest.raises(ser.ParseError) as err:
        ser.decode_operation(doc)
    assert err.value.location == "$.in_dim"


def test_parse_error_non_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ser.ParseError) as err:
        ser.load(p, "state")
    assert err.value.location.startswith("line 1")


def test_parse_error_boolean_is_not_number():
    with pytest.raises(ser.ParseError):
        ser.decode_matrix([[[True, 0]]])


def test_dumps_rejects_nonfinite():
    with pytest.raises(ValueError):
        ser.dumps({"x": float("nan")})
