import json

import numpy as np
import pytest

from conftest import random_density
from diagchannels.channels import (
    ChoiMatrix,
    DiagonalChannel,
    KrausChannel,
    choi,
    random_channel,
    random_diagonal,
)
from diagchannels.exceptions import ValidationError
from diagchannels.serialization import (
    channel_from_json,
    channel_to_json,
    load_channel,
    load_matrix,
    matrix_from_json,
    matrix_to_json,
    save_channel,
)


def test_matrix_round_trip(rng):
    m = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    back = matrix_from_json(json.loads(json.dumps(matrix_to_json(m))))
    assert np.array_equal(back, m)


@pytest.mark.parametrize(
    "obj,invariant",
    [
        ({"rows": 2, "cols": 2}, "matrix.schema"),
        ({"rows": 2, "cols": 2, "data": [[1, 0]]}, "matrix.shape"),
        ({"rows": 0, "cols": 2, "data": []}, "matrix.shape"),
        ({"rows": 1, "cols": 1, "data": [[1, 0, 0]]}, "matrix.schema"),
    ],
)
def test_matrix_schema_errors(obj, invariant):
    with pytest.raises(ValidationError) as info:
        matrix_from_json(obj)
    assert info.value.invariant == invariant


def test_hermitian_check_on_decode():
    obj = matrix_to_json(np.array([[1, 2], [0, 1]]))
    with pytest.raises(ValidationError) as info:
        matrix_from_json(obj, hermitian=True, what="c")
    assert info.value.invariant == "c.hermitian"


@pytest.mark.parametrize(
    "ch", [random_channel(2, 3, 2, 0), random_diagonal(3, 2, 1)], ids=["kraus", "diagonal"]
)
def test_channel_round_trip(rng, tmp_path, ch):
    path = tmp_path / "ch.json"
    save_channel(ch, path)
    back = load_channel(path)
    assert type(back) is type(ch)
    rho = random_density(rng, ch.dim_in)
    assert np.allclose(back.apply(rho), ch.apply(rho), atol=1e-15)


def test_choi_input_becomes_kraus(rng):
    ch = random_channel(2, 2, 2, 3)
    back = channel_from_json(channel_to_json(choi(ch)))
    assert isinstance(back, KrausChannel)
    rho = random_density(rng, 2)
    assert np.allclose(back.apply(rho), ch.apply(rho), atol=1e-12)


def test_non_cp_choi_rejected():
    swap = np.eye(4)[[0, 2, 1, 3]]
    with pytest.raises(ValidationError) as info:
        channel_from_json(channel_to_json(ChoiMatrix(2, 2, swap)))
    assert info.value.invariant == "choi.psd"


@pytest.mark.parametrize(
    "obj,invariant",
    [
        ([], "channel.schema"),
        ({"kind": "kraus", "dim_in": 2}, "channel.schema"),
        ({"kind": "mystery", "dim_in": 2, "dim_out": 2, "payload": []}, "channel.kind"),
        ({"kind": "kraus", "dim_in": 2, "dim_out": 2, "payload": []}, "kraus.nonempty"),
        ({"kind": "kraus", "dim_in": 3, "dim_out": 2, "payload": [matrix_to_json(np.eye(2))]}, "kraus.shape"),
        ({"kind": "diagonal", "dim_in": 2, "dim_out": 3, "payload": matrix_to_json(np.eye(2))}, "diagonal.square"),
        ({"kind": "diagonal", "dim_in": 3, "dim_out": 3, "payload": matrix_to_json(np.eye(2))}, "diagonal.shape"),
        ({"kind": "diagonal", "dim_in": 2, "dim_out": 2, "payload": matrix_to_json(np.diag([1, -1]))}, "diagonal.c.psd"),
    ],
)
def test_channel_validation_errors(obj, invariant):
    with pytest.raises(ValidationError) as info:
        channel_from_json(obj)
    assert info.value.invariant == invariant


def test_bad_json_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ValidationError):
        load_channel(path)
    with pytest.raises(ValidationError):
        load_matrix(path)


def test_diagonal_payload_is_c():
    ch = DiagonalChannel(np.array([[1, 0.5], [0.5, 1]]))
    obj = channel_to_json(ch)
    assert obj["kind"] == "diagonal"
    assert np.allclose(matrix_from_json(obj["payload"]), ch.c)
