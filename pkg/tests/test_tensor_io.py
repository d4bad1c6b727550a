import numpy as np
import pytest

from voxpose.nn import TensorFormatError, load_named_tensors, load_tensor, save_named_tensors, save_tensor


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_round_trip_bit_exact(tmp_path, dtype):
    rng = np.random.default_rng(0)
    for i, shape in enumerate([(3,), (2, 5), (4, 3, 2), (1, 2, 3, 4)]):
        arr = rng.normal(size=shape).astype(dtype)
        path = tmp_path / f"t{i}.agrt"
        save_tensor(path, arr)
        back = load_tensor(path)
        assert back.dtype == dtype
        assert back.shape == arr.shape
        assert back.tobytes() == arr.tobytes()


def test_bad_magic_rejected_with_path(tmp_path):
    path = tmp_path / "x.agrt"
    save_tensor(path, np.zeros(3))
    raw = bytearray(path.read_bytes())
    raw[0:4] = b"NOPE"
    path.write_bytes(bytes(raw))
    with pytest.raises(TensorFormatError, match="x.agrt"):
        load_tensor(path)


def test_bad_version_rejected(tmp_path):
    path = tmp_path / "v.agrt"
    save_tensor(path, np.zeros(3))
    raw = bytearray(path.read_bytes())
    raw[4] = 9
    path.write_bytes(bytes(raw))
    with pytest.raises(TensorFormatError, match="version"):
        load_tensor(path)


def test_truncated_payload_rejected(tmp_path):
    path = tmp_path / "t.agrt"
    save_tensor(path, np.zeros((4, 4)))
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(TensorFormatError, match="payload"):
        load_tensor(path)


def test_unknown_dtype_code_rejected(tmp_path):
    path = tmp_path / "d.agrt"
    save_tensor(path, np.zeros(2))
    raw = bytearray(path.read_bytes())
    raw[5] = 0x07
    path.write_bytes(bytes(raw))
    with pytest.raises(TensorFormatError, match="dtype"):
        load_tensor(path)


def test_named_tensor_directory_round_trip(tmp_path):
    tensors = {
        "de.layer0.weight": np.random.default_rng(1).normal(size=(2, 3, 3, 3)).astype(np.float32),
        "de.layer0.bias": np.zeros(2, dtype=np.float32),
    }
    save_named_tensors(tmp_path / "ckpt", tensors, meta={"epoch": 3})
    back, meta = load_named_tensors(tmp_path / "ckpt")
    assert meta["epoch"] == 3
    assert set(back) == set(tensors)
    for k in tensors:
        assert back[k].tobytes() == tensors[k].tobytes()


def test_missing_index_rejected(tmp_path):
    with pytest.raises(TensorFormatError, match="index"):
        load_named_tensors(tmp_path / "nothing")
