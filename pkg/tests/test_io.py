import numpy as np
import pytest

from isopath import io as iio
from isopath.errors import InvalidInputError
from isopath.param import Disk, Parameterization, Rect
from isopath.planner import ToolPath


@pytest.fixture
def pts():
    return np.random.default_rng(0).normal(size=(20, 3)) * 10


def test_xyz_roundtrip_exact(tmp_path, pts):
    p = tmp_path / "c.xyz"
    iio.write_xyz(p, pts)
    np.testing.assert_array_equal(iio.read_xyz(p), pts)
    assert "np.float64" not in p.read_text()


def test_xyz_comments_commas_and_extra_columns(tmp_path):
    p = tmp_path / "c.xyz"
    p.write_text("# header\n1 2 3 9 9\n\n4,5,6  # trailing\n")
    np.testing.assert_array_equal(iio.read_xyz(p), [[1, 2, 3], [4, 5, 6]])


@pytest.mark.parametrize("body", ["1 2\n", "1 2 x\n", "# nothing\n"])
def test_xyz_malformed(tmp_path, body):
    p = tmp_path / "c.xyz"
    p.write_text(body)
    with pytest.raises(InvalidInputError):
        iio.read_xyz(p)


@pytest.mark.parametrize("binary", [True, False])
def test_ply_roundtrip(tmp_path, pts, binary):
    p = tmp_path / "c.ply"
    iio.write_ply(p, pts, binary=binary)
    np.testing.assert_array_equal(iio.read_cloud(p), pts)


def test_ply_float_with_extra_props_and_faces(tmp_path):
    header = (
        "ply\nformat binary_little_endian 1.0\ncomment test\n"
        "element vertex 2\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\n"
        "element face 1\nproperty list uchar int vertex_indices\nend_header\n"
    )
    dt = np.dtype([("x", "<f4"), ("y", "<f4"), ("z", "<f4"), ("red", "u1")])
    data = np.array([(1, 2, 3, 255), (4, 5, 6, 0)], dtype=dt)
    p = tmp_path / "c.ply"
    p.write_bytes(header.encode() + data.tobytes() + b"\x03\x00\x00\x00\x00")
    np.testing.assert_array_equal(iio.read_ply(p), [[1, 2, 3], [4, 5, 6]])


def test_ply_big_endian(tmp_path, pts):
    header = ("ply\nformat binary_big_endian 1.0\nelement vertex 20\n"
              "property double x\nproperty double y\nproperty double z\nend_header\n")
    p = tmp_path / "c.ply"
    p.write_bytes(header.encode() + pts.astype(">f8").tobytes())
    np.testing.assert_array_equal(iio.read_ply(p), pts)


@pytest.mark.parametrize("content", [
    b"notply\n",
    b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n1\n",
    b"ply\nformat binary_little_endian 1.0\nelement vertex 5\nproperty double x\n"
    b"property double y\nproperty double z\nend_header\n\x00\x00",
    b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n",
])
def test_ply_malformed(tmp_path, content):
    p = tmp_path / "c.ply"
    p.write_bytes(content)
    with pytest.raises(InvalidInputError):
        iio.read_ply(p)


def test_missing_cloud(tmp_path):
    with pytest.raises(InvalidInputError):
        iio.read_cloud(tmp_path / "nope.xyz")


def test_breaks_roundtrip(tmp_path):
    p = tmp_path / "b.txt"
    iio.write_breaks(p, [3, 1, 4, 1])
    assert iio.read_breaks(p) == [3, 1, 4, 1]
    p.write_text("3\nfoo\n")
    with pytest.raises(InvalidInputError):
        iio.read_breaks(p)


@pytest.mark.parametrize("domain", [Rect(12.5, 7.25), Disk(3.0)])
def test_parameterization_roundtrip(tmp_path, plane40, domain):
    coords = np.random.default_rng(1).random((len(plane40.cloud), 2))
    param = Parameterization(plane40.cloud, domain, coords)
    p = tmp_path / "param.txt"
    iio.write_parameterization(p, param)
    dom, back = iio.read_parameterization(p)
    assert dom == domain
    np.testing.assert_array_equal(back, coords)


def test_parameterization_needs_header_and_order(tmp_path):
    p = tmp_path / "param.txt"
    p.write_text("0 1 2\n")
    with pytest.raises(InvalidInputError):
        iio.read_parameterization(p)
    p.write_text("# domain rect 1 1\n1 0 0\n0 0 0\n")
    with pytest.raises(InvalidInputError):
        iio.read_parameterization(p)


def test_paths_roundtrip(tmp_path):
    paths = [
        ToolPath(0, np.zeros((1, 3)), np.zeros((1, 2)), "contour", "fill"),
        ToolPath(1, np.arange(6.0).reshape(2, 3), np.array([[1.0, 0.0], [1.0, 3.0]]), "contour", "band"),
    ]
    p = tmp_path / "paths.txt"
    iio.write_paths(p, paths)
    text = p.read_text().splitlines()
    assert text[0] == "PATH 0 contour"
    assert text[1] == "0.000000 0.000000 0.000000 0.000000 0.000000"
    blocks = iio.read_paths(p)
    assert [b[0] for b in blocks] == [0, 1]
    np.testing.assert_allclose(blocks[1][2], paths[1].points)
    np.testing.assert_allclose(blocks[1][3], paths[1].params)


def test_paths_malformed(tmp_path):
    p = tmp_path / "paths.txt"
    p.write_text("1 2 3 4 5\n")
    with pytest.raises(InvalidInputError):
        iio.read_paths(p)
