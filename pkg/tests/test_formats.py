"""Point-cloud and transform file I/O tests."""

import json
import math
import struct

import numpy as np
import pytest

from maskcalib import (
    Extrinsic,
    Intrinsics,
    PointCloud,
    load_cloud,
    load_transform,
    read_bin,
    read_pcd,
    rotation_from_euler_deg,
    save_cloud,
    save_transform,
    transform_document,
    write_bin,
    write_pcd,
)


@pytest.fixture
def cloud():
    rng = np.random.default_rng(42)
    n = 50
    normals = rng.normal(size=(n, 3))
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    normals[::7] = 0.0  # sprinkle "no normal" sentinels
    return PointCloud.from_arrays(
        rng.uniform(-30, 30, size=(n, 3)),
        rng.uniform(0, 1, size=n),
        normals,
        rng.integers(-1, 5, size=n).astype(np.int32),
    )


class TestBin:
    def test_reads_hand_packed_records(self, tmp_path):
        # x, y, z, intensity as little-endian float32, packed without
        # touching the writer under test.
        records = [(1.0, 2.0, 3.0, 0.5), (-4.25, 5.5, 6.125, 1.0)]
        raw = b"".join(struct.pack("<4f", *r) for r in records)
        path = tmp_path / "scan.bin"
        path.write_bytes(raw)
        cloud = read_bin(path)
        assert len(cloud) == 2
        assert cloud.positions.tolist() == [[1.0, 2.0, 3.0], [-4.25, 5.5, 6.125]]
        assert cloud.reflectivity.tolist() == [0.5, 1.0]

    def test_round_trip_exact_for_float32_values(self, tmp_path, cloud):
        # Snap to float32 first so the 32-bit container is lossless.
        snapped = PointCloud.from_arrays(
            cloud.positions.astype(np.float32).astype(np.float64),
            cloud.reflectivity.astype(np.float32).astype(np.float64),
        )
        path = tmp_path / "scan.bin"
        write_bin(snapped, path)
        back = read_bin(path)
        assert np.array_equal(back.positions, snapped.positions)
        assert np.array_equal(back.reflectivity, snapped.reflectivity)

    def test_rejects_truncated_payload(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"\x00" * 20)  # not a multiple of 16
        with pytest.raises(ValueError):
            read_bin(path)

    def test_rejects_empty_file(self, tmp_path):
        path = tmp_path / "empty.bin"
        path.write_bytes(b"")
        with pytest.raises(ValueError):
            read_bin(path)


class TestPcd:
    def test_round_trip_is_bitwise(self, tmp_path, cloud):
        path = tmp_path / "scan.pcd"
        write_pcd(cloud, path)
        back = read_pcd(path)
        assert back.positions.tobytes() == cloud.positions.tobytes()
        assert back.reflectivity.tobytes() == cloud.reflectivity.tobytes()
        assert back.normals.tobytes() == cloud.normals.tobytes()
        assert np.array_equal(back.labels, cloud.labels)

    def test_rewrite_is_byte_identical(self, tmp_path, cloud):
        a = tmp_path / "a.pcd"
        b = tmp_path / "b.pcd"
        write_pcd(cloud, a)
        write_pcd(read_pcd(a), b)
        assert a.read_bytes() == b.read_bytes()

    def test_irrational_values_survive(self, tmp_path):
        cloud = PointCloud.from_arrays(
            [[math.pi, math.e, math.sqrt(2)]], [1 / 3])
        path = tmp_path / "tiny.pcd"
        write_pcd(cloud, path)
        back = read_pcd(path)
        assert back.positions.tobytes() == cloud.positions.tobytes()
        assert back.reflectivity[0] == 1 / 3

    def test_rejects_binary_data_declaration(self, tmp_path, cloud):
        path = tmp_path / "scan.pcd"
        write_pcd(cloud, path)
        text = path.read_text().replace("DATA ascii", "DATA binary")
        path.write_text(text)
        with pytest.raises(ValueError):
            read_pcd(path)

    def test_rejects_row_count_mismatch(self, tmp_path, cloud):
        path = tmp_path / "scan.pcd"
        write_pcd(cloud, path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-1]) + "\n")  # drop one data row
        with pytest.raises(ValueError):
            read_pcd(path)

    def test_rejects_missing_field(self, tmp_path, cloud):
        path = tmp_path / "scan.pcd"
        write_pcd(cloud, path)
        text = path.read_text().replace(" intensity", "")
        path.write_text(text)
        with pytest.raises(ValueError):
            read_pcd(path)


class TestCloudDispatch:
    def test_extension_routing(self, tmp_path, cloud):
        pcd = tmp_path / "c.pcd"
        save_cloud(cloud, pcd)
        assert load_cloud(pcd).positions.tobytes() == cloud.positions.tobytes()

        snapped = PointCloud.from_arrays(
            cloud.positions.astype(np.float32).astype(np.float64),
            cloud.reflectivity.astype(np.float32).astype(np.float64),
        )
        binp = tmp_path / "c.bin"
        save_cloud(snapped, binp)
        assert np.array_equal(load_cloud(binp).positions, snapped.positions)

    def test_unknown_extension_rejected(self, tmp_path, cloud):
        with pytest.raises(ValueError):
            save_cloud(cloud, tmp_path / "c.xyz")
        with pytest.raises(ValueError):
            load_cloud(tmp_path / "c.xyz")


class TestTransformDocument:
    def _pair(self):
        ext = Extrinsic(rotation_from_euler_deg(1.0, -2.0, 3.0),
                        np.array([0.1, -0.05, 0.3]))
        intr = Intrinsics.from_params(525.0, 525.0, 319.5, 239.5, 640, 480)
        return ext, intr

    def test_document_layout(self):
        ext, intr = self._pair()
        text = transform_document(ext, intr)
        assert text.endswith("\n")
        doc = json.loads(text)
        assert set(doc) == {"T", "K", "width", "height"}
        t = np.array(doc["T"])
        assert t.shape == (4, 4)
        assert t[3].tolist() == [0.0, 0.0, 0.0, 1.0]
        assert np.array_equal(t[:3, :3], ext.rotation)
        assert np.array_equal(t[:3, 3], ext.translation)
        assert np.array_equal(np.array(doc["K"]), intr.k)
        assert doc["width"] == 640 and doc["height"] == 480

    def test_save_load_round_trip(self, tmp_path):
        ext, intr = self._pair()
        path = tmp_path / "transform.json"
        save_transform(ext, intr, path)
        ext2, intr2 = load_transform(path)
        assert ext2.rotation.tobytes() == ext.rotation.tobytes()
        assert ext2.translation.tobytes() == ext.translation.tobytes()
        assert intr2.k.tobytes() == intr.k.tobytes()
        assert (intr2.width, intr2.height) == (intr.width, intr.height)

    def test_rewrite_is_byte_identical(self, tmp_path):
        ext, intr = self._pair()
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_transform(ext, intr, a)
        save_transform(*load_transform(a), b)
        assert a.read_bytes() == b.read_bytes()

    def test_malformed_documents_rejected(self, tmp_path):
        ext, intr = self._pair()
        good = json.loads(transform_document(ext, intr))
        cases = []
        d = json.loads(json.dumps(good))
        d["T"][3] = [0.0, 0.0, 0.1, 1.0]  # bad bottom row
        cases.append(d)
        d = json.loads(json.dumps(good))
        d["T"] = d["T"][:3]  # wrong shape
        cases.append(d)
        d = json.loads(json.dumps(good))
        del d["K"]
        cases.append(d)
        d = json.loads(json.dumps(good))
        d["width"] = -1
        cases.append(d)
        for i, doc in enumerate(cases):
            path = tmp_path / f"bad{i}.json"
            path.write_text(json.dumps(doc))
            with pytest.raises(ValueError):
                load_transform(path)
