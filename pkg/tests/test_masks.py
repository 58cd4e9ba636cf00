"""Mask bitmaps, RLE codec, manifest and image-directory loading."""

import numpy as np
import pytest
from PIL import Image

from maskcalib import (
    DimensionMismatchError,
    EmptyMaskSetError,
    Mask,
    PixelCoord,
    build_maskset,
    load_masks,
    manifest_text,
    rasterize_membership,
    rle_decode,
    rle_encode,
    save_manifest,
)


def random_bitmaps(rng, n, height, width, p=0.3):
    return [rng.random((height, width)) < p for _ in range(n)]


class TestRle:
    def test_decode_hand_example(self):
        # Counts [3, 2, 3] on a 2x4 image: flat pixels 3 and 4 are set,
        # which land at (u=3, v=0) and (u=0, v=1).  Worked out by hand.
        bm = rle_decode([3, 2, 3], height=2, width=4)
        assert bm.shape == (2, 4)
        assert bm.dtype == bool
        expected = np.zeros((2, 4), dtype=bool)
        expected[0, 3] = True
        expected[1, 0] = True
        assert np.array_equal(bm, expected)
        assert int(bm.sum()) == 2

    def test_encode_hand_example(self):
        bm = np.zeros((2, 4), dtype=bool)
        bm[0, 3] = True
        bm[1, 0] = True
        assert rle_encode(bm) == [3, 2, 3]

    def test_leading_set_pixel_encodes_zero_first(self):
        bm = np.array([[True, False]])
        assert rle_encode(bm) == [0, 1, 1]

    def test_degenerate_uniform_bitmaps(self):
        assert rle_encode(np.zeros((3, 5), dtype=bool)) == [15]
        assert rle_encode(np.ones((3, 5), dtype=bool)) == [0, 15]

    def test_round_trip_random(self):
        rng = np.random.default_rng(0)
        for bm in random_bitmaps(rng, 25, 17, 23):
            counts = rle_encode(bm)
            assert sum(counts) == 17 * 23
            assert np.array_equal(rle_decode(counts, 17, 23), bm)

    def test_decode_rejects_bad_counts(self):
        with pytest.raises(ValueError):
            rle_decode([3, -1, 6], 2, 4)
        with pytest.raises(ValueError):
            rle_decode([3, 2, 4], 2, 4)  # sums to 9, image has 8


class TestMask:
    def test_area_and_bbox(self):
        bm = np.zeros((6, 8), dtype=bool)
        bm[2:4, 3:6] = True
        m = Mask.from_bitmap(7, bm)
        assert m.id == 7
        assert m.area == 6
        assert m.bbox == (3, 2, 5, 3)  # inclusive corners

    def test_empty_bitmap_bbox_sentinel(self):
        m = Mask.from_bitmap(0, np.zeros((4, 4), dtype=bool))
        assert m.area == 0
        assert m.bbox == (0, 0, -1, -1)

    def test_bitmap_is_read_only(self):
        m = Mask.from_bitmap(0, np.ones((2, 2), dtype=bool))
        with pytest.raises(ValueError):
            m.bitmap[0, 0] = False


class TestBuildMaskSet:
    def test_drops_small_and_records_ids(self):
        big = np.zeros((20, 20), dtype=bool)
        big[:10] = True
        tiny = np.zeros((20, 20), dtype=bool)
        tiny[0, :5] = True
        ms = build_maskset([big, tiny, big], [0, 1, 2], 20, 20, min_mask_area=100)
        assert [m.id for m in ms] == [0, 2]
        assert ms.dropped == (1,)

    def test_all_dropped_raises(self):
        tiny = np.zeros((10, 10), dtype=bool)
        tiny[0, 0] = True
        with pytest.raises(EmptyMaskSetError):
            build_maskset([tiny], [0], 10, 10, min_mask_area=100)

    def test_shape_mismatch_raises(self):
        with pytest.raises(DimensionMismatchError):
            build_maskset([np.ones((5, 5), dtype=bool)], [0], 10, 10,
                          min_mask_area=1)

    def test_overlap_ratio(self):
        full = np.ones((4, 4), dtype=bool)
        ms = build_maskset([full, full], [0, 1], 4, 4, min_mask_area=1)
        assert ms.overlap_ratio == 1.0

        left = np.zeros((4, 4), dtype=bool)
        left[:, :2] = True
        right = ~left
        ms = build_maskset([left, right], [0, 1], 4, 4, min_mask_area=1)
        assert ms.overlap_ratio == 0.0

        shifted = np.zeros((4, 4), dtype=bool)
        shifted[:, 1:3] = True  # overlaps `left` on one column: 4 of 16 pixels
        ms = build_maskset([left, shifted], [0, 1], 4, 4, min_mask_area=1)
        assert ms.overlap_ratio == 0.25

    def test_disjoint_masks_partition_area(self):
        rng = np.random.default_rng(1)
        owner = rng.integers(0, 3, size=(12, 12))
        bitmaps = [owner == k for k in range(3)]
        ms = build_maskset(bitmaps, range(3), 12, 12, min_mask_area=1)
        assert ms.overlap_ratio == 0.0
        assert sum(m.area for m in ms) == 144

    def test_by_id(self):
        bm = np.ones((4, 4), dtype=bool)
        ms = build_maskset([bm, bm], [2, 5], 4, 4, min_mask_area=1)
        assert ms.by_id(5).id == 5
        with pytest.raises(KeyError):
            ms.by_id(3)


class TestManifest:
    def test_canonical_text_exact(self):
        bm = rle_decode([3, 2, 3], 2, 4)
        ms = build_maskset([bm], [0], 4, 2, min_mask_area=1)
        expected = '{"width":4,"height":2,"masks":[{"id":0,"counts":[3,2,3]}]}\n'
        assert manifest_text(ms) == expected

    def test_save_load_round_trip_bitwise(self, tmp_path):
        rng = np.random.default_rng(2)
        bitmaps = random_bitmaps(rng, 4, 30, 40)
        ms = build_maskset(bitmaps, [1, 2, 5, 9], 40, 30, min_mask_area=1)
        path = tmp_path / "masks.json"
        save_manifest(ms, path)
        loaded = load_masks(path, min_mask_area=1)
        assert [m.id for m in loaded] == [1, 2, 5, 9]
        for orig, back in zip(ms, loaded):
            assert np.array_equal(orig.bitmap, back.bitmap)
        # Re-encoding the loaded set reproduces the file byte for byte.
        assert manifest_text(loaded).encode("ascii") == path.read_bytes()

    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "masks.json"
        path.write_text('{"width":4,"height":2,"masks":[],"extra":1}')
        with pytest.raises(ValueError):
            load_masks(path)
        path.write_text(
            '{"width":4,"height":2,"masks":[{"id":0,"counts":[8],"score":0.5}]}')
        with pytest.raises(ValueError):
            load_masks(path)

    def test_non_ascending_ids_rejected(self, tmp_path):
        path = tmp_path / "masks.json"
        path.write_text('{"width":4,"height":2,"masks":'
                        '[{"id":1,"counts":[0,8]},{"id":1,"counts":[0,8]}]}')
        with pytest.raises(ValueError):
            load_masks(path, min_mask_area=1)

    def test_bad_run_sum_rejected(self, tmp_path):
        path = tmp_path / "masks.json"
        path.write_text('{"width":4,"height":2,"masks":[{"id":0,"counts":[3,2]}]}')
        with pytest.raises(ValueError):
            load_masks(path, min_mask_area=1)


class TestImageDirectory:
    def _write(self, path, name, arr):
        Image.fromarray(arr.astype(np.uint8) * 255).save(path / name)

    def test_loads_sorted_and_drops_empty(self, tmp_path):
        h, w = 48, 64
        a = np.zeros((h, w));  a[5:25, 5:45] = 1        # area 800
        empty = np.zeros((h, w))
        c = np.zeros((h, w));  c[30:45, 10:40] = 1      # area 450
        self._write(tmp_path, "mask_00.png", a)
        self._write(tmp_path, "mask_01.png", empty)
        self._write(tmp_path, "mask_02.png", c)
        ms = load_masks(tmp_path)
        assert (ms.width, ms.height) == (w, h)
        assert [m.id for m in ms] == [0, 2]
        assert ms.dropped == (1,)
        assert ms.by_id(0).area == 800
        assert ms.by_id(2).area == 450

    def test_size_mismatch_raises(self, tmp_path):
        self._write(tmp_path, "mask_00.png", np.ones((10, 10)))
        self._write(tmp_path, "mask_01.png", np.ones((10, 12)))
        with pytest.raises(DimensionMismatchError):
            load_masks(tmp_path, min_mask_area=1)

    def test_empty_directory_raises(self, tmp_path):
        with pytest.raises(ValueError):
            load_masks(tmp_path)

    def test_all_empty_masks_raise(self, tmp_path):
        self._write(tmp_path, "mask_00.png", np.zeros((10, 10)))
        with pytest.raises(EmptyMaskSetError):
            load_masks(tmp_path)


class TestMembership:
    def test_floor_rule_single_pixel(self):
        bm = np.zeros((32, 24), dtype=bool)
        bm[20, 10] = True  # row v=20, column u=10
        m = Mask.from_bitmap(0, bm)
        for du in (0.0, 0.25, 0.5, 0.99):
            for dv in (0.0, 0.25, 0.5, 0.99):
                assert rasterize_membership(m, PixelCoord(10 + du, 20 + dv))
        assert not rasterize_membership(m, PixelCoord(11.0, 20.5))
        assert not rasterize_membership(m, PixelCoord(10.5, 21.0))
        assert not rasterize_membership(m, PixelCoord(9.999, 20.5))

    def test_out_of_frame_is_false(self):
        m = Mask.from_bitmap(0, np.ones((4, 6), dtype=bool))
        assert rasterize_membership(m, PixelCoord(0.0, 0.0))
        assert rasterize_membership(m, PixelCoord(5.99, 3.99))
        assert not rasterize_membership(m, PixelCoord(-0.001, 1.0))
        assert not rasterize_membership(m, PixelCoord(1.0, -0.001))
        assert not rasterize_membership(m, PixelCoord(6.0, 1.0))
        assert not rasterize_membership(m, PixelCoord(1.0, 4.0))
