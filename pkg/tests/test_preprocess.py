import numpy as np
import pytest

from remflow import preprocess, synthgen
from remflow.errors import ValidationError
from remflow.preprocess import AugmentPolicy, augment, standardize


class TestStandardize:
    def test_pad_800x600_to_1024(self):
        img = np.random.default_rng(0).random((600, 800, 3)).astype(np.float32)
        out = standardize(img, 1024)
        assert out.shape == (1024, 1024, 3)
        # left/right margins 112, top/bottom 212
        assert np.array_equal(out[212:812, 112:912], img)
        assert not out[:212].any() and not out[812:].any()
        assert not out[:, :112].any() and not out[:, 912:].any()

    def test_crop_2000x1500_origin(self):
        img = np.arange(2000 * 1500, dtype=np.float32).reshape(2000, 1500)
        img = img / img.max()
        out = standardize(img, 1024)
        expect = img[488:488 + 1024, 238:238 + 1024]
        assert np.array_equal(out[:, :, 0], expect)

    def test_identity_on_exact_size(self):
        img = np.random.default_rng(1).random((1024, 1024, 3)).astype(np.float32)
        assert np.array_equal(standardize(img, 1024), img)

    def test_odd_remainder_goes_bottom_right(self):
        img = np.ones((3, 3), np.float32)
        out = standardize(img, 4)
        # pad_before = 0, pad_after = 1 on each axis
        assert out.shape == (4, 4, 3)
        assert out[3].sum() == 0 and out[:, 3].sum() == 0
        assert out[0, 0, 0] == 1

    def test_grayscale_promoted_to_rgb(self):
        img = np.full((5, 5), 0.25, np.float32)
        out = standardize(img, 5)
        assert out.shape == (5, 5, 3)
        assert np.all(out == 0.25)

    def test_idempotent(self):
        rng = np.random.default_rng(2)
        for shape in ((40, 70), (100, 30, 3), (64, 64, 3)):
            img = rng.random(shape).astype(np.float32)
            once = standardize(img, 48)
            twice = standardize(once, 48)
            assert np.array_equal(once, twice)

    def test_rejects_empty_and_bad_target(self):
        with pytest.raises(ValidationError):
            standardize(np.zeros((0, 4)), 8)
        with pytest.raises(ValidationError):
            standardize(np.zeros((4, 4)), 0)


class TestAugment:
    def test_identity_policy(self, sample_pair):
        policy = AugmentPolicy(hflip_prob=0.0, rotation_degrees_max=0.0,
                               brightness_delta_max=0.0, seed=3)
        out = augment(sample_pair, policy, 0)
        assert np.array_equal(out.photo, sample_pair.photo)
        assert np.array_equal(out.mask, sample_pair.mask)

    def test_hflip_involution(self, sample_pair):
        policy = AugmentPolicy(hflip_prob=1.0, rotation_degrees_max=0.0,
                               brightness_delta_max=0.0, seed=0)
        once = augment(sample_pair, policy, 0)
        assert not np.array_equal(once.mask, sample_pair.mask)
        twice = augment(once, policy, 0)
        assert np.array_equal(twice.photo, sample_pair.photo)
        assert np.array_equal(twice.mask, sample_pair.mask)

    def test_right_angle_rotation_matches_permutation_oracle(self, sample_pair):
        rotated = preprocess._rotate(sample_pair.mask.astype(np.float32),
                                     90.0, order=0) >= 0.5
        assert np.array_equal(rotated, np.rot90(sample_pair.mask, -1))
        rotated_ccw = preprocess._rotate(sample_pair.mask.astype(np.float32),
                                         -90.0, order=0) >= 0.5
        assert np.array_equal(rotated_ccw, np.rot90(sample_pair.mask, 1))
        full = preprocess._rotate(sample_pair.mask.astype(np.float32),
                                  180.0, order=0) >= 0.5
        assert np.array_equal(full, sample_pair.mask[::-1, ::-1])

    def test_deterministic_per_policy_and_index(self, sample_pair):
        policy = AugmentPolicy(seed=11)
        a = augment(sample_pair, policy, 4)
        b = augment(sample_pair, policy, 4)
        assert np.array_equal(a.photo, b.photo)
        assert np.array_equal(a.mask, b.mask)
        c = augment(sample_pair, policy, 5)
        assert not np.array_equal(a.photo, c.photo)

    def test_mask_stays_binary_photo_stays_in_range(self, sample_pair):
        for index in range(10):
            policy = AugmentPolicy(hflip_prob=0.5, rotation_degrees_max=37.0,
                                   brightness_delta_max=0.4, seed=2)
            out = augment(sample_pair, policy, index)
            assert out.mask.dtype == bool
            assert out.photo.min() >= 0.0 and out.photo.max() <= 1.0

    def test_rotation_free_preserves_foreground_count(self, sample_pair):
        count = int(sample_pair.mask.sum())
        for index in range(8):
            policy = AugmentPolicy(hflip_prob=0.7, rotation_degrees_max=0.0,
                                   brightness_delta_max=0.3, seed=9)
            out = augment(sample_pair, policy, index)
            assert int(out.mask.sum()) == count

    def test_brightness_applies_to_photo_only(self, sample_pair):
        policy = AugmentPolicy(hflip_prob=0.0, rotation_degrees_max=0.0,
                               brightness_delta_max=0.5, seed=1)
        out = augment(sample_pair, policy, 0)
        assert np.array_equal(out.mask, sample_pair.mask)
        assert not np.array_equal(out.photo, sample_pair.photo)

    def test_policy_validation(self):
        with pytest.raises(ValidationError):
            AugmentPolicy(hflip_prob=1.5).validate()
        with pytest.raises(ValidationError):
            AugmentPolicy(brightness_delta_max=0.6).validate()
        with pytest.raises(ValidationError):
            AugmentPolicy(rotation_degrees_max=-1).validate()


def test_arbitrary_rotation_keeps_geometry_paired():
    cfg = synthgen.GenerationConfig(image_size=64, hole_count_range=(0, 0))
    pair = synthgen.generate_remnant(5, cfg)
    policy = AugmentPolicy(hflip_prob=0.0, rotation_degrees_max=30.0,
                           brightness_delta_max=0.0, seed=8)
    out = augment(pair, policy, 1)
    # photo foreground (bright region) should track the rotated mask
    from remflow.imageio import luminance

    lum = luminance(out.photo)
    inside = lum[out.mask].mean()
    outside = lum[~out.mask & (lum > 0)].mean() if (~out.mask & (lum > 0)).any() else 0
    assert inside > outside
