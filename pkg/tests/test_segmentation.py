import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import ndimage

from skyfdr.geometry import (pixel_directions, solar_disk_target, solid_angle_map)
from skyfdr.image import RadianceImage
from skyfdr.segmentation import (BORDER, CLOUD, CORONA, DISK, SKY, SegmentationLabel,
                                 angular_distance, cloud_mask, composite_label,
                                 direction_from_az_el, disk_offsets, handdrawn, segment,
                                 solar_mask)
from skyfdr.synth import synthetic_sky


def px(*rgb):
    return np.array(rgb, dtype=float).reshape(1, 1, 3)


class TestCloudMask:
    def test_gray_is_cloud(self):
        for t in (0.01, 0.3, 0.9):
            assert cloud_mask(px(0.4, 0.1, 0.4), t)[0, 0]

    def test_blue_is_sky(self):
        for t in (0.0, 0.3, 0.99):
            assert not cloud_mask(px(0.0, 0.2, 0.7), t)[0, 0]

    def test_black_is_cloud(self):
        assert cloud_mask(px(0, 0, 0))[0, 0]

    @settings(max_examples=50)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_green_is_ignored(self, seed):
        rng = np.random.default_rng(seed)
        img = rng.uniform(0, 100, (6, 6, 3))
        other = img.copy()
        other[..., 1] = rng.permutation(other[..., 1].ravel()).reshape(6, 6)
        np.testing.assert_array_equal(cloud_mask(img), cloud_mask(other))


def _scipy_open_close(mask, d):
    offs = disk_offsets(d)
    r = (d - 1) // 2
    se = np.zeros((d, d), bool)
    se[offs[:, 0] + r, offs[:, 1] + r] = True
    e = ndimage.binary_erosion(mask, se, border_value=1)
    o = ndimage.binary_dilation(e, se, border_value=0)
    c = ndimage.binary_dilation(o, se, border_value=0)
    return ndimage.binary_erosion(c, se, border_value=1)


class TestHanddrawn:
    def test_all_ones(self):
        m = np.ones((30, 30), bool)
        np.testing.assert_array_equal(handdrawn(m, 15), m)

    def test_isolated_pixel(self):
        m = np.zeros((40, 40), bool)
        m[20, 20] = True
        assert not handdrawn(m, 15).any()

    def test_even_rejected(self):
        with pytest.raises(ValueError):
            handdrawn(np.ones((5, 5), bool), 4)

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_scipy(self, seed):
        rng = np.random.default_rng(seed)
        m = ndimage.uniform_filter(rng.uniform(size=(60, 70)), 5) > 0.5
        np.testing.assert_array_equal(handdrawn(m, 7), _scipy_open_close(m, 7))

    def test_disk_boundary_displacement(self):
        yy, xx = np.mgrid[0:160, 0:160]
        m = (yy - 80) ** 2 + (xx - 80) ** 2 <= 50 ** 2
        out = handdrawn(m, 15)
        # Hausdorff distance between the two sets, brute force over boundaries
        def boundary(a):
            return np.argwhere(a & ~ndimage.binary_erosion(a))
        ba, bb = boundary(m), boundary(out)
        d = np.sqrt(((ba[:, None, :] - bb[None, :, :]) ** 2).sum(-1))
        assert max(d.min(1).max(), d.min(0).max()) < 7


class TestSolarMask:
    def test_zenith_centered_and_sized(self):
        disk, corona = solar_mask("sky-angular", 512, [0, 0, 1])
        ii, jj = np.nonzero(disk)
        assert abs(ii.mean() - 255.5) <= 1 and abs(jj.mean() - 255.5) <= 1
        om = solid_angle_map("sky-angular", 512)
        area = disk.sum() * om[om > 0].mean()
        assert area == pytest.approx(5.98e-5, rel=0.25)
        assert not np.any(disk & corona)

    def test_sub_pixel_promoted(self):
        disk, _ = solar_mask("sky-angular", 64, [0, 0, 1])
        assert disk.sum() == 1

    def test_disk_nonempty_everywhere(self, rng):
        for _ in range(5):
            sun = direction_from_az_el(rng.uniform(0, 360), rng.uniform(0, 90))
            for s in (16, 128):
                assert solar_mask("sky-angular", s, sun)[0].sum() >= 1

    def test_corona_within_radius(self):
        sun = direction_from_az_el(40, 30)
        disk, corona = solar_mask("sky-angular", 256, sun)
        dirs, inside = pixel_directions("sky-angular", 256)
        ang = np.degrees(angular_distance(np.where(inside[..., None], dirs, 0), sun))
        assert ang[corona].max() <= 2.5
        assert not np.any(disk & corona)
        assert np.all(corona | disk | (ang > 2.5) | ~inside)

    def test_large_map_matches_cone(self):
        # once pixels are far smaller than the sun, area matching is the cone test
        disk, _ = solar_mask("sky-angular", 4096, [0, 0, 1])
        dirs, inside = pixel_directions("sky-angular", 4096)
        cone = inside & (np.degrees(angular_distance(np.where(inside[..., None], dirs, 0),
                                                     [0, 0, 1])) <= 0.25)
        om = solid_angle_map("sky-angular", 4096)
        assert abs(int(disk.sum()) - int(cone.sum())) <= 0.1 * cone.sum()
        assert om[disk].sum() == pytest.approx(solar_disk_target(), rel=0.05)

    def test_below_horizon(self):
        with pytest.raises(ValueError):
            solar_mask("sky-angular", 64, [0, 1, -0.1])

    def test_rotational_consistency(self):
        s = 256
        dirs, inside = pixel_directions("sky-angular", s)
        for phi in (30.0, 100.0, 215.0):
            a, _ = solar_mask("sky-angular", s, direction_from_az_el(10, 40))
            b, _ = solar_mask("sky-angular", s, direction_from_az_el(10 + phi, 40))
            ca, cb = dirs[a].mean(0), dirs[b].mean(0)
            c, sn = math.cos(math.radians(phi)), math.sin(math.radians(phi))
            rot = np.array([[c, -sn, 0], [sn, c, 0], [0, 0, 1]])
            # within one pixel pitch
            assert np.linalg.norm(rot @ ca - cb) < math.pi / s
            assert abs(int(a.sum()) - int(b.sum())) <= 1


def brute_label(cloud, disk, corona, inside):
    h, w = cloud.shape
    out = np.zeros((h, w), np.uint8)
    for i in range(h):
        for j in range(w):
            if not inside[i, j]:
                out[i, j] = BORDER
            elif disk[i, j]:
                out[i, j] = DISK
            elif corona[i, j]:
                out[i, j] = CORONA
            elif cloud[i, j]:
                out[i, j] = CLOUD
            else:
                out[i, j] = SKY
    return out


class TestComposite:
    def test_empty(self):
        z = np.zeros((16, 16), bool)
        lab = composite_label(z, z, z, "sky-angular", 16).classes
        inside = solid_angle_map("sky-angular", 16) > 0
        assert np.all(lab[inside] == SKY) and np.all(lab[~inside] == BORDER)

    def test_priority(self):
        z = np.zeros((8, 8), bool)
        cloud, corona = z.copy(), z.copy()
        cloud[4, 4] = corona[4, 4] = True
        assert composite_label(cloud, z, corona, "sky-angular", 8).classes[4, 4] == CORONA

    @pytest.mark.parametrize("seed", range(10))
    def test_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        m = [rng.uniform(size=(24, 24)) < p for p in (0.4, 0.1, 0.2)]
        inside = solid_angle_map("sky-angular", 24) > 0
        lab = composite_label(*m, "sky-angular", 24)
        np.testing.assert_array_equal(lab.classes, brute_label(*m, inside))

    def test_idempotent(self, rng):
        m = [rng.uniform(size=(24, 24)) < p for p in (0.4, 0.1, 0.2)]
        lab = composite_label(*m, "sky-angular", 24)
        again = composite_label(*lab.masks(), "sky-angular", 24)
        np.testing.assert_array_equal(again.classes, lab.classes)

    def test_dimension_mismatch(self):
        z = np.zeros((8, 8), bool)
        with pytest.raises(ValueError):
            composite_label(z, z, np.zeros((8, 9), bool), "sky-angular", 8)

    def test_label_type(self):
        with pytest.raises(ValueError):
            SegmentationLabel(np.full((2, 2), 5))


class TestPipeline:
    def test_clear_sky(self):
        # mu-law compression squeezes blue/red ratios of clear sky to ~0.06,
        # so the cut has to sit below that
        img = synthetic_sky(128, cloud_cover=0.0, sun_el=60, seed=1)
        lab = segment(img, direction_from_az_el(90, 60), threshold=0.03).classes
        assert (lab == DISK).sum() >= 1
        assert (lab == CLOUD).sum() == 0

    def test_partly_cloudy(self):
        img = synthetic_sky(128, cloud_cover=0.4, sun_el=60, seed=2)
        lab = segment(img, direction_from_az_el(90, 60), threshold=0.03).classes
        inside = lab != BORDER
        frac = (lab == CLOUD).sum() / inside.sum()
        assert 0.2 < frac < 0.6

    def test_overcast(self):
        data = np.zeros((64, 64, 3))
        inside = solid_angle_map("sky-angular", 64) > 0
        data[inside] = 0.8
        lab = segment(RadianceImage(data, "sky-angular")).classes
        assert np.all(lab[inside] == CLOUD)
        assert np.all(lab[~inside] == BORDER)
