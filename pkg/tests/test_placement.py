import numpy as np
import pytest
from scipy import stats

from fixtures import street_scene
from pocsynth.backends import MockSegmenter
from pocsynth.errors import NoValidRegion
from pocsynth.placement import (
    PlacementConfig,
    bottom_edge_overlap,
    crop_for,
    sample_region,
    valid_area,
)
from pocsynth.types import Region


class CountingSegmenter(MockSegmenter):
    def __init__(self, **kw):
        super().__init__(**kw)
        self.calls = 0

    def segment(self, req):
        self.calls += 1
        return super().segment(req)


def half_mask(size=512):
    valid = np.zeros((size, size), dtype=bool)
    valid[size // 2:] = True
    return valid


def test_unconstrained_skips_backend():
    seg = CountingSegmenter()
    image, _ = street_scene()
    valid = valid_area(image, "unconstrained", seg)
    assert valid.all() and seg.calls == 0


def test_random_mode_skips_backend():
    seg = CountingSegmenter()
    image, _ = street_scene()
    assert valid_area(image, "the road", seg, placement_mode="random").all()
    assert seg.calls == 0


def test_no_target_gives_empty_area():
    image = np.full((32, 32, 3), 120, dtype=np.uint8)
    assert not valid_area(image, "the road", MockSegmenter()).any()


def test_single_rectangle_detection():
    image = np.full((40, 60, 3), 120, dtype=np.uint8)
    truth = np.zeros((40, 60), dtype=bool)
    truth[10:25, 5:50] = True
    image[truth] = (128, 64, 128)
    assert np.array_equal(valid_area(image, "the road", MockSegmenter()), truth)


def test_road_is_bottom_half():
    image, _ = street_scene(128, 96)
    valid = valid_area(image, "the road", MockSegmenter())
    assert valid[48:].all() and not valid[:48].any()


def test_fixed_seed_is_reproducible():
    cfg = PlacementConfig(min_frac=0.25, max_frac=0.25)
    valid = np.ones((200, 300), dtype=bool)
    a = sample_region(valid, cfg, np.random.default_rng(7))
    b = sample_region(valid, cfg, np.random.default_rng(7))
    assert a == b
    assert a.region.w == a.region.h == 50


def test_empty_valid_area():
    with pytest.raises(NoValidRegion):
        sample_region(np.zeros((64, 64), dtype=bool), PlacementConfig(), np.random.default_rng(0))


def test_attempts_exhausted():
    # a single valid pixel can never support 60% of a bottom edge at least 10 px wide
    valid = np.zeros((200, 200), dtype=bool)
    valid[100, 100] = True
    cfg = PlacementConfig(min_frac=0.05, max_frac=0.1, max_attempts=5)
    with pytest.raises(NoValidRegion):
        sample_region(valid, cfg, np.random.default_rng(0))


def test_sizes_within_limits():
    cfg = PlacementConfig(min_frac=0.1, max_frac=0.3)
    valid = np.ones((100, 400), dtype=bool)
    rng = np.random.default_rng(1)
    for _ in range(200):
        out = sample_region(valid, cfg, rng)
        assert 10 <= out.region.w <= 30 and 10 <= out.region.h <= 30


def test_outcome_invariants():
    valid = half_mask(256)
    cfg = PlacementConfig()
    rng = np.random.default_rng(2)
    for _ in range(500):
        out = sample_region(valid, cfg, rng)
        cx, cy = out.center
        assert valid[cy, cx]
        assert out.crop.contains(out.region) and out.crop.inside(256, 256)
        assert out.crop.w == out.crop.h and out.crop.w % cfg.crop_multiple == 0
        assert bottom_edge_overlap(valid, out.region) >= cfg.overlap_threshold


def test_centres_uniform_over_support():
    valid = half_mask(512)
    rng = np.random.default_rng(3)
    cfg = PlacementConfig()
    xs, ys = [], []
    for _ in range(10_000):
        cx, cy = sample_region(valid, cfg, rng).center
        xs.append(cx)
        ys.append(cy)
    grid, _, _ = np.histogram2d(ys, xs, bins=(8, 8), range=((256, 512), (0, 512)))
    assert grid.sum() == 10_000
    assert stats.chisquare(grid.ravel()).pvalue > 0.01


@pytest.mark.parametrize(
    "region, size, multiple, expected_side",
    [
        (Region(10, 10, 20, 30), (200, 200), 64, 64),
        (Region(10, 10, 70, 30), (200, 200), 64, 128),
        (Region(0, 0, 70, 30), (100, 100), 64, 70),   # 128 cannot fit; 64 is too small for the region
        (Region(0, 0, 20, 20), (40, 40), 64, 40),     # no multiple fits; use the whole short side
    ],
)
def test_crop_sizes(region, size, multiple, expected_side):
    crop = crop_for(region, *size, multiple)
    assert crop.w == crop.h == expected_side
    assert crop.contains(region) and crop.inside(*size)


def test_crop_is_shifted_inside_image():
    crop = crop_for(Region(190, 190, 10, 10), 200, 200, 64)
    assert crop == Region(136, 136, 64, 64)


def test_config_validation():
    with pytest.raises(ValueError):
        PlacementConfig(min_frac=0.5, max_frac=0.2)
    with pytest.raises(ValueError):
        PlacementConfig(max_attempts=0)
    with pytest.raises(ValueError):
        PlacementConfig(placement_mode="sideways")
