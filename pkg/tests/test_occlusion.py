import numpy as np
import pytest

from msdgr import imageio, occlusion
from msdgr.errors import FormatError, ParameterError
from msdgr.occlusion import OcclusionSpec


def img(rng, shape=(128, 256)):
    return rng.integers(0, 256, size=shape).astype(np.uint8)


def test_upper_band_example(rng):
    rec = occlusion.occlude(img(rng), OcclusionSpec("rectangle-region", 0.30, "upper"))
    assert rec.mask[:39].all() and not rec.mask[39:].any()
    assert rec.fraction == pytest.approx(39 / 128)


@pytest.mark.parametrize("region", occlusion.REGIONS)
@pytest.mark.parametrize("f", [0.1, 0.2, 0.3, 0.4, 0.5])
def test_band_fraction_tolerance(rng, region, f):
    rec = occlusion.occlude(img(rng), OcclusionSpec("rectangle-region", f, region))
    assert abs(rec.fraction - f) <= 0.02
    assert rec.fraction == rec.mask.sum() / rec.mask.size


@pytest.mark.parametrize("kind", ["random-rectangle", "random-shape"])
def test_random_kinds(rng, kind):
    for seed in range(10):
        rec = occlusion.occlude(img(rng), OcclusionSpec(kind, 0.3, seed=seed))
        assert abs(rec.fraction - 0.3) <= 0.02


def test_zero_fraction_noop(rng):
    x = img(rng)
    rec = occlusion.occlude(x, OcclusionSpec(area_fraction=0.0))
    np.testing.assert_array_equal(rec.image, x)
    assert not rec.mask.any()


@pytest.mark.parametrize("f", [1.0, 1.5, -0.1])
def test_unachievable(rng, f):
    with pytest.raises(ParameterError):
        occlusion.occlude(img(rng), OcclusionSpec(area_fraction=f))


def test_seed_determinism(rng):
    x = img(rng)
    spec = OcclusionSpec("random-shape", 0.25, seed=4)
    a, b = occlusion.occlude(x, spec), occlusion.occlude(x, spec)
    np.testing.assert_array_equal(a.image, b.image)
    c = occlusion.occlude(x, OcclusionSpec("random-shape", 0.25, seed=5))
    assert not np.array_equal(a.image, c.image)


def test_mask_is_modified_set(rng):
    x = rng.uniform(0, 1, size=(64, 96))
    rec = occlusion.occlude(x, OcclusionSpec("random-rectangle", 0.2, fill=-1.0, seed=1))
    np.testing.assert_array_equal(rec.image != x, rec.mask)
    rec = occlusion.occlude(x, OcclusionSpec("random-shape", 0.2, seed=1))
    assert ((rec.image >= 0) & (rec.image <= 1)).all()  # noise stays in range


def test_usable_area():
    assert occlusion.usable_area(0, 100) == 100.0
    assert occlusion.usable_area(50, 100) == 50.0
    mask = np.zeros((4, 4), dtype=bool)
    mask[0] = True
    assert occlusion.usable_area(mask, 16) == 75.0
    with pytest.raises(ParameterError):
        occlusion.usable_area(5, 0)
    with pytest.raises(ParameterError):
        occlusion.usable_area(20, 16)
    assert occlusion.usable_area_bin(75.0) == "70%-80%"
    assert occlusion.usable_area_bin(70.0) == "70%-80%"
    assert occlusion.usable_area_bin(55.0) == "50%-60%"
    assert occlusion.usable_area_bin(90.0) is None


def test_pgm_round_trip(tmp_path, rng):
    x = img(rng, (7, 9))
    imageio.write(tmp_path / "a.pgm", x)
    back, maxval = imageio.read(tmp_path / "a.pgm")
    np.testing.assert_array_equal(back, x)
    rgb = rng.integers(0, 1000, size=(3, 4, 3)).astype(np.uint16)
    imageio.write(tmp_path / "b.ppm", rgb, maxval=999)
    back, maxval = imageio.read(tmp_path / "b.ppm")
    assert maxval == 999
    np.testing.assert_array_equal(back, rgb)


def test_pgm_with_comment():
    buf = b"P5\n# made by hand\n2 1\n255\n\x01\x02"
    arr, _ = imageio.decode(buf)
    np.testing.assert_array_equal(arr, [[1, 2]])


@pytest.mark.parametrize("buf", [b"P2\n1 1\n255\n0", b"P5\n2 2\n255\n\x00", b"P5\n2"])
def test_bad_pnm(buf):
    with pytest.raises(FormatError):
        imageio.decode(buf)
