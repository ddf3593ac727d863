import numpy as np
import pytest

from cxrbias.errors import MissingMaskError, ParameterError, ShapeError
from cxrbias.imgproc.enhance import clahe, gamma, hist_eq, unsharp
from cxrbias.imgproc.image import resize
from cxrbias.imgproc.morph import apply_mask, binarize, dilate, upscale
from cxrbias.imgproc.pipeline import (
    STANDARD_RECIPES, AugmentRecipe, Clahe, Gamma, HistEq, PipelineConfig, Unsharp, apply_recipe,
    draw_augment, fit_mask, hflip, parse_step, preprocess_stage2, random_augment, rotate,
)


def _img(seed=0, shape=(40, 40)):
    return np.random.default_rng(seed).integers(0, 256, shape) / 255.0


def test_recipe_applies_steps_in_order():
    img = _img()
    r = AugmentRecipe((HistEq(), Gamma(1.5)))
    np.testing.assert_array_equal(r(img), gamma(hist_eq(img), 1.5))
    swapped = AugmentRecipe((Gamma(1.5), HistEq()))
    assert not np.array_equal(swapped(img), r(img))


def test_identity_recipe_copies():
    img = _img()
    out = apply_recipe(img, AugmentRecipe())
    np.testing.assert_array_equal(out, img)
    assert out is not img


def test_step_parsing_round_trip():
    steps = [{"op": "hist_eq"}, {"op": "gamma", "G": 2.0}, {"op": "clahe", "clip": 10, "tiles": [4, 4]},
             {"op": "unsharp", "radius": 2.0, "amount": 0.5}]
    r = AugmentRecipe.parse(steps)
    assert r.steps == (HistEq(), Gamma(2.0), Clahe(10.0, (4, 4)), Unsharp(2.0, 0.5))
    assert AugmentRecipe.parse(r.to_list()) == r
    with pytest.raises(ParameterError):
        parse_step({"op": "sharpen"})
    with pytest.raises(ParameterError):
        Gamma(0)


def test_standard_recipes_cover_the_comparison_set():
    assert list(STANDARD_RECIPES)[0] == "identity"
    assert {"hist_eq", "hist_eq+gamma1.5", "gamma1.5+hist_eq", "clahe", "unsharp"} <= set(STANDARD_RECIPES)


def test_fit_mask_is_upscale_resize_binarize_dilate():
    mask = np.zeros((16, 16), dtype=bool)
    mask[4:12, 3:9] = True
    cfg = PipelineConfig(mask_size=16, upscale_factor=4, dilate_radius=2)
    expected = dilate(binarize(resize(upscale(mask.astype(float), 4), 30, 20, "bilinear")), 2)
    np.testing.assert_array_equal(fit_mask(mask, (20, 30), cfg), expected)


def test_preprocess_stage2_composition():
    img = _img(1, (48, 48))
    mask = np.zeros((16, 16), dtype=bool)
    mask[3:13, 4:12] = True
    recipe = AugmentRecipe((Clahe(8.0, (4, 4)), Unsharp(1.0, 0.7)))
    cfg = PipelineConfig(mask_size=16, upscale_factor=2, dilate_radius=3, recipe=recipe)
    m = dilate(binarize(resize(upscale(mask.astype(float), 2), 48, 48, "bilinear")), 3)
    expected = unsharp(clahe(apply_mask(img, m), 8.0, (4, 4)), 1.0, 0.7)
    np.testing.assert_array_equal(preprocess_stage2(img, mask, cfg), expected)


def test_missing_mask_policies():
    img = _img()
    with pytest.raises(MissingMaskError):
        preprocess_stage2(img, None, PipelineConfig())
    cfg = PipelineConfig(recipe=AugmentRecipe((HistEq(),)), missing_mask_policy="passthrough")
    np.testing.assert_array_equal(preprocess_stage2(img, None, cfg), hist_eq(img))


def test_wrong_mask_size_and_bad_config():
    with pytest.raises(ShapeError):
        preprocess_stage2(_img(), np.ones((10, 10), dtype=bool), PipelineConfig())
    with pytest.raises(ParameterError):
        PipelineConfig(upscale_factor=0)
    with pytest.raises(ParameterError):
        PipelineConfig(missing_mask_policy="skip")
    cfg = PipelineConfig.from_dict({"recipe": [{"op": "gamma", "G": 2}], "dilate_radius": 1})
    assert cfg.recipe == AugmentRecipe((Gamma(2.0),))
    assert PipelineConfig.from_dict(cfg.to_dict()) == cfg


def test_hflip_and_rotate():
    img = _img(2, (9, 9))
    np.testing.assert_array_equal(hflip(hflip(img)), img)
    np.testing.assert_array_equal(rotate(img, 0), img)
    np.testing.assert_allclose(rotate(img, 90), np.rot90(img), atol=1e-12)


def test_random_augment_is_seeded():
    img = _img(3, (12, 12))
    a = random_augment(img, 10.0, 0.5, seed=5)
    np.testing.assert_array_equal(a, random_augment(img, 10.0, 0.5, seed=5))
    rng = np.random.default_rng(0)
    for _ in range(50):
        angle, _ = draw_augment(rng, 10.0, 0.5)
        assert -10 <= angle <= 10
    with pytest.raises(ParameterError):
        random_augment(img, 10.0, 1.5, seed=0)
