import numpy as np
import pytest

from camfault.presets import (
    FAMILY_COUNTS,
    Family,
    PresetError,
    apply,
    catalog_from_text,
    catalog_to_text,
    expand_selection,
    get_preset,
    preset_catalog,
    preset_names,
)
from camfault.raster import ImageBuffer, SeedSpec

from conftest import random_image


def test_catalog_has_130_entries():
    assert len(preset_catalog()) == 130


def test_catalog_family_breakdown():
    counts = {}
    for preset in preset_catalog():
        counts[preset.family] = counts.get(preset.family, 0) + 1
    assert counts == FAMILY_COUNTS


def test_names_unique():
    names = preset_names()
    assert len(set(names)) == len(names)


def test_documented_names_present():
    names = set(preset_names())
    for expected in ("BRIGHT_0", "BRIGHT_0.6", "BRIGHT_1.5", "BRIGHT_15", "SHARP_0",
                     "BLUR_12", "DEAPIX-vcl", "DEAPIX-3l", "CHROMAB2-b", "NBAYF",
                     "DEMOS", "FLARE", "BAND1", "NOISE_0.2", "NOISE_5"):
        assert expected in names, expected


def test_sharp_alias_resolves_outside_catalog():
    preset = get_preset("SHARP_-3.5")
    assert preset.params["factor"] == -3.5
    assert "SHARP_-3.5" not in preset_names()


def test_unknown_preset_suggests_nearest():
    with pytest.raises(PresetError) as err:
        get_preset("BLUR_99")
    assert "BLUR_9" in str(err.value)


def test_catalog_closure_all_apply_on_8x8(rng):
    img = random_image(rng, 8, 8)
    for preset in preset_catalog():
        out = apply(preset, img, SeedSpec(1, "closure", preset.name))
        if preset.family is Family.NO_DEMOSAICING:
            assert (out.width, out.height) == (16, 16)
        else:
            assert (out.width, out.height) == (8, 8)


def test_bright_0_blacks_everything(rng):
    img = random_image(rng, 10, 10)
    out = apply("BRIGHT_0", img)
    assert int(out.data.max()) == 0


def test_apply_deterministic_for_every_stochastic_preset(rng):
    img = random_image(rng, 16, 16)
    for preset in preset_catalog():
        if not preset.stochastic:
            continue
        seed = SeedSpec(42, "img_0", preset.name)
        assert apply(preset, img, seed) == apply(preset, img, seed), preset.name


def test_apply_input_not_modified(rng):
    img = random_image(rng, 12, 12)
    before = img.data.copy()
    apply("NOISE_5", img, SeedSpec(0, "x", "NOISE_5"))
    assert np.array_equal(img.data, before)


def test_stochastic_flags():
    by_name = {p.name: p for p in preset_catalog()}
    assert by_name["FLARE"].stochastic
    assert by_name["NOISE_1"].stochastic
    assert by_name["DEAPIX50"].stochastic
    assert not by_name["DEAPIX1"].stochastic
    assert not by_name["DEAPIX-vcl"].stochastic
    assert not by_name["BLUR_5"].stochastic
    assert not by_name["BAND1"].stochastic


def test_seed_spec_preset_name_normalized(rng):
    # the stream is keyed by the preset actually applied, so a stale
    # preset_name in the SeedSpec cannot desynchronize outputs
    img = random_image(rng, 16, 16)
    a = apply("NOISE_1", img, SeedSpec(7, "img", "NOISE_1"))
    b = apply("NOISE_1", img, SeedSpec(7, "img", "something-else"))
    assert a == b


def test_interpolated_levels_flagged():
    by_name = {p.name: p for p in preset_catalog()}
    assert by_name["BRIGHT_2"].params.get("interpolated") is True
    assert "interpolated" not in by_name["BRIGHT_0.6"].params
    assert by_name["NOISE_1.5"].params.get("interpolated") is True
    assert "interpolated" not in by_name["NOISE_5"].params


def test_catalog_text_roundtrip():
    text = catalog_to_text()
    assert len(text.splitlines()) == 130
    assert catalog_from_text(text) == preset_catalog()


def test_expand_selection_glob():
    assert len(expand_selection(["BLUR_*"])) == 25
    assert expand_selection(["BRIGHT_0"]) == ["BRIGHT_0"]
    everything = expand_selection(["*"])
    assert everything == preset_names()


def test_expand_selection_unknown_is_error():
    with pytest.raises(PresetError):
        expand_selection(["FOG_1"])
    with pytest.raises(PresetError):
        expand_selection(["NOPE_*"])


def test_expand_selection_dedupes_and_orders():
    out = expand_selection(["BLUR_2", "BLUR_*", "BAND1"])
    assert out[0] == "BAND1"
    assert out.count("BLUR_2") == 1
    assert len(out) == 26
