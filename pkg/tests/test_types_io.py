import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pocsynth.catalog import (
    ANOMALY_PROMPTS,
    anomaly_test_convention,
    catalog_names,
    cityscapes_convention,
    load_catalog,
)
from pocsynth.errors import CatalogNotFound, LabelValueError
from pocsynth.io import (
    decode_label_map,
    decode_png,
    decode_score_map,
    encode_label_map,
    encode_png,
    encode_score_map,
)
from pocsynth.types import LabelConvention, Region


def test_anomaly_catalog():
    cat = load_catalog("poc-alt-25")
    assert len(cat) == 25
    assert {"garbage bag", "wheelie bin", "stroller"} <= set(cat.prompts)
    assert cat.class_names[cat.prompts.index("bird flying")] == "bird"


def test_id_catalog():
    cat = load_catalog("cityscapes-id-6")
    assert set(cat.prompts) == {"rider", "bicycle", "motorcycle", "bus", "person", "car"}
    assert len(cat) == 6


def test_other_catalogs():
    assert len(load_catalog("pascal-animals-6")) == 6
    coco = load_catalog("coco-80")
    assert len(coco) == 80 and len(set(coco.prompts)) == 80
    assert sorted(catalog_names()) == ["cityscapes-id-6", "coco-80", "pascal-animals-6", "poc-alt-25"]


def test_unknown_catalog():
    with pytest.raises(CatalogNotFound):
        load_catalog("bogus")


def test_anomaly_prompts_are_unique():
    assert len(set(ANOMALY_PROMPTS)) == 25


def test_convention_rejects_collisions():
    with pytest.raises(ValueError):
        LabelConvention(id_class_ids={0, 1}, ood_id=1)
    with pytest.raises(ValueError):
        LabelConvention(id_class_ids={0}, ood_id=1, ignore_id=1)
    with pytest.raises(ValueError):
        LabelConvention(id_class_ids={0}, ood_id=1, new_class_ids={"cat": 0})


def test_extension_ids_follow_train_ids():
    conv = cityscapes_convention(["bird", "cat", "cow"])
    assert dict(conv.new_class_ids) == {"bird": 19, "cat": 20, "cow": 21}
    assert conv.class_id_for("car", "id-synthetic") == 13
    assert conv.class_id_for("cat", "new-class") == 20


def test_anomaly_convention_defaults():
    conv = anomaly_test_convention()
    assert (conv.ood_id, conv.ignore_id) == (1, 255)
    assert conv.class_id_for("car", "id-synthetic") == 0
    assert conv.class_id_for("skunk", "ood") == 1


def test_label_roundtrip_all_ignore():
    conv = anomaly_test_convention()
    labels = np.full((5, 7), 255, dtype=np.uint8)
    assert np.array_equal(decode_label_map(encode_label_map(labels, conv)), labels)


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 24), st.integers(1, 24)), elements=st.sampled_from([0, 1, 255])))
def test_label_roundtrip_bit_exact(labels):
    out = decode_label_map(encode_label_map(labels, anomaly_test_convention()))
    assert out.dtype == np.uint8 and np.array_equal(out, labels)


def test_label_out_of_range():
    conv = cityscapes_convention()
    with pytest.raises(LabelValueError):
        encode_label_map(np.array([[0, 300]]), conv)
    with pytest.raises(LabelValueError):
        encode_label_map(np.array([[0, 77]]), conv)


def test_png_roundtrip():
    img = np.random.default_rng(0).integers(0, 256, (9, 11, 3), dtype=np.uint8)
    assert np.array_equal(decode_png(encode_png(img)), img)


def test_score_map_format():
    scores = np.arange(6, dtype=np.float32).reshape(2, 3) / 7
    data = encode_score_map(scores)
    assert data[:8] == b"POCSCORE"
    assert int.from_bytes(data[8:12], "little") == 3
    assert int.from_bytes(data[12:16], "little") == 2
    assert len(data) == 16 + 4 * 6
    assert np.array_equal(decode_score_map(data), scores)


def test_score_map_rejects_bad_input():
    with pytest.raises(ValueError):
        decode_score_map(b"NOTSCORE" + bytes(8))
    with pytest.raises(ValueError):
        decode_score_map(encode_score_map(np.zeros((2, 2)))[:-1])


def test_region_geometry():
    r = Region(2, 3, 4, 5)
    assert (r.x1, r.y1) == (6, 8)
    assert r.inside(6, 8) and not r.inside(5, 8)
    assert Region(0, 0, 10, 10).contains(r)
    with pytest.raises(ValueError):
        Region(0, 0, 0, 3)
