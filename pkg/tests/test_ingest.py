from __future__ import annotations

import json

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import MINI_COCO, MINI_KITTI, MINI_VG, MODELS, SOURCES
from visionkg import vocab
from visionkg.ingest import (
    DatasetDescriptor,
    Flavor,
    IngestError,
    dataset_iri,
    ingest,
    mint_iri,
    parse_minted,
)
from visionkg.ntriples import serialize_ntriples
from visionkg.store import TripleStore
from visionkg.taxonomy import load_alignment
from visionkg.terms import IRI, XSD_DECIMAL, Literal

ALIGNMENT = load_alignment()
BASE = "http://vision.semkg.org/"


def run(flavor, key, path, store=None, strict=True):
    store = store if store is not None else TripleStore()
    report = ingest(store, DatasetDescriptor(key, flavor=flavor), path, ALIGNMENT, strict=strict)
    return store, report


def objects(store, s, p):
    snap = store.snapshot()
    sid, pid = snap.lookup(s), snap.lookup(p)
    if sid is None or pid is None:
        return []
    return [snap.resolve(o) for _, _, o in snap.match(sid, pid, None)]


# -- IRI minting -------------------------------------------------------------


def test_canonical_image_iri():
    assert mint_iri("image", "coco", 1, canonical_id="img01") == IRI(BASE + "image/img01")


def test_minting_is_deterministic():
    assert mint_iri("box", "coco", "42", 7) == mint_iri("box", "coco", "42", 7)


def test_box_template():
    assert mint_iri("box", "kitti", "000012", 3) == IRI(BASE + "box/kitti/000012_3")


def test_illegal_characters_percent_encoded():
    iri = mint_iri("image", "vg", "a b/c?")
    assert iri.value == BASE + "image/vg/a%20b%2Fc%3F"
    assert parse_minted(iri).local_id == "a b/c?"


def test_parse_minted_inverts_box():
    minted = parse_minted(mint_iri("box", "coco", "1", "101"))
    assert (minted.kind, minted.dataset_key, minted.local_id, minted.ordinal) == ("box", "coco", "1", "101")


def test_dataset_key_validated():
    with pytest.raises(ValueError):
        DatasetDescriptor("COCO 2017")


# -- COCO --------------------------------------------------------------------


def test_mini_coco_count():
    store, report = run(Flavor.COCO, "coco", MINI_COCO)
    assert report.triples_inserted == 2 + 2 * 5 + 3 * 10 == 42
    assert (report.images_seen, report.boxes_seen) == (2, 3)
    assert report.labels_unaligned == 0 and len(store) == 42


def test_coco_bbox_converted():
    store, _ = run(Flavor.COCO, "coco", MINI_COCO)
    box = mint_iri("box", "coco", 1, 101)
    geometry = [objects(store, box, p)[0] for p in (vocab.xMin, vocab.yMin, vocab.xMax, vocab.yMax)]
    assert geometry == [Literal(v, XSD_DECIMAL) for v in ("10.5", "20.0", "110.5", "220.0")]


def test_person_label_aligned():
    store, _ = run(Flavor.COCO, "coco", MINI_COCO)
    obj = mint_iri("object", "coco", 1, 101)
    assert vocab.onto("Person") in objects(store, obj, vocab.TYPE)
    assert objects(store, obj, vocab.rawLabel) == [Literal("person")]


def test_empty_coco_has_dataset_triples_only(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text(json.dumps({"images": [], "annotations": [], "categories": []}))
    store, report = run(Flavor.COCO, "coco", path)
    assert report.triples_inserted == 2
    assert objects(store, dataset_iri("coco"), vocab.TYPE) == [vocab.Dataset]


def test_unaligned_label_keeps_object(tmp_path):
    doc = {
        "images": [{"id": 1, "file_name": "a.jpg", "width": 1, "height": 1}],
        "annotations": [{"id": 5, "image_id": 1, "category_id": 9, "bbox": [0, 0, 1, 1]}],
        "categories": [{"id": 9, "name": "unicorn"}, {"id": 10, "name": "unicorn"}],
    }
    path = tmp_path / "u.json"
    path.write_text(json.dumps(doc))
    _, report = run(Flavor.COCO, "coco", path)
    assert report.triples_inserted == 2 + 5 + 9
    assert report.unaligned_labels == ["unicorn"] and report.labels_unaligned == 1


def test_missing_image_strict_and_lenient(tmp_path):
    doc = {"images": [], "annotations": [{"id": 1, "image_id": 3, "category_id": 1, "bbox": [0, 0, 1, 1]}],
           "categories": [{"id": 1, "name": "person"}]}  # fmt: skip
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(IngestError, match=r"annotations\[0\]"):
        run(Flavor.COCO, "coco", path)
    _, report = run(Flavor.COCO, "coco", path, strict=False)
    assert report.triples_inserted == 2 and len(report.diagnostics) == 1


def test_malformed_json_has_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"images": [\n  {"id": 1,, }]}')
    with pytest.raises(IngestError, match=r"bad\.json:2:12"):
        run(Flavor.COCO, "coco", path)


def test_degenerate_box_rejected(tmp_path):
    doc = {"images": [{"id": 1, "file_name": "a.jpg"}],
           "annotations": [{"id": 1, "image_id": 1, "category_id": 1, "bbox": [5, 5, -2, 3]}],
           "categories": [{"id": 1, "name": "person"}]}  # fmt: skip
    path = tmp_path / "d.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(IngestError, match="degenerate"):
        run(Flavor.COCO, "coco", path)
    _, report = run(Flavor.COCO, "coco", path, strict=False)
    assert report.boxes_seen == 0 and report.diagnostics


# -- KITTI -------------------------------------------------------------------


def test_mini_kitti_count():
    _, report = run(Flavor.KITTI, "kitti", MINI_KITTI)
    assert report.triples_inserted == 2 + 2 * 3 + 3 * 10 == 38
    assert report.boxes_seen == 3


def test_kitti_pedestrian_line():
    store, _ = run(Flavor.KITTI, "kitti", MINI_KITTI)
    obj = mint_iri("object", "kitti", "000012", 0)
    assert objects(store, obj, vocab.rawLabel) == [Literal("Pedestrian")]
    assert vocab.onto("Pedestrian") in objects(store, obj, vocab.TYPE)
    box = mint_iri("box", "kitti", "000012", 0)
    assert objects(store, box, vocab.xMax) == [Literal("810.73", XSD_DECIMAL)]


def test_kitti_dontcare_only(tmp_path):
    (tmp_path / "000001.txt").write_text("DontCare -1 -1 -10 1 2 3 4 -1 -1 -1 -1000 -1000 -1000 -10\n")
    _, report = run(Flavor.KITTI, "kitti", tmp_path)
    assert report.boxes_seen == 0 and report.triples_inserted == 2 + 3


def test_kitti_short_line_reports_file_and_line(tmp_path):
    (tmp_path / "000001.txt").write_text("Car 0 0\n")
    with pytest.raises(IngestError, match=r"000001\.txt:1"):
        run(Flavor.KITTI, "kitti", tmp_path)


# -- Visual Genome -----------------------------------------------------------


def test_mini_vg_count():
    _, report = run(Flavor.VG, "vg", MINI_VG)
    assert report.triples_inserted == 2 + 1 * 5 + 2 * 10 + 1 * 5 == 32
    assert report.relations_seen == 1


def test_vg_relation_shape():
    store, _ = run(Flavor.VG, "vg", MINI_VG)
    rel = mint_iri("relation", "vg", 2345, 0)
    subj = objects(store, rel, vocab.relSubject)[0]
    obj = objects(store, rel, vocab.relObject)[0]
    assert vocab.onto("Man") in objects(store, subj, vocab.TYPE)
    assert vocab.onto("Cat") in objects(store, obj, vocab.TYPE)
    assert objects(store, rel, vocab.relPredicateText) == [Literal("holding")]


def test_vg_empty_relationships_and_undeclared_reference(tmp_path):
    doc = [{"image_id": 1, "objects": [{"object_id": 1, "names": ["cat"], "x": 0, "y": 0, "w": 1, "h": 1}],
            "relationships": [{"predicate": "on", "subject_id": 1, "object_id": 99}]}]  # fmt: skip
    path = tmp_path / "vg.json"
    path.write_text(json.dumps(doc))
    _, report = run(Flavor.VG, "vg", path, strict=False)
    assert report.triples_inserted == 2 + 3 + 10
    assert report.relations_seen == 0 and "object_id" in report.diagnostics[0]


# -- models ------------------------------------------------------------------


def test_frcnn_model_triples(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps(json.loads(MODELS.read_text())[:1]))
    store, report = run(Flavor.MODELS, "models", path)
    assert report.triples_inserted == 3 + 6
    ev = mint_iri("evaluation", "models", "frcnn-kitti", 0)
    assert objects(store, ev, vocab.metricValue) == [Literal("0.72", XSD_DECIMAL)]
    assert objects(store, ev, vocab.sceneTag) == [Literal("crowded")]


def test_model_without_evaluations(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps([{"model_id": "m", "trained_on": ["coco"], "detects": ["car"], "evaluations": []}]))
    _, report = run(Flavor.MODELS, "models", path)
    assert report.triples_inserted == 3


def test_model_unknown_class_kept_as_literal(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps([{"model_id": "m", "trained_on": [], "detects": ["Griffin"], "evaluations": []}]))
    store, report = run(Flavor.MODELS, "models", path)
    assert objects(store, mint_iri("model", "models", "m"), vocab.detectsClass) == [Literal("Griffin")]
    assert report.diagnostics and report.unaligned_labels == ["Griffin"]


# -- store-level properties --------------------------------------------------


@pytest.mark.parametrize("key, flavor, path", SOURCES)
def test_reingest_inserts_nothing(key, flavor, path):
    store, _ = run(flavor, key, path)
    _, again = run(flavor, key, path, store=store)
    assert again.triples_inserted == 0


@pytest.mark.parametrize("key, flavor, path", SOURCES)
def test_deterministic_dumps(key, flavor, path):
    a, _ = run(flavor, key, path)
    b, _ = run(flavor, key, path)
    assert serialize_ntriples(a.triples()) == serialize_ntriples(b.triples())


def test_canonical_id_merges_images(tmp_path):
    store, _ = run(Flavor.COCO, "coco", MINI_COCO)
    run(Flavor.COCO, "cocostuff", MINI_COCO.parent / "coco_shared.json", store=store)
    img = IRI(BASE + "image/img01")
    assert sorted(objects(store, img, vocab.fromDataset), key=str) == [dataset_iri("coco"), dataset_iri("cocostuff")]
    snap = store.snapshot()
    images = {s for s, _, _ in snap.match(None, snap.lookup(vocab.TYPE), snap.lookup(vocab.Image))}
    assert len(images) == 2  # img01 (shared) and coco/2


def test_every_box_has_valid_geometry(raw_mixed_store):
    snap = raw_mixed_store.snapshot()
    boxes = [s for s, _, _ in snap.match(None, snap.lookup(vocab.TYPE), snap.lookup(vocab.Box))]
    assert len(boxes) == 8
    for b in boxes:
        vals = {}
        for pred in (vocab.xMin, vocab.yMin, vocab.xMax, vocab.yMax):
            (hit,) = list(snap.match(b, snap.lookup(pred), None))
            vals[pred] = float(snap.resolve(hit[2]).lexical)
        assert vals[vocab.xMin] <= vals[vocab.xMax] and vals[vocab.yMin] <= vals[vocab.yMax]


coord = st.integers(0, 500)
size = st.integers(0, 300)
labels = st.sampled_from(["person", "car", "cat", "unicorn", "dog", "blob"])


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(
    st.lists(st.tuples(st.booleans(), st.booleans()), max_size=6),
    st.lists(st.tuples(st.integers(0, 5), labels, coord, coord, size, size), max_size=15),
)
def test_coco_count_formula(tmp_path, images, annotations):
    doc = {"images": [], "annotations": [], "categories": []}
    per_image = []
    for i, (has_w, has_h) in enumerate(images):
        rec = {"id": i, "file_name": f"{i}.jpg"}
        if has_w:
            rec["width"] = 100
        if has_h:
            rec["height"] = 100
        doc["images"].append(rec)
        per_image.append(3 + has_w + has_h)
    names = sorted({a[1] for a in annotations})
    doc["categories"] = [{"id": j, "name": n} for j, n in enumerate(names)]
    expected = 2 + sum(per_image)
    unaligned = set()
    for k, (img, label, x, y, w, h) in enumerate(annotations):
        if img >= len(images):
            continue
        doc["annotations"].append({"id": k, "image_id": img, "category_id": names.index(label), "bbox": [x, y, w, h]})
        aligned = ALIGNMENT.align("coco", label) is not None
        expected += 10 if aligned else 9
        if not aligned:
            unaligned.add(label)
    path = tmp_path / "synthetic.json"
    path.write_text(json.dumps(doc))
    _, report = run(Flavor.COCO, "coco", path)
    assert report.triples_inserted == expected
    assert sorted(report.unaligned_labels) == sorted(unaligned)
