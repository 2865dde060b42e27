from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from visionkg.ingest import DatasetDescriptor, Flavor, ingest  # noqa: E402
from visionkg.store import TripleStore  # noqa: E402
from visionkg.taxonomy import load_alignment, load_taxonomy, materialize  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"
QUERIES = Path(__file__).parents[1] / "src" / "visionkg" / "data" / "queries"

MINI_COCO = FIXTURES / "mini_coco.json"
MINI_KITTI = FIXTURES / "mini_kitti"
MINI_VG = FIXTURES / "mini_vg.json"
VG_DISTRACTORS = FIXTURES / "vg_distractors.json"
MODELS = FIXTURES / "models.json"
MODELS_MOUNTAIN = FIXTURES / "models_mountain.json"

SOURCES = [
    ("coco", Flavor.COCO, MINI_COCO),
    ("kitti", Flavor.KITTI, MINI_KITTI),
    ("vg", Flavor.VG, MINI_VG),
]


def build_mixed(materialized: bool = True, models: bool = False, distractors: bool = False) -> TripleStore:
    """mini-COCO + mini-KITTI + mini-VG, optionally with model metadata and VG distractors."""
    store = TripleStore()
    alignment = load_alignment()
    for key, flavor, path in SOURCES:
        ingest(store, DatasetDescriptor(key, flavor=flavor), path, alignment)
    if distractors:
        ingest(store, DatasetDescriptor("vg", flavor=Flavor.VG), VG_DISTRACTORS, alignment)
    if models:
        ingest(store, DatasetDescriptor("models", flavor=Flavor.MODELS), MODELS, alignment)
    if materialized:
        materialize(store, load_taxonomy(store))
    return store


@pytest.fixture
def alignment():
    return load_alignment()


@pytest.fixture
def mixed_store():
    return build_mixed()


@pytest.fixture
def raw_mixed_store():
    return build_mixed(materialized=False)


def read_query(name: str) -> str:
    return (QUERIES / name).read_text(encoding="utf-8")


IMAGES_PER_DATASET = """PREFIX v: <http://vision.semkg.org/onto/>
SELECT ?ds (COUNT(DISTINCT ?img) AS ?n) WHERE { ?img a v:Image ; v:fromDataset ?ds } GROUP BY ?ds ORDER BY ?ds
"""

# name -> (query text, build_mixed keyword arguments); frozen outputs live in tests/golden/<name>.json
GOLDEN_CASES = {
    "person_images": (read_query("person_images.rq"), {}),
    "person_images_union": (read_query("person_images_union.rq"), {"materialized": False}),
    "person_holding_cat": (read_query("person_holding_cat.rq"), {"distractors": True}),
    "car_models_crowded": (read_query("car_models_crowded.rq"), {"models": True}),
    "images_per_dataset": (IMAGES_PER_DATASET, {"distractors": True}),
}


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, taken from the test reports."""
    results = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            for key, label in getattr(report, "user_properties", []):
                if key == "criterion":
                    results[label] = results.get(label, True) and outcome == "passed"
    if results:
        terminalreporter.section("acceptance criteria")
        for label in sorted(results, key=lambda s: int(s.split(".")[0])):
            terminalreporter.write_line(f"{'PASS' if results[label] else 'FAIL'} {label}")
