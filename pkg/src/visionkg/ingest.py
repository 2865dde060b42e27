"""Dataset adapters: COCO, KITTI and Visual Genome annotations plus model metadata.

Every entity gets a deterministic IRI from :func:`mint_iri`, so ingesting the
same file twice adds nothing and two datasets that share a ``canonical_id``
describe the same image node.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import NamedTuple
from urllib.parse import quote, unquote

from . import vocab
from .store import TripleStore
from .taxonomy import AlignmentTable
from .terms import IRI, Literal, decimal, integer

KINDS = ("image", "box", "object", "relation", "dataset", "model", "evaluation")
_KEY = re.compile(r"[a-z0-9_]+\Z")


class IngestError(ValueError):
    """Malformed input; the message starts with ``file:line:column`` or a JSON path."""


class Flavor(str, enum.Enum):
    COCO = "coco"
    KITTI = "kitti"
    VG = "vg"
    MODELS = "models"


@dataclass(frozen=True)
class DatasetDescriptor:
    key: str
    display_name: str = ""
    flavor: Flavor = Flavor.COCO

    def __post_init__(self):
        if not _KEY.match(self.key):
            raise ValueError(f"dataset key must match [a-z0-9_]+: {self.key!r}")
        object.__setattr__(self, "flavor", Flavor(self.flavor))
        if not self.display_name:
            object.__setattr__(self, "display_name", self.key)


@dataclass
class IngestReport:
    images_seen: int = 0
    boxes_seen: int = 0
    relations_seen: int = 0
    triples_inserted: int = 0
    unaligned_labels: list[str] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)

    @property
    def labels_unaligned(self) -> int:
        return len(self.unaligned_labels)

    def note_unaligned(self, label: str):
        if label not in self.unaligned_labels:
            self.unaligned_labels.append(label)


def _enc(text) -> str:
    text = str(text)
    if not text:
        raise ValueError("local id must be non-empty")
    return quote(text, safe="-._~")


def mint_iri(kind: str, dataset_key: str, local_id, ordinal=None, canonical_id=None) -> IRI:
    """Deterministic IRI ``http://vision.semkg.org/{kind}/{dataset_key}/{local_id}[_{ordinal}]``.

    Images with a ``canonical_id`` drop the dataset key so that the same
    picture from several datasets collapses into one node.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    if kind == "image" and canonical_id not in (None, ""):
        return IRI(f"{vocab.BASE}image/{_enc(canonical_id)}")
    if kind == "dataset":
        return IRI(f"{vocab.BASE}dataset/{_enc(dataset_key)}")
    suffix = "" if ordinal is None else f"_{_enc(ordinal)}"
    return IRI(f"{vocab.BASE}{kind}/{_enc(dataset_key)}/{_enc(local_id)}{suffix}")


class MintedId(NamedTuple):
    kind: str
    dataset_key: str | None
    local_id: str
    ordinal: str | None


def parse_minted(iri: IRI, with_ordinal: bool | None = None) -> MintedId | None:
    """Invert :func:`mint_iri`; None for IRIs outside the minted namespace."""
    value = iri.value if isinstance(iri, IRI) else str(iri)
    if not value.startswith(vocab.BASE):
        return None
    parts = value[len(vocab.BASE) :].split("/")
    if parts[0] not in KINDS:
        return None
    kind = parts[0]
    if kind == "dataset" and len(parts) == 2:
        return MintedId(kind, unquote(parts[1]), unquote(parts[1]), None)
    if kind == "image" and len(parts) == 2:
        return MintedId(kind, None, unquote(parts[1]), None)
    if len(parts) != 3:
        return None
    local, ordinal = parts[2], None
    if with_ordinal is None:
        with_ordinal = kind in ("box", "object", "relation", "evaluation")
    if with_ordinal and "_" in local:
        local, ordinal = local.rsplit("_", 1)
        ordinal = unquote(ordinal)
    return MintedId(kind, unquote(parts[1]), unquote(local), ordinal)


def dataset_iri(key: str) -> IRI:
    return mint_iri("dataset", key, key)


def _number(value, where: str) -> Decimal:
    if isinstance(value, bool) or not isinstance(value, (int, float, Decimal, str)):
        raise IngestError(f"{where}: expected a number, got {value!r}")
    try:
        d = Decimal(str(value)) if not isinstance(value, Decimal) else value
    except InvalidOperation:
        raise IngestError(f"{where}: expected a number, got {value!r}") from None
    if not d.is_finite():
        raise IngestError(f"{where}: expected a finite number, got {value!r}")
    return d


def _size_literal(value, where: str) -> Literal:
    d = _number(value, where)
    return integer(int(d)) if d == d.to_integral_value() else decimal(d)


def _read_json(path: Path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestError(f"{path}: cannot read: {exc}") from None
    try:
        return json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise IngestError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def _require(record, key: str, where: str):
    if not isinstance(record, dict):
        raise IngestError(f"{where}: expected an object")
    if key not in record or record[key] in (None, ""):
        raise IngestError(f"{where}: missing field {key!r}")
    return record[key]


def _list(doc, key: str, where: str) -> list:
    value = doc.get(key, [])
    if value is None:
        return []
    if not isinstance(value, list):
        raise IngestError(f"{where}.{key}: expected an array")
    return value


class _Sink:
    """Counts inserted triples and routes recoverable problems by strictness."""

    def __init__(self, store: TripleStore, alignment: AlignmentTable | None, strict: bool):
        self.store = store
        self.alignment = alignment or AlignmentTable()
        self.strict = strict
        self.report = IngestReport()

    def add(self, s, p, o):
        self.report.triples_inserted += self.store.add(s, p, o)

    def problem(self, message: str):
        if self.strict:
            raise IngestError(message)
        self.report.diagnostics.append(message)

    def dataset(self, descriptor: DatasetDescriptor) -> IRI:
        ds = dataset_iri(descriptor.key)
        self.add(ds, vocab.TYPE, vocab.Dataset)
        self.add(ds, vocab.fileName, Literal(descriptor.display_name))
        return ds

    def image(self, img: IRI, ds: IRI, file_name: str, width=None, height=None, where=""):
        self.report.images_seen += 1
        self.add(img, vocab.TYPE, vocab.Image)
        self.add(img, vocab.fromDataset, ds)
        self.add(img, vocab.fileName, Literal(str(file_name)))
        if width is not None:
            self.add(img, vocab.width, _size_literal(width, f"{where}.width"))
        if height is not None:
            self.add(img, vocab.height, _size_literal(height, f"{where}.height"))

    def box(self, dataset_key, img, local_id, ordinal, geometry, raw_label, where) -> IRI | None:
        x0, y0, x1, y1 = geometry
        if x0 > x1 or y0 > y1:
            self.problem(f"{where}: degenerate box (xMin={x0}, yMin={y0}, xMax={x1}, yMax={y1})")
            return None
        box = mint_iri("box", dataset_key, local_id, ordinal)
        obj = mint_iri("object", dataset_key, local_id, ordinal)
        self.report.boxes_seen += 1
        self.add(img, vocab.hasBox, box)
        self.add(box, vocab.TYPE, vocab.Box)
        self.add(box, vocab.xMin, decimal(x0))
        self.add(box, vocab.yMin, decimal(y0))
        self.add(box, vocab.xMax, decimal(x1))
        self.add(box, vocab.yMax, decimal(y1))
        self.add(box, vocab.hasObject, obj)
        self.add(obj, vocab.TYPE, vocab.VisualObject)
        self.add(obj, vocab.rawLabel, Literal(raw_label))
        cls = self.alignment.align(dataset_key, raw_label)
        if cls is None:
            self.report.note_unaligned(raw_label)
        else:
            self.add(obj, vocab.TYPE, cls)
        return obj


def ingest_coco(store, descriptor, path, alignment=None, strict=True) -> IngestReport:
    """COCO detection file: ``images``, ``annotations`` (bbox as x, y, w, h), ``categories``."""
    doc = _read_json(path)
    if not isinstance(doc, dict):
        raise IngestError(f"{path}: expected a JSON object at top level")
    sink = _Sink(store, alignment, strict)
    key = descriptor.key
    ds = sink.dataset(descriptor)

    categories = {}
    for i, cat in enumerate(_list(doc, "categories", str(path))):
        where = f"{path}: categories[{i}]"
        categories[_require(cat, "id", where)] = str(_require(cat, "name", where))

    images = {}
    for i, rec in enumerate(_list(doc, "images", str(path))):
        where = f"{path}: images[{i}]"
        image_id = _require(rec, "id", where)
        img = mint_iri("image", key, image_id, canonical_id=rec.get("canonical_id"))
        images[image_id] = img
        sink.image(img, ds, _require(rec, "file_name", where), rec.get("width"), rec.get("height"), where)

    for i, ann in enumerate(_list(doc, "annotations", str(path))):
        where = f"{path}: annotations[{i}]"
        ann_id = _require(ann, "id", where)
        image_id = _require(ann, "image_id", where)
        if image_id not in images:
            sink.problem(f"{where}: image_id {image_id!r} not declared in images")
            continue
        label = ann.get("raw_label")
        if label in (None, ""):
            cat = ann.get("category_id")
            if cat not in categories:
                sink.problem(f"{where}: category_id {cat!r} not declared in categories")
                continue
            label = categories[cat]
        bbox = _require(ann, "bbox", where)
        if not isinstance(bbox, list) or len(bbox) != 4:
            sink.problem(f"{where}.bbox: expected [x, y, w, h]")
            continue
        x, y, w, h = (_number(v, f"{where}.bbox[{j}]") for j, v in enumerate(bbox))
        sink.box(key, images[image_id], image_id, ann_id, (x, y, x + w, y + h), str(label), where)
    return sink.report


def _canonical_ids(directory: Path) -> dict:
    mapping = directory / "canonical_ids.json"
    if not mapping.exists():
        return {}
    data = _read_json(mapping)
    if not isinstance(data, dict):
        raise IngestError(f"{mapping}: expected an object mapping frame id to canonical id")
    return {str(k): v for k, v in data.items()}


def ingest_kitti(store, descriptor, directory, alignment=None, strict=True) -> IngestReport:
    """Directory of KITTI ``<frame>.txt`` label files; ``DontCare`` lines are skipped.

    An optional ``canonical_ids.json`` in the same directory maps frame ids to
    canonical image ids.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise IngestError(f"{directory}: not a directory of KITTI label files")
    sink = _Sink(store, alignment, strict)
    key = descriptor.key
    ds = sink.dataset(descriptor)
    canonical = _canonical_ids(directory)

    for label_file in sorted(directory.glob("*.txt")):
        frame = label_file.stem
        img = mint_iri("image", key, frame, canonical_id=canonical.get(frame))
        sink.image(img, ds, f"{frame}.png")
        try:
            lines = label_file.read_text(encoding="utf-8").splitlines()
        except (OSError, UnicodeDecodeError) as exc:
            raise IngestError(f"{label_file}: cannot read: {exc}") from None
        for lineno, line in enumerate(lines, start=1):
            fields = line.split()
            if not fields:
                continue
            where = f"{label_file}:{lineno}"
            if len(fields) < 15:
                sink.problem(f"{where}: expected at least 15 fields, got {len(fields)}")
                continue
            if fields[0] == "DontCare":
                continue
            try:
                geometry = tuple(_number(v, f"{where}: field {j + 5}") for j, v in enumerate(fields[4:8]))
            except IngestError as exc:
                sink.problem(str(exc))
                continue
            sink.box(key, img, frame, lineno - 1, geometry, fields[0], where)
    return sink.report


def ingest_vg_relations(store, descriptor, path, alignment=None, strict=True) -> IngestReport:
    """Visual Genome style relationships: objects become boxes, relationships Relation nodes."""
    doc = _read_json(path)
    if isinstance(doc, dict):
        doc = [doc]
    if not isinstance(doc, list):
        raise IngestError(f"{path}: expected an array of image records")
    sink = _Sink(store, alignment, strict)
    key = descriptor.key
    ds = sink.dataset(descriptor)

    for i, rec in enumerate(doc):
        where = f"{path}: [{i}]"
        image_id = _require(rec, "image_id", where)
        img = mint_iri("image", key, image_id, canonical_id=rec.get("canonical_id"))
        sink.image(img, ds, rec.get("file_name") or f"{image_id}.jpg", rec.get("width"), rec.get("height"), where)

        objects = {}
        for j, ent in enumerate(_list(rec, "objects", where)):
            ewhere = f"{where}.objects[{j}]"
            object_id = _require(ent, "object_id", ewhere)
            names = ent.get("names") or ([ent["name"]] if ent.get("name") else [])
            if not names:
                sink.problem(f"{ewhere}: object has no names")
                continue
            x, y, w, h = (_number(_require(ent, k, ewhere), f"{ewhere}.{k}") for k in "xywh")
            obj = sink.box(key, img, image_id, object_id, (x, y, x + w, y + h), str(names[0]), ewhere)
            if obj is not None:
                objects[object_id] = obj

        for j, rel in enumerate(_list(rec, "relationships", where)):
            rwhere = f"{where}.relationships[{j}]"
            predicate = str(_require(rel, "predicate", rwhere)).strip().lower()
            subj, obj = rel.get("subject_id"), rel.get("object_id")
            missing = [n for n, v in (("subject_id", subj), ("object_id", obj)) if v not in objects]
            if missing:
                sink.problem(f"{rwhere}: {', '.join(missing)} refers to an undeclared object")
                continue
            node = mint_iri("relation", key, image_id, j)
            sink.report.relations_seen += 1
            sink.add(img, vocab.hasRelation, node)
            sink.add(node, vocab.TYPE, vocab.Relation)
            sink.add(node, vocab.relSubject, objects[subj])
            sink.add(node, vocab.relObject, objects[obj])
            sink.add(node, vocab.relPredicateText, Literal(predicate))
    return sink.report


def ingest_model_meta(store, descriptor, path, alignment=None, strict=True) -> IngestReport:
    """Trained-model records with per-class evaluation results."""
    doc = _read_json(path)
    if not isinstance(doc, list):
        raise IngestError(f"{path}: expected an array of model records")
    sink = _Sink(store, alignment, strict)
    key = descriptor.key

    def class_term(label, where):
        cls = sink.alignment.align(key, str(label))
        if cls is None:
            sink.report.note_unaligned(str(label))
            sink.report.diagnostics.append(f"{where}: class {label!r} has no alignment; kept as literal")
            return Literal(str(label))
        return cls

    for i, rec in enumerate(doc):
        where = f"{path}: [{i}]"
        model_id = _require(rec, "model_id", where)
        model = mint_iri("model", key, model_id)
        sink.add(model, vocab.TYPE, vocab.Model)
        if rec.get("name"):
            sink.add(model, vocab.fileName, Literal(str(rec["name"])))
        for ds_key in _list(rec, "trained_on", where):
            sink.add(model, vocab.trainedOn, dataset_iri(str(ds_key)))
        for label in _list(rec, "detects", where):
            sink.add(model, vocab.detectsClass, class_term(label, f"{where}.detects"))
        for j, ev in enumerate(_list(rec, "evaluations", where)):
            ewhere = f"{where}.evaluations[{j}]"
            node = mint_iri("evaluation", key, model_id, j)
            value = _number(_require(ev, "value", ewhere), f"{ewhere}.value")
            sink.add(node, vocab.TYPE, vocab.Evaluation)
            sink.add(node, vocab.evaluates, model)
            sink.add(node, vocab.detectsClass, class_term(_require(ev, "class", ewhere), ewhere))
            sink.add(node, vocab.metricName, Literal(str(_require(ev, "metric", ewhere))))
            sink.add(node, vocab.metricValue, decimal(value))
            if ev.get("scene_tag"):
                sink.add(node, vocab.sceneTag, Literal(str(ev["scene_tag"])))
    return sink.report


_ADAPTERS = {
    Flavor.COCO: ingest_coco,
    Flavor.KITTI: ingest_kitti,
    Flavor.VG: ingest_vg_relations,
    Flavor.MODELS: ingest_model_meta,
}


def ingest(store, descriptor: DatasetDescriptor, path, alignment=None, strict=True) -> IngestReport:
    return _ADAPTERS[descriptor.flavor](store, descriptor, path, alignment, strict)
