"""Training-ready exports: dataset manifests and dataset/model statistics."""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Optional

from . import vocab
from .ingest import parse_minted
from .store import Snapshot
from .terms import IRI, Literal
from .sparql import DEFAULT_ROW_CAP, Query, evaluate


class ExportUsageError(ValueError):
    pass


@dataclass
class ManifestImage:
    iri: IRI
    file_name: str
    width: Optional[int] = None
    height: Optional[int] = None
    source_datasets: list[str] = field(default_factory=list)
    local_id: Optional[str] = None
    canonical_id: Optional[str] = None


@dataclass
class ManifestBox:
    iri: IRI
    image_iri: IRI
    x_min: Decimal
    y_min: Decimal
    x_max: Decimal
    y_max: Decimal
    raw_label: str
    canonical_class: Optional[IRI] = None
    ordinal: Optional[str] = None


def _json_number(value):
    if isinstance(value, Decimal):
        return int(value) if value == value.to_integral_value() else float(value)
    return value


def _json_id(text: str):
    return int(text) if text.isdigit() and str(int(text)) == text else text


def _local_name(iri: IRI) -> str:
    value = iri.value
    return value.rsplit("/", 1)[-1].rsplit("#", 1)[-1] or value


@dataclass
class DatasetManifest:
    images: list[ManifestImage] = field(default_factory=list)
    boxes: list[ManifestBox] = field(default_factory=list)
    classes: list[IRI] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)

    @property
    def category_ids(self) -> dict[IRI, int]:
        return {c: i for i, c in enumerate(self.classes, start=1)}

    def to_dict(self) -> dict:
        """COCO-style document; ids come from the source datasets when they are unique."""
        image_ids = [img.local_id or img.canonical_id or img.iri.value for img in self.images]
        if len(set(image_ids)) != len(image_ids):
            image_ids = [str(i) for i in range(1, len(self.images) + 1)]
        image_id_of = {img.iri: _json_id(i) for img, i in zip(self.images, image_ids)}

        box_ids = [b.ordinal for b in self.boxes]
        if None in box_ids or len(set(box_ids)) != len(box_ids):
            box_ids = [str(i) for i in range(1, len(self.boxes) + 1)]
        cat = self.category_ids

        images = []
        for img in self.images:
            rec = {"id": image_id_of[img.iri], "file_name": img.file_name}
            if img.width is not None:
                rec["width"] = img.width
            if img.height is not None:
                rec["height"] = img.height
            if img.canonical_id:
                rec["canonical_id"] = img.canonical_id
            rec["iri"] = img.iri.value
            rec["source_datasets"] = list(img.source_datasets)
            images.append(rec)

        annotations = []
        for box, box_id in zip(self.boxes, box_ids):
            rec = {"id": _json_id(box_id), "image_id": image_id_of[box.image_iri]}
            if box.canonical_class is not None:
                rec["category_id"] = cat[box.canonical_class]
            rec["bbox"] = [
                _json_number(box.x_min),
                _json_number(box.y_min),
                _json_number(box.x_max - box.x_min),
                _json_number(box.y_max - box.y_min),
            ]
            rec["raw_label"] = box.raw_label
            rec["iri"] = box.iri.value
            annotations.append(rec)

        categories = [{"id": i, "name": _local_name(c), "iri": c.value} for c, i in cat.items()]
        return {
            "images": images,
            "annotations": annotations,
            "categories": categories,
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


class _Graph:
    """Small read helpers over a snapshot, keyed by terms."""

    def __init__(self, snapshot: Snapshot):
        self.snap = snapshot
        self._ancestors: dict[int, frozenset] = {}
        sc = snapshot.lookup(vocab.SUBCLASS_OF)
        self._parents = defaultdict(set)
        if sc is not None:
            for s, _, o in snapshot.match(p=sc):
                if s != o:
                    self._parents[s].add(o)

    def id(self, term):
        return self.snap.lookup(term)

    def objects(self, s: int, predicate) -> list[int]:
        p = self.id(predicate)
        if p is None:
            return []
        return [o for _, _, o in self.snap.match(s, p)]

    def subjects(self, predicate, o: int) -> list[int]:
        p = self.id(predicate)
        if p is None:
            return []
        return [s for s, _, _ in self.snap.match(None, p, o)]

    def first_literal(self, s: int, predicate) -> Optional[Literal]:
        values = sorted((self.snap.resolve(o) for o in self.objects(s, predicate)), key=lambda t: str(t))
        values = [v for v in values if isinstance(v, Literal)]
        return values[0] if values else None

    def ancestors(self, cls: int) -> frozenset:
        hit = self._ancestors.get(cls)
        if hit is None:
            seen, stack = set(), [cls]
            while stack:
                for parent in self._parents.get(stack.pop(), ()):
                    if parent not in seen:
                        seen.add(parent)
                        stack.append(parent)
            seen.discard(cls)
            hit = self._ancestors[cls] = frozenset(seen)
        return hit

    def has_type(self, s: int, cls) -> bool:
        t, c = self.id(vocab.TYPE), self.id(cls)
        return t is not None and c is not None and self.snap.count(s, t, c) > 0


def most_specific(graph: _Graph, candidates: set[int]) -> Optional[int]:
    """The deepest class (most ancestors); ties go to the smallest IRI."""
    if not candidates:
        return None
    resolve = graph.snap.resolve
    return min(candidates, key=lambda c: (-len(graph.ancestors(c)), resolve(c).value))


def _int_or_none(term: Optional[Literal]):
    if term is None:
        return None
    try:
        return _json_number(Decimal(term.lexical))
    except ArithmeticError:
        return None


def export_manifest(
    snapshot: Snapshot, query: Query, target_classes=(), row_cap: int = DEFAULT_ROW_CAP, query_text: str | None = None
) -> DatasetManifest:
    """Build a manifest from the images selected by a one-variable query.

    Each box of a selected image is kept when its object's types meet
    ``target_classes`` and is labelled with the most specific such class;
    with no target classes every box is kept, labelled with its most
    specific aligned class.
    """
    variables = query.result_variables()
    if len(variables) != 1:
        raise ExportUsageError(f"the image query must project exactly one variable, got {len(variables)}")
    seq = evaluate(snapshot, query, row_cap)
    graph = _Graph(snapshot)
    manifest = DatasetManifest()
    targets = {graph.id(IRI(c) if isinstance(c, str) else c) for c in target_classes}
    targets.discard(None)
    structural = {graph.id(c) for c in vocab.STRUCTURAL_CLASSES} - {None}

    selected = set()
    for (term,) in seq.rows:
        if term is None or term in selected:
            continue
        tid = graph.id(term)
        if not isinstance(term, IRI) or tid is None or not graph.has_type(tid, vocab.Image):
            manifest.diagnostics.append(f"skipping {term}: not an Image")
            continue
        selected.add(term)

    classes = set()
    for img_term in sorted(selected, key=lambda t: t.value):
        img = graph.id(img_term)
        datasets = sorted(
            (parse_minted(graph.snap.resolve(d)) or (None, None, graph.snap.resolve(d).value, None))[2]
            for d in graph.objects(img, vocab.fromDataset)
        )
        name = graph.first_literal(img, vocab.fileName)
        minted = parse_minted(img_term)
        entry = ManifestImage(
            iri=img_term,
            file_name=name.lexical if name else "",
            width=_int_or_none(graph.first_literal(img, vocab.width)),
            height=_int_or_none(graph.first_literal(img, vocab.height)),
            source_datasets=datasets,
        )
        if minted is not None and minted.kind == "image":
            if minted.dataset_key is None:
                entry.canonical_id = minted.local_id
            else:
                entry.local_id = minted.local_id

        box_local_ids = set()
        for box in sorted(graph.objects(img, vocab.hasBox), key=lambda b: graph.snap.resolve(b).value):
            box_term = graph.snap.resolve(box)
            geometry = [graph.first_literal(box, p) for p in (vocab.xMin, vocab.yMin, vocab.xMax, vocab.yMax)]
            if None in geometry:
                manifest.diagnostics.append(f"skipping {box_term}: incomplete geometry")
                continue
            objs = graph.objects(box, vocab.hasObject)
            types, label = set(), ""
            for obj in objs:
                types |= set(graph.objects(obj, vocab.TYPE))
                raw = graph.first_literal(obj, vocab.rawLabel)
                if raw is not None and not label:
                    label = raw.lexical
            types = {t for t in types if t not in structural and isinstance(graph.snap.resolve(t), IRI)}
            if targets:
                candidates = types & targets
                if not candidates:
                    continue
            else:
                candidates = types
            cls = most_specific(graph, candidates)
            cls_term = graph.snap.resolve(cls) if cls is not None else None
            if cls_term is not None:
                classes.add(cls_term)
            minted_box = parse_minted(box_term)
            if minted_box is not None:
                box_local_ids.add(minted_box.local_id)
            x0, y0, x1, y1 = (Decimal(g.lexical) for g in geometry)
            manifest.boxes.append(
                ManifestBox(
                    iri=box_term,
                    image_iri=img_term,
                    x_min=x0,
                    y_min=y0,
                    x_max=x1,
                    y_max=y1,
                    raw_label=label,
                    canonical_class=cls_term,
                    ordinal=minted_box.ordinal if minted_box else None,
                )
            )
        if entry.local_id is None and len(box_local_ids) == 1:
            entry.local_id = box_local_ids.pop()
        manifest.images.append(entry)

    manifest.classes = sorted(classes, key=lambda c: c.value)
    manifest.provenance = {
        "query": query_text,
        "target_classes": sorted(str(snapshot.resolve(t)) for t in targets),
        "source_datasets": sorted({d for img in manifest.images for d in img.source_datasets}),
        "image_count": len(manifest.images),
        "box_count": len(manifest.boxes),
    }
    return manifest


# -- statistics ----------------------------------------------------------------


@dataclass
class DatasetStats:
    image_count: int = 0
    box_count: int = 0
    label_histogram: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class ModelRow:
    model: str
    cls: str
    metric: str
    value: str
    scene_tag: Optional[str] = None


@dataclass
class StatsReport:
    per_dataset: dict[str, DatasetStats] = field(default_factory=dict)
    per_class: dict[str, int] = field(default_factory=dict)
    models: list[ModelRow] = field(default_factory=list)

    def to_tsv(self) -> str:
        out = ["dataset\timages\tboxes"]
        out += [f"{k}\t{s.image_count}\t{s.box_count}" for k, s in self.per_dataset.items()]
        out += ["", "dataset\tlabel\tcount"]
        for k, s in self.per_dataset.items():
            out += [f"{k}\t{label}\t{n}" for label, n in s.label_histogram.items()]
        out += ["", "class\tinstances"]
        out += [f"{c}\t{n}" for c, n in self.per_class.items()]
        out += ["", "model\tclass\tmetric\tvalue\tscene_tag"]
        out += [f"{r.model}\t{r.cls}\t{r.metric}\t{r.value}\t{r.scene_tag or ''}" for r in self.models]
        return "\n".join(out) + "\n"

    def summary(self) -> str:
        if not self.per_dataset and not self.per_class and not self.models:
            return "empty store\n"
        lines = []
        for k, s in self.per_dataset.items():
            lines.append(f"{k}: imageCount {s.image_count}, boxCount {s.box_count}")
            for label, n in s.label_histogram.items():
                lines.append(f"  {label}: {n}")
        if self.per_class:
            lines.append("classes:")
            lines += [f"  {c}: {n}" for c, n in self.per_class.items()]
        if self.models:
            lines.append("model evaluations:")
            for r in self.models:
                tag = f" [{r.scene_tag}]" if r.scene_tag else ""
                lines.append(f"  {r.model} {r.cls} {r.metric}={r.value}{tag}")
        return "\n".join(lines) + "\n"


def compute_stats(snapshot: Snapshot) -> StatsReport:
    graph = _Graph(snapshot)
    resolve = snapshot.resolve
    report = StatsReport()
    type_id = graph.id(vocab.TYPE)
    if type_id is None:
        return report

    structural = {graph.id(c) for c in vocab.STRUCTURAL_CLASSES} - {None}
    dataset_cls = graph.id(vocab.Dataset)
    if dataset_cls is not None:
        keyed = []
        for ds, _, _ in snapshot.match(None, type_id, dataset_cls):
            term = resolve(ds)
            minted = parse_minted(term)
            keyed.append((minted.local_id if minted else term.value, ds))
        for key, ds in sorted(keyed):
            stats = DatasetStats()
            labels = Counter()
            images = graph.subjects(vocab.fromDataset, ds)
            stats.image_count = len(images)
            multi = {img for img in images if len(graph.objects(img, vocab.fromDataset)) > 1}
            for img in images:
                for box in graph.objects(img, vocab.hasBox):
                    if img in multi:
                        minted = parse_minted(resolve(box))
                        if minted is not None and minted.dataset_key != key:
                            continue
                    stats.box_count += 1
                    label = None
                    for obj in graph.objects(box, vocab.hasObject):
                        raw = graph.first_literal(obj, vocab.rawLabel)
                        if raw is not None:
                            label = raw.lexical
                            break
                    labels[label if label is not None else "(none)"] += 1
            stats.label_histogram = dict(sorted(labels.items()))
            report.per_dataset[key] = stats

    counts = Counter()
    for _, _, cls in snapshot.match(None, type_id, None):
        if cls not in structural and isinstance(resolve(cls), IRI):
            counts[resolve(cls).value] += 1
    report.per_class = dict(sorted(counts.items()))

    evaluation = graph.id(vocab.Evaluation)
    if evaluation is not None:
        rows = []
        for ev, _, _ in snapshot.match(None, type_id, evaluation):
            metric = graph.first_literal(ev, vocab.metricName)
            value = graph.first_literal(ev, vocab.metricValue)
            tag = graph.first_literal(ev, vocab.sceneTag)
            for model in graph.objects(ev, vocab.evaluates):
                for cls in graph.objects(ev, vocab.detectsClass) or [None]:
                    cls_term = resolve(cls) if cls is not None else None
                    rows.append(
                        ModelRow(
                            model=resolve(model).value,
                            cls=str(cls_term) if cls_term is not None else "",
                            metric=metric.lexical if metric else "",
                            value=value.lexical if value else "",
                            scene_tag=tag.lexical if tag else None,
                        )
                    )
        report.models = sorted(rows, key=lambda r: (r.model, r.cls, r.metric, r.value, r.scene_tag or ""))
    return report
