"""IRI constants of the unified vision vocabulary."""

from .terms import IRI, RDF_TYPE, RDFS_SUBCLASSOF

BASE = "http://vision.semkg.org/"
ONTO = BASE + "onto/"


def onto(name: str) -> IRI:
    return IRI(ONTO + name)


TYPE = IRI(RDF_TYPE)
SUBCLASS_OF = IRI(RDFS_SUBCLASSOF)

# predicates
hasBox = onto("hasBox")
hasObject = onto("hasObject")
hasRelation = onto("hasRelation")
relSubject = onto("relSubject")
relObject = onto("relObject")
relPredicateText = onto("relPredicateText")
rawLabel = onto("rawLabel")
fromDataset = onto("fromDataset")
fileName = onto("fileName")
width = onto("width")
height = onto("height")
xMin = onto("xMin")
yMin = onto("yMin")
xMax = onto("xMax")
yMax = onto("yMax")
trainedOn = onto("trainedOn")
detectsClass = onto("detectsClass")
metricName = onto("metricName")
metricValue = onto("metricValue")
evaluates = onto("evaluates")
sceneTag = onto("sceneTag")

# classes
Image = onto("Image")
Box = onto("Box")
VisualObject = onto("VisualObject")
Relation = onto("Relation")
Dataset = onto("Dataset")
Model = onto("Model")
Evaluation = onto("Evaluation")

STRUCTURAL_CLASSES = frozenset({Image, Box, VisualObject, Relation, Dataset, Model, Evaluation})

PREFIXES = {
    "rdf": "http://www.w3.org/1999/02/22-rdf-syntax-ns#",
    "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
    "xsd": "http://www.w3.org/2001/XMLSchema#",
    "onto": ONTO,
    "v": ONTO,
}
