"""kgsum: neural entity summarization over RDF knowledge graphs.

The package trains an attention model that ranks the triples of an RDF
entity description and selects the top-k as a summary.  It ships:

* a line-oriented N-Triples reader and a benchmark-corpus loader
  (:mod:`kgsum.rdf`, :mod:`kgsum.corpus`),
* a small float64 reverse-mode autodiff engine and Adam optimizer
  (:mod:`kgsum.autodiff`),
* translational graph-embedding pretraining (:mod:`kgsum.transe`),
* the extractor/simulator attention model and its ablation variants
  (:mod:`kgsum.model`),
* cross-validated training (:mod:`kgsum.training`),
* F-measure / MAP evaluation with paired significance testing
  (:mod:`kgsum.metrics`, :mod:`kgsum.stats`, :mod:`kgsum.report`),
* a command-line front end (:mod:`kgsum.cli`).
"""

from kgsum.rdf import IRI, Literal, Triple, parse_ntriples, extract_word
from kgsum.corpus import Dataset, EntityDescription, GoldAnnotation, Vocabulary, load_dataset

__version__ = "0.1.0"

__all__ = [
    "IRI",
    "Literal",
    "Triple",
    "parse_ntriples",
    "extract_word",
    "Dataset",
    "EntityDescription",
    "GoldAnnotation",
    "Vocabulary",
    "load_dataset",
    "__version__",
]
