"""Learn semantic models of structured sources from known models and a domain ontology."""

from .errors import NoModelError, SemweaveError
from .evaluation import ExperimentPlan, overlap, precision_recall, run_experiment
from .graph import AlignmentGraph, build_graph
from .labeling import LabelPrediction, SemanticLabeler, load_predictions, mrr
from .learner import SemanticModelLearner
from .mapping import Mapping, generate_candidate_mappings, score_mapping
from .model import SemanticModel, SemanticType, SourceTable, load_model, load_source, rel, save_model
from .ontology import Ontology, load_ontology
from .steiner import SteinerTask, link_coherence, rank_candidates, top_k_steiner

__version__ = "0.1.0"

__all__ = [
    "AlignmentGraph",
    "ExperimentPlan",
    "LabelPrediction",
    "Mapping",
    "NoModelError",
    "Ontology",
    "SemanticLabeler",
    "SemanticModel",
    "SemanticModelLearner",
    "SemanticType",
    "SemweaveError",
    "SourceTable",
    "SteinerTask",
    "build_graph",
    "generate_candidate_mappings",
    "link_coherence",
    "load_model",
    "load_ontology",
    "load_predictions",
    "load_source",
    "mrr",
    "overlap",
    "precision_recall",
    "rank_candidates",
    "rel",
    "run_experiment",
    "save_model",
    "score_mapping",
    "top_k_steiner",
]
