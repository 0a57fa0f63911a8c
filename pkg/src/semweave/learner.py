"""End-to-end learner: known models in, ranked semantic models out."""

from __future__ import annotations

import logging
import time
from dataclasses import replace

from sklearn.base import BaseEstimator

from .errors import ConfigError, DuplicateModelError, NoModelError, NotTrainedError
from .graph import build_graph
from .mapping import DEFAULT_WEIGHTS, ORDER_POLICIES, generate_candidate_mappings
from .steiner import SteinerTask, rank_candidates, top_k_steiner
from .validation import check_choice, check_positive, check_positive_int, check_score_weights

log = logging.getLogger(__name__)

PHASES = ("graph", "mapping", "steiner", "rank")


class SemanticModelLearner(BaseEstimator):
    """Learns semantic models for new sources from a set of known models.

    Parameters
    ----------
    ontology : Ontology
        Domain ontology used to add paths between class nodes.
    branching_factor : int or None, default=50
        Mappings kept after each attribute; ``None`` keeps all.
    num_of_candidates : int or None, default=50
        Mappings passed on to tree search.
    steiner_k : int, default=10
        Trees computed per candidate mapping.
    w_l : float, default=1.0
        Base weight of links carried by known models.
    epsilon : float, default=0.01
        Extra weight for links inferred through the class hierarchy.
    score_weights : tuple of 3 floats, default=(1/3, 1/3, 1/3)
        Weights of confidence, coherence and size reduction.
    attribute_order : {"source", "confidence"}, default="source"
    """

    def __init__(
        self,
        ontology=None,
        branching_factor=50,
        num_of_candidates=50,
        steiner_k=10,
        w_l=1.0,
        epsilon=0.01,
        score_weights=DEFAULT_WEIGHTS,
        attribute_order="source",
    ):
        self.ontology = ontology
        self.branching_factor = branching_factor
        self.num_of_candidates = num_of_candidates
        self.steiner_k = steiner_k
        self.w_l = w_l
        self.epsilon = epsilon
        self.score_weights = score_weights
        self.attribute_order = attribute_order

    def _validate_params(self):
        if self.ontology is None:
            raise ConfigError("ontology is required")
        check_positive_int(self.branching_factor, "branching_factor", allow_none=True)
        check_positive_int(self.num_of_candidates, "num_of_candidates", allow_none=True)
        check_positive_int(self.steiner_k, "steiner_k")
        check_positive(self.w_l, "w_l")
        check_positive(self.epsilon, "epsilon")
        check_score_weights(self.score_weights)
        check_choice(self.attribute_order, "attribute_order", ORDER_POLICIES)

    def fit(self, models):
        """Store validated known models; ``models`` may be empty."""
        self._validate_params()
        ids = set()
        for sm in models:
            if sm.id in ids:
                raise DuplicateModelError(f"model {sm.id!r} given twice")
            ids.add(sm.id)
            sm.validate()
        self.known_models_ = list(models)
        return self

    def rank(self, predictions, attributes=None, model_id="learned"):
        """All ranked candidate models for one source.

        ``predictions`` maps attribute names (source order) to ranked
        ``LabelPrediction`` lists. Raises :class:`NoModelError` when no
        candidate can be built.
        """
        if not hasattr(self, "known_models_"):
            raise NotTrainedError("learner has not been fitted")
        self._validate_params()
        attributes = list(attributes if attributes is not None else predictions)
        usable = {a: predictions[a] for a in attributes if predictions.get(a)}
        for a in attributes:
            if a not in usable:
                log.info("attribute %s has no semantic type and is left out", a)
        if not usable:
            raise NoModelError(f"{model_id}: no attribute has a semantic type")
        self.timings_ = dict.fromkeys(PHASES, 0.0)

        t0 = time.perf_counter()
        g = build_graph(self.known_models_, usable, self.ontology, self.w_l, self.epsilon)
        t1 = time.perf_counter()
        mappings = generate_candidate_mappings(
            g,
            [a for a in attributes if a in usable],
            usable,
            self.branching_factor,
            self.num_of_candidates,
            self.score_weights,
            self.attribute_order,
        )
        t2 = time.perf_counter()
        trees = []
        for m in mappings:
            task = SteinerTask(g, tuple(sorted(m.nodes, key=lambda n: g.nodes[n].order)), self.steiner_k)
            for t in top_k_steiner(task):
                trees.append(replace(t, mapping=m))
        t3 = time.perf_counter()
        if not trees:
            raise NoModelError(f"{model_id}: no tree connects the mapped nodes")
        ranked = rank_candidates(g, trees, model_id)
        t4 = time.perf_counter()
        self.graph_ = g
        self.mappings_ = mappings
        self.timings_ = dict(zip(PHASES, (t1 - t0, t2 - t1, t3 - t2, t4 - t3)))
        return ranked

    def predict(self, predictions, attributes=None, model_id="learned"):
        """The rank-1 semantic model."""
        return self.rank(predictions, attributes, model_id)[0].model
