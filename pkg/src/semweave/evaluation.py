"""Comparing learned models with gold models, and the known-model experiment protocol."""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, NoModelError, SourceFormatError
from .labeling import LabelPrediction, SemanticLabeler, mrr
from .learner import PHASES, SemanticModelLearner
from .model import load_model, load_source, rel
from .ontology import load_ontology
from .validation import check_choice, check_positive_int

log = logging.getLogger(__name__)

PERMUTATION_LIMIT = 10_000
SCOPES = ("all", "internal")
SCENARIOS = ("correct", "learned")


@dataclass(frozen=True)
class PRResult:
    precision: float
    recall: float
    f1: float
    greedy: bool = False

    def __iter__(self):
        # unpacks as (precision, recall, f1)
        return iter((self.precision, self.recall, self.f1))


def _ratio(num, den, other_empty):
    if den == 0:
        return 1.0 if other_empty else 0.0
    return num / den


def f1_score(p, r):
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _groups(sm):
    out: dict[str, list[str]] = {}
    for c in sm.class_nodes:
        out.setdefault(c.class_uri, []).append(c.id)
    return out


def _numberings(gold, learned):
    """Candidate numberings of the learned model's class nodes, or None if too many.

    Same-class nodes of the learned model are assigned distinct ordinals among
    ``1..max(gold count, learned count)``; every such assignment is tried unless
    their number exceeds :data:`PERMUTATION_LIMIT`.
    """
    gold_count = Counter(c.class_uri for c in gold.class_nodes)
    groups = _groups(learned)
    options = []
    total = 1
    for cls, ids in groups.items():
        slots = max(len(ids), gold_count[cls])
        total *= math.perm(slots, len(ids))
        options.append((cls, ids, slots))
    if total > PERMUTATION_LIMIT:
        return None
    per_group = [
        [dict(zip(ids, (f"{cls}{i}" for i in perm))) for perm in itertools.permutations(range(1, slots + 1), len(ids))]
        for cls, ids, slots in options
    ]
    out = []
    for combo in itertools.product(*per_group):
        numbering = {}
        for part in combo:
            numbering.update(part)
        out.append(numbering)
    return out


def _greedy_numbering(gold, gold_rel, learned, internal_only):
    """Assign ordinals group by group, each node taking the slot that adds the most matches."""
    numbering = learned.default_numbering()
    gold_count = Counter(c.class_uri for c in gold.class_nodes)
    for cls, ids in _groups(learned).items():
        slots = list(range(1, max(len(ids), gold_count[cls]) + 1))
        free = list(slots)
        for node in ids:
            best, best_hits = None, -1
            for s in free:
                numbering[node] = f"{cls}{s}"
                hits = len(rel(learned, numbering, internal_only) & gold_rel)
                if hits > best_hits:
                    best, best_hits = s, hits
            numbering[node] = f"{cls}{best}"
            free.remove(best)
    return numbering


def _best_intersection(gold, learned, internal_only):
    gold_rel = rel(gold, internal_only=internal_only)
    numberings = _numberings(gold, learned)
    greedy = numberings is None
    if greedy:
        numberings = [_greedy_numbering(gold, gold_rel, learned, internal_only)]
    best = None
    for numbering in numberings:
        lr = rel(learned, numbering, internal_only)
        hit = len(lr & gold_rel)
        if best is None or hit > best[0]:
            best = (hit, lr)
    return gold_rel, best[1], best[0], greedy


def precision_recall(gold, learned, scope="all") -> PRResult:
    """Precision, recall and F1 of ``learned`` under its best node numbering."""
    check_choice(scope, "scope", SCOPES)
    gold_rel, learned_rel, hit, greedy = _best_intersection(gold, learned, scope == "internal")
    p = _ratio(hit, len(learned_rel), not gold_rel)
    r = _ratio(hit, len(gold_rel), not learned_rel)
    return PRResult(p, r, f1_score(p, r), greedy)


def overlap(sm1, sm2) -> float:
    """Best-numbering Jaccard similarity of the two triple sets."""
    a, b, hit, _ = _best_intersection(sm1, sm2, False)
    union = len(a) + len(b) - hit
    return 1.0 if union == 0 else hit / union


@dataclass(frozen=True)
class ExperimentPlan:
    sources: tuple[str, ...]
    j: int
    k: int = 1
    scope: str | None = None
    seed: int | None = None
    branching_factor: int | None = 50
    num_of_candidates: int | None = 50
    steiner_k: int = 10

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        if not isinstance(self.j, int) or not 0 <= self.j <= len(self.sources) - 1:
            raise ConfigError(f"j must lie in [0, {len(self.sources) - 1}], got {self.j!r}")
        check_positive_int(self.k, "k")
        if self.scope is not None:
            check_choice(self.scope, "scope", SCOPES)

    def ordered_sources(self):
        if self.seed is None:
            return list(self.sources)
        import random

        order = list(self.sources)
        random.Random(self.seed).shuffle(order)
        return order


@dataclass
class SourceResult:
    source: str
    j: int
    k: int
    precision: float
    recall: float
    f1: float
    mrr: float | None
    seconds: dict = field(default_factory=dict)
    status: str = "ok"
    greedy: bool = False


@dataclass
class EvalReport:
    scenario: str
    results: list[SourceResult]

    def mean(self, attr):
        vals = [getattr(r, attr) for r in self.results if getattr(r, attr) is not None]
        return sum(vals) / len(vals) if vals else 0.0

    @property
    def mean_precision(self):
        return self.mean("precision")

    @property
    def mean_recall(self):
        return self.mean("recall")

    @property
    def mean_f1(self):
        return self.mean("f1")


CSV_FIELDS = ["source", "j", "k", "precision", "recall", "f1", "mrr", "status", "greedy"] + [
    f"seconds_{p}" for p in PHASES
]


def write_csv(reports, out=None, timings=True):
    """Serialize result rows; returns the CSV text and writes it to ``out`` if given."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for report in reports:
        for r in report.results:
            row = [r.source, r.j, r.k, f"{r.precision:.6f}", f"{r.recall:.6f}", f"{r.f1:.6f}"]
            row.append("" if r.mrr is None else f"{r.mrr:.6f}")
            row += [r.status, int(r.greedy)]
            row += [f"{r.seconds.get(p, 0.0):.6f}" if timings else "" for p in PHASES]
            w.writerow(row)
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text, encoding="utf-8")
    return text


def gold_predictions(sm):
    types = sm.semantic_types()
    return {a: [LabelPrediction(types[a], 1.0)] for a in sm.attributes if a in types}


def _run_one(args):
    plan, corpus, ontology, scenario, target = args
    by_name = {t.name: (t, sm) for t, sm in corpus}
    table, gold = by_name[target]
    order = [n for n in plan.ordered_sources() if n != target]
    known = [by_name[n] for n in order[: plan.j]]
    scope = plan.scope or ("internal" if scenario == "correct" else "all")

    mrr_value = None
    if scenario == "correct":
        preds = gold_predictions(gold)
        attributes = list(table.attributes)
    else:
        attributes = list(table.attributes)
        if known:
            labeler = SemanticLabeler().fit(known)
            preds = labeler.predict_source(table, plan.k)
        else:
            preds = {a: [] for a in attributes}
        mrr_value = mrr(preds, gold.semantic_types())

    learner = SemanticModelLearner(
        ontology,
        branching_factor=plan.branching_factor,
        num_of_candidates=plan.num_of_candidates,
        steiner_k=plan.steiner_k,
    ).fit([sm for _, sm in known])
    try:
        ranked = learner.rank(preds, attributes, model_id=target)
    except NoModelError as err:
        log.info("%s (j=%d): %s", target, plan.j, err)
        seconds = getattr(learner, "timings_", {})
        return SourceResult(target, plan.j, plan.k, 0.0, 0.0, 0.0, mrr_value, seconds, "no-model")
    pr = precision_recall(gold, ranked[0].model, scope)
    return SourceResult(
        target, plan.j, plan.k, pr.precision, pr.recall, pr.f1, mrr_value, dict(learner.timings_), "ok", pr.greedy
    )


def run_experiment(plan: ExperimentPlan, corpus, ontology, scenario="correct", jobs=1) -> EvalReport:
    """Learn every source of ``corpus`` with ``plan.j`` other models known.

    ``corpus`` is a list of ``(SourceTable, SemanticModel)`` pairs whose table
    names match ``plan.sources``. Scenario ``correct`` injects each
    attribute's gold type with confidence 1 and scores internal links only;
    ``learned`` trains a labeler on the known sources' tables.
    """
    check_choice(scenario, "scenario", SCENARIOS)
    names = [t.name for t, _ in corpus]
    missing = [s for s in plan.sources if s not in names]
    if missing:
        raise ConfigError(f"plan names sources absent from the corpus: {missing}")
    for t, sm in corpus:
        sm.validate()
    units = [(plan, corpus, ontology, scenario, s) for s in plan.sources]
    if jobs == 1 or len(units) == 1:
        results = [_run_one(u) for u in units]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, units))
    return EvalReport(scenario, results)


def default_jobs():
    return os.cpu_count() or 1


def load_labeled_sources(directory):
    """``(SourceTable, SemanticModel)`` pairs from ``<dir>/models`` and ``<dir>/sources``, in model file order."""
    d = Path(directory)
    for sub in ("models", "sources"):
        if not (d / sub).is_dir():
            raise ConfigError(f"directory {d} has no {sub}/ subdirectory")
    sources = {}
    for p in sorted((d / "sources").iterdir()):
        if p.suffix.lower() in (".csv", ".json"):
            sources[p.name.split(".")[0]] = p
    corpus = []
    for p in sorted((d / "models").glob("*.json")):
        sm = load_model(p)
        if sm.id not in sources:
            raise SourceFormatError(f"no source table for model {sm.id!r} in {d / 'sources'}")
        corpus.append((load_source(sources[sm.id], name=sm.id), sm))
    return corpus


def load_corpus(directory):
    """Labeled sources plus the union of ``<dir>/ontology/*.json``."""
    d = Path(directory)
    if not (d / "ontology").is_dir():
        raise ConfigError(f"corpus directory {d} has no ontology/ subdirectory")
    return load_labeled_sources(d), load_ontology(sorted((d / "ontology").glob("*.json")))


def load_models_dir(directory):
    d = Path(directory)
    if not d.is_dir():
        raise ConfigError(f"models directory {d} does not exist")
    return [load_model(p) for p in sorted(d.glob("*.json"))]
