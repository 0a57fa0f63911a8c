"""Command-line interface: ``semweave {label,graph-build,learn,evaluate,graph-dump}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import errors
from .evaluation import (
    SCENARIOS,
    SCOPES,
    ExperimentPlan,
    default_jobs,
    load_corpus,
    load_labeled_sources,
    load_models_dir,
    run_experiment,
    write_csv,
)
from .graph import build_graph
from .labeling import SemanticLabeler, load_predictions, predictions_to_json
from .learner import SemanticModelLearner
from .mapping import ORDER_POLICIES
from .model import load_model, load_source, model_to_dot
from .ontology import load_ontology
from .validation import check_choice, check_positive, check_positive_int, check_score_weights

log = logging.getLogger("semweave")

VALIDATION_ERRORS = (
    errors.ConfigError,
    errors.MalformedDocumentError,
    errors.ModelValidationError,
    errors.SourceFormatError,
    errors.OntologyCycleError,
    errors.TrainingCoverageError,
    errors.DuplicateModelError,
    errors.UnknownEntityError,
)


@dataclass
class RunConfig:
    ontology: list = field(default_factory=list)
    models: str | None = None
    train: str | None = None
    source: str | None = None
    predict: str | None = None
    types: str | None = None
    corpus: str | None = None
    model: str | None = None
    out: str | None = None
    dot: str | None = None
    emit_dot: str | None = None
    type_k: int = 2
    top_k: object = 10
    branching_factor: int | None = 50
    candidates: int | None = 50
    w_l: float = 1.0
    epsilon: float = 0.01
    score_weights: tuple = (1 / 3, 1 / 3, 1 / 3)
    attribute_order: str = "source"
    scenario: str = "correct"
    scope: str | None = None
    j_range: str | None = None
    jobs: int | None = None
    seed: int | None = None
    timings: bool = True


# per-command defaults that differ from RunConfig's
COMMAND_DEFAULTS = {"label": {"top_k": 2}, "evaluate": {"top_k": [1]}}

PATH_FIELDS = ("ontology", "models", "train", "source", "predict", "types", "corpus", "model")


def _read_config(path):
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise errors.ConfigError(f"config: file {path} does not exist") from None
    except tomllib.TOMLDecodeError as err:
        raise errors.MalformedDocumentError(path, "toml", str(err)) from None
    known = {f.name for f in fields(RunConfig)}
    flat = {}
    for key, value in doc.items():
        if isinstance(value, dict):
            raise errors.ConfigError(f"config: tables are not supported ([{key}])")
        name = key.replace("-", "_")
        if name not in known:
            raise errors.ConfigError(f"config: unknown key {key!r}")
        flat[name] = value
    return flat


def resolve_config(command, args) -> RunConfig:
    """Defaults, then the TOML file, then command-line flags."""
    values = {}
    values.update(COMMAND_DEFAULTS.get(command, {}))
    if getattr(args, "config", None):
        values.update(_read_config(args.config))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    if isinstance(values.get("ontology"), str):
        values["ontology"] = [values["ontology"]]
    if isinstance(values.get("score_weights"), str):
        values["score_weights"] = tuple(x for x in values["score_weights"].split(","))
    cfg = RunConfig(**values)
    _validate(cfg)
    return cfg


def _none_or_int(v):
    if v is None or (isinstance(v, str) and v.lower() in ("none", "inf", "all")):
        return None
    return v


def _validate(cfg: RunConfig):
    for name in PATH_FIELDS:
        value = getattr(cfg, name)
        for p in value if isinstance(value, list) else [value]:
            if p is not None and not Path(p).exists():
                raise errors.ConfigError(f"{name}: path {p} does not exist")
    cfg.branching_factor = _none_or_int(cfg.branching_factor)
    cfg.candidates = _none_or_int(cfg.candidates)
    check_positive_int(cfg.type_k, "type_k")
    for k in cfg.top_k if isinstance(cfg.top_k, list) else [cfg.top_k]:
        check_positive_int(k, "top_k")
    check_positive_int(cfg.branching_factor, "branching_factor", allow_none=True)
    check_positive_int(cfg.candidates, "candidates", allow_none=True)
    check_positive(cfg.w_l, "w_l")
    check_positive(cfg.epsilon, "epsilon")
    cfg.score_weights = check_score_weights(cfg.score_weights)
    check_choice(cfg.attribute_order, "attribute_order", ORDER_POLICIES)
    check_choice(cfg.scenario, "scenario", SCENARIOS)
    if cfg.scope is not None:
        check_choice(cfg.scope, "scope", SCOPES)
    if cfg.jobs is not None:
        check_positive_int(cfg.jobs, "jobs")


def _require(cfg, *names):
    for n in names:
        if not getattr(cfg, n):
            raise errors.ConfigError(f"{n}: required")


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dumps(obj):
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _train_labeler(directory):
    return SemanticLabeler().fit(load_labeled_sources(directory))


def cmd_label(cfg: RunConfig):
    _require(cfg, "train", "predict")
    if cfg.ontology:
        load_ontology(cfg.ontology)
    labeler = _train_labeler(cfg.train)
    table = load_source(cfg.predict)
    preds = labeler.predict_source(table, cfg.top_k)
    _emit(_dumps(predictions_to_json(preds)), cfg.out)
    return 0


def _predictions(cfg, table):
    if cfg.types:
        return load_predictions(cfg.types)
    if cfg.train:
        return _train_labeler(cfg.train).predict_source(table, cfg.type_k)
    raise errors.ConfigError("types: required (or give train to learn them)")


def _graph(cfg):
    _require(cfg, "ontology", "types")
    ontology = load_ontology(cfg.ontology)
    models = load_models_dir(cfg.models) if cfg.models else []
    preds = load_predictions(cfg.types)
    return build_graph(models, preds, ontology, cfg.w_l, cfg.epsilon)


def cmd_graph_build(cfg: RunConfig):
    g = _graph(cfg)
    _emit(g.to_json() + "\n", cfg.out)
    if cfg.dot:
        Path(cfg.dot).write_text(g.to_dot(), encoding="utf-8")
    return 0


def cmd_graph_dump(cfg: RunConfig):
    if cfg.model:
        _emit(model_to_dot(load_model(cfg.model)), cfg.out)
    else:
        _emit(_graph(cfg).to_dot(), cfg.out)
    return 0


def cmd_learn(cfg: RunConfig):
    _require(cfg, "source", "ontology")
    ontology = load_ontology(cfg.ontology)
    models = load_models_dir(cfg.models) if cfg.models else []
    table = load_source(cfg.source)
    preds = _predictions(cfg, table)
    learner = SemanticModelLearner(
        ontology,
        branching_factor=cfg.branching_factor,
        num_of_candidates=cfg.candidates,
        steiner_k=cfg.top_k,
        w_l=cfg.w_l,
        epsilon=cfg.epsilon,
        score_weights=cfg.score_weights,
        attribute_order=cfg.attribute_order,
    ).fit(models)
    ranked = learner.rank(preds, list(table.attributes), model_id=table.name)
    doc = {"source": table.name, "models": [r.to_dict() for r in ranked]}
    _emit(_dumps(doc), cfg.out)
    if cfg.emit_dot:
        d = Path(cfg.emit_dot)
        d.mkdir(parents=True, exist_ok=True)
        for r in ranked:
            (d / f"{table.name}-rank{r.rank}.dot").write_text(model_to_dot(r.model), encoding="utf-8")
    return 0


def parse_j_range(text, n_sources):
    """``"a..b"`` (inclusive) or a single integer, bounded by the corpus size."""
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise errors.ConfigError(f"j_range: cannot parse {text!r}") from None
    if lo < 0 or hi < lo or hi > n_sources - 1:
        raise errors.ConfigError(f"j_range: {text!r} must satisfy 0 <= a <= b <= {n_sources - 1}")
    return list(range(lo, hi + 1))


def cmd_evaluate(cfg: RunConfig):
    _require(cfg, "corpus")
    corpus, ontology = load_corpus(cfg.corpus)
    names = [t.name for t, _ in corpus]
    js = parse_j_range(cfg.j_range or f"0..{len(names) - 1}", len(names))
    ks = cfg.top_k if isinstance(cfg.top_k, list) else [cfg.top_k]
    jobs = cfg.jobs or default_jobs()
    reports = []
    for k in ks:
        for j in js:
            plan = ExperimentPlan(
                names,
                j,
                k,
                cfg.scope,
                cfg.seed,
                cfg.branching_factor,
                cfg.candidates,
            )
            reports.append(run_experiment(plan, corpus, ontology, cfg.scenario, jobs=jobs))
    text = write_csv(reports, timings=cfg.timings)
    _emit(text, cfg.out)
    for rep in reports:
        r0 = rep.results[0]
        log.info("j=%d k=%d mean P=%.3f R=%.3f F1=%.3f", r0.j, r0.k, rep.mean_precision, rep.mean_recall, rep.mean_f1)
    return 0


def _score_weights(text):
    return tuple(x.strip() for x in text.split(","))


def build_parser():
    p = argparse.ArgumentParser(prog="semweave", description="Learn semantic models of structured sources.")
    p.add_argument("--config", help="TOML file of defaults; flags win")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, graph=False):
        sp.add_argument("--config", default=argparse.SUPPRESS, help="TOML file of defaults; flags win")
        sp.add_argument("--out", help="output file (default: stdout)")
        if graph:
            sp.add_argument("--ontology", nargs="+", help="ontology JSON documents")
            sp.add_argument("--models", help="directory of known model JSON files")
            sp.add_argument("--w-l", type=float, dest="w_l")
            sp.add_argument("--epsilon", type=float)

    sp = sub.add_parser("label", help="train a labeler and predict semantic types")
    common(sp)
    sp.add_argument("--train", help="directory with models/ and sources/")
    sp.add_argument("--predict", help="source file to label")
    sp.add_argument("--top-k", type=int, dest="top_k")
    sp.add_argument("--ontology", nargs="+")

    sp = sub.add_parser("graph-build", help="build the alignment graph as JSON")
    common(sp, graph=True)
    sp.add_argument("--types", help="predicted types JSON")
    sp.add_argument("--dot", help="also write DOT to this file")

    sp = sub.add_parser("learn", help="learn ranked semantic models for a source")
    common(sp, graph=True)
    sp.add_argument("--source", help="CSV or JSON source file")
    sp.add_argument("--types", help="predicted types JSON")
    sp.add_argument("--train", help="learn types from this labeled directory instead")
    sp.add_argument("--type-k", type=int, dest="type_k", help="types per attribute when training")
    sp.add_argument("--top-k", type=int, dest="top_k", help="trees per mapping")
    sp.add_argument("--candidates", type=_none_or_int_arg, help="candidate mappings kept")
    sp.add_argument("--branching-factor", type=_none_or_int_arg, dest="branching_factor")
    sp.add_argument("--score-weights", type=_score_weights, dest="score_weights")
    sp.add_argument("--attribute-order", choices=ORDER_POLICIES, dest="attribute_order")
    sp.add_argument("--emit-dot", dest="emit_dot", help="directory for one DOT file per ranked model")

    sp = sub.add_parser("evaluate", help="run the known-model experiment over a corpus")
    common(sp)
    sp.add_argument("--corpus", help="directory with models/, sources/, ontology/")
    sp.add_argument("--scenario", choices=SCENARIOS)
    sp.add_argument("--scope", choices=SCOPES)
    sp.add_argument("--j-range", dest="j_range", help="e.g. 0..28")
    sp.add_argument("--top-k", type=int, nargs="+", dest="top_k")
    sp.add_argument("--candidates", type=_none_or_int_arg)
    sp.add_argument("--branching-factor", type=_none_or_int_arg, dest="branching_factor")
    sp.add_argument("--jobs", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--no-timings", dest="timings", action="store_const", const=False)

    sp = sub.add_parser("graph-dump", help="DOT export of a model or of the alignment graph")
    common(sp, graph=True)
    sp.add_argument("--model", help="model JSON to export")
    sp.add_argument("--types", help="predicted types JSON (graph export)")
    return p


def _none_or_int_arg(text):
    if text.lower() in ("none", "inf", "all"):
        return "none"
    return int(text)


COMMANDS = {
    "label": cmd_label,
    "graph-build": cmd_graph_build,
    "learn": cmd_learn,
    "evaluate": cmd_evaluate,
    "graph-dump": cmd_graph_dump,
}


def _setup_logging():
    level = os.environ.get("SEMWEAVE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args.command, args)
        return COMMANDS[args.command](cfg)
    except VALIDATION_ERRORS as err:
        print(f"semweave: error: {err}", file=sys.stderr)
        return 2
    except errors.NoModelError as err:
        print(f"semweave: no model: {err}", file=sys.stderr)
        return 1
    except errors.SemweaveError as err:
        print(f"semweave: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
