"""Semantic labeling of source attributes.

Textual columns are matched against per-type TF-IDF documents by cosine
similarity; numeric columns are compared with each type's value sample by
a two-sample Kolmogorov-Smirnov test.
"""

from __future__ import annotations

import json
import re
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import ks_2samp
from sklearn.base import BaseEstimator
from sklearn.feature_extraction.text import TfidfVectorizer

from .errors import NotTrainedError, TrainingCoverageError
from .model import SemanticType
from .validation import check_positive_int, check_unit_interval

_TOKEN = re.compile(r"[a-z0-9]+")
_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def tokenize(text):
    return _TOKEN.findall(text.lower())


def parse_number(value):
    v = value.strip().replace(",", "")
    if _NUMBER.match(v):
        return float(v)
    return None


def is_numeric_column(values, threshold=0.8):
    """True when at least ``threshold`` of the non-empty values parse as decimals."""
    filled = [v for v in values if v.strip()]
    if not filled:
        return False
    hits = sum(parse_number(v) is not None for v in filled)
    return hits / len(filled) >= threshold


@dataclass(frozen=True)
class LabelPrediction:
    type: SemanticType
    confidence: float


def _sort_predictions(preds):
    return sorted(preds, key=lambda p: (-p.confidence, p.type.sort_key()))


class SemanticLabeler(BaseEstimator):
    """Learns a semantic labeling function from labeled sources.

    Parameters
    ----------
    numeric_threshold : float, default=0.8
        Fraction of parseable non-empty values above which a column is numeric.
    keep_zero : bool, default=False
        Keep zero-confidence candidates in :meth:`predict` output.
    """

    def __init__(self, numeric_threshold=0.8, keep_zero=False):
        self.numeric_threshold = numeric_threshold
        self.keep_zero = keep_zero

    def fit(self, labeled):
        """Train on ``(SourceTable, SemanticModel)`` pairs.

        Values of attributes sharing a semantic type are pooled into one
        document (textual) or one sample (numeric) per type.
        """
        check_unit_interval(self.numeric_threshold, "numeric_threshold")
        pooled: dict[SemanticType, list[str]] = defaultdict(list)
        names: dict[SemanticType, set[str]] = defaultdict(set)
        for table, sm in labeled:
            types = sm.semantic_types()
            for attr in table.attributes:
                if attr not in types:
                    raise TrainingCoverageError(f"{table.name}: attribute {attr!r} has no data node in {sm.id}")
                pooled[types[attr]].extend(table.column(attr))
                names[types[attr]].add(attr)

        text_types, docs = [], []
        self.numeric_samples_ = {}
        for t in sorted(pooled, key=SemanticType.sort_key):
            values = pooled[t]
            if is_numeric_column(values, self.numeric_threshold):
                nums = [parse_number(v) for v in values if v.strip()]
                self.numeric_samples_[t] = np.array([x for x in nums if x is not None])
            else:
                text_types.append(t)
                docs.append(" ".join(values))
        self.text_types_ = text_types
        self.attribute_names_ = {t: sorted(n) for t, n in names.items()}
        self.vectorizer_ = None
        self.doc_matrix_ = None
        if docs and any(tokenize(d) for d in docs):
            self.vectorizer_ = _make_vectorizer()
            self.doc_matrix_ = self.vectorizer_.fit_transform(docs)
        return self

    def _check_fitted(self):
        if not hasattr(self, "text_types_"):
            raise NotTrainedError("labeler has not been trained")
        if not self.text_types_ and not self.numeric_samples_:
            raise NotTrainedError("labeler was trained on no data")

    def score(self, values):
        """Confidence for every trained type of the matching column kind."""
        self._check_fitted()
        if is_numeric_column(values, self.numeric_threshold):
            nums = [parse_number(v) for v in values if v.strip()]
            sample = np.array([x for x in nums if x is not None])
            out = []
            for t, ref in self.numeric_samples_.items():
                stat = ks_2samp(sample, ref).statistic if len(ref) else 1.0
                out.append(LabelPrediction(t, float(np.clip(1.0 - stat, 0.0, 1.0))))
            return out
        if self.vectorizer_ is None:
            return [LabelPrediction(t, 0.0) for t in self.text_types_]
        q = self.vectorizer_.transform([" ".join(values)])
        sims = (self.doc_matrix_ @ q.T).toarray().ravel()
        return [LabelPrediction(t, float(np.clip(s, 0.0, 1.0))) for t, s in zip(self.text_types_, sims)]

    def predict(self, values, k=1):
        """Top ``k`` semantic types for one column of values."""
        check_positive_int(k, "k")
        self._check_fitted()
        if not any(v.strip() for v in values):
            return []
        preds = self.score(values)
        if not self.keep_zero:
            preds = [p for p in preds if p.confidence > 0.0]
        return _sort_predictions(preds)[:k]

    def predict_source(self, table, k=1):
        return {a: self.predict(table.column(a), k) for a in table.attributes}

    def to_dict(self):
        self._check_fitted()
        vocab, idf, docs = {}, [], []
        if self.vectorizer_ is not None:
            source = getattr(self.vectorizer_, "vocabulary_", None) or self.vectorizer_.vocabulary
            vocab = {t: int(i) for t, i in sorted(source.items())}
            idf = [float(x) for x in self.vectorizer_.idf_]
            m = self.doc_matrix_.tocsr()
            for r in range(m.shape[0]):
                row = m.getrow(r)
                docs.append({str(int(j)): float(v) for j, v in sorted(zip(row.indices, row.data))})
        return {
            "numeric_threshold": self.numeric_threshold,
            "vocabulary": vocab,
            "idf": idf,
            "text_types": [_type_json(t) for t in self.text_types_],
            "text_weights": docs,
            "numeric_types": [
                {**_type_json(t), "sample": [float(x) for x in s]} for t, s in self.numeric_samples_.items()
            ],
            "attribute_names": [{**_type_json(t), "names": n} for t, n in self.attribute_names_.items()],
        }

    @classmethod
    def from_dict(cls, doc):
        from scipy.sparse import csr_matrix

        lab = cls(numeric_threshold=doc["numeric_threshold"])
        lab.text_types_ = [_type_from_json(t) for t in doc["text_types"]]
        lab.numeric_samples_ = {_type_from_json(t): np.array(t["sample"]) for t in doc["numeric_types"]}
        lab.attribute_names_ = {_type_from_json(t): t["names"] for t in doc["attribute_names"]}
        lab.vectorizer_ = lab.doc_matrix_ = None
        if doc["vocabulary"]:
            lab.vectorizer_ = _make_vectorizer(vocabulary=doc["vocabulary"])
            lab.vectorizer_.idf_ = np.array(doc["idf"])
            rows, cols, vals = [], [], []
            for r, weights in enumerate(doc["text_weights"]):
                for j, v in weights.items():
                    rows.append(r)
                    cols.append(int(j))
                    vals.append(v)
            lab.doc_matrix_ = csr_matrix((vals, (rows, cols)), shape=(len(lab.text_types_), len(doc["idf"])))
        return lab

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _make_vectorizer(vocabulary=None):
    return TfidfVectorizer(
        tokenizer=tokenize, token_pattern=None, lowercase=False, smooth_idf=True, vocabulary=vocabulary
    )


def _type_json(t):
    return {"class": t.class_uri, "property": t.property_uri}


def _type_from_json(d):
    return SemanticType(d["class"], d.get("property"))


def mrr(predictions, gold):
    """Mean reciprocal rank of the gold type in each attribute's ranked list.

    ``predictions`` maps attribute -> ranked predictions (LabelPrediction or
    SemanticType); an absent gold type contributes 0.
    """
    if not gold:
        return 0.0
    total = 0.0
    for attr, t in gold.items():
        ranked = [p.type if isinstance(p, LabelPrediction) else p for p in predictions.get(attr, ())]
        if t in ranked:
            total += 1.0 / (ranked.index(t) + 1)
    return total / len(gold)


def predictions_to_json(predictions):
    return {
        attr: [{**_type_json(p.type), "confidence": p.confidence} for p in preds]
        for attr, preds in predictions.items()
    }


def predictions_from_json(doc):
    """Inverse of :func:`predictions_to_json`; keeps attribute order and re-sorts each list."""
    out = {}
    for attr, preds in doc.items():
        out[attr] = _sort_predictions(LabelPrediction(_type_from_json(p), float(p["confidence"])) for p in preds)
    return out


def load_predictions(path):
    from .errors import MalformedDocumentError

    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise MalformedDocumentError(path, f"line {err.lineno} column {err.colno}", err.msg) from None
    if not isinstance(doc, dict):
        raise MalformedDocumentError(path, "$", "expected an object mapping attributes to predictions")
    try:
        return predictions_from_json(doc)
    except (KeyError, TypeError, ValueError) as err:
        raise MalformedDocumentError(path, "$", f"bad prediction entry: {err}") from None
