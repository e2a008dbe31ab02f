"""Narrative span classification into the aviation ontology.

TF-IDF vectorization and multinomial logistic regression, implemented
directly so training is reproducible: full-batch gradient descent over
an internally canonicalized sample order makes the fitted model a pure
function of the training set, regardless of row order.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

MODEL_FORMAT_VERSION = 1

REQUIRED_RELATIONSHIP_TYPES = (
    "AgencyInstrumentation",
    "PartWhole",
    "GeneralSpecification",
)


class AnnotateError(Exception):
    pass


@dataclass(frozen=True)
class Ontology:
    entity_types: tuple[str, ...]
    relationship_types: tuple[str, ...]
    version: str

    def __post_init__(self):
        if len(set(self.entity_types)) != len(self.entity_types):
            raise AnnotateError("ontology entity types must be distinct")
        missing = [t for t in REQUIRED_RELATIONSHIP_TYPES if t not in self.relationship_types]
        if missing:
            raise AnnotateError(f"ontology missing relationship types: {missing}")


def load_ontology(path: str | Path) -> Ontology:
    raw = json.loads(Path(path).read_text("utf-8"))
    return Ontology(
        entity_types=tuple(raw["entity_types"]),
        relationship_types=tuple(raw["relationship_types"]),
        version=str(raw.get("version", "1.0")),
    )


def default_ontology() -> Ontology:
    raw = json.loads(
        resources.files("askg.data").joinpath("ontology.json").read_text("utf-8")
    )
    return Ontology(
        entity_types=tuple(raw["entity_types"]),
        relationship_types=tuple(raw["relationship_types"]),
        version=str(raw["version"]),
    )


_TOKEN_SPLIT = re.compile(r"[^a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumeric runs, drop tokens under 2 chars."""
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if len(t) >= 2]


@dataclass
class TfidfModel:
    vocabulary: dict[str, int]
    idf: np.ndarray
    doc_count: int

    def transform(self, texts: list[str]) -> np.ndarray:
        """TF-IDF matrix for ``texts``, one L2-normalized row per text."""
        mat = np.zeros((len(texts), len(self.vocabulary)), dtype=np.float64)
        for i, text in enumerate(texts):
            for tok in tokenize(text):
                j = self.vocabulary.get(tok)
                if j is not None:
                    mat[i, j] += 1.0
        mat *= self.idf
        norms = np.linalg.norm(mat, axis=1, keepdims=True)
        np.divide(mat, norms, out=mat, where=norms > 0)
        return mat


def fit_tfidf(corpus: list[str]) -> TfidfModel:
    """Fit vocabulary and smoothed inverse document frequencies.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1, so a term present in every
    document still gets weight 1 rather than vanishing.
    """
    if not corpus:
        raise AnnotateError("empty corpus")
    df: dict[str, int] = {}
    for doc in corpus:
        for tok in set(tokenize(doc)):
            df[tok] = df.get(tok, 0) + 1
    if not df:
        raise AnnotateError("corpus tokenizes to an empty vocabulary")
    vocabulary = {tok: i for i, tok in enumerate(sorted(df))}
    n = len(corpus)
    idf = np.array(
        [np.log((1 + n) / (1 + df[tok])) + 1.0 for tok in sorted(df)],
        dtype=np.float64,
    )
    return TfidfModel(vocabulary=vocabulary, idf=idf, doc_count=n)


@dataclass
class Hyperparams:
    learning_rate: float = 0.1
    l2_lambda: float = 1e-4
    max_epochs: int = 500
    tol: float = 1e-6

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "l2_lambda": self.l2_lambda,
            "max_epochs": self.max_epochs,
            "tol": self.tol,
        }


@dataclass
class LogRegModel:
    weights: np.ndarray  # classes x features
    bias: np.ndarray  # classes
    classes: list[str]
    hyperparams: Hyperparams
    losses: list[float] = field(default_factory=list)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return _softmax(x @ self.weights.T + self.bias)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def loss_and_gradients(
    weights: np.ndarray,
    bias: np.ndarray,
    x: np.ndarray,
    y_idx: np.ndarray,
    l2_lambda: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Penalized mean cross-entropy and its exact gradients.

    The L2 penalty l2_lambda * ||W||^2 / 2 applies to the weight matrix
    only, never the bias.
    """
    n = x.shape[0]
    probs = _softmax(x @ weights.T + bias)
    nll = -np.log(np.clip(probs[np.arange(n), y_idx], 1e-300, None)).mean()
    loss = nll + 0.5 * l2_lambda * float(np.sum(weights * weights))
    delta = probs.copy()
    delta[np.arange(n), y_idx] -= 1.0
    grad_w = delta.T @ x / n + l2_lambda * weights
    grad_b = delta.mean(axis=0)
    return float(loss), grad_w, grad_b


def train_logreg(
    x: np.ndarray,
    y: list[str],
    hyperparams: Hyperparams | None = None,
    class_order: list[str] | None = None,
) -> LogRegModel:
    """Full-batch gradient descent on softmax cross-entropy with L2 penalty.

    Each epoch takes one descent step along the exact gradient, starting
    at learning_rate and halving (backtracking) until the loss does not
    increase, so the loss trail is monotone even under extreme L2
    strengths. Stops at max_epochs or when the loss decrease falls below
    tol. Samples are sorted into a canonical order first, so permuting
    the training set yields a bit-identical model.
    """
    hp = hyperparams or Hyperparams()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != len(y):
        raise AnnotateError("x and y must have matching first dimension")
    present = sorted(set(y))
    if len(present) < 2:
        raise AnnotateError("training data must contain at least two classes")
    if class_order is not None:
        missing = [c for c in present if c not in class_order]
        if missing:
            raise AnnotateError(f"labels outside the declared class order: {missing}")
        classes = [c for c in class_order if c in present]
    else:
        classes = present
    if x.shape[0] < len(classes):
        raise AnnotateError("need at least as many samples as classes")

    class_idx = {c: i for i, c in enumerate(classes)}
    y_idx = np.array([class_idx[label] for label in y], dtype=np.int64)

    order = np.lexsort((*[col for col in x.T][::-1], y_idx))
    x, y_idx = x[order], y_idx[order]

    k, d = len(classes), x.shape[1]
    weights = np.zeros((k, d), dtype=np.float64)
    bias = np.zeros(k, dtype=np.float64)

    losses: list[float] = []
    prev = np.inf
    for epoch in range(hp.max_epochs):
        loss, grad_w, grad_b = loss_and_gradients(weights, bias, x, y_idx, hp.l2_lambda)
        if not np.isfinite(loss):
            raise AnnotateError(f"training diverged: non-finite loss at epoch {epoch}")
        losses.append(loss)
        step = hp.learning_rate
        accepted = False
        for _ in range(60):
            cand_w = weights - step * grad_w
            cand_b = bias - step * grad_b
            cand_loss = loss_and_gradients(cand_w, cand_b, x, y_idx, hp.l2_lambda)[0]
            if np.isfinite(cand_loss) and cand_loss <= loss:
                weights, bias = cand_w, cand_b
                accepted = True
                break
            step /= 2.0
        if not accepted:
            break
        if prev - loss < hp.tol and epoch > 0:
            break
        prev = loss

    return LogRegModel(
        weights=weights, bias=bias, classes=classes, hyperparams=hp, losses=losses
    )


@dataclass(frozen=True)
class LabeledSpan:
    text: str
    label: str
    confidence: float


def predict_span(tfidf: TfidfModel, model: LogRegModel, text: str) -> LabeledSpan:
    """Classify one text span.

    Raises rather than guessing when the span tokenizes to nothing; ties
    go to the earliest class in the model's class order.
    """
    if not tokenize(text):
        raise AnnotateError(f"span tokenizes to nothing: {text!r}")
    vec = tfidf.transform([text])[0]
    probs = model.predict_proba(vec)
    best = int(np.argmax(probs))
    return LabeledSpan(text=text, label=model.classes[best], confidence=float(probs[best]))


def save_model(path: str | Path, tfidf: TfidfModel, model: LogRegModel) -> Path:
    """Persist vectorizer and classifier to one versioned flat file."""
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "vocabulary": tfidf.vocabulary,
        "idf": tfidf.idf.tolist(),
        "doc_count": tfidf.doc_count,
        "classes": model.classes,
        "weights": model.weights.tolist(),
        "bias": model.bias.tolist(),
        "hyperparams": model.hyperparams.to_dict(),
        "losses": model.losses,
    }
    path = Path(path)
    path.write_text(json.dumps(payload) + "\n", encoding="utf-8")
    return path


def load_model(path: str | Path) -> tuple[TfidfModel, LogRegModel]:
    raw = json.loads(Path(path).read_text("utf-8"))
    version = raw.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise AnnotateError(
            f"model format version {version} unsupported (expected {MODEL_FORMAT_VERSION})"
        )
    tfidf = TfidfModel(
        vocabulary={k: int(v) for k, v in raw["vocabulary"].items()},
        idf=np.array(raw["idf"], dtype=np.float64),
        doc_count=int(raw["doc_count"]),
    )
    model = LogRegModel(
        weights=np.array(raw["weights"], dtype=np.float64),
        bias=np.array(raw["bias"], dtype=np.float64),
        classes=list(raw["classes"]),
        hyperparams=Hyperparams(**raw["hyperparams"]),
        losses=list(raw.get("losses", [])),
    )
    return tfidf, model


def read_labeled_corpus(path: str | Path) -> tuple[list[str], list[str]]:
    """Read a label<TAB>text training corpus; returns (texts, labels)."""
    texts, labels = [], []
    for line_no, line in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            label, text = line.split("\t", 1)
        except ValueError:
            raise AnnotateError(f"line {line_no}: expected label<TAB>text") from None
        texts.append(text.strip())
        labels.append(label.strip())
    return texts, labels
