"""CART surrogate: a decision tree that mimics the detector's predictions.

The tree is grown without a depth limit until every leaf is pure or
unsplittable, so on distinct training vectors it reproduces the labels
exactly. Splits minimize Gini impurity over midpoint thresholds; ties go
to the lowest feature index, then the lowest threshold, which makes
fitting deterministic. A split with zero impurity decrease is still taken
on an impure node (parity patterns need it to make progress).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, encode_matrix
from .errors import ConfigError, SchemaError
from .ocsvm import (
    ANOMALOUS,
    NON_ANOMALOUS,
    OcsvmModel,
    dataset_decision_values,
    ensure_expanded,
)

TREE_FORMAT = "surrogate-tree/1"


@dataclass(frozen=True)
class TreeNode:
    prediction: int
    counts: tuple  # ((label, count), ...) sorted by label
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


def _counts(y: np.ndarray) -> tuple:
    labels, counts = np.unique(y, return_counts=True)
    return tuple((int(l), int(c)) for l, c in zip(labels, counts))


def _majority(counts: tuple) -> int:
    # highest count wins; equal counts fall to the lowest label
    best_label, best_count = counts[0]
    for label, count in counts[1:]:
        if count > best_count:
            best_label, best_count = label, count
    return best_label


def _gini(counts: tuple, total: int) -> float:
    return 1.0 - sum((c / total) ** 2 for _, c in counts)


def _best_split(X: np.ndarray, y: np.ndarray, idx: np.ndarray):
    """(feature, threshold) minimizing weighted child Gini, or None.

    Thresholds are midpoints between consecutive distinct values. Iteration
    order (features ascending, thresholds ascending) plus strict improvement
    makes tie-breaking deterministic.
    """
    n = idx.size
    labels = np.unique(y[idx])
    label_pos = {int(l): k for k, l in enumerate(labels)}
    best = None
    best_score = np.inf
    for f in range(X.shape[1]):
        vals = X[idx, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        sy = y[idx][order]
        onehot = np.zeros((n, labels.size))
        onehot[np.arange(n), [label_pos[int(l)] for l in sy]] = 1.0
        prefix = np.cumsum(onehot, axis=0)
        total = prefix[-1]
        for p in range(1, n):
            if sv[p - 1] == sv[p]:
                continue
            left = prefix[p - 1]
            right = total - left
            gl = 1.0 - float(np.sum((left / p) ** 2))
            gr = 1.0 - float(np.sum((right / (n - p)) ** 2))
            score = (p * gl + (n - p) * gr) / n
            if score < best_score:
                thr = (sv[p - 1] + sv[p]) / 2.0
                if thr >= sv[p]:  # midpoint rounded up to the right value
                    thr = sv[p - 1]
                best = (f, float(thr))
                best_score = score
    return best


def _grow(X: np.ndarray, y: np.ndarray, idx: np.ndarray) -> TreeNode:
    counts = _counts(y[idx])
    prediction = _majority(counts)
    if _gini(counts, idx.size) == 0.0:
        return TreeNode(prediction=prediction, counts=counts)
    split = _best_split(X, y, idx)
    if split is None:
        return TreeNode(prediction=prediction, counts=counts)
    f, thr = split
    mask = X[idx, f] <= thr
    left = _grow(X, y, idx[mask])
    right = _grow(X, y, idx[~mask])
    return TreeNode(prediction=prediction, counts=counts,
                    feature=f, threshold=thr, left=left, right=right)


def fit_tree(X, y) -> TreeNode:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2:
        raise ConfigError("training data must be a 2-D matrix")
    if y.shape != (X.shape[0],):
        raise ConfigError("labels must be one per row, got %s" % (y.shape,))
    if X.shape[0] == 0:
        raise ConfigError("cannot fit a tree on zero rows")
    y = y.astype(np.int64)
    return _grow(X, y, np.arange(X.shape[0]))


def predict_tree(tree: TreeNode, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    out = np.empty(X.shape[0], dtype=np.int64)
    for i, row in enumerate(X):
        node = tree
        while not node.is_leaf:
            node = node.left if row[node.feature] <= node.threshold else node.right
        out[i] = node.prediction
    return out


def tree_stats(tree: TreeNode) -> dict:
    def walk(node, depth):
        if node.is_leaf:
            return depth, 1, 1
        dl, ll, nl = walk(node.left, depth + 1)
        dr, lr, nr = walk(node.right, depth + 1)
        return max(dl, dr), ll + lr, nl + nr + 1
    depth, leaves, nodes = walk(tree, 0)
    return {"depth": depth, "n_leaves": leaves, "n_nodes": nodes}


def training_accuracy(tree: TreeNode, X, y) -> float:
    y = np.asarray(y, dtype=np.int64)
    return float(np.mean(predict_tree(tree, X) == y))


# ---------------------------------------------------------------------------
# Leaves as rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TreeRule:
    """One leaf: its label and the tightened root-to-leaf conditions."""

    label: int
    predicates: tuple  # (feature_name, op, value) with op "<=" or ">"
    n_samples: int


def tree_to_rules(tree: TreeNode, feature_names, label: int | None = None) -> tuple:
    """One rule per leaf, left to right; optionally only leaves of a label.

    Repeated tests on a feature collapse to the tightest bound, so each
    feature appears at most once per op.
    """
    feature_names = list(feature_names)
    rules = []

    def walk(node, path):
        if node.is_leaf:
            if label is not None and node.prediction != label:
                return
            bounds = {}
            for f, op, v in path:
                key = (f, op)
                if op == "<=":
                    bounds[key] = min(bounds.get(key, np.inf), v)
                else:
                    bounds[key] = max(bounds.get(key, -np.inf), v)
            preds = tuple(
                (feature_names[f], op, float(v))
                for (f, op), v in sorted(bounds.items(),
                                         key=lambda kv: (kv[0][0], kv[0][1] == "<="))
            )
            rules.append(TreeRule(
                label=int(node.prediction),
                predicates=preds,
                n_samples=sum(c for _, c in node.counts)))
            return
        walk(node.left, path + [(node.feature, "<=", node.threshold)])
        walk(node.right, path + [(node.feature, ">", node.threshold)])

    walk(tree, [])
    return tuple(rules)


def tree_rule_to_text(rule: TreeRule) -> str:
    if rule.label == NON_ANOMALOUS:
        head = "NOT OUTLIER IF "
    elif rule.label == ANOMALOUS:
        head = "OUTLIER IF "
    else:
        head = "CLASS %d IF " % rule.label
    if not rule.predicates:
        return head.rstrip() + " ALWAYS (n=%d)" % rule.n_samples
    body = " ∧ ".join("%s %s %s" % (f, op, repr(v)) for f, op, v in rule.predicates)
    return "%s%s (n=%d)" % (head, body, rule.n_samples)


# ---------------------------------------------------------------------------
# Fitting against a detector
# ---------------------------------------------------------------------------

def fit_surrogate(d: Dataset, model: OcsvmModel) -> tuple[TreeNode, list]:
    """Tree over original-unit features that mimics the model on d.

    Returns (tree, feature names); numeric features keep their units so the
    thresholds read directly, one-hot features split at 0.5.
    """
    if model.schema is None or model.scaling is None:
        raise ConfigError("model has no attached preprocessing; fit with fit_dataset")
    d_exp = ensure_expanded(d, model.schema)
    y = np.where(dataset_decision_values(model, d_exp) >= 0, NON_ANOMALOUS, ANOMALOUS)
    M = encode_matrix(d_exp, model.schema)  # unscaled numerics plus one-hot
    tree = fit_tree(M, y)
    return tree, model.schema.feature_names()


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _node_to_doc(node: TreeNode) -> dict:
    doc = {
        "prediction": node.prediction,
        "counts": [[l, c] for l, c in node.counts],
    }
    if not node.is_leaf:
        doc["feature"] = node.feature
        doc["threshold"] = node.threshold
        doc["left"] = _node_to_doc(node.left)
        doc["right"] = _node_to_doc(node.right)
    return doc


def _node_from_doc(doc: dict) -> TreeNode:
    counts = tuple((int(l), int(c)) for l, c in doc["counts"])
    if "feature" not in doc:
        return TreeNode(prediction=int(doc["prediction"]), counts=counts)
    return TreeNode(
        prediction=int(doc["prediction"]),
        counts=counts,
        feature=int(doc["feature"]),
        threshold=float(doc["threshold"]),
        left=_node_from_doc(doc["left"]),
        right=_node_from_doc(doc["right"]),
    )


def tree_to_json(tree: TreeNode, feature_names) -> str:
    doc = {
        "format": TREE_FORMAT,
        "features": list(feature_names),
        "root": _node_to_doc(tree),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def tree_from_json(text: str) -> tuple[TreeNode, list]:
    doc = json.loads(text)
    if doc.get("format") != TREE_FORMAT:
        raise SchemaError("unsupported tree format: %r" % doc.get("format"))
    return _node_from_doc(doc["root"]), list(doc["features"])
