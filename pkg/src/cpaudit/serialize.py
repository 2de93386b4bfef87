"""Versioned JSON serialization for fitted models and selection bundles.

Small models (linear, calibrators) store their fitted arrays directly. Models
whose state is dominated by training data (forests, boosting, interval
methods) store a refit recipe instead: the training arrays, the
configuration, and the random stream that produced the fit. Because every fit
in the package is deterministic given its stream, reloading reproduces the
original model bit for bit. Floats round-trip exactly (shortest-repr JSON).
"""

from __future__ import annotations

import json

import numpy as np

from .conformal import MethodConfig, fit_method
from .data import Dataset
from .learners import (
    BinningCalibrator,
    IdentityCalibrator,
    IsotonicCalibrator,
    KNNRegressor,
    LearnerConfig,
    LogisticClassifier,
    OLSRegressor,
    PlattCalibrator,
    fit_classifier,
)
from .reliability import CoverageLabels, ReliabilityMember, _class_weights
from .rng import RngStream
from .selection import SelectionResult

FORMAT = "cpaudit-model"
BUNDLE_FORMAT = "cpaudit-bundle"
VERSION = 1


def _arr(a):
    return np.asarray(a).tolist()


def learner_config_state(config: LearnerConfig) -> dict:
    return {"family": config.family, "params": [list(kv) for kv in config.params]}


def learner_config_from_state(state: dict) -> LearnerConfig:
    return LearnerConfig(state["family"], tuple((k, v) for k, v in state["params"]))


def _encode_option(value):
    if isinstance(value, LearnerConfig):
        return {"__learner__": learner_config_state(value)}
    return value


def _decode_option(value):
    if isinstance(value, dict) and "__learner__" in value:
        return learner_config_from_state(value["__learner__"])
    return value


def method_config_state(config: MethodConfig) -> dict:
    return {"name": config.name,
            "options": [[k, _encode_option(v)] for k, v in config.options]}


def method_config_from_state(state: dict) -> MethodConfig:
    return MethodConfig(state["name"],
                        tuple((k, _decode_option(v)) for k, v in state["options"]))


def calibrator_state(cal) -> dict:
    if isinstance(cal, IsotonicCalibrator):
        return {"method": "isotonic", "knots": _arr(cal.knots_), "values": _arr(cal.values_)}
    if isinstance(cal, PlattCalibrator):
        return {"method": "platt", "a": cal.a_, "b": cal.b_, "const": cal.const_}
    if isinstance(cal, BinningCalibrator):
        return {"method": "binning", "n_bins": cal.n_bins,
                "edges": _arr(cal.edges_), "values": _arr(cal.values_)}
    if isinstance(cal, IdentityCalibrator):
        return {"method": "none"}
    raise TypeError(f"cannot serialize calibrator {type(cal).__name__}")


def calibrator_from_state(state: dict):
    method = state["method"]
    if method == "isotonic":
        cal = IsotonicCalibrator()
        cal.knots_ = np.asarray(state["knots"], dtype=float)
        cal.values_ = np.asarray(state["values"], dtype=float)
        return cal
    if method == "platt":
        cal = PlattCalibrator()
        cal.a_, cal.b_, cal.const_ = state["a"], state["b"], state["const"]
        return cal
    if method == "binning":
        cal = BinningCalibrator(n_bins=state["n_bins"])
        cal.edges_ = np.asarray(state["edges"], dtype=float)
        cal.values_ = np.asarray(state["values"], dtype=float)
        return cal
    if method == "none":
        return IdentityCalibrator()
    raise ValueError(f"unknown calibrator method {method!r}")


def model_state(model) -> dict:
    """Direct state for the compact model families."""
    if isinstance(model, OLSRegressor):
        return {"family": "ols", "coef": _arr(model.coef_),
                "xtx_inv": _arr(model.xtx_inv_), "resid_se": model.resid_se_,
                "dof": model.dof_, "ridge_fallback": model.ridge_fallback}
    if isinstance(model, KNNRegressor):
        return {"family": "knn", "k": model.k, "X": _arr(model.X_), "y": _arr(model.y_)}
    if isinstance(model, LogisticClassifier):
        return {"family": "logistic", "l2": model.l2, "degenerate": model.degenerate,
                "coef": None if model.coef_ is None else _arr(model.coef_),
                "const": getattr(model, "const_", None)}
    raise TypeError(f"no direct serializer for {type(model).__name__}")


def model_from_state(state: dict):
    family = state["family"]
    if family == "ols":
        model = OLSRegressor()
        model.coef_ = np.asarray(state["coef"], dtype=float)
        model.xtx_inv_ = np.asarray(state["xtx_inv"], dtype=float)
        model.resid_se_ = state["resid_se"]
        model.dof_ = state["dof"]
        model.ridge_fallback = state["ridge_fallback"]
        return model
    if family == "knn":
        model = KNNRegressor(state["k"])
        model.X_ = np.asarray(state["X"], dtype=float)
        model.y_ = np.asarray(state["y"], dtype=float)
        return model
    if family == "logistic":
        model = LogisticClassifier(l2=state["l2"])
        model.degenerate = state["degenerate"]
        model.coef_ = None if state["coef"] is None else np.asarray(state["coef"], dtype=float)
        if state["const"] is not None:
            model.const_ = state["const"]
        return model
    raise ValueError(f"unknown model family {family!r}")


def save_model(model, path) -> None:
    doc = {"format": FORMAT, "version": VERSION, "model": model_state(model)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != FORMAT:
        raise ValueError(f"not a {FORMAT} file: {path}")
    return model_from_state(doc["model"])


def member_state(member: ReliabilityMember) -> dict:
    if member.constant is not None:
        return {"constant": member.constant, "flags": member.flags}
    return {
        "constant": None,
        "flags": member.flags,
        "learner": learner_config_state(member.learner_config),
        "calibrator": calibrator_state(member.calibrator),
        "labels_X": _arr(member.labels.X),
        "labels_I": _arr(member.labels.indicators),
        "stream": member.stream.to_state(),
        "cv_folds": member.cv_folds,
    }


def member_from_state(state: dict) -> ReliabilityMember:
    if state["constant"] is not None:
        return ReliabilityMember(None, None, None, flags=state["flags"],
                                 constant=state["constant"])
    config = learner_config_from_state(state["learner"])
    X = np.asarray(state["labels_X"], dtype=float)
    I = np.asarray(state["labels_I"], dtype=float)
    stream = RngStream.from_state(state["stream"])
    classifier = fit_classifier(config, X, I, sample_weight=_class_weights(I),
                                rng=stream.child("final-fit"))
    return ReliabilityMember(classifier, calibrator_from_state(state["calibrator"]),
                             config, flags=state["flags"], cv_folds=state["cv_folds"],
                             labels=CoverageLabels(X, I), stream=stream)


def save_selection_bundle(result: SelectionResult, path) -> None:
    """Persist a selection outcome: scores, the winner's refit recipe, and
    the retained reliability members."""
    if result.dataset is None or result.refit_stream is None:
        raise ValueError("selection result lacks its refit recipe")
    members = [member_state(m) for m in result.ensembles[result.selected] if m is not None]
    doc = {
        "format": BUNDLE_FORMAT,
        "version": VERSION,
        "alpha": result.alpha,
        "trust_margin": result.trust_margin,
        "candidates": [method_config_state(c) for c in result.candidates],
        "scores": [[None if not np.isfinite(v) else float(v) for v in row]
                   for row in result.scores],
        "mean_cvi": [None if not np.isfinite(v) else float(v) for v in result.mean_cvi],
        "selected": result.selected,
        "flags": result.flags,
        "train_X": _arr(result.dataset.X),
        "train_y": _arr(result.dataset.y),
        "refit_stream": result.refit_stream.to_state(),
        "members": members,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_selection_bundle(path) -> SelectionResult:
    """Reconstruct a saved selection: members are rebuilt from their stored
    label sets and streams, the winner is refit on the stored training data."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != BUNDLE_FORMAT:
        raise ValueError(f"not a {BUNDLE_FORMAT} file: {path}")
    candidates = [method_config_from_state(c) for c in doc["candidates"]]
    selected = doc["selected"]
    d = Dataset(np.asarray(doc["train_X"], dtype=float),
                np.asarray(doc["train_y"], dtype=float))
    stream = RngStream.from_state(doc["refit_stream"])
    final = fit_method(candidates[selected], d, doc["alpha"], stream)
    members = [member_from_state(m) for m in doc["members"]]
    ensembles = [[] for _ in candidates]
    ensembles[selected] = members
    scores = np.array([[np.inf if v is None else v for v in row]
                       for row in doc["scores"]], dtype=float)
    mean_cvi = np.array([np.inf if v is None else v for v in doc["mean_cvi"]], dtype=float)
    return SelectionResult(
        candidates=candidates, scores=scores, mean_cvi=mean_cvi, selected=selected,
        ensembles=ensembles, final_predictor=final, alpha=doc["alpha"],
        trust_margin=doc["trust_margin"], flags=doc["flags"],
        dataset=d, refit_stream=stream,
    )
