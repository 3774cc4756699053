"""scikit-learn style wrappers.

Only the parts of the estimator API that make sense for a fixed simulator
are provided: ``fit``/``partial_fit``/``transform`` on the calibrator and
``fit``/``predict``/``score`` on the gate classifier.  Neither learns from
``y``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .calibration import SearchConfig, calibrate_all, published_weight_set
from .circuit import prebuilt
from .simulate import run_sim
from .stimulus import LogicWaveform, StimulusProgram, decode
from .validate import GATES, HOLD_MS


class WeightCalibrator(TransformerMixin, BaseEstimator):
    """Maps stimulating currents (one per row) to calibrated (w_x, w_y, w_z)."""

    def __init__(self, resolution=0.001):
        self.resolution = resolution

    def partial_fit(self, X, y=None):
        X = check_array(X, ensure_2d=True)
        if X.shape[1] != 1:
            raise ValueError("X must have a single column of currents in pA")
        if not hasattr(self, "results_"):
            self.results_ = {}
            self.n_features_in_ = 1
        cfg = SearchConfig(resolution=self.resolution)
        for current in X[:, 0]:
            key = float(current)
            if key not in self.results_:
                self.results_[key] = calibrate_all(key, cfg)
        return self

    def fit(self, X, y=None):
        self.__dict__.pop("results_", None)
        return self.partial_fit(X, y)

    def transform(self, X):
        check_is_fitted(self, "results_")
        X = check_array(X, ensure_2d=True)
        missing = sorted({float(c) for c in X[:, 0]} - set(self.results_))
        if missing:
            raise ValueError(f"currents not calibrated: {missing}")
        return np.array([[self.results_[float(c)].w_x, self.results_[float(c)].w_y,
                          self.results_[float(c)].w_z] for c in X[:, 0]])


class SpikingGateClassifier(ClassifierMixin, BaseEstimator):
    """A library gate as a binary classifier over input-bit rows.

    ``predict`` plays the rows as consecutive hold windows through one
    simulation and decodes the output per window.
    """

    def __init__(self, gate="and", current_pa=4.0, dt=0.5, hold_ms=HOLD_MS, weights=None):
        self.gate = gate
        self.current_pa = current_pa
        self.dt = dt
        self.hold_ms = hold_ms
        self.weights = weights

    def fit(self, X, y=None):
        key = self.gate.lower().replace("-", "_")
        if key not in GATES:
            raise ValueError(f"unknown gate {self.gate!r}")
        labels, _ = GATES[key]
        X = check_array(X, dtype=int)
        if X.shape[1] != len(labels):
            raise ValueError(f"{key} takes {len(labels)} inputs, X has {X.shape[1]} columns")
        weights = self.weights if self.weights is not None else published_weight_set(self.current_pa)
        self.graph_ = prebuilt(key, weights)
        self.labels_ = labels
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = len(labels)
        return self

    def predict(self, X):
        check_is_fitted(self, "graph_")
        X = check_array(X, dtype=int)
        if X.shape[1] != self.n_features_in_:
            raise ValueError("column count differs from fit")
        if not np.isin(X, (0, 1)).all():
            raise ValueError("inputs must be 0 or 1")
        bindings = {l: LogicWaveform.from_bits(X[:, i], self.hold_ms) for i, l in enumerate(self.labels_)}
        program = StimulusProgram(bindings, self.current_pa)
        res = run_sim(self.graph_, program, self.dt, energy_mode="off", record=False)
        windows = [(k * self.hold_ms, (k + 1) * self.hold_ms) for k in range(len(X))]
        return np.array(decode(res.spike_times[self.graph_.probes[0].neuron_id], windows))
