"""Classifier identifiers used by the harness and the command line.

An identifier is a rule name optionally followed by ``:key=value`` options,
for example ``naive_bayes:ridge=0.1`` or ``nn_sa:k=3``. ``Rule.fit`` returns
a function mapping a ``(k, p)`` batch of test vectors to ``k`` statistics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import classifiers as clf
from .lr_oracle import LrParams, SufficientStats, log_rho

# name -> (default options, minimum per-class training size)
RULES = {
    "centroid": ({}, 1),
    "centroid_sa": ({}, 2),
    "nn": ({"k": 1}, 1),
    "nn_sa": ({"k": 1}, 2),
    "naive_bayes": ({"ridge": 0.0}, 2),
    "svm": ({"cost": 1.0}, 1),
    "sv": ({"bandwidth": 1}, 2),
    "lr": ({}, 1),
    "always_x": ({}, 0),
    "always_y": ({}, 0),
}

_INT_OPTIONS = {"k", "bandwidth"}


@dataclass(frozen=True)
class Rule:
    name: str
    options: dict = field(default_factory=dict)

    @property
    def id(self) -> str:
        if not self.options:
            return self.name
        extra = ",".join(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}"
                         for k, v in sorted(self.options.items()))
        return f"{self.name}:{extra}"

    @property
    def min_class_size(self) -> int:
        return RULES[self.name][1]

    def fit(self, train_X, train_Y, model=None):
        """Train on the two samples; ``model`` (a ModelSpec) is needed only by ``lr``."""
        o = self.options
        name = self.name
        if name == "centroid":
            cm = clf.centroid_train(train_X, train_Y)
            return lambda Z: clf.t_stat(cm, Z)
        if name == "centroid_sa":
            cm = clf.centroid_train(train_X, train_Y)
            clf.t_sa_stat(cm, cm.mean_X)  # fail early on singleton classes
            return lambda Z: clf.t_sa_stat(cm, Z)
        if name in ("nn", "nn_sa"):
            X, Y = np.asarray(train_X), np.asarray(train_Y)
            adjusted = name == "nn_sa"
            if adjusted and min(len(X), len(Y)) < 2:
                raise clf.ScaleNotEstimable("scale-adjusted nearest neighbour requires min(m,n) >= 2")
            return lambda Z: clf.nn_stat(X, Y, Z, adjusted=adjusted, k=o["k"])
        if name == "naive_bayes":
            nb = clf.naive_bayes_train(train_X, train_Y, ridge=o["ridge"])
            return lambda Z: clf.naive_bayes_stat(nb, Z)
        if name == "svm":
            sm = clf.svm_train(train_X, train_Y, cost=o["cost"])
            return lambda Z: clf.svm_stat(sm, Z)
        if name == "sv":
            sv = clf.sv_train(train_X, train_Y, bandwidth=o["bandwidth"])
            return lambda Z: clf.sv_model_stat(sv, Z)
        if name == "lr":
            if model is None:
                raise ValueError("the likelihood-ratio rule needs the generating model's q and delta")
            params = LrParams(len(train_X), len(train_Y), model.q, model.delta)
            S, T = np.sum(train_X, axis=0), np.sum(train_Y, axis=0)
            return lambda Z: log_rho(params, SufficientStats(S, T, np.atleast_2d(Z)))
        if name == "always_x":
            return lambda Z: np.ones(np.atleast_2d(Z).shape[0])
        if name == "always_y":
            return lambda Z: np.zeros(np.atleast_2d(Z).shape[0])
        raise AssertionError(name)


def parse_rule(identifier: str) -> Rule:
    name, _, rest = identifier.strip().partition(":")
    if name not in RULES:
        raise ValueError(f"unknown classifier {name!r}; choose from {sorted(RULES)}")
    options = dict(RULES[name][0])
    if rest:
        for item in rest.split(","):
            key, eq, value = item.partition("=")
            key = key.strip()
            if not eq or key not in options:
                raise ValueError(f"classifier {name!r} has no option {key!r}")
            options[key] = int(value) if key in _INT_OPTIONS else float(value)
    return Rule(name, options)
