"""Estimator-style wrappers (``fit`` / ``predict`` / ``transform``) around the
functional core, so experiments compose with scikit-learn tooling such as
``get_params``, ``clone`` and parameter grids.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_masks, check_parameters, check_profiles, check_scalar
from .entropy import entropy
from .harness import RunCache, RunConfig, bisect, classify_flow, run_flow
from .homology import betti1
from .shrinker import find_torus_shrinker
from .grid import grid_for


class _RunParams:
    def _run_config(self):
        check_scalar(self.h, "h", 0, 0.25, include_low=False)
        check_scalar(self.t_max, "t_max", 0, include_low=False)
        return RunConfig(h=self.h, t_max=self.t_max, frame_dt=self.frame_dt,
                         post_frames=self.post_frames, seed=self.seed)


class LevelSetFlow(_RunParams, BaseEstimator):
    """Evolve one surface spec; ``predict`` gives its A/B label."""

    def __init__(self, h=1 / 64, t_max=1.2, frame_dt=0.01, post_frames=3, margin=0.5, seed=0):
        self.h = h
        self.t_max = t_max
        self.frame_dt = frame_dt
        self.post_frames = post_frames
        self.margin = margin
        self.seed = seed

    def fit(self, X, y=None):
        cfg = self._run_config()
        self.record_ = run_flow(X, grid_for(X, self.h, self.margin), cfg)
        self.ledger_ = self.record_.ledger
        return self

    def predict(self, X=None):
        check_is_fitted(self, "record_")
        return np.array([self.record_.classification.label])

    def transform(self, X=None):
        """Ledger rows as an array: time, genus, neck width, hole radius."""
        check_is_fitted(self, "record_")
        h = self.ledger_.history
        return np.array([[r.time, r.genus, r.neck_width, r.hole_radius] for r in h])


class FamilyClassifier(_RunParams, ClassifierMixin, BaseEstimator):
    """Labels family parameters s as A or B; ``fit`` brackets the critical s."""

    def __init__(self, family=None, h=1 / 64, t_max=1.2, frame_dt=0.01, post_frames=3,
                 tol=1 / 64, seed=0):
        self.family = family
        self.h = h
        self.t_max = t_max
        self.frame_dt = frame_dt
        self.post_frames = post_frames
        self.tol = tol
        self.seed = seed

    def fit(self, X=None, y=None):
        if self.family is None:
            raise ValueError("family is required")
        self.cache_ = RunCache()
        self.report_ = bisect(self.family, self.tol, self._run_config(), self.cache_)
        self.bracket_ = self.report_.bracket
        self.classes_ = np.array(["A", "B"])
        return self

    def predict(self, X):
        check_is_fitted(self, "cache_")
        s = check_parameters(X)
        cfg = self._run_config()
        return np.array([classify_flow(self.family, float(v), cfg, self.cache_).label for v in s])


class TorusShrinkerFinder(BaseEstimator):
    """Shooting search for the torus shrinker; ``transform`` gives its (r, z) samples."""

    def __init__(self, bracket=(0.1, 1.4), tol=1e-7, ds=1e-3):
        self.bracket = bracket
        self.tol = tol
        self.ds = ds

    def fit(self, X=None, y=None):
        self.entry_ = find_torus_shrinker(tuple(self.bracket), self.tol, ds=self.ds)
        self.gaussian_area_ = self.entry_.gaussian_area
        return self

    def transform(self, X=None):
        check_is_fitted(self, "entry_")
        return self.entry_.profile.vertices()


class EntropyTransformer(TransformerMixin, BaseEstimator):
    """Maps closed profiles to their entropies."""

    def __init__(self, grid=16, max_iter=200, restarts=4):
        self.grid = grid
        self.max_iter = max_iter
        self.restarts = restarts

    def fit(self, X=None, y=None):
        check_scalar(self.grid, "grid", 2, integer=True)
        self.fitted_ = True
        return self

    def transform(self, X):
        check_is_fitted(self, "fitted_")
        self.results_ = [entropy(p, grid=self.grid, max_iter=self.max_iter, restarts=self.restarts)
                         for p in check_profiles(X)]
        return np.array([r.value for r in self.results_])


class Betti1Transformer(TransformerMixin, BaseEstimator):
    """Maps 3D voxel masks to their first Betti numbers over Z/2."""

    def fit(self, X=None, y=None):
        self.fitted_ = True
        return self

    def transform(self, X):
        check_is_fitted(self, "fitted_")
        return np.array([betti1(m) for m in check_masks(X)], dtype=int)
