"""Argument checks shared by the estimator facade."""

import numbers

import numpy as np

from .exceptions import ConfigurationError
from .profile import ProfileCurve


def check_scalar(x, name, low=None, high=None, include_low=True, integer=False):
    kind = numbers.Integral if integer else numbers.Real
    if not isinstance(x, kind) or isinstance(x, bool):
        raise ConfigurationError(f"{name} must be {'an integer' if integer else 'a number'}, got {x!r}")
    if low is not None and (x < low or (x == low and not include_low)):
        raise ConfigurationError(f"{name}={x} is below {low}")
    if high is not None and x > high:
        raise ConfigurationError(f"{name}={x} is above {high}")
    return x


def check_parameters(s):
    """1D float array of family parameters in [0, 1]."""
    s = np.atleast_1d(np.asarray(s, dtype=float)).ravel()
    if s.size == 0 or not np.all((s >= 0) & (s <= 1)):
        raise ConfigurationError("family parameters must lie in [0, 1]")
    return s


def check_profiles(X):
    if isinstance(X, ProfileCurve):
        return [X]
    X = list(X)
    if not X or not all(isinstance(p, ProfileCurve) for p in X):
        raise ConfigurationError("expected ProfileCurve objects")
    return X


def check_masks(X):
    if isinstance(X, np.ndarray) and X.ndim == 3:
        return [X.astype(bool)]
    out = [np.asarray(m, dtype=bool) for m in X]
    if not out or any(m.ndim != 3 for m in out):
        raise ConfigurationError("expected 3D voxel masks")
    return out
