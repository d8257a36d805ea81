"""scikit-learn style wrappers around the design and forward layers.

Profiles are passed either as :class:`SampledProfile` objects or as ``(n, 2)``
arrays of cell right endpoints and values, the same layout as the CSV
format.  Hyperparameters are plain constructor arguments so ``get_params``,
``set_params`` and ``clone`` work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .design import design, flat_design, membership, sample_design
from .flux import make_flux
from .forward import evolve, godunov
from .profile import Grid, SampledProfile
from .traffic import OutflowRecord, detect_events, inflow_envelope, max_road_length

__all__ = [
    "check_profile",
    "check_interval",
    "check_positive",
    "InverseDesign",
    "ForwardEvolver",
    "InflowReconstructor",
]


def check_profile(X, name="X") -> SampledProfile:
    """Coerce ``X`` to a :class:`SampledProfile`."""
    if isinstance(X, SampledProfile):
        return X
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise ValueError(
            f"{name} must be a SampledProfile or an (n, 2) array of right endpoints and "
            f"values with n >= 2, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    x = arr[:, 0]
    dx = (x[-1] - x[0]) / (len(x) - 1)
    if dx <= 0 or np.max(np.abs(np.diff(x) - dx)) > 1e-9 * dx + 8 * np.finfo(float).eps * np.max(np.abs(x)):
        raise ValueError(f"{name} must be sampled on a uniform increasing grid")
    return SampledProfile(Grid(float(x[0] - dx), float(dx), len(x)), arr[:, 1])


def check_interval(J, name="J", allow_none=True):
    if J is None:
        if allow_none:
            return None
        raise ValueError(f"{name} is required")
    a, b = (float(v) for v in J)
    if np.isnan(a) or np.isnan(b) or a > b:
        raise ValueError(f"{name} must be an interval (a, b) with a <= b, got {J!r}")
    return a, b


def check_positive(value, name):
    v = float(value)
    if not v > 0 or not np.isfinite(v):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")
    return v


def _to_array(u: SampledProfile):
    return np.column_stack([u.grid.right, u.values])


# outputs are profiles, not feature matrices: opt out of set_output wrapping
class InverseDesign(TransformerMixin, BaseEstimator, auto_wrap_output_keys=None):
    """Fit on a target profile; transform returns the flat initial datum.

    ``predict`` answers membership of candidate initial data in the design
    set, ``sample`` draws elements of it.
    """

    def __init__(self, flux="burgers", T=1.0, J=None, x_check=None, slack=None, window=None):
        self.flux = flux
        self.T = T
        self.J = J
        self.x_check = x_check
        self.slack = slack
        self.window = window

    def fit(self, X, y=None):
        u_T = check_profile(X)
        T = check_positive(self.T, "T")
        J = check_interval(self.J)
        flux = make_flux(self.flux)
        if J is not None and np.all(np.isfinite(J)):
            env = design(u_T, flux, T, J, self.x_check, self.window, self.slack)
        else:
            env = flat_design(u_T, flux, T, J, self.x_check, self.window, self.slack)
        self.flux_ = flux
        self.target_ = u_T
        self.envelope_ = env
        return self

    def transform(self, X=None):
        check_is_fitted(self, "envelope_")
        return _to_array(self.envelope_.u_flat)

    def sharp(self):
        check_is_fitted(self, "envelope_")
        return _to_array(self.envelope_.u_sharp)

    def predict(self, X):
        """Membership verdicts for one candidate or a list of them."""
        check_is_fitted(self, "envelope_")
        single = isinstance(X, SampledProfile) or np.asarray(X).ndim == 2
        cands = [X] if single else list(X)
        out = np.array([membership(check_profile(c), self.envelope_).member for c in cands])
        return out[0] if single else out

    def sample(self, lam=None, seed=None):
        check_is_fitted(self, "envelope_")
        return _to_array(sample_design(self.envelope_, lam=lam, seed=seed))


class ForwardEvolver(TransformerMixin, BaseEstimator, auto_wrap_output_keys=None):
    """Stateless: ``transform`` evolves the input for time ``t``."""

    def __init__(self, flux="burgers", t=1.0, scheme="hopflax", cfl=0.9, window=None):
        self.flux = flux
        self.t = t
        self.scheme = scheme
        self.cfl = cfl
        self.window = window

    def fit(self, X=None, y=None):
        self.flux_ = make_flux(self.flux)
        return self

    def transform(self, X):
        check_is_fitted(self, "flux_")
        u = check_profile(X)
        t = check_positive(self.t, "t")
        if self.scheme == "hopflax":
            out = evolve(u, self.flux_, t, window=self.window)
        elif self.scheme == "godunov":
            out = godunov(u, self.flux_, t, cfl=self.cfl, window=self.window)
        else:
            raise ValueError(f"scheme must be 'hopflax' or 'godunov', got {self.scheme!r}")
        return _to_array(out)


class InflowReconstructor(BaseEstimator):
    """Fit on a measured outflow record; exposes the inflow envelope and events."""

    def __init__(self, flux=None, L=None, kink_threshold=None):
        self.flux = flux
        self.L = L
        self.kink_threshold = kink_threshold

    def fit(self, X, y=None):
        if self.flux is None:
            raise ValueError("a traffic flux specification is required")
        flux = make_flux(self.flux)
        q_bar = float(flux.domain[1])
        rec = OutflowRecord(check_profile(X), q_bar)
        self.flux_ = flux
        self.record_ = rec
        self.road_ = max_road_length(rec, flux)
        L = self.road_.L_max * 0.99 if self.L is None else check_positive(self.L, "L")
        if not np.isfinite(L):
            raise ValueError("L must be given when every road length is admissible")
        self.envelope_ = inflow_envelope(rec, L, flux)
        self.events_ = detect_events(self.envelope_, self.kink_threshold)
        return self

    def transform(self, X=None):
        check_is_fitted(self, "envelope_")
        return _to_array(self.envelope_.q_flat)
