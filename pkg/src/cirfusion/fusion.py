"""Reducing a snapshot matrix to one breathing sequence.

Two strategies:

* BoI selection picks the delay bin with the most energy in the breathing band.
* BoI fusion picks weights ``w`` maximizing ``w^H A w`` subject to
  ``w^H B w = 1``, where ``A = H^H F_I^H F_I H`` is the in-band energy and
  ``B = H^H F^H F H`` the total energy. Stationarity gives the generalized
  problem ``A w = lambda B w``; the best candidate is the top generalized
  eigenvector and ``lambda`` is the in-band energy ratio of ``x* = H w*``.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from ._validation import check_cir_matrix, check_hermitian
from .eig import hermitian_eig
from .errors import DegenerateWindowError
from .spectral import BandOfInterest, DftPlan

DEGENERATE_COLUMN_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class SnapshotMatrix:
    """Calibrated, uniformly resampled window: rows are time instants, columns bins."""

    data: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        data = check_cir_matrix(self.data, "data")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def shape(self):
        return self.data.shape

    @property
    def window_len(self):
        return self.data.shape[0]

    @property
    def n_bins(self):
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class GeneralizedPair:
    a: np.ndarray
    b: np.ndarray

    def check(self, rtol=1e-10):
        """Raise if ``a``/``b`` are not Hermitian or ``b`` is not PSD."""
        check_hermitian(self.a, "a", rtol)
        b = check_hermitian(self.b, "b", rtol)
        values, _ = hermitian_eig(b)
        if values.size and values[-1] < -rtol * np.linalg.norm(b):
            raise ValueError("b is not positive semidefinite")


@dataclass(frozen=True, eq=False)
class FusionWeights:
    """Fusion solution: weights over all delay bins and the achieved ratio."""

    w: np.ndarray
    lam: float
    active_bins: np.ndarray | None = None


def _plan_for(h, plan):
    if plan.window_len != h.shape[0]:
        raise ValueError(f"plan is for {plan.window_len} samples, matrix has {h.shape[0]} rows")


def column_boi_energy(h, plan):
    """Band energy ``||F_I h_k||^2 / N`` of every column."""
    X = np.fft.fft(h, axis=0)[plan.band_rows]
    return np.sum(np.abs(X) ** 2, axis=0) / plan.window_len


def select_bin(h_matrix, plan):
    """BoI selection: the column with the most in-band energy (lowest index on ties)."""
    h = check_cir_matrix(h_matrix)
    _plan_for(h, plan)
    k = int(np.argmax(column_boi_energy(h, plan)))
    return k, h[:, k].copy()


def build_pair(h_matrix, plan):
    """In-band and total energy matrices ``(A, B)`` without forming the DFT matrix.

    ``B = N * H^H H`` by Parseval; ``A`` uses the band rows of the column FFTs.
    """
    h = check_cir_matrix(h_matrix)
    _plan_for(h, plan)
    fi_h = np.fft.fft(h, axis=0)[plan.band_rows]
    a = fi_h.conj().T @ fi_h
    b = plan.window_len * (h.conj().T @ h)
    a = 0.5 * (a + a.conj().T)
    b = 0.5 * (b + b.conj().T)
    return GeneralizedPair(a, b)


def _fix_phase(w):
    k = int(np.argmax(np.abs(w)))
    if w[k] == 0:
        return w
    return w * (np.abs(w[k]) / w[k])


def solve_fusion(pair, rank_tol=1e-10):
    """Maximize ``w^H A w`` subject to ``w^H B w = 1``.

    ``B`` is whitened over its numerical range (eigenvalues above
    ``rank_tol * max``); the top eigenvector of the whitened ``A`` is mapped
    back and scaled onto the constraint. Its global phase is fixed so the
    largest-magnitude entry is real and positive.
    """
    a = np.asarray(pair.a, dtype=np.complex128)
    b = np.asarray(pair.b, dtype=np.complex128)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("a and b must be square matrices of equal shape")
    b_vals, b_vecs = hermitian_eig(b)
    if b_vals.size == 0 or b_vals[0] <= 0:
        raise DegenerateWindowError("degenerate window: no signal energy")
    keep = b_vals > rank_tol * b_vals[0]
    whitener = b_vecs[:, keep] / np.sqrt(b_vals[keep])
    m = whitener.conj().T @ a @ whitener
    m = 0.5 * (m + m.conj().T)
    m_vals, m_vecs = hermitian_eig(m)
    w = whitener @ m_vecs[:, 0]
    norm = np.real(np.vdot(w, b @ w))
    if not norm > 0:
        raise DegenerateWindowError("degenerate window: constraint cannot be met")
    w = _fix_phase(w / np.sqrt(norm))
    return FusionWeights(w, float(m_vals[0]))


def active_columns(h, plan=None, noise_floor_factor=0.0):
    """Columns worth fusing.

    Drops columns with total energy below ``1e-12`` of the strongest one and,
    when ``noise_floor_factor > 0``, columns whose mean power does not exceed
    ``noise_floor_factor`` times the median column power (the noise floor when
    most bins are empty). The column BoI selection would pick is always kept,
    so fusion can never do worse than selection.
    """
    power = np.mean(np.abs(h) ** 2, axis=0)
    if power.max() <= 0:
        return np.zeros(0, dtype=int)
    keep = power > DEGENERATE_COLUMN_RTOL * power.max()
    if noise_floor_factor > 0:
        keep &= power > noise_floor_factor * np.median(power)
    if plan is not None:
        keep[int(np.argmax(column_boi_energy(h, plan)))] = True
    return np.flatnonzero(keep)


def fuse(h_matrix, plan, rank_tol=1e-10, noise_floor_factor=0.0):
    """BoI fusion of a snapshot window.

    Returns ``(weights, x_star)`` where ``x_star = H @ weights.w``. Weights of
    dropped columns are zero.
    """
    h = check_cir_matrix(h_matrix)
    _plan_for(h, plan)
    cols = active_columns(h, plan, noise_floor_factor)
    if cols.size == 0:
        raise DegenerateWindowError("degenerate window: all columns are zero")
    sub = h[:, cols]
    solved = solve_fusion(build_pair(sub, plan), rank_tol)
    w = np.zeros(h.shape[1], dtype=np.complex128)
    w[cols] = solved.w
    return FusionWeights(w, solved.lam, cols), h @ w


class _BandReducer(TransformerMixin, BaseEstimator):
    def __init__(self, sample_rate_hz=19.3, f_low_hz=0.1, f_high_hz=0.5, edge_margin_bins=0.0):
        self.sample_rate_hz = sample_rate_hz
        self.f_low_hz = f_low_hz
        self.f_high_hz = f_high_hz
        self.edge_margin_bins = edge_margin_bins

    def _plan(self, n):
        band = BandOfInterest(self.f_low_hz, self.f_high_hz)
        return DftPlan(n, self.sample_rate_hz, band, self.edge_margin_bins)

    def _check_fitted(self):
        if not hasattr(self, "weights_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet")

    def transform(self, X):
        """Combined sequence ``X @ weights_`` (one value per time instant)."""
        self._check_fitted()
        X = check_cir_matrix(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} bins, expected {self.n_features_in_}")
        return X @ self.weights_


class BoISelection(_BandReducer):
    """Keep the single delay bin with the most band-of-interest energy.

    Attributes after ``fit``: ``bin_index_``, ``weights_`` (an indicator vector).
    """

    def fit(self, X, y=None):
        X = check_cir_matrix(X, "X")
        self.bin_index_, _ = select_bin(X, self._plan(X.shape[0]))
        self.weights_ = np.zeros(X.shape[1], dtype=np.complex128)
        self.weights_[self.bin_index_] = 1.0
        self.n_features_in_ = X.shape[1]
        return self


class BoIFusion(_BandReducer):
    """Linear combination of delay bins maximizing the in-band energy ratio.

    Attributes after ``fit``: ``weights_``, ``lambda_`` (in-band ratio of the
    fused sequence), ``active_bins_``.
    """

    def __init__(self, sample_rate_hz=19.3, f_low_hz=0.1, f_high_hz=0.5, edge_margin_bins=0.0,
                 rank_tol=1e-10, noise_floor_factor=0.0):
        super().__init__(sample_rate_hz, f_low_hz, f_high_hz, edge_margin_bins)
        self.rank_tol = rank_tol
        self.noise_floor_factor = noise_floor_factor

    def fit(self, X, y=None):
        X = check_cir_matrix(X, "X")
        weights, _ = fuse(X, self._plan(X.shape[0]), self.rank_tol, self.noise_floor_factor)
        self.weights_ = weights.w
        self.lambda_ = weights.lam
        self.active_bins_ = weights.active_bins
        self.n_features_in_ = X.shape[1]
        return self
