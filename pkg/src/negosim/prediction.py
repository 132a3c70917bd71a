"""Opponent-behavior prediction.

Online least-squares regression (linear, power, quadratic) over the current
thread's offer history estimates when, if ever, the opponent's offers will
reach the agent's reservation utility. A small feed-forward network with
weighted inputs is available as a trainable next-offer-utility predictor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .domain import (
    DiscretizationScheme,
    NegotiationError,
    PreferenceProfile,
    discretize,
    reservation_utility,
    total_profit,
)

if TYPE_CHECKING:
    from .protocol import SessionTrace

FAMILIES = ("linear", "power", "quadratic")
_SIMPLICITY = {"linear": 0, "power": 1, "quadratic": 2}
_MIN_POINTS = {"linear": 2, "power": 2, "quadratic": 3}
SSE_TIE_EPS = 1e-9
CROSSING_TOL = 1e-6


class DegenerateDataError(NegotiationError):
    """Too few or collinear observations for the requested fit."""


class RegressionDomainError(NegotiationError):
    """Data violates a family's domain (power needs t > 0 and u > 0)."""


class DataError(NegotiationError):
    """Non-finite or out-of-range training data."""


class NotTrainedError(NegotiationError):
    """Prediction was requested from an untrained network."""


@dataclass(frozen=True)
class ObservationSeries:
    """(time, utility) pairs; time strictly increasing, utility in [0, 100]."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        ts = [t for t, _ in self.points]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise DataError("observation times must be strictly increasing")
        if any(not (0 <= u <= 100) for _, u in self.points):
            raise DataError("observed utilities must lie in [0, 100]")

    @property
    def t(self) -> np.ndarray:
        return np.array([t for t, _ in self.points], dtype=float)

    @property
    def u(self) -> np.ndarray:
        return np.array([u for _, u in self.points], dtype=float)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class RegressionFit:
    """A fitted curve.  linear: u = b*t + a;  power: u = a*t^b;
    quadratic: u = a*t^2 + b*t + c."""

    family: str
    a: float
    b: float
    sse: float
    n_points: int
    c: float = 0.0


def _lstsq(design: np.ndarray, target: np.ndarray) -> np.ndarray:
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise DegenerateDataError("design matrix is singular (degenerate observation times)")
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    return coef


def fit_regression(series: ObservationSeries, family: str) -> RegressionFit:
    """Least-squares fit of one family; SSE is always on the original scale."""
    if family not in FAMILIES:
        raise ValueError(f"unknown regression family {family!r}")
    n = len(series)
    if n < _MIN_POINTS[family]:
        raise DegenerateDataError(
            f"{family} fit needs >= {_MIN_POINTS[family]} points, got {n}"
        )
    t, u = series.t, series.u
    if family == "linear":
        coef = _lstsq(np.column_stack([np.ones_like(t), t]), u)
        a, b, c = float(coef[0]), float(coef[1]), 0.0
        pred = b * t + a
    elif family == "quadratic":
        coef = _lstsq(np.column_stack([np.ones_like(t), t, t**2]), u)
        c, b, a = float(coef[0]), float(coef[1]), float(coef[2])
        pred = a * t**2 + b * t + c
    else:  # power, via log-log linearization
        if np.any(t <= 0) or np.any(u <= 0):
            raise RegressionDomainError("power fit needs all t > 0 and all u > 0")
        coef = _lstsq(np.column_stack([np.ones_like(t), np.log(t)]), np.log(u))
        a, b, c = float(math.exp(coef[0])), float(coef[1]), 0.0
        pred = a * t**b
    if not all(map(math.isfinite, (a, b, c))):
        raise DegenerateDataError(f"{family} fit produced non-finite parameters")
    sse = float(np.sum((pred - u) ** 2))
    return RegressionFit(family=family, a=a, b=b, c=c, sse=sse, n_points=n)


def select_model(series: ObservationSeries) -> RegressionFit:
    """Fit every admissible family and keep the lowest SSE.

    Power is only admissible on strictly positive data. SSE ties (within
    1e-9) go to the simpler family: linear < power < quadratic.
    """
    if len(series) < _MIN_POINTS["quadratic"]:
        raise DegenerateDataError("model selection needs at least 3 points")
    fits = []
    for family in FAMILIES:
        try:
            fits.append(fit_regression(series, family))
        except RegressionDomainError:
            continue
    if not fits:
        raise DegenerateDataError("no admissible regression family")
    best_sse = min(fit.sse for fit in fits)
    return min(
        (fit for fit in fits if fit.sse <= best_sse + SSE_TIE_EPS),
        key=lambda fit: _SIMPLICITY[fit.family],
    )


def evaluate_fit(fit: RegressionFit, t: float) -> float:
    """Raw (unclamped) value of the fitted curve at t."""
    if fit.family == "linear":
        return fit.b * t + fit.a
    if fit.family == "power":
        if t == 0:
            return 0.0 if fit.b > 0 else (fit.a if fit.b == 0 else math.inf)
        return fit.a * t**fit.b
    return fit.a * t**2 + fit.b * t + fit.c


def predict_utility(fit: RegressionFit, t: float) -> float:
    """Fitted utility at t, clamped to [0, 100] (raw value via evaluate_fit)."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t:g}")
    return min(max(evaluate_fit(fit, t), 0.0), 100.0)


def estimate_crossing(
    fit: RegressionFit, own_reservation_utility: float, own_deadline: float
) -> float | None:
    """First time in [0, deadline] the fitted curve reaches the reservation.

    ``None`` means the curve never gets there before the deadline: the
    thread is predicted unprofitable. Closed form for the monotone
    families, grid-plus-bisection (|dt| <= 1e-6) for the quadratic.
    """
    r = own_reservation_utility
    if evaluate_fit(fit, 0.0) >= r:
        return 0.0
    if fit.family == "linear":
        if fit.b <= 0:
            return None
        t_star = (r - fit.a) / fit.b
        return t_star if t_star <= own_deadline else None
    if fit.family == "power" and fit.a > 0 and fit.b > 0:
        t_star = (r / fit.a) ** (1.0 / fit.b)
        return t_star if t_star <= own_deadline else None
    # quadratic (or a decreasing power curve): scan for the first sign change
    steps = 4096
    prev_t = 0.0
    for i in range(1, steps + 1):
        t_hi = own_deadline * i / steps
        if evaluate_fit(fit, t_hi) >= r:
            lo, hi = prev_t, t_hi
            while hi - lo > CROSSING_TOL:
                mid = 0.5 * (lo + hi)
                if evaluate_fit(fit, mid) >= r:
                    hi = mid
                else:
                    lo = mid
            return 0.5 * (lo + hi)
        prev_t = t_hi
    return None


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


class NeuralPredictor:
    """Feed-forward net whose inputs are feature signals times importance weights.

    One hidden sigmoid layer (default 3 neurons) and a single linear output
    neuron, trained by full-batch backpropagation. Deterministic for a given
    seed: weights start uniform in [-0.5, 0.5] drawn from the seed.
    """

    def __init__(
        self,
        issue_weights: Sequence[float],
        hidden_size: int = 3,
        learning_rate: float = 0.1,
        epochs: int = 200,
        seed: int = 0,
    ):
        if hidden_size < 1:
            raise ValueError(f"hidden_size must be >= 1, got {hidden_size}")
        self.issue_weights = np.asarray(issue_weights, dtype=float)
        self.hidden_size = hidden_size
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.seed = seed
        self.epochs_trained = 0
        self._w1 = None  # (n_features, hidden)
        self._b1 = None
        self._w2 = None  # (hidden,)
        self._b2 = None
        self.mse_history: list[float] = []

    def get_params(self) -> dict:
        return {
            "issue_weights": tuple(self.issue_weights),
            "hidden_size": self.hidden_size,
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "seed": self.seed,
        }

    @property
    def trained(self) -> bool:
        return self._w1 is not None and self.epochs_trained > 0

    def _validate(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not np.all(np.isfinite(X)):
            raise DataError("features must be finite")
        if X.shape[1] != self.issue_weights.shape[0]:
            raise DataError(
                f"expected {self.issue_weights.shape[0]} features, got {X.shape[1]}"
            )
        if np.any(X < -1e-9) or np.any(X > 1 + 1e-9):
            raise DataError("features must be scaled to [0, 1]")
        return X

    def _init_weights(self, n_features: int) -> None:
        rng = np.random.default_rng(self.seed)
        self._w1 = rng.uniform(-0.5, 0.5, size=(n_features, self.hidden_size))
        self._b1 = rng.uniform(-0.5, 0.5, size=self.hidden_size)
        self._w2 = rng.uniform(-0.5, 0.5, size=self.hidden_size)
        self._b2 = rng.uniform(-0.5, 0.5)

    def _forward(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        signals = X * self.issue_weights
        hidden = _sigmoid(signals @ self._w1 + self._b1)
        out = hidden @ self._w2 + self._b2
        return signals, hidden, out

    def fit(self, X, y) -> "NeuralPredictor":
        X = self._validate(X)
        y = np.asarray(y, dtype=float).ravel()
        if not np.all(np.isfinite(y)):
            raise DataError("targets must be finite")
        if len(y) != X.shape[0] or len(y) < 1:
            raise DataError("need at least one (features, target) sample")
        if self._w1 is None:
            self._init_weights(X.shape[1])
        n = X.shape[0]
        lr = self.learning_rate
        self.mse_history = []
        for _ in range(self.epochs):
            signals, hidden, out = self._forward(X)
            err = out - y
            self.mse_history.append(float(np.mean(err**2)))
            grad_out = 2.0 * err / n
            grad_w2 = hidden.T @ grad_out
            grad_b2 = float(np.sum(grad_out))
            grad_hidden = np.outer(grad_out, self._w2) * hidden * (1.0 - hidden)
            grad_w1 = signals.T @ grad_hidden
            grad_b1 = grad_hidden.sum(axis=0)
            self._w2 -= lr * grad_w2
            self._b2 -= lr * grad_b2
            self._w1 -= lr * grad_w1
            self._b1 -= lr * grad_b1
        _, _, out = self._forward(X)
        self.mse_history.append(float(np.mean((out - y) ** 2)))
        self.epochs_trained += self.epochs
        return self

    @property
    def initial_mse(self) -> float:
        if not self.mse_history:
            raise NotTrainedError("network has not been trained")
        return self.mse_history[0]

    @property
    def final_mse(self) -> float:
        if not self.mse_history:
            raise NotTrainedError("network has not been trained")
        return self.mse_history[-1]

    def predict(self, X) -> np.ndarray:
        if self._w1 is None:
            raise NotTrainedError("network has not been trained")
        X = self._validate(X)
        return self._forward(X)[2]

    def weights_digest(self) -> tuple:
        """Flat, hashable view of all trainable parameters (for reproducibility checks)."""
        if self._w1 is None:
            raise NotTrainedError("network has not been trained")
        return (
            tuple(self._w1.ravel()),
            tuple(self._b1),
            tuple(self._w2),
            float(self._b2),
        )


def nn_train(
    predictor: NeuralPredictor, samples: Sequence[tuple[Sequence[float], float]]
) -> tuple[NeuralPredictor, float]:
    """Full-batch training on (feature vector, target utility) samples."""
    if not samples:
        raise DataError("need at least one training sample")
    X = np.array([features for features, _ in samples], dtype=float)
    y = np.array([target for _, target in samples], dtype=float)
    predictor.fit(X, y)
    return predictor, predictor.final_mse


def nn_predict(predictor: NeuralPredictor, features: Sequence[float]) -> float:
    if not predictor.trained:
        raise NotTrainedError("network has not been trained")
    return float(predictor.predict(np.asarray(features, dtype=float))[0])


def scale_numeric(value: float, lower: float, upper: float) -> float:
    """Min-max scale a numeric feature into [0, 1]."""
    if upper <= lower:
        raise DataError(f"invalid scaling bounds [{lower:g}, {upper:g}]")
    return min(max((value - lower) / (upper - lower), 0.0), 1.0)


def encode_categorical(value: float, scheme: DiscretizationScheme) -> float:
    """Bin a raw value and map the bins to equally spaced points in [0, 1]."""
    label = discretize(value, scheme)
    labels = scheme.labels()
    if len(labels) == 1:
        return 0.5
    return labels.index(label) / (len(labels) - 1)


@dataclass(frozen=True)
class PredictorConfig:
    enabled: bool = False
    warmup: int = 5  # rounds of pure observation before any advice

    @classmethod
    def from_dict(cls, raw: dict | None) -> "PredictorConfig":
        if not raw:
            return cls()
        return cls(enabled=bool(raw.get("enabled", False)), warmup=int(raw.get("warmup", 5)))


@dataclass(frozen=True)
class Advice:
    kind: str  # none | continue | terminate-unprofitable | acceptance-forecast
    t_star: float | None = None  # forecast acceptance round (own-deadline units)


class PredictorState:
    """Per-agent, per-session prediction state: warm-up observation then advice."""

    def __init__(self, config: PredictorConfig, agent_id: str, seed: int = 0):
        self.config = config
        self.agent_id = agent_id
        self.seed = seed
        self.observations: list[tuple[float, float]] = []
        self.fit: RegressionFit | None = None

    @property
    def mode(self) -> str:
        return "warm-up" if len(self.observations) < self.config.warmup else "active"


def advise(state: PredictorState, trace: "SessionTrace", profile: PreferenceProfile) -> Advice:
    """Record the opponent's offers and, once active, judge the thread.

    Active mode fits the best regression over (normalized time, utility of
    the opponent's offers under this agent's profile) and estimates when the
    curve reaches the agent's reservation; no crossing before the deadline
    means the thread is not worth pursuing.
    """
    incoming = trace.offers_to(profile.agent_id)
    state.observations = [
        (row.round / profile.deadline, total_profit(profile, row.offer)) for row in incoming
    ]
    if state.mode == "warm-up":
        return Advice(kind="none")
    try:
        series = ObservationSeries(points=tuple(state.observations))
        state.fit = select_model(series)
    except (DegenerateDataError, DataError):
        return Advice(kind="continue")
    t_star = estimate_crossing(state.fit, reservation_utility(profile), 1.0)
    if t_star is None:
        return Advice(kind="terminate-unprofitable")
    return Advice(kind="acceptance-forecast", t_star=t_star * profile.deadline)
