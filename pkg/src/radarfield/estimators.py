"""Scikit-learn style estimators wrapping training and backprojection.

Both estimators consume a MeasurementSet in ``fit`` and answer ``predict``
with reflectivity values at arbitrary positions, so they compose with
model-selection utilities that only rely on the estimator protocol
(``get_params`` / ``set_params`` / ``fit`` / ``predict``).
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .fields import InrField, VoxelField, sample_field
from .geometry import SceneBounds
from .io import MeasurementSet
from .recon import LossWeights, TrainConfig, backprojection, train
from .scenes import default_bounds

FIELD_KINDS = ("voxel", "inr")
MODEL_KINDS = ("spectral", "tfts", "tfss", "rq")


class SpectralReconstructor(BaseEstimator):
    """Gradient-based volumetric reconstruction from per-pose spectra.

    Parameters mirror LossWeights and TrainConfig one-to-one; ``model``
    selects the forward route ("spectral" or a baseline "tfts" / "tfss" /
    "rq") and ``field`` the representation ("voxel" or "inr").

    Attributes:
        field_: the trained field after fit.
        history_: per-step TrainHistory after fit.
    """

    def __init__(
        self,
        model: str = "spectral",
        field: str = "voxel",
        resolution: int = 64,
        iterations: int = 500,
        learning_rate: float = 1e-2,
        lam: float = 0.5,
        beta: float = 1e-2,
        gamma: float = 1e-2,
        epsilon: float | None = None,
        stage_fraction: float = 0.10,
        poses_per_step: int = 2,
        reg_samples_per_step: int = 1024,
        seed: int = 0,
        reproducible: bool = False,
        bounds: SceneBounds | None = None,
    ):
        self.model = model
        self.field = field
        self.resolution = resolution
        self.iterations = iterations
        self.learning_rate = learning_rate
        self.lam = lam
        self.beta = beta
        self.gamma = gamma
        self.epsilon = epsilon
        self.stage_fraction = stage_fraction
        self.poses_per_step = poses_per_step
        self.reg_samples_per_step = reg_samples_per_step
        self.seed = seed
        self.reproducible = reproducible
        self.bounds = bounds

    def _make_field(self, bounds: SceneBounds):
        if self.field == "voxel":
            return VoxelField(bounds=bounds, resolution=self.resolution)
        if self.field == "inr":
            return InrField(bounds=bounds, seed=self.seed)
        raise ValueError(f"field must be one of {FIELD_KINDS}, got {self.field!r}")

    def fit(self, X: MeasurementSet, y=None):
        """Train the field against the dataset; returns self."""
        if self.model not in MODEL_KINDS:
            raise ValueError(f"model must be one of {MODEL_KINDS}, got {self.model!r}")
        bounds = self.bounds if self.bounds is not None else default_bounds()
        weights = LossWeights(
            lam=self.lam,
            beta=self.beta,
            gamma=self.gamma,
            epsilon=self.epsilon,
            stage_fraction=self.stage_fraction,
        )
        cfg = TrainConfig(
            iterations=self.iterations,
            learning_rate=self.learning_rate,
            poses_per_step=self.poses_per_step,
            reg_samples_per_step=self.reg_samples_per_step,
            seed=self.seed,
            reproducible=self.reproducible,
        )
        self.field_, self.history_ = train(
            self._make_field(bounds), X, bounds, weights, cfg, forward_kind=self.model
        )
        return self

    def predict(self, X) -> np.ndarray:
        """Reflectivity at positions X, shape (n, 3)."""
        check_is_fitted(self, "field_")
        return sample_field(self.field_, np.asarray(X, dtype=np.float64))


class CoherentBackprojection(BaseEstimator):
    """Classical phase-aligned accumulation baseline as an estimator."""

    def __init__(
        self,
        resolution: int = 64,
        upsample: int = 8,
        bounds: SceneBounds | None = None,
    ):
        self.resolution = resolution
        self.upsample = upsample
        self.bounds = bounds

    def fit(self, X: MeasurementSet, y=None):
        bounds = self.bounds if self.bounds is not None else default_bounds()
        self.field_ = backprojection(X, bounds, self.resolution, upsample=self.upsample)
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "field_")
        return sample_field(self.field_, np.asarray(X, dtype=np.float64))
