"""Scikit-learn style front end for the steganography pipeline.

``ArdisStego`` exposes the main configuration knobs as flat constructor
parameters so it plugs into sklearn tooling (get_params/set_params,
clone, grid search over hyperparameters).  ``fit`` trains on a pool of
images; ``transform`` embeds (cover, secret) pairs and
``inverse_transform`` blindly recovers secrets from stegos.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import pipeline
from .checkpoint import load_checkpoint, save_checkpoint
from .config import ArdisConfig

_CONFIG_PARAMS = (
    "cover_h", "cover_w", "c_lat", "res_bits", "ihn_blocks", "ihn_width",
    "d_g", "d_d", "mlp_width", "mlp_depth", "lr0", "total_steps",
    "batch_size", "seed", "scale_min", "scale_max", "query_samples",
    "fda_enabled", "lgir_enabled",
)


class ArdisStego(TransformerMixin, BaseEstimator):
    def __init__(self, cover_h=64, cover_w=64, c_lat=4, res_bits=32,
                 ihn_blocks=8, ihn_width=32, d_g=32, d_d=32, mlp_width=256,
                 mlp_depth=4, lr0=1e-4, total_steps=800, batch_size=1,
                 seed=0, scale_min=1.0, scale_max=2.0, query_samples=1024,
                 fda_enabled=True, lgir_enabled=True):
        self.cover_h = cover_h
        self.cover_w = cover_w
        self.c_lat = c_lat
        self.res_bits = res_bits
        self.ihn_blocks = ihn_blocks
        self.ihn_width = ihn_width
        self.d_g = d_g
        self.d_d = d_d
        self.mlp_width = mlp_width
        self.mlp_depth = mlp_depth
        self.lr0 = lr0
        self.total_steps = total_steps
        self.batch_size = batch_size
        self.seed = seed
        self.scale_min = scale_min
        self.scale_max = scale_max
        self.query_samples = query_samples
        self.fda_enabled = fda_enabled
        self.lgir_enabled = lgir_enabled

    def build_config(self):
        return ArdisConfig(**{name: getattr(self, name) for name in _CONFIG_PARAMS})

    def fit(self, X, y=None):
        """Train on X: a directory path or a sequence of [0, 1] images."""
        config = self.build_config().validate()
        self.model_, self.optimizer_state_, self.history_ = pipeline.train(config, X)
        return self

    def hide(self, cover, secret):
        """Embed one secret; returns the stego image."""
        check_is_fitted(self, "model_")
        stego, _ = pipeline.hide(self.model_, cover, secret)
        return stego

    def reveal(self, stego):
        """Blind recovery; returns a RevealResult (secret, size, margin)."""
        check_is_fitted(self, "model_")
        return pipeline.reveal(self.model_, stego)

    def transform(self, X):
        """Embed a sequence of (cover, secret) pairs into stego images."""
        check_is_fitted(self, "model_")
        return [self.hide(cover, secret) for cover, secret in X]

    def inverse_transform(self, X):
        """Recover secrets (at their decoded resolutions) from stegos."""
        check_is_fitted(self, "model_")
        return [self.reveal(stego).secret for stego in X]

    def save(self, path):
        check_is_fitted(self, "model_")
        save_checkpoint(self.model_, path, getattr(self, "optimizer_state_", None))

    @classmethod
    def from_checkpoint(cls, path):
        """Build a ready-to-use (already fitted) wrapper from a checkpoint."""
        model, state = load_checkpoint(path)
        est = cls(**{name: getattr(model.config, name) for name in _CONFIG_PARAMS})
        est.model_ = model
        est.optimizer_state_ = state
        est.history_ = []
        return est
