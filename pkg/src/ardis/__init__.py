"""Arbitrary-resolution image steganography.

Hide a secret image of any resolution inside a fixed-size cover, and
blindly recover it, at its exact original resolution, from the stego
image alone.
"""

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import ArdisConfig, ConfigError
from .estimator import ArdisStego
from .imaging import ImageError, load_image, resample, save_image
from .metrics import psnr, rre, ssim
from .pipeline import ArdisModel, PipelineError, RevealResult, hide, reveal, train

__version__ = "0.1.0"

__all__ = [
    "ArdisConfig", "ArdisModel", "ArdisStego", "RevealResult",
    "CheckpointError", "ConfigError", "ImageError", "PipelineError",
    "hide", "reveal", "train", "load_checkpoint", "save_checkpoint",
    "load_image", "save_image", "resample", "psnr", "ssim", "rre",
    "__version__",
]
