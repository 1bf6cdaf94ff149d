"""Run configuration: one flat, typed record covering the whole pipeline.

The canonical text form is `key = value`, one per line, keys sorted;
it is embedded verbatim in checkpoints so a saved model always carries
the exact settings it was built with.
"""

from __future__ import annotations

from dataclasses import dataclass, fields


class ConfigError(ValueError):
    pass


@dataclass
class ArdisConfig:
    # geometry
    cover_h: int = 64
    cover_w: int = 64
    c_lat: int = 4
    res_bits: int = 32
    # hiding network
    ihn_blocks: int = 8
    ihn_width: int = 32
    clamp_init: float = 2.0
    padding: str = "zero"
    # detail encoder
    fda_width: int = 32
    # implicit reconstructor
    d_g: int = 32
    d_d: int = 32
    mlp_width: int = 256
    mlp_depth: int = 4
    feat_unfold: bool = False
    # loss weights
    lambda_stego: float = 1.0
    lambda_secret: float = 1.0
    lambda_basis: float = 0.5
    lambda_latent: float = 0.1
    lambda_map: float = 1.0
    # training
    lr0: float = 1e-4
    total_steps: int = 800
    batch_size: int = 1
    seed: int = 0
    scale_min: float = 1.0
    scale_max: float = 2.0
    query_samples: int = 1024
    aux_mode: str = "zeros"
    log_interval: int = 25
    # ablation switches
    fda_enabled: bool = True
    lgir_enabled: bool = True

    def validate(self):
        if self.cover_h < 8 or self.cover_w < 8 or self.cover_h % 2 or self.cover_w % 2:
            raise ConfigError(f"cover dims must be even and >= 8, got {self.cover_h}x{self.cover_w}")
        if self.res_bits < 2 or self.res_bits % 2:
            raise ConfigError(f"res_bits must be even and >= 2, got {self.res_bits}")
        if self.cover_h // 2 < self.res_bits:
            raise ConfigError(
                f"cover_h/2 = {self.cover_h // 2} is too small for {self.res_bits} resolution stripes")
        for name in ("c_lat", "ihn_blocks", "ihn_width", "fda_width", "d_g", "d_d",
                     "mlp_width", "total_steps", "batch_size", "query_samples", "log_interval"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.mlp_depth < 2:
            raise ConfigError(f"mlp_depth must be >= 2, got {self.mlp_depth}")
        for name in ("lambda_stego", "lambda_secret", "lambda_basis", "lambda_latent", "lambda_map"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.lr0 <= 0:
            raise ConfigError(f"lr0 must be positive, got {self.lr0}")
        if not 0 < self.scale_min <= self.scale_max:
            raise ConfigError(f"scale range [{self.scale_min}, {self.scale_max}] is invalid")
        if self.padding not in ("zero", "reflect"):
            raise ConfigError(f"padding must be 'zero' or 'reflect', got {self.padding!r}")
        if self.aux_mode not in ("zeros", "gaussian"):
            raise ConfigError(f"aux_mode must be 'zeros' or 'gaussian', got {self.aux_mode!r}")
        return self

    # derived channel layout
    def cover_channels(self):
        return 12

    def payload_channels(self):
        return 12 + 4 * self.c_lat + 1

    def payload_shape(self):
        return (self.cover_h // 2, self.cover_w // 2, self.payload_channels())

    def max_secret_dim(self):
        return (1 << (self.res_bits // 2)) - 1

    def to_text(self):
        lines = []
        for f in sorted(fields(self), key=lambda f: f.name):
            v = getattr(self, f.name)
            if f.type == "bool" or isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        known = {f.name: f for f in fields(cls)}
        values = {}
        for ln, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {ln}: expected 'key = value', got {raw!r}")
            key, _, val = (s.strip() for s in line.partition("="))
            if key not in known:
                raise ConfigError(f"unknown config field: {key}")
            values[key] = _coerce(key, known[key].type, val)
        return cls(**values)


def _coerce(key, ftype, val):
    try:
        if ftype == "int":
            return int(val)
        if ftype == "float":
            return float(val)
        if ftype == "bool":
            if val not in ("true", "false"):
                raise ValueError(val)
            return val == "true"
        return val
    except ValueError:
        raise ConfigError(f"config field {key}: cannot parse {val!r} as {ftype}") from None
