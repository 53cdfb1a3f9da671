"""Scenario configuration for Monte Carlo runs, loaded from strict JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .. import quat
from ..error_analysis import NoiseModel
from ..estimator import EstimatorConfig, VectorObservation

MAX_SEED = 2**64 - 1
DEFAULT_CHUNK = 100_000
# spawn key reserved for drawing a random true attitude / reference pair
SCENARIO_STREAM = 2**31 - 1


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


def _strict(d: dict, allowed: set, where: str) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a JSON object")
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(extra)}")


def _vec(x, n: int, where: str) -> np.ndarray:
    try:
        v = np.asarray(x, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where} must be a list of {n} numbers") from exc
    if v.shape != (n,) or not np.all(np.isfinite(v)):
        raise ConfigError(f"{where} must be a list of {n} finite numbers")
    return v


@dataclass(frozen=True)
class NoiseSpec:
    """How measurement noise is generated.

    ``model`` is ``"tangent"`` (``sigma^2 (I - v v^T)`` about each true vector),
    ``"isotropic"`` (``sigma^2 I``) or ``"blocks"`` (explicit 3x3 covariances).
    """

    model: str = "tangent"
    sigma: float = 0.0
    sigma_r: Optional[float] = None
    blocks: Optional[dict] = None

    def build(self, vm1: VectorObservation, vm2: VectorObservation) -> NoiseModel:
        if self.model == "tangent":
            return NoiseModel.tangent(self.sigma, vm1, vm2, self.sigma_r)
        if self.model == "isotropic":
            return NoiseModel.isotropic(self.sigma)
        b = self.blocks
        return NoiseModel.from_blocks(b["P_b1"], b["P_r1"], b["P_b2"], b["P_r2"])

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseSpec":
        _strict(d, {"model", "sigma", "sigma_r", "blocks"}, "noise")
        model = d.get("model", "tangent")
        if model not in ("tangent", "isotropic", "blocks"):
            raise ConfigError(f"noise.model must be tangent, isotropic or blocks, not {model!r}")
        sigma = float(d.get("sigma", 0.0))
        sigma_r = d.get("sigma_r")
        if sigma < 0 or (sigma_r is not None and float(sigma_r) < 0):
            raise ConfigError("noise standard deviations must be non-negative")
        blocks = d.get("blocks")
        if model == "blocks":
            _strict(blocks or {}, {"P_b1", "P_r1", "P_b2", "P_r2"}, "noise.blocks")
            if blocks is None or len(blocks) != 4:
                raise ConfigError("noise.blocks needs P_b1, P_r1, P_b2 and P_r2")
        return cls(model, sigma, None if sigma_r is None else float(sigma_r), blocks)

    def to_dict(self) -> dict:
        return {"model": self.model, "sigma": self.sigma, "sigma_r": self.sigma_r, "blocks": self.blocks}


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce one Monte Carlo run.

    ``true_quaternion``, ``r1`` and ``r2`` may each be the string ``"random"``,
    in which case they are drawn from a dedicated stream of ``seed``.
    """

    true_quaternion: Union[str, tuple] = "random"
    r1: Union[str, tuple] = "random"
    r2: Union[str, tuple] = "random"
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    trials: int = 1000
    seed: int = 0
    chunk_size: int = DEFAULT_CHUNK
    threads: int = 1
    renormalize_noisy: bool = False
    estimator: dict = field(default_factory=dict)
    output: dict = field(default_factory=lambda: {"path": None, "format": "json"})

    def __post_init__(self):
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError("trials must be a positive integer")
        if not isinstance(self.seed, int) or not 0 <= self.seed <= MAX_SEED:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not isinstance(self.chunk_size, int) or self.chunk_size < 1:
            raise ConfigError("chunk_size must be a positive integer")
        if not isinstance(self.threads, int) or self.threads < 1:
            raise ConfigError("threads must be a positive integer")
        _strict(self.estimator, {"singularity_threshold", "collinearity_threshold", "renormalize"}, "estimator")
        _strict(self.output, {"path", "format"}, "output")
        if self.output.get("format", "json") not in ("json", "csv"):
            raise ConfigError("output.format must be json or csv")
        try:
            self.estimator_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        self.geometry()

    _KEYS = {
        "true_quaternion", "r1", "r2", "noise", "trials", "seed", "chunk_size",
        "threads", "renormalize_noisy", "estimator", "output",
    }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        _strict(d, cls._KEYS, "scenario")
        kw = dict(d)
        if "noise" in kw:
            kw["noise"] = NoiseSpec.from_dict(kw["noise"])
        for key in ("true_quaternion", "r1", "r2"):
            if key in kw and kw[key] != "random":
                kw[key] = tuple(_vec(kw[key], 4 if key == "true_quaternion" else 3, key).tolist())
        if "output" in kw:
            kw["output"] = {"path": None, "format": "json", **kw["output"]}
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "true_quaternion": self.true_quaternion if isinstance(self.true_quaternion, str) else list(self.true_quaternion),
            "r1": self.r1 if isinstance(self.r1, str) else list(self.r1),
            "r2": self.r2 if isinstance(self.r2, str) else list(self.r2),
            "noise": self.noise.to_dict(),
            "trials": self.trials,
            "seed": self.seed,
            "chunk_size": self.chunk_size,
            "renormalize_noisy": self.renormalize_noisy,
            "estimator": dict(self.estimator),
        }

    def with_overrides(self, seed=None, trials=None, sigma=None, threads=None) -> "ScenarioConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        if trials is not None:
            cfg = replace(cfg, trials=trials)
        if threads is not None:
            cfg = replace(cfg, threads=threads)
        if sigma is not None:
            cfg = replace(cfg, noise=replace(cfg.noise, sigma=sigma, sigma_r=None if cfg.noise.sigma_r is None else sigma))
        return cfg

    def estimator_config(self, align_to=None) -> EstimatorConfig:
        return EstimatorConfig(align_to=align_to, **self.estimator)

    def geometry(self):
        """Resolve the true attitude and noise-free observations.

        Returns:
            ``(q_true, vm1, vm2)``.
        """
        rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(SCENARIO_STREAM,)))
        q = quat.random_unit_quaternion(rng)
        r1 = quat.random_unit_vector(rng)
        r2 = quat.random_unit_vector(rng)
        if self.true_quaternion != "random":
            q = np.asarray(self.true_quaternion, dtype=float)
            if abs(np.linalg.norm(q) - 1.0) > 1e-9:
                raise ConfigError("true_quaternion must have unit norm")
        if self.r1 != "random":
            r1 = np.asarray(self.r1, dtype=float)
        if self.r2 != "random":
            r2 = np.asarray(self.r2, dtype=float)
        for name, r in (("r1", r1), ("r2", r2)):
            if abs(np.linalg.norm(r) - 1.0) > 1e-9:
                raise ConfigError(f"{name} must have unit norm")
        if np.linalg.norm(np.cross(r1, r2)) < 1e-8:
            raise ConfigError("r1 and r2 are collinear")
        A = quat.attitude_matrix(q)
        return q, VectorObservation(A @ r1, r1), VectorObservation(A @ r2, r2)

    def noise_model(self) -> NoiseModel:
        _, vm1, vm2 = self.geometry()
        return self.noise.build(vm1, vm2)
