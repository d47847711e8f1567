"""Scenario configuration read from a single JSON document."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .equilibrium import MarketParams
from .errors import MarketError
from .feasibility import DEFAULT_GAMMAS, DEFAULT_N_STARTS, DEFAULT_SIZES
from .market_structure import DEFAULT_BETA_BOUNDS, WeightLaw
from .sensitivity import DEFAULT_STEP

FORMATS = ("csv", "json")


class ConfigError(MarketError):
    """Malformed or inconsistent scenario configuration."""


@dataclass
class ScenarioConfig:
    risk_free_rate: float = 0.05
    market: MarketParams | None = None
    weight_law: dict | None = None
    betas: list | None = None
    beta_bounds: tuple = DEFAULT_BETA_BOUNDS
    n_starts: int = DEFAULT_N_STARTS
    seed: int = 0
    output_path: str | None = None
    output_format: str | None = None
    step: float = DEFAULT_STEP
    n_large: int = 1000
    extra: dict = field(default_factory=dict)

    def sweep_grid(self) -> list[WeightLaw]:
        law = self.weight_law or {}
        gammas = _as_list(law.get("gamma", DEFAULT_GAMMAS), "weight_law.gamma")
        sizes = _as_list(law.get("n_assets", DEFAULT_SIZES), "weight_law.n_assets")
        try:
            return [WeightLaw(float(g), _as_int(n, "weight_law.n_assets")) for n in sizes for g in gammas]
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def single_law(self) -> WeightLaw:
        law = self.weight_law
        g, n = law.get("gamma"), law.get("n_assets")
        if isinstance(g, list) or isinstance(n, list) or g is None or n is None:
            raise ConfigError("weight_law needs scalar 'gamma' and 'n_assets' for this command")
        try:
            return WeightLaw(float(g), _as_int(n, "weight_law.n_assets"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _as_list(x, name):
    if isinstance(x, (list, tuple)):
        if not x:
            raise ConfigError(f"{name} must not be empty")
        return list(x)
    return [x]


def _as_int(x, name) -> int:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or int(x) != x:
        raise ConfigError(f"{name} must be an integer, got {x!r}")
    return int(x)


def _as_float(x, name) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise ConfigError(f"{name} must be a finite number, got {x!r}")
    return float(x)


def parse_config(doc: dict) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    doc = dict(doc)
    cfg = ScenarioConfig()
    if "risk_free_rate" in doc:
        cfg.risk_free_rate = _as_float(doc.pop("risk_free_rate"), "risk_free_rate")
    market = doc.pop("market", None)
    law = doc.pop("weight_law", None)
    if market is not None and law is not None:
        raise ConfigError("give either 'market' or 'weight_law', not both")
    if market is not None:
        if not isinstance(market, dict) or "weights" not in market or "betas" not in market:
            raise ConfigError("'market' must be an object with 'weights' and 'betas'")
        try:
            weights = [_as_float(v, "market.weights") for v in market["weights"]]
            betas = [_as_float(v, "market.betas") for v in market["betas"]]
        except TypeError as exc:
            raise ConfigError("market.weights and market.betas must be lists") from exc
        cfg.market = MarketParams(weights, betas, cfg.risk_free_rate)
    if law is not None:
        if not isinstance(law, dict):
            raise ConfigError("'weight_law' must be an object")
        cfg.weight_law = law
    if "betas" in doc:
        cfg.betas = [_as_float(v, "betas") for v in doc.pop("betas")]
    if "beta_bounds" in doc:
        bb = doc.pop("beta_bounds")
        if not isinstance(bb, (list, tuple)) or len(bb) != 2:
            raise ConfigError("beta_bounds must be a two-element list")
        lo, hi = (_as_float(v, "beta_bounds") for v in bb)
        if lo > hi:
            raise ConfigError(f"beta_bounds [{lo}, {hi}] is empty")
        cfg.beta_bounds = (lo, hi)
    if "n_starts" in doc:
        cfg.n_starts = _as_int(doc.pop("n_starts"), "n_starts")
    if "seed" in doc:
        cfg.seed = _as_int(doc.pop("seed"), "seed")
    if "output_path" in doc:
        cfg.output_path = str(doc.pop("output_path"))
    if "output_format" in doc:
        cfg.output_format = doc.pop("output_format")
    if "step" in doc:
        cfg.step = _as_float(doc.pop("step"), "step")
    if "n_large" in doc:
        cfg.n_large = _as_int(doc.pop("n_large"), "n_large")
    cfg.extra = doc
    check(cfg)
    return cfg


def check(cfg: ScenarioConfig) -> ScenarioConfig:
    if cfg.output_format is not None and cfg.output_format not in FORMATS:
        raise ConfigError(f"output_format must be one of {FORMATS}, got {cfg.output_format!r}")
    if cfg.n_starts < 1:
        raise ConfigError(f"n_starts must be >= 1, got {cfg.n_starts}")
    if cfg.seed < 0 or cfg.seed >= 2**64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {cfg.seed}")
    if not cfg.step > 0:
        raise ConfigError(f"step must be positive, got {cfg.step}")
    return cfg


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(doc)
