"""
Run configuration, environment settings and logging setup
"""
import json
import os
import sys
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Union

import yaml
from dotenv import load_dotenv
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from core.errors import InvalidDocument, MissingFile
from core.types import DecoderConfig
from tools.classify import PenaltyConfig

load_dotenv()

LOG_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan> - {message}"


class Settings:
    """Environment-driven settings (ME_KIT_THREADS, ME_KIT_LOG_LEVEL)"""

    def __init__(self):
        self.threads = self._read_threads(os.getenv("ME_KIT_THREADS"))
        self.log_level = os.getenv("ME_KIT_LOG_LEVEL", "INFO").upper()

    @staticmethod
    def _read_threads(raw: Optional[str]) -> int:
        default = os.cpu_count() or 1
        if not raw:
            return default
        try:
            value = int(raw)
        except ValueError:
            logger.warning(f"⚠️ Ignoring ME_KIT_THREADS={raw!r}: not an integer")
            return default
        return max(1, value)

    def worker_count(self, requested: Optional[int] = None) -> int:
        """Requested parallelism, capped by ME_KIT_THREADS"""
        if requested is None:
            return self.threads
        return max(1, min(requested, self.threads))


settings = Settings()


def configure_logging(level: Optional[str] = None) -> None:
    logger.remove()
    logger.add(sys.stderr, level=(level or settings.log_level).upper(), format=LOG_FORMAT)


class RunConfig(BaseModel):
    """Everything an eval/decode/ablate run needs besides its input files"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    decoder: Literal["siss", "fixed"] = "siss"
    k: Optional[int] = Field(default=None, ge=1, description="Duration prior; derived from fps when absent")
    theta_low: float = Field(default=0.25, ge=0.0, le=1.0)
    theta_high: float = Field(default=0.5, ge=0.0, le=1.0)
    patience: int = Field(default=2, ge=1)
    min_peak_height: float = Field(default=0.6, ge=0.0, le=1.0)
    nms_iou: float = Field(default=0.3, ge=0.0, lt=1.0)
    penalty: PenaltyConfig = Field(default_factory=PenaltyConfig)
    averaging: Literal["macro", "micro"] = "macro"
    threads: Optional[int] = Field(default=None, ge=1, description="Worker threads, capped by ME_KIT_THREADS")
    out_dir: Optional[str] = Field(default=None, description="Where reports and curves are written")
    write_curves: bool = True

    @model_validator(mode="after")
    def validate_decoder(self) -> "RunConfig":
        self.decoder_config(30.0)
        return self

    def decoder_config(self, fps: float) -> DecoderConfig:
        return DecoderConfig.for_fps(
            fps,
            k=self.k,
            theta_low=self.theta_low,
            theta_high=self.theta_high,
            patience=self.patience,
            min_peak_height=self.min_peak_height,
            nms_iou=self.nms_iou,
        )

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Copy with the non-None overrides applied and revalidated"""
        data = self.model_dump()
        data.update({key: value for key, value in overrides.items() if value is not None})
        return RunConfig.model_validate(data)


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Load a JSON or YAML (.yaml/.yml) mapping"""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text) if path.suffix.lower() in (".yaml", ".yml") else json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as e:
        raise InvalidDocument(path, f"cannot parse config: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InvalidDocument(path, "config must be a mapping")
    return data


def load_run_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    if path is None:
        return RunConfig()
    data = read_config_file(path)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise InvalidDocument(path, str(e)) from e


__all__ = ["Settings", "settings", "configure_logging", "RunConfig", "read_config_file", "load_run_config"]
