from typing import Optional

from dotenv import load_dotenv
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.core.enums import AdjustPolicy

load_dotenv()


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="MCED_", extra="ignore")

    VERSION: str = Field(default="1.0.0")
    LOG_LEVEL: str = Field(default="INFO")
    # None keeps logging on stderr only
    LOG_DIR: Optional[str] = Field(default=None)

    DEFAULT_ALPHA: float = Field(default=0.05, gt=0, lt=1)
    ADJUST_POLICY: AdjustPolicy = Field(default=AdjustPolicy.AUTO)
    ADJUST_THRESHOLD: int = Field(default=5, ge=1)

    MIDP_TOLERANCE: float = Field(default=1e-10, gt=0)
    FD_STEP: float = Field(default=1e-6, gt=0)

    # Simulation
    SIM_WORKERS: int = Field(default=1, ge=1)
    SIM_CHUNK_SIZE: int = Field(default=250, ge=1)

    REPORT_SIGNIFICANT_DIGITS: int = Field(default=6, ge=1, le=17)

    @field_validator("LOG_LEVEL", mode="before")
    def normalize_level(cls, v: str) -> str:
        return str(v).upper()


settings = Settings()
