import dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

dotenv.load_dotenv()


class RomSettings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
        case_sensitive=True,
        env_prefix="",
    )

    eta_rom: float = Field(1.0e-3, alias="VV_ETA_ROM", gt=0.0, lt=1.0)
    basis_cap: int = Field(40, alias="VV_BASIS_CAP", ge=1)
    validation_points: int = Field(50, alias="VV_VALIDATION_POINTS", ge=2)
    greedy_growth: float = Field(10.0, alias="VV_GREEDY_GROWTH", gt=1.0)
    deim_cutoff: float = Field(1.0e-8, alias="VV_DEIM_CUTOFF", gt=0.0, lt=1.0)
    training_traces: int = Field(6, alias="VV_TRAINING_TRACES", ge=0)
    training_knots: int = Field(8, alias="VV_TRAINING_KNOTS", ge=2)
    holdout_stride: int = Field(5, alias="VV_HOLDOUT_STRIDE", ge=2)
    seed: int = Field(0, alias="VV_SEED")
    threads: int = Field(1, alias="VV_THREADS", ge=1)


settings = RomSettings()  # type: ignore
