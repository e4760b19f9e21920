import dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

dotenv.load_dotenv()


class HMatrixSettings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
        case_sensitive=True,
        env_prefix="",
    )

    eps: float = Field(1.0e-6, alias="VV_EPS", gt=0.0, lt=1.0)
    eta_adm: float = Field(2.0, alias="VV_ETA_ADM", gt=0.0)
    n_min: int = Field(32, alias="VV_N_MIN", ge=1)
    aca_rank_max: int = Field(128, alias="VV_ACA_RANK_MAX", ge=1)


settings = HMatrixSettings()  # type: ignore
