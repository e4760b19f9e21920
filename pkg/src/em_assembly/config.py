import dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

dotenv.load_dotenv()


class AssemblySettings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
        case_sensitive=True,
        env_prefix="",
    )

    resistivity: float = Field(7.4e-7, alias="VV_RESISTIVITY", gt=0.0)
    # element pairs with centroid distance below near_ratio * diameter use the near tier
    near_ratio: float = Field(2.0, alias="VV_NEAR_RATIO", gt=0.0)
    near_order: int = Field(3, alias="VV_NEAR_ORDER", ge=1)
    touching_depth: int = Field(2, alias="VV_TOUCHING_DEPTH", ge=0)
    pair_chunk: int = Field(4096, alias="VV_PAIR_CHUNK", ge=1)
    gmres_rtol: float = Field(1.0e-10, alias="VV_GMRES_RTOL", gt=0.0)
    gmres_restart: int = Field(60, alias="VV_GMRES_RESTART", ge=1)
    gmres_maxiter: int = Field(400, alias="VV_GMRES_MAXITER", ge=1)
    threads: int = Field(1, alias="VV_THREADS", ge=1)


settings = AssemblySettings()  # type: ignore
