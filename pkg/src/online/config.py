import dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

dotenv.load_dotenv()


class OnlineSettings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
        case_sensitive=True,
        env_prefix="",
    )

    theta: float = Field(0.5, alias="VV_THETA", ge=0.0, le=1.0)
    tau: float = Field(1.0e-3, alias="VV_TAU", gt=0.0)


settings = OnlineSettings()  # type: ignore
