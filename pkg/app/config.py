import os
from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic_settings.sources import EnvSettingsSource
from typing import Optional

class _GracefulEnvSettingsSource(EnvSettingsSource):
    def prepare_field_value(self, field_name, field, value, value_is_complex):
        # EMISSION_WORKERS= (set but blank) falls back to the field default
        if not value_is_complex and isinstance(value, str) and value.strip() == '':
            return None
        return super().prepare_field_value(field_name, field, value, value_is_complex)


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="EMISSION_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Worker pool
    workers: int = os.cpu_count() or 1

    # Output
    output_dir: str = "results"
    csv_float_format: str = "%.17g"

    # Logging / progress
    log_level: str = "INFO"
    progress: bool = True

    # Preset applied when a config file names none
    default_preset: Optional[str] = None

    @classmethod
    def settings_customise_sources(cls, settings_cls, init_settings, env_settings, dotenv_settings, file_secret_settings):
        return (
            init_settings,
            _GracefulEnvSettingsSource(settings_cls),
            dotenv_settings,
            file_secret_settings,
        )

    def resolved_workers(self, requested: Optional[int] = None) -> int:
        """Worker count from an explicit request, falling back to the environment"""
        workers = requested if requested is not None else self.workers
        return max(1, int(workers))

# Global settings instance
settings = Settings()
