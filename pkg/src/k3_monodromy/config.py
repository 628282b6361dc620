"""Configuration management."""

from pydantic_settings import BaseSettings, SettingsConfigDict

from k3_monodromy import constants


class Settings(BaseSettings):
    """Application settings.

    Values come from ``K3MONO_*`` environment variables or a ``key=value`` file passed as
    ``Settings(_env_file=path)``.
    """

    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", env_prefix="K3MONO_", extra="ignore")

    # Run settings
    log_level: str = "INFO"
    seed: int = 0
    threads: int = 1

    # Local rings
    colength_initial_trunc: int = constants.COLENGTH_INITIAL_TRUNC
    colength_trunc_cap: int = constants.COLENGTH_TRUNC_CAP

    # Path tracking
    newton_tol: float = constants.NEWTON_TOL
    corrector_tol: float = constants.CORRECTOR_TOL
    max_newton_iters: int = constants.MAX_NEWTON_ITERS
    initial_step: float = constants.INITIAL_STEP
    min_step: float = constants.MIN_STEP
    max_step: float = constants.MAX_STEP
    step_grow: float = constants.STEP_GROW
    step_shrink: float = constants.STEP_SHRINK
    success_residual: float = constants.SUCCESS_RESIDUAL
    sharpen_iters: int = constants.SHARPEN_ITERS
    infinity_norm: float = constants.INFINITY_NORM
    dedupe_tol: float = constants.DEDUPE_TOL
    max_failure_fraction: float = constants.MAX_FAILURE_FRACTION

    # Monodromy
    match_tol: float = constants.MATCH_TOL
    loop_radius: float = constants.LOOP_RADIUS
    loop_min_vertices: int = constants.LOOP_MIN_VERTICES
    loop_max_vertices: int = constants.LOOP_MAX_VERTICES
    bisect_tol: float = constants.BISECT_TOL

    # Permutation groups
    word_budget: int = constants.WORD_BUDGET


settings = Settings()
