from pathlib import Path
import math

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings."""

    # Logging level for the CLI and the API
    LOG_LEVEL: str = "INFO"
    # Default directory for tables written by scripts and sweeps
    OUTPUT_DIR: Path = Path('backend/data/output')

    # Largest L for which the dense L^2 x L^2 two-particle matrix is built
    DENSE_MAX_SITES: int = 89
    # Localized iff IPR > LOCALIZATION_FACTOR / L
    LOCALIZATION_FACTOR: float = 10.0
    # Spectrum is real when max|Im E| < REAL_SPECTRUM_RTOL * max|E|
    REAL_SPECTRUM_RTOL: float = 1e-8
    # Spectral propagation refuses eigenvector matrices above this condition
    MAX_EIGVEC_CONDITION: float = 1e10
    # Accepted eigenpair residual, relative to the matrix norm
    RESIDUAL_RTOL: float = 1e-8
    # Transition bisection: complex once max|Im E| exceeds this fraction of the hopping
    TRANSITION_EPSILON_FRACTION: float = 0.02

    # Winding number theta grid
    WINDING_SAMPLES: int = 256
    WINDING_MAX_SAMPLES: int = 4096
    WINDING_MIN_GAP: float = 1e-4
    WINDING_GAP_ANGLES: int = 4
    # Refine the theta grid while adjacent phase samples differ by this much
    WINDING_PHASE_GUARD: float = 0.75 * math.pi

    # Time evolution
    EVOLVE_DT: float = 0.5
    EVOLVE_RTOL: float = 1e-10
    EVOLVE_ATOL: float = 1e-12
    BUNCHING_TARGET: float = 0.8
    BUNCHING_RESOLUTION: float = 1e-3

    # Sweeps
    SWEEP_MAX_JOBS: int = 10000
    # Put a creation timestamp into sweep metadata (breaks byte-identical reruns)
    SWEEP_STAMP_TIME: bool = False
    # Worker count for sweeps and winding theta samples
    NHQC_WORKERS: int = 1

    # HTTP surface
    API_HOST: str = "127.0.0.1"
    API_PORT: int = 8080

    model_config = SettingsConfigDict(
        env_file='.env',
        env_file_encoding='utf-8',
        case_sensitive=True
    )


# Global settings instance
settings = Settings()
