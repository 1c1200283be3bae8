"""Remote client for hemac rollout servers."""

from .client import (
    EpisodeCompleteError,
    NoEpisodeError,
    ProtocolError,
    RemoteEnv,
    RemoteEnvError,
    ServerError,
    SERVER_ENV_VAR,
)

__version__ = "0.1.0"

__all__ = [
    "EpisodeCompleteError",
    "NoEpisodeError",
    "ProtocolError",
    "RemoteEnv",
    "RemoteEnvError",
    "SERVER_ENV_VAR",
    "ServerError",
    "__version__",
]
