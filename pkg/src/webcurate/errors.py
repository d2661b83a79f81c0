class ConfigError(Exception):
    """Bad configuration or missing resources detected before processing starts."""


class PipelineError(Exception):
    """Unrecoverable failure while processing documents."""
