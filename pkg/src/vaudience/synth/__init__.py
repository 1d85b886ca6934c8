from .backend import (
    BackendUnavailable,
    HttpTextToAudioBackend,
    TextToAudioBackend,
    synthesize_via_backend,
)
from .config import (
    ConfigError,
    InvalidParams,
    SynthesisParams,
    VoiceBankConfig,
    load_voice_config,
    params_from_summary,
)
from .prompt import DEFAULT_PROMPT_TABLE, PromptTable, build_prompt
from .renderer import CrowdRenderer, soft_limit

__all__ = [
    "BackendUnavailable",
    "ConfigError",
    "CrowdRenderer",
    "DEFAULT_PROMPT_TABLE",
    "HttpTextToAudioBackend",
    "InvalidParams",
    "PromptTable",
    "SynthesisParams",
    "TextToAudioBackend",
    "VoiceBankConfig",
    "build_prompt",
    "load_voice_config",
    "params_from_summary",
    "soft_limit",
    "synthesize_via_backend",
]
