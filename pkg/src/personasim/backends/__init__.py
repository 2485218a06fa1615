import os
from typing import Any, Mapping, Optional

from ..errors import ConfigurationError
from .chat import ChatBackend
from .http_chat import HTTPChatBackend
from .mock import ScriptedMockBackend


def make_backend(spec: Mapping[str, Any], base_dir: Optional[str] = None) -> ChatBackend:
    """
    Constructing a backend from its configuration entry. Relative script paths
    are resolved against base_dir.
    """
    name = spec.get("name")
    if not name:
        raise ConfigurationError(f"Backend specification {dict(spec)} has no name")
    kind = spec.get("kind", "http")
    if kind == "http":
        if not spec.get("url") or not spec.get("model"):
            raise ConfigurationError(f"HTTP backend [{name}] requires [url] and [model]")
        return HTTPChatBackend(
            name=name,
            url=spec["url"],
            model=spec["model"],
            api_key_env=spec.get("api_key_env", "OPENAI_API_KEY"),
            timeout=float(spec.get("timeout", 120.0)),
        )
    elif kind == "mock":
        script = spec.get("script")
        if not script:
            raise ConfigurationError(f"Mock backend [{name}] requires a [script] file")
        if base_dir is not None and not os.path.isabs(script):
            script = os.path.join(base_dir, script)
        if not os.path.isfile(script):
            raise ConfigurationError(f"Mock backend [{name}] script [{script}] not found")
        return ScriptedMockBackend.from_file(
            name=name, path=script, cycle=bool(spec.get("cycle", False))
        )
    raise ConfigurationError(f"Backend [{name}] has unknown kind [{kind}]")
