import logging
import os
import threading
from typing import Any, Dict, Optional

import requests

from ..errors import ConfigurationError, TransportError
from .chat import ChatBackend

logger = logging.getLogger("PersonaSim.backends.http")


class HTTPChatBackend(ChatBackend):
    """
    Client of an HTTP JSON chat-completion endpoint. The request body is

        {"model": ..., "messages": [{"role": ..., "content": ...}, ...],
         "temperature": ..., "max_tokens": ...}

    and the response text is taken from the content of the first choice
    message. Here we are assuming that the endpoint is already running: no
    connection is made until the first `complete` call. The credential is read
    from the environment variable named by `api_key_env`, endpoints without
    authentication simply leave the variable unset.
    """

    kind = "http"

    def __init__(
        self,
        name: str,
        url: str,
        model: str,
        api_key_env: str = "OPENAI_API_KEY",
        timeout: float = 120.0,
    ):
        super().__init__(name=name, model=model)
        if not url:
            raise ConfigurationError(f"Backend [{name}] has no endpoint url")
        self._url = url
        self._timeout = timeout
        self._headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(api_key_env, "") if api_key_env else ""
        if api_key:
            self._headers["Authorization"] = f"Bearer {api_key}"
        # One HTTP session per worker thread
        self._local = threading.local()

    @property
    def session(self) -> requests.Session:
        if not hasattr(self._local, "session"):
            self._local.session = requests.Session()
            self._local.session.headers.update(self._headers)
        return self._local.session

    def make_payload(
        self,
        system_text: Optional[str],
        user_text: str,
        temperature: float,
        max_tokens: int,
    ) -> Dict[str, Any]:
        return {
            "model": self.model,
            "messages": self.make_messages(system_text, user_text),
            "temperature": temperature,
            "max_tokens": max_tokens,
        }

    def complete(
        self,
        system_text: Optional[str],
        user_text: str,
        temperature: float,
        max_tokens: int,
    ) -> str:
        payload = self.make_payload(system_text, user_text, temperature, max_tokens)
        try:
            response = self.session.post(self._url, json=payload, timeout=self._timeout)
        except requests.RequestException as err:
            raise TransportError(f"Backend [{self.name}] request failed: {err}")

        if not response.ok:
            raise TransportError(
                f"Backend [{self.name}] returned HTTP {response.status_code}: "
                f"{response.text[:200]}"
            )
        try:
            content = response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            raise TransportError(f"Backend [{self.name}] returned a malformed payload")
        if not isinstance(content, str):
            raise TransportError(f"Backend [{self.name}] returned non-text content")
        return content
