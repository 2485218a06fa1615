"""
Scripted stand-in for a chat-completion endpoint, replaying canned responses.

Script files are JSONL, one response per line:

    {"response": "Answer: A"}
    {"match": "\"STATE\": \"Florida\"", "response": "Answer: B"}

Lines without a "match" key form the default queue. Lines with a "match" key
form one queue per distinct match string, used whenever the prompt (system and
user text joined by a newline) contains the match string. Rules are tried in
the order of their first appearance in the script, and a rule whose queue is
exhausted falls through to the next rule and finally to the default queue.

Responses may contain the placeholders {AGE}, {SEX}, {RACE} and {STATE}, which
are filled with the value of the first `"KEY": "value"` pair of that key found
in the prompt. This allows a single scripted persona fill to echo back the
meta persona it was asked to extend.

With a concurrency bound of 1 the backend output is a pure function of the
script and the sequence of prompts. With concurrent callers, only scripts where
every queue holds a single (cycled) response are order independent.
"""

import re
import threading
from typing import Dict, List, Mapping, Optional, Sequence

from ..errors import DataError, TransportError
from ..utils import read_jsonl
from .chat import ChatBackend

PLACEHOLDER_KEYS = ("AGE", "SEX", "RACE", "STATE")


class _Queue:
    def __init__(self):
        self.responses: List[str] = []
        self.position = 0

    def pop(self, cycle: bool) -> Optional[str]:
        if not self.responses:
            return None
        if self.position >= len(self.responses):
            if not cycle:
                return None
            self.position = 0
        response = self.responses[self.position]
        self.position += 1
        return response


class ScriptedMockBackend(ChatBackend):
    kind = "mock"

    def __init__(
        self,
        name: str,
        script: Sequence[Mapping[str, str]],
        cycle: bool = False,
        model: str = "scripted",
    ):
        super().__init__(name=name, model=model)
        self._cycle = cycle
        self._default = _Queue()
        self._rules: Dict[str, _Queue] = {}
        self._lock = threading.Lock()
        self.calls: List[Dict[str, str]] = []

        for lineno, line in enumerate(script, start=1):
            if "response" not in line:
                raise DataError(f"Mock script line {lineno} has no [response] key")
            if "match" in line:
                self._rules.setdefault(str(line["match"]), _Queue()).responses.append(
                    str(line["response"])
                )
            else:
                self._default.responses.append(str(line["response"]))

    @classmethod
    def from_file(cls, name: str, path: str, cycle: bool = False) -> "ScriptedMockBackend":
        return cls(name=name, script=read_jsonl(path, tolerate_truncated=False), cycle=cycle)

    @staticmethod
    def fill_placeholders(response: str, prompt: str) -> str:
        for key in PLACEHOLDER_KEYS:
            token = "{" + key + "}"
            if token not in response:
                continue
            match = re.search(rf'"{key}"\s*:\s*"((?:[^"\\]|\\.)*)"', prompt)
            if match is not None:
                response = response.replace(token, match.group(1))
        return response

    def complete(
        self,
        system_text: Optional[str],
        user_text: str,
        temperature: float,
        max_tokens: int,
    ) -> str:
        prompt = f"{system_text}\n{user_text}" if system_text else user_text
        with self._lock:
            self.calls.append({"system": system_text or "", "user": user_text})
            response = None
            for match, queue in self._rules.items():
                if match in prompt:
                    response = queue.pop(self._cycle)
                    if response is not None:
                        break
            if response is None:
                response = self._default.pop(self._cycle)
        if response is None:
            raise TransportError(f"Mock backend [{self.name}] script is exhausted")
        return self.fill_placeholders(response, prompt)
