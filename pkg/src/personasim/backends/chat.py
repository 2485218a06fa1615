from typing import Dict, List, Optional


class ChatBackend:
    """
    Base class for chat-completion backends. A backend is identified by a
    user-facing name (used in artifact file names and reports) and a model
    name. Backends must tolerate concurrent `complete` calls from multiple
    worker threads, and must raise `errors.TransportError` for anything that
    prevents a response text from being returned.
    """

    kind: str = "abstract"

    def __init__(self, name: str, model: str):
        self.name = name
        self.model = model

    @property
    def identity(self) -> Dict[str, str]:
        return {"name": self.name, "kind": self.kind, "model": self.model}

    @staticmethod
    def make_messages(system_text: Optional[str], user_text: str) -> List[Dict[str, str]]:
        messages = []
        if system_text:
            messages.append({"role": "system", "content": system_text})
        messages.append({"role": "user", "content": user_text})
        return messages

    def complete(
        self,
        system_text: Optional[str],
        user_text: str,
        temperature: float,
        max_tokens: int,
    ) -> str:
        raise NotImplementedError("Chat backends must implement complete")

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(name={self.name!r}, model={self.model!r})"
