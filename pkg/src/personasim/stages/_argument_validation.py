import fnmatch
import os
from typing import List


class ArgumentValueChecker:
    """
    Base class for limiting the values a stage argument can take
    """

    def __init__(self):
        self.session = None

    def _check_valid(self, argument) -> bool:
        return True


class Range(ArgumentValueChecker):
    def __init__(self, min_val, max_val):
        super().__init__()
        assert min_val < max_val
        self.min_val = min_val
        self.max_val = max_val

    def _check_valid(self, argument):
        return self.min_val <= argument <= self.max_val

    def __repr__(self):
        return f"Range({self.min_val}, {self.max_val})"


class StringListChecker(ArgumentValueChecker):
    """
    Checking if the str type argument is contained in a list. This is a type
    that can be chained together with the or operator.
    """

    def __init__(self):
        super().__init__()
        self._next = None

    def _check_valid(self, argument) -> bool:
        if not isinstance(argument, str):
            return False
        if argument in self.valid_list:
            return True
        if self._next is not None:
            self._next.session = self.session
            return self._next._check_valid(argument)
        return False

    @property
    def valid_list(self):
        return []

    @property
    def _full_list(self):
        if self._next is None:
            return self.valid_list
        else:
            return self._next._full_list + self.valid_list

    def __or__(self, other):
        assert isinstance(other, StringListChecker)
        other._next = self
        return other

    def __repr__(self):
        return f"{self.__class__.__name__}({self._full_list})"


class StrChoices(StringListChecker):
    """
    Checking if the argument is one of a fixed list of strings
    """

    def __init__(self, str_list: List[str]):
        super().__init__()
        self._str_list = list(str_list)

    @property
    def valid_list(self):
        return self._str_list


class BackendNames(StringListChecker):
    """
    Names of the configured backends of a role ("generators" or "simulators"),
    resolved from the session configuration at check time.
    """

    def __init__(self, role: str):
        super().__init__()
        self.role = role

    @property
    def valid_list(self):
        if self.session is None:
            return []
        return [spec["name"] for spec in self.session.config.backends[self.role]]


class StageDataFiles(StringListChecker):
    """Artifacts produced by a stage that match a file name pattern"""

    def __init__(self, stage_name: str, file_pattern: str):
        super().__init__()
        self.stage_name = stage_name
        self.file_pattern = file_pattern

    @property
    def valid_list(self):
        if self.session is None:
            return []
        data_path = []
        for result in self.session.results:
            if result.name != self.stage_name:
                continue
            data_path.extend(
                [
                    data.path
                    for data in result.data_files
                    if fnmatch.fnmatch(data.path, self.file_pattern)
                ]
            )
        return data_path


class ExistingFile(StringListChecker):
    """Any path pointing to an existing file"""

    def _check_valid(self, argument) -> bool:
        if isinstance(argument, str) and os.path.isfile(argument):
            return True
        return super()._check_valid(argument)

    def __repr__(self):
        return "ExistingFile()"
