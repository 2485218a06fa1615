import collections
import csv
import datetime
import hashlib
import io
import json
import logging
import os
import tempfile
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence

import yaml

logger = logging.getLogger("PersonaSim.utils")


def _str_(s: str) -> str:
    """
    Converting a multiline string for code formatting to single line for
    in-built string formatters.
    """
    return " ".join(s.split())


def _to_dict(obj) -> Dict[str, Any]:
    """
    Casting a dataclass object to plain python dictionary representation.
    Object may have nested dataclass entries. Private attributes that are not
    meant to be persisted (prefixed with a double underscore) are skipped.
    """

    def convert_entry(entry):
        if isinstance(entry, str):
            return entry
        elif isinstance(entry, collections.abc.Mapping):
            return {k: convert_entry(v) for k, v in entry.items()}
        elif isinstance(entry, collections.abc.Iterable):
            # Always cast to list
            return list(convert_entry(x) for x in entry)
        elif hasattr(entry, "__dict__"):  # Handling nested entry
            return _to_dict(entry)
        else:  # Plain return
            return entry

    if isinstance(obj, collections.abc.Mapping):
        return {k: convert_entry(v) for k, v in obj.items()}
    else:
        return {
            k: convert_entry(v)
            for k, v in obj.__dict__.items()
            if not k.startswith("__")
        }


def to_yamls(obj) -> str:
    """Dumping object to yaml string"""
    return yaml.dump(_to_dict(obj), default_flow_style=False, sort_keys=False)


def get_datetime() -> datetime.datetime:
    """Return the current datetime item"""
    return datetime.datetime.now()


def timestamps(t: Optional[datetime.datetime] = None) -> str:
    """
    Returning time in standardized format. If no explicit datetime is given use
    the datetime.now() function.
    """
    t = get_datetime() if t is None else t
    return t.isoformat()


"""
File handling helpers. All artifacts of a run are either JSONL, CSV or YAML
files, final versions are always written through a temporary file and moved
into place, so that an interrupted stage never leaves a half-written artifact.
"""


def atomic_write_text(path: str, text: str) -> None:
    """Write text to path via a temporary file in the same directory"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp_")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def dump_json_line(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False)


def write_jsonl(path: str, rows: Iterable[Any]) -> None:
    """Atomically (re)writing a full JSONL file"""
    atomic_write_text(path, "".join(dump_json_line(r) + "\n" for r in rows))


def append_jsonl(f: io.TextIOWrapper, row: Any) -> None:
    """Appending a single row to an opened JSONL file, flushed immediately"""
    f.write(dump_json_line(row) + "\n")
    f.flush()


def iter_jsonl(path: str, tolerate_truncated: bool = True) -> Iterator[Dict[str, Any]]:
    """
    Iterating over the objects of a JSONL file. A final line that fails to
    decode is treated as the remains of an interrupted write and skipped when
    tolerate_truncated is set, any other malformed line is an error that
    reports the file and line number.
    """
    from .errors import DataError

    with open(path, "r", encoding="utf-8") as f:
        lines = f.readlines()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            yield json.loads(line)
        except json.JSONDecodeError as err:
            if tolerate_truncated and lineno == len(lines):
                logger.warning(f"Skipping truncated final line [{path}:{lineno}]")
                return
            raise DataError(f"[{path}:{lineno}] malformed JSON line: {err.msg}")


def read_jsonl(path: str, tolerate_truncated: bool = True) -> List[Dict[str, Any]]:
    return list(iter_jsonl(path, tolerate_truncated=tolerate_truncated))


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue()


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """Atomically writing a CSV file with the given header row"""
    atomic_write_text(path, csv_text(header, rows))


def json_text(obj: Any) -> str:
    """Stable, human readable JSON document"""
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def sha256_file(path: str, chunk_size: int = 1024 * 1024) -> str:
    """Content hash of a file, computed in a streaming manner"""
    hasher = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(chunk_size), b""):
            hasher.update(chunk)
    return hasher.hexdigest()


def format_float(x: float) -> str:
    """Shortest round-trip representation, used for all numeric CSV cells"""
    return repr(float(x))


"""
YAML options related functions
"""


def merge_nested(dest, update, path=None):
    """
    Updating a deeply nested dictionary-like object "dest" in-place using
    an update dictionary

    Updating the nested structure stored in the dictionary. The answer is
    adapted from this [answer][solution] on StackOverflow, except at because
    YAML configurations are not strictly dictionaries, we change the method of
    detecting nested structure to anything that is a Mapping. Lists are
    treated as plain values and replaced as a whole.

    [solution]:
    https://stackoverflow.com/questions/7204805/how-to-merge-dictionaries-of-dictionaries/7205107#7205107
    """
    if path is None:  # Leaving default argument as empty mutable is dangerous!
        path = []
    for key in update:
        if key in dest:
            dest_is_nested = isinstance(dest[key], collections.abc.Mapping)
            up_is_nested = isinstance(update[key], collections.abc.Mapping)
            if dest_is_nested and up_is_nested:
                # If both are nested recursively update nested structure
                merge_nested(dest[key], update[key], path + [str(key)])
            elif not dest_is_nested and not up_is_nested:
                # If neither are nested update value directory
                dest[key] = update[key]
            elif dest[key] is None:
                dest[key] = update[key]
            else:
                # Otherwise there is a structure mismatch
                raise ValueError(
                    "Mismatch structure at {node}".format(
                        node=".".join(path + [str(key)])
                    )
                )
        else:
            dest[key] = update[key]
    return dest


def create_nested(*args):
    """
    Short hand function for making a deeply nested dictionary entry

    Nested dictionary entries are very verbose to declare in vanilla python,
    like  `{'a': {'b':{'c':{'d':v}}}}`, which is difficult to read and
    format using typical tools. This method takes arbitrary number of
    arguments, with all entries except for the last to be used as a key to a
    dictionary. So the example given above would be declared using this
    function as `create_nested('a','b','c','d', v)`
    """
    if len(args) == 1:
        return args[0]
    else:
        assert type(args[0]) is str, "Expect key to be of string type"
        return {args[0]: create_nested(*args[1:])}


def parse_override(expr: str) -> Dict[str, Any]:
    """
    Casting a command line override of the form "a.b.c=value" to a nested
    dictionary. The value is parsed as a YAML scalar, so "3" becomes an int and
    "[a, b]" a list.
    """
    if "=" not in expr:
        raise ValueError(f"Override [{expr}] is not of the form key.path=value")
    key, value = expr.split("=", 1)
    keys = [k for k in key.strip().split(".") if k]
    if not keys:
        raise ValueError(f"Override [{expr}] has an empty key")
    return create_nested(*keys, yaml.safe_load(value))
