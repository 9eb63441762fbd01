import csv
import io
import os
from typing import Callable, Iterable, Sequence

from ..common.exceptions import ArtifactIOError


def ensure_directory(path: str) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise ArtifactIOError(f"cannot create output directory {path}: {e}") from e
    return path


def write_text(filename: str, text: str):
    try:
        with open(filename, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    except OSError as e:
        raise ArtifactIOError(f"cannot write {filename}: {e}") from e


def render_text(dump: Callable[..., None], obj, *args) -> str:
    """Run one of the line-format ``dump_*`` writers into a string."""
    buffer = io.StringIO()
    dump(obj, buffer, *args)
    return buffer.getvalue()


def write_csv(filename: str, header: Sequence[str], rows: Iterable[Sequence]):
    try:
        with open(filename, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        raise ArtifactIOError(f"cannot write {filename}: {e}") from e


def reset_file(filename: str):
    # JSON-lines files are appended to; each command starts them empty.
    write_text(filename, "")
