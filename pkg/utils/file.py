import os
import tempfile
from os import makedirs
from os.path import abspath, dirname

from exprtune.errors import OutputError


def ensure_directory(path: str) -> str:
    """
    Create ``path`` if needed and check that it is writable.

    Args:
        path (str): Output directory.

    Returns:
        str: Absolute path of the directory.

    Raises:
        OutputError: If the directory cannot be created or written to.
    """
    path = abspath(path)
    try:
        makedirs(path, exist_ok=True)
    except OSError as e:
        raise OutputError(f"Cannot create output directory {path}: {e}")
    if not os.access(path, os.W_OK):
        raise OutputError(f"Output directory is not writable: {path}")
    return path


def write_atomic(path: str, text: str) -> str:
    """
    Write ``text`` to ``path`` so readers never observe a truncated file.

    The content goes to a temporary file in the target directory first and
    is then renamed over the destination.

    Args:
        path (str): Destination file.
        text (str): Full file content.

    Returns:
        str: The destination path.
    """
    directory = ensure_directory(dirname(abspath(path)))
    NAME_PREFIX = ".exprtune_"
    SUFFIX = ".tmp"

    with tempfile.NamedTemporaryFile(
        "w", prefix=NAME_PREFIX, suffix=SUFFIX, dir=directory, delete=False, encoding="utf-8"
    ) as temp_file:
        temp_file.write(text)
        temp_path = temp_file.name

    try:
        os.replace(temp_path, path)
    except OSError as e:
        os.unlink(temp_path)
        raise OutputError(f"Cannot write {path}: {e}")
    return path
