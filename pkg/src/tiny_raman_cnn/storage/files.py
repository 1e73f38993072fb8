import os
import tempfile
from pathlib import Path
from typing import Union

PathLike = Union[str, "os.PathLike[str]"]


def atomic_write_text(path: PathLike, text: str) -> Path:
    """
    Writes ``text`` to a temporary file next to ``path`` and renames it into place,
    so readers never see a partially written file.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)

    with tempfile.NamedTemporaryFile(
        "w", encoding="utf-8", newline="\n", dir=target.parent, prefix=f".{target.name}.", delete=False
    ) as handle:
        temp_name = handle.name
        try:
            handle.write(text)
        except BaseException:
            handle.close()
            os.unlink(temp_name)
            raise
    try:
        os.replace(temp_name, target)
    except OSError:
        os.unlink(temp_name)
        raise
    return target
