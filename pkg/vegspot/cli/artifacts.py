"""run manifests and tabular outputs shared by the subcommands"""
import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Optional

from vegspot import __version__

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
NUMBER_FORMAT = ".17g"


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def format_number(value):
    if isinstance(value, bool) or value is None:
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, NUMBER_FORMAT)
    return str(value)


def write_csv(path, header, rows):
    """comma separated rows, floats in 17 significant digits"""
    path = Path(path)
    lines = [",".join(header)]
    lines += [",".join(format_number(value) for value in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    logger.debug("wrote %d rows to %s", len(rows), path)
    return path


def write_json(path, payload):
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


@dataclass
class RunManifest:
    subcommand: str
    params: Dict[str, object]
    tolerances: Dict[str, float] = field(default_factory=dict)
    inputs: Dict[str, str] = field(default_factory=dict)
    version: str = __version__
    wall_time: Optional[float] = None
    _started: float = field(default_factory=time.perf_counter, repr=False)

    def add_input(self, path):
        self.inputs[str(path)] = sha256_file(path)

    def finish(self, directory):
        """stamp the wall time and write manifest.json into directory"""
        self.wall_time = time.perf_counter() - self._started
        payload = asdict(self)
        payload.pop("_started")
        return write_json(Path(directory) / MANIFEST_NAME, payload)


def output_directory(path):
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    return directory
