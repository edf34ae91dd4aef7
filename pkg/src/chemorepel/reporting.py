"""Run-directory management and deterministic artifact emission.

One run owns one directory, guarded by a lock file; the manifest (config
hash, seed, versions, artifact digests) is written last so an interrupted
run never looks complete. A directory that already holds a manifest is
refused. Artifacts carry no timestamps: identical inputs give identical
bytes.
"""

import hashlib
import json
import os
import platform

import numpy as np
import scipy

LOCK_NAME = ".lock"
MANIFEST_NAME = "manifest.json"


def sha256_hex(data):
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def format_float(x):
    """Shortest decimal that round-trips the double exactly."""
    return repr(float(x))


def csv_text(header, rows):
    lines = [",".join(header)]
    width = len(header)
    for row in rows:
        if len(row) != width:
            raise ValueError(f"row width {len(row)} != header width {width}")
        lines.append(",".join(
            format_float(x) if isinstance(x, (float, np.floating))
            else str(x) for x in row))
    return "\n".join(lines) + "\n"


def json_text(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


class RunDirectory:
    """Context manager owning an output directory for the duration of a run.

    Entering creates the directory, refuses one with a completed manifest,
    and takes the lock file exclusively. write_* methods record each
    artifact's digest; finalize() writes the manifest as the last artifact.
    """

    def __init__(self, path):
        self.path = str(path)
        self._artifacts = {}
        self._lock_fd = None
        self._finalized = False

    def __enter__(self):
        os.makedirs(self.path, exist_ok=True)
        manifest = os.path.join(self.path, MANIFEST_NAME)
        if os.path.exists(manifest):
            raise FileExistsError(
                f"{self.path} already holds a completed run "
                f"({MANIFEST_NAME} present); pick a fresh directory")
        lock = os.path.join(self.path, LOCK_NAME)
        try:
            self._lock_fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise FileExistsError(
                f"{self.path} is locked by another run ({LOCK_NAME} "
                f"present); concurrent runs need distinct directories")
        return self

    def __exit__(self, exc_type, exc, tb):
        if self._lock_fd is not None:
            os.close(self._lock_fd)
            os.unlink(os.path.join(self.path, LOCK_NAME))
            self._lock_fd = None
        return False

    def _record(self, name, data):
        path = os.path.join(self.path, name)
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(data)
        self._artifacts[name] = sha256_hex(data)
        return path

    def write_bytes(self, name, data):
        return self._record(name, data)

    def write_text(self, name, text):
        return self._record(name, text.encode("utf-8"))

    def write_csv(self, name, header, rows):
        return self._record(name, csv_text(header, rows).encode("utf-8"))

    def write_json(self, name, obj):
        return self._record(name, json_text(obj).encode("utf-8"))

    def finalize(self, config_text, seed):
        """Write the manifest; must be the last write of the run."""
        if self._finalized:
            raise RuntimeError("manifest already written")
        manifest = {
            "config_sha256": sha256_hex(config_text),
            "seed": seed,
            "versions": {
                "chemorepel": _package_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "artifacts": dict(sorted(self._artifacts.items())),
        }
        path = os.path.join(self.path, MANIFEST_NAME)
        with open(path, "wb") as fh:
            fh.write(json_text(manifest).encode("utf-8"))
        self._finalized = True
        return path


def _package_version():
    from . import __version__

    return __version__


def read_manifest(path):
    with open(os.path.join(path, MANIFEST_NAME), "rb") as fh:
        return json.loads(fh.read())
