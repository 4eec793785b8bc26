"""Time-tagged photon event streams and their on-disk format.

A stream is a sorted array of event times in nanoseconds plus a small integer
channel tag per event.  Streams are immutable carriers between the emitter
simulation and the detection chain; generators record their name, seed and
parameters in the metadata for provenance.

File format: CSV with header ``time_ns,channel`` sorted by time, and a JSON
sidecar (``<name>.meta.json``) holding seed, generator, duration and
parameters.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PhotonEventStream:
    """Time-ordered tagged events over [0, duration_ns].

    times_ns:    float64 array, globally sorted, strictly increasing within
                 each channel.
    channels:    int array of the same length; tags from ``channel_set``.
    duration_ns: observation window length.
    seed:        seed of the generator that produced the stream (None for
                 derived streams that did not draw randomness).
    metadata:    provenance and diagnostics; downstream physics must not
                 read diagnostic tags (e.g. background origin masks).
    """

    times_ns: np.ndarray
    channels: np.ndarray
    duration_ns: float
    seed: int | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times_ns, dtype=float)
        chans = np.asarray(self.channels, dtype=np.int64)
        object.__setattr__(self, "times_ns", times)
        object.__setattr__(self, "channels", chans)
        if times.shape != chans.shape or times.ndim != 1:
            raise ValueError("times_ns and channels must be 1-d arrays of equal length")
        if not self.duration_ns > 0:
            raise ValueError(f"duration_ns must be > 0, got {self.duration_ns}")
        if times.size:
            if times[0] < 0 or times[-1] > self.duration_ns:
                raise ValueError("event times must lie in [0, duration_ns]")
            if np.any(np.diff(times) < 0):
                raise ValueError("event times must be sorted ascending")
            for c in np.unique(chans):
                tc = times[chans == c]
                if np.any(np.diff(tc) <= 0):
                    raise ValueError(f"times within channel {c} must be strictly increasing")

    def __len__(self):
        return int(self.times_ns.size)

    @property
    def channel_set(self) -> tuple[int, ...]:
        declared = self.metadata.get("channel_set")
        if declared is not None:
            return tuple(int(c) for c in declared)
        return tuple(int(c) for c in np.unique(self.channels))

    def single_channel(self) -> int:
        """The unique channel tag of a one-channel stream."""
        chans = self.channel_set
        if len(chans) > 1:
            raise ValueError(f"stream carries several channels: {chans}")
        return chans[0] if chans else 0

    def replace(self, times_ns, channels, **meta_updates) -> "PhotonEventStream":
        """New stream with the same window/seed and updated events/metadata."""
        metadata = dict(self.metadata)
        metadata.update(meta_updates)
        return PhotonEventStream(
            times_ns=np.asarray(times_ns, dtype=float),
            channels=np.asarray(channels, dtype=np.int64),
            duration_ns=self.duration_ns,
            seed=self.seed,
            metadata=metadata,
        )


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items() if _is_scalarish(v)}
    return obj


def _is_scalarish(v):
    if isinstance(v, (str, int, float, bool)) or v is None:
        return True
    if isinstance(v, (list, tuple)) and len(v) <= 64:
        return all(isinstance(x, (str, int, float, bool)) for x in v)
    if isinstance(v, dict):
        return True
    return False


def atomic_write_text(path: str, text: str):
    """Write via a temp file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as f:
        f.write(text)
    os.replace(tmp, path)


def write_stream_csv(stream: PhotonEventStream, path: str):
    """Write ``time_ns,channel`` rows plus the JSON metadata sidecar."""
    lines = ["time_ns,channel"]
    for t, c in zip(stream.times_ns, stream.channels):
        lines.append(f"{float(t)!r},{int(c)}")
    atomic_write_text(path, "\n".join(lines) + "\n")

    meta = {
        "duration_ns": stream.duration_ns,
        "seed": stream.seed,
        "n_events": len(stream),
    }
    meta.update(_json_safe(stream.metadata))
    atomic_write_text(
        _sidecar_path(path), json.dumps(meta, indent=2, sort_keys=True) + "\n"
    )


def _sidecar_path(path: str) -> str:
    root, _ = os.path.splitext(path)
    return root + ".meta.json"


def read_stream_csv(path: str) -> PhotonEventStream:
    """Read a stream CSV (and its sidecar, when present) back into memory."""
    times, channels = [], []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["time_ns", "channel"]:
            raise ValueError(f"{path}: expected header 'time_ns,channel'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                times.append(float(row[0]))
                channels.append(int(row[1]))
            except (ValueError, IndexError):
                raise ValueError(f"{path}: malformed row at line {lineno}: {row!r}")

    duration = None
    seed = None
    metadata = {}
    sidecar = _sidecar_path(path)
    if os.path.exists(sidecar):
        with open(sidecar) as f:
            meta = json.load(f)
        duration = meta.pop("duration_ns", None)
        seed = meta.pop("seed", None)
        meta.pop("n_events", None)
        metadata = meta
    if duration is None:
        duration = float(times[-1]) if times else 1.0
    return PhotonEventStream(
        times_ns=np.asarray(times, dtype=float),
        channels=np.asarray(channels, dtype=np.int64),
        duration_ns=float(duration),
        seed=seed,
        metadata=metadata,
    )
