"""Landmark ingestion and similarity-transform registration.

Tracked 2-D landmark frames are registered to a reference shape by
least-squares Procrustes alignment (scale, proper rotation, translation),
then flattened into feature rows ``x1, y1, x2, y2, ...``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_POINTS = 68


class LandmarkFormatError(ValueError):
    pass


@dataclass(frozen=True)
class LandmarkFrame:
    frame_id: int
    points: np.ndarray  # K x 2

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must be K x 2, got shape {pts.shape}")
        if pts.shape[0] < 2:
            raise ValueError("a frame needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("landmark coordinates must be finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "frame_id", int(self.frame_id))

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class SimilarityTransform:
    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def apply(self, points) -> np.ndarray:
        return self.scale * np.asarray(points, dtype=float) @ self.rotation.T + self.translation

    @classmethod
    def from_angle(cls, angle: float, scale: float = 1.0, translation=(0.0, 0.0)):
        c, s = np.cos(angle), np.sin(angle)
        return cls(float(scale), np.array([[c, -s], [s, c]]), np.asarray(translation, dtype=float))


def similarity_fit(points, reference) -> SimilarityTransform:
    """Least-squares similarity transform taking ``points`` onto ``reference``."""
    a = np.asarray(points, dtype=float)
    b = np.asarray(reference, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"point sets differ in shape: {a.shape} vs {b.shape}")
    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    a0, b0 = a - mu_a, b - mu_b
    var_a = np.sum(a0 * a0)
    if var_a == 0:
        raise ValueError("degenerate frame: all points coincide, scale is undefined")
    u, s, vt = np.linalg.svd(a0.T @ b0)
    # restrict to proper rotations: flip the weakest axis if needed
    d = np.ones(2)
    if np.linalg.det(u @ vt) < 0:
        d[-1] = -1.0
    rotation = (vt.T * d) @ u.T
    scale = float(np.sum(s * d) / var_a)
    translation = mu_b - scale * rotation @ mu_a
    return SimilarityTransform(scale, rotation, translation)


def similarity_align(frame: LandmarkFrame, reference: LandmarkFrame):
    """Register ``frame`` onto ``reference``; returns ``(aligned, transform)``."""
    if len(frame) != len(reference):
        raise ValueError(
            f"frame has {len(frame)} points but reference has {len(reference)}"
        )
    transform = similarity_fit(frame.points, reference.points)
    return LandmarkFrame(frame.frame_id, transform.apply(frame.points)), transform


def alignment_residual(frame: LandmarkFrame, reference: LandmarkFrame, transform) -> float:
    return float(np.sum((transform.apply(frame.points) - reference.points) ** 2))


def mean_reference(sequence) -> LandmarkFrame:
    """Mean shape after aligning every frame to the first one."""
    if not sequence:
        raise ValueError("empty sequence")
    first = sequence[0]
    aligned = [similarity_align(f, first)[0].points for f in sequence]
    return LandmarkFrame(-1, np.mean(aligned, axis=0))


def build_feature_matrix(sequence, reference: LandmarkFrame | None = None) -> np.ndarray:
    """Align each frame to ``reference`` and flatten rows in time order.

    Without a reference the sequence's own mean shape is used, which is not
    rotation-canonical; pass an explicit reference when features must be
    comparable across sequences.
    """
    sequence = list(sequence)
    if not sequence:
        raise ValueError("empty sequence")
    counts = {len(f) for f in sequence}
    if len(counts) != 1:
        raise ValueError(f"inconsistent point counts across frames: {sorted(counts)}")
    if reference is None:
        reference = mean_reference(sequence)
    rows = [similarity_align(f, reference)[0].points.reshape(-1) for f in sequence]
    return np.vstack(rows)


def load_landmark_csv(path) -> list[LandmarkFrame]:
    """Parse ``frame_id, x1, y1, ..., xK, yK`` rows; a ``frame_id`` header is optional."""
    frames = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if lineno == 1 and row[0].strip().lower() == "frame_id":
                width = len(row)
                continue
            if width is None:
                width = len(row)
            if len(row) != width:
                raise LandmarkFormatError(
                    f"{path}:{lineno}: expected {width} columns, found {len(row)}"
                )
            if width < 5 or width % 2 == 0:
                raise LandmarkFormatError(
                    f"{path}:{lineno}: need frame_id plus x,y pairs for at least 2 points, got {width} columns"
                )
            try:
                frame_id = int(float(row[0]))
                coords = np.array([float(c) for c in row[1:]])
            except ValueError as exc:
                raise LandmarkFormatError(f"{path}:{lineno}: non-numeric cell ({exc})") from None
            if not np.all(np.isfinite(coords)):
                raise LandmarkFormatError(f"{path}:{lineno}: non-finite coordinate")
            frames.append(LandmarkFrame(frame_id, coords.reshape(-1, 2)))
    return frames


def write_landmark_csv(path, frames) -> None:
    frames = list(frames)
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if frames:
            k = len(frames[0])
            header = ["frame_id"] + [f"{a}{i}" for i in range(1, k + 1) for a in "xy"]
            writer.writerow(header)
        for f in frames:
            writer.writerow([f.frame_id] + [repr(float(v)) for v in f.points.reshape(-1)])
