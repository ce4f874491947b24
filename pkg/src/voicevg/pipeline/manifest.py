"""Dataset manifest: subjects, their labels, splits and input files.

::

    {"subjects": [
        {"subject_id": "s001", "label": 1, "split": "train",
         "clips": ["wav/s001_0.wav", "wav/s001_1.wav"],
         "egemaps_csv": "egemaps/s001.csv",
         "text_scores_csv": "text/s001.csv"}
    ]}

Relative paths resolve against the manifest's directory.  A clip's id is its
file stem and must be unique across the manifest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import ManifestInvalid

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class Subject:
    subject_id: str
    label: int | None
    split: str
    clips: tuple[Path, ...]
    egemaps_csv: Path | None = None
    text_scores_csv: Path | None = None

    @property
    def clip_ids(self) -> tuple[str, ...]:
        return tuple(p.stem for p in self.clips)


@dataclass(frozen=True)
class Manifest:
    subjects: tuple[Subject, ...]
    root: Path

    def by_id(self) -> dict[str, Subject]:
        return {s.subject_id: s for s in self.subjects}

    def in_split(self, split: str) -> list[Subject]:
        return [s for s in self.subjects if s.split == split]

    def clip_owner(self) -> dict[str, Subject]:
        return {cid: s for s in self.subjects for cid in s.clip_ids}


def _resolve(root: Path, value, what: str, sid: str) -> Path:
    if not isinstance(value, str) or not value:
        raise ManifestInvalid(f"subject {sid!r}: {what} must be a non-empty path string")
    p = Path(value)
    p = p if p.is_absolute() else root / p
    if not p.is_file():
        raise ManifestInvalid(f"subject {sid!r}: {what} {str(p)!r} does not exist")
    return p


def parse_manifest(payload: dict, root: Path) -> Manifest:
    if not isinstance(payload, dict) or not isinstance(payload.get("subjects"), list):
        raise ManifestInvalid("manifest must be an object with a 'subjects' list")
    seen_subjects: set[str] = set()
    seen_clips: dict[str, str] = {}
    subjects = []
    for entry in payload["subjects"]:
        if not isinstance(entry, dict):
            raise ManifestInvalid("each subject must be an object")
        sid = entry.get("subject_id")
        if not isinstance(sid, str) or not sid:
            raise ManifestInvalid("subject_id must be a non-empty string")
        if sid in seen_subjects:
            raise ManifestInvalid(f"duplicate subject_id {sid!r}")
        seen_subjects.add(sid)
        split = entry.get("split")
        if split not in SPLITS:
            raise ManifestInvalid(f"subject {sid!r}: split must be one of {SPLITS}, got {split!r}")
        label = entry.get("label")
        if label is not None and label not in (0, 1):
            raise ManifestInvalid(f"subject {sid!r}: label must be 0, 1 or null, got {label!r}")
        clips = entry.get("clips", [])
        if not isinstance(clips, list):
            raise ManifestInvalid(f"subject {sid!r}: clips must be a list")
        paths = tuple(_resolve(root, c, "clip", sid) for c in clips)
        for p in paths:
            if p.stem in seen_clips:
                raise ManifestInvalid(
                    f"clip id {p.stem!r} used by subjects {seen_clips[p.stem]!r} and {sid!r}")
            seen_clips[p.stem] = sid
        ege = entry.get("egemaps_csv")
        txt = entry.get("text_scores_csv")
        subjects.append(Subject(
            subject_id=sid,
            label=label,
            split=split,
            clips=paths,
            egemaps_csv=_resolve(root, ege, "egemaps_csv", sid) if ege is not None else None,
            text_scores_csv=_resolve(root, txt, "text_scores_csv", sid) if txt is not None else None,
        ))
    return Manifest(tuple(subjects), root)


def load_manifest(path) -> Manifest:
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ManifestInvalid(f"manifest {str(path)!r} not found") from exc
    except json.JSONDecodeError as exc:
        raise ManifestInvalid(f"manifest {str(path)!r} is not valid JSON: {exc}") from exc
    return parse_manifest(payload, path.resolve().parent)
