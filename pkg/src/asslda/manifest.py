"""Dataset manifests: UTF-8 CSV with a ``path,label,fold,location`` header.

An optional first line ``# profile: <name>`` records the dataset profile.
Relative paths resolve against the manifest's directory.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

FIELDS = ("path", "label", "fold", "location")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    fold: int
    location: str = ""


@dataclass
class Manifest:
    entries: list[ManifestEntry]
    profile: str = ""
    root: Path | None = None

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.path in seen:
                raise ValueError(f"duplicate manifest path {e.path!r}")
            seen.add(e.path)

    def __len__(self):
        return len(self.entries)

    @property
    def classes(self) -> tuple[str, ...]:
        return tuple(sorted({e.label for e in self.entries}))

    @property
    def folds(self) -> tuple[int, ...]:
        return tuple(sorted({e.fold for e in self.entries}))

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        if not p.is_absolute() and self.root is not None:
            p = self.root / p
        return p

    def subset(self, entries) -> "Manifest":
        return Manifest(list(entries), self.profile, self.root)

    def train_split(self, test_fold: int | None) -> "Manifest":
        if test_fold is None:
            return self
        return self.subset(e for e in self.entries if e.fold != test_fold)

    def test_split(self, test_fold: int | None) -> "Manifest":
        if test_fold is None:
            return self
        return self.subset(e for e in self.entries if e.fold == test_fold)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            if self.profile:
                fh.write(f"# profile: {self.profile}\n")
            w = csv.writer(fh)
            w.writerow(FIELDS)
            for e in self.entries:
                w.writerow([e.path, e.label, e.fold, e.location])

    @classmethod
    def load(cls, path: str | Path) -> "Manifest":
        path = Path(path)
        profile = ""
        with open(path, encoding="utf-8", newline="") as fh:
            lines = fh.read().splitlines()
        if lines and lines[0].startswith("#"):
            head = lines.pop(0).lstrip("#").strip()
            if head.startswith("profile:"):
                profile = head.split(":", 1)[1].strip()
        reader = csv.DictReader(lines)
        missing = {"path", "label", "fold"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: manifest is missing columns {sorted(missing)}")
        entries = [ManifestEntry(r["path"], r["label"], int(r["fold"]), r.get("location") or "")
                   for r in reader]
        return cls(entries, profile, path.parent)


def from_fold_lists(root: str | Path, test_lists: dict[int, str | Path], profile: str = "") -> Manifest:
    """Build a manifest from per-fold evaluation lists (``<relpath>\\t<label>`` lines).

    This matches the DCASE2016 ``evaluation_setup/fold<k>_evaluate.txt``
    layout; every file must appear in exactly one fold's list.
    """
    root = Path(root)
    entries, seen = [], {}
    for fold, list_path in sorted(test_lists.items()):
        with open(list_path, encoding="utf-8") as fh:
            for line in fh:
                parts = line.strip().split("\t")
                if len(parts) < 2:
                    continue
                rel, label = parts[0], parts[1]
                if rel in seen:
                    raise ValueError(f"{rel} appears in folds {seen[rel]} and {fold}")
                seen[rel] = fold
                entries.append(ManifestEntry(rel, label, fold))
    return Manifest(entries, profile, root)


def dcase2016_manifest(root: str | Path) -> Manifest:
    """Manifest for a local copy of the DCASE2016 task 1 development set."""
    root = Path(root)
    setup = root / "evaluation_setup"
    lists = {k: setup / f"fold{k}_evaluate.txt" for k in range(1, 5)}
    for p in lists.values():
        if not p.exists():
            raise FileNotFoundError(p)
    return from_fold_lists(root, lists, profile="dcase")


def from_split(root: str | Path, train: list[tuple[str, str]], test: list[tuple[str, str]],
               profile: str = "litis") -> Manifest:
    """One externally defined train/test split: fold 0 is train, fold 1 is test."""
    entries = [ManifestEntry(p, lab, 0) for p, lab in train]
    entries += [ManifestEntry(p, lab, 1) for p, lab in test]
    return Manifest(entries, profile, Path(root))
