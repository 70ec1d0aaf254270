"""
Snapshot Repository
Publishes ranked snapshots atomically (write temp, fsync, rename, then
rewrite the manifest) and loads whatever the manifest names
"""
import os
import re
from pathlib import Path
from typing import List, Optional, Union

import orjson
from loguru import logger
from pydantic import ValidationError

from search_assist.api.schemas.suggest import Manifest, ProfileName, Snapshot, SnapshotEntry
from search_assist.exceptions import SnapshotLoadError, SnapshotWriteError


_SNAPSHOT_NAME = re.compile(r"^snapshot-(\d+)\.(Realtime|Background)\.jsonl$")


def manifest_name(profile: ProfileName) -> str:
    return f"MANIFEST.{profile.value}"


def _write_atomic(path: Path, payload: bytes) -> None:
    tmp = path.with_name(f".{path.name}.tmp")
    try:
        with open(tmp, "wb") as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


class SnapshotRepository:
    """
    Snapshot directory for one or both profiles

    Single writer per directory; any number of readers. A manifest only ever
    names a file that was completely written before the manifest was renamed
    into place.
    """

    def __init__(self, directory: Union[str, Path], retain_n: int = 12):
        self.directory = Path(directory)
        self.retain_n = retain_n

    def snapshot_files(self, profile: ProfileName) -> List[Path]:
        """Published snapshot files of a profile, oldest generation first"""
        if not self.directory.is_dir():
            return []
        found = []
        for path in self.directory.iterdir():
            match = _SNAPSHOT_NAME.match(path.name)
            if match and match.group(2) == profile.value:
                found.append((int(match.group(1)), path))
        return [path for _, path in sorted(found)]

    def write(self, snapshot: Snapshot) -> Path:
        """
        Publish a snapshot and return the manifest path

        Raises:
            SnapshotWriteError: the previous manifest is left intact
        """
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
            lines = [
                orjson.dumps(snapshot.entries[query].to_record())
                for query in sorted(snapshot.entries)
            ]
            payload = b"\n".join(lines) + (b"\n" if lines else b"")
            _write_atomic(self.directory / snapshot.file_name, payload)

            manifest = Manifest(
                file=snapshot.file_name,
                generation_id=snapshot.generation_id,
                event_ts=snapshot.event_ts,
            )
            manifest_path = self.directory / manifest_name(snapshot.profile)
            _write_atomic(manifest_path, orjson.dumps(manifest.model_dump()) + b"\n")
        except OSError as e:
            logger.error(f"Snapshot {snapshot.generation_id} ({snapshot.profile.value}) not published: {e}")
            raise SnapshotWriteError(str(e)) from e

        self._apply_retention(snapshot.profile, keep=snapshot.file_name)
        logger.info(
            f"Published {snapshot.profile.value} snapshot {snapshot.generation_id} "
            f"({len(snapshot.entries)} entries, event_ts={snapshot.event_ts})"
        )
        return manifest_path

    def _apply_retention(self, profile: ProfileName, keep: str) -> None:
        files = self.snapshot_files(profile)
        for path in files[:max(0, len(files) - self.retain_n)]:
            if path.name == keep:
                continue
            try:
                path.unlink()
                logger.debug(f"Retention removed {path.name}")
            except OSError as e:
                logger.warning(f"Could not remove old snapshot {path.name}: {e}")

    def read_manifest(self, profile: ProfileName) -> Optional[Manifest]:
        """
        Current manifest of a profile, None when nothing was published yet

        Raises:
            SnapshotLoadError: if the manifest exists but cannot be parsed
        """
        path = self.directory / manifest_name(profile)
        try:
            raw = path.read_bytes()
        except FileNotFoundError:
            return None
        try:
            return Manifest.model_validate(orjson.loads(raw))
        except (orjson.JSONDecodeError, ValidationError) as e:
            raise SnapshotLoadError(f"{path.name}: {e}") from e

    def load(self, manifest: Manifest, profile: ProfileName) -> Snapshot:
        """
        Load and validate the snapshot a manifest names

        Raises:
            SnapshotLoadError: on IO errors or any malformed record
        """
        match = _SNAPSHOT_NAME.match(manifest.file)
        if not match or int(match.group(1)) != manifest.generation_id or match.group(2) != profile.value:
            raise SnapshotLoadError(f"manifest names unexpected file {manifest.file!r}")
        path = self.directory / manifest.file
        try:
            raw = path.read_bytes()
        except OSError as e:
            raise SnapshotLoadError(f"{manifest.file}: {e}") from e

        entries = {}
        for line_no, line in enumerate(raw.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                entry = SnapshotEntry.from_record(orjson.loads(line))
            except (orjson.JSONDecodeError, ValidationError, KeyError, TypeError) as e:
                raise SnapshotLoadError(f"{manifest.file} line {line_no}: {e}") from e
            entries[entry.query] = entry

        return Snapshot(
            generation_id=manifest.generation_id,
            event_ts=manifest.event_ts,
            profile=profile,
            entries=entries,
        )

    def load_latest(self, profile: ProfileName) -> Optional[Snapshot]:
        manifest = self.read_manifest(profile)
        return None if manifest is None else self.load(manifest, profile)

    def latest_generation(self, profile: ProfileName) -> int:
        """Highest generation published for a profile (manifest or files), 0 if none"""
        generations = [int(_SNAPSHOT_NAME.match(p.name).group(1)) for p in self.snapshot_files(profile)]
        try:
            manifest = self.read_manifest(profile)
        except SnapshotLoadError:
            manifest = None
        if manifest is not None:
            generations.append(manifest.generation_id)
        return max(generations, default=0)
