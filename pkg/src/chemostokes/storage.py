"""On-disk formats: binary field snapshots and the records CSV.

Snapshot files hold one or more blocks, each a text header line
``CHEMOSTOKES-FIELD v1 <name> <nx> <ny> <t>`` followed by ``nx*ny``
little-endian float64 values in row-major order (y outer, x inner).  Velocity
files hold the ``ux`` block, shape ``(ny, nx+1)``, then the ``uy`` block,
shape ``(ny+1, nx)``.

Every file is first written under a ``.partial`` name and renamed when
complete, so a reader never sees a half-written file under its final name.
"""

from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from .diagnostics import FunctionalRecord
from .errors import ContractError, SnapshotFormatError
from .timestepper import Snapshot

MAGIC = "CHEMOSTOKES-FIELD"
VERSION = "v1"
PARTIAL = ".partial"
RECORDS_CSV = "records.csv"
SNAPSHOT_DIR = "snapshots"
_LE = np.dtype("<f8")


def fmt(x: float) -> str:
    return "%.17g" % x


def encode_block(name: str, array: np.ndarray, t: float) -> bytes:
    ny, nx = array.shape
    header = f"{MAGIC} {VERSION} {name} {nx} {ny} {fmt(t)}\n".encode("ascii")
    return header + np.ascontiguousarray(array, dtype=_LE).tobytes()


def decode_blocks(data: bytes, source: str = "<bytes>") -> list[tuple[str, float, np.ndarray]]:
    blocks = []
    pos = 0
    while pos < len(data):
        end = data.find(b"\n", pos)
        if end < 0:
            raise SnapshotFormatError(f"{source}: truncated header at byte {pos}")
        try:
            parts = data[pos:end].decode("ascii").split(" ")
        except UnicodeDecodeError:
            raise SnapshotFormatError(f"{source}: header is not ASCII") from None
        if len(parts) != 6 or parts[0] != MAGIC:
            raise SnapshotFormatError(f"{source}: not a {MAGIC} block")
        if parts[1] != VERSION:
            raise SnapshotFormatError(f"{source}: unsupported format version {parts[1]!r}")
        name = parts[2]
        try:
            nx, ny, t = int(parts[3]), int(parts[4]), float(parts[5])
        except ValueError:
            raise SnapshotFormatError(f"{source}: malformed header fields") from None
        nbytes = nx * ny * 8
        start = end + 1
        if nx <= 0 or ny <= 0 or start + nbytes > len(data):
            raise SnapshotFormatError(f"{source}: block {name!r} is truncated")
        arr = np.frombuffer(data, dtype=_LE, count=nx * ny, offset=start).reshape(ny, nx)
        blocks.append((name, t, arr.astype(float)))
        pos = start + nbytes
    return blocks


def atomic_write(path: Path, payload: bytes | str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + PARTIAL)
    mode = "wb" if isinstance(payload, bytes) else "w"
    with open(tmp, mode) as fh:
        fh.write(payload)
    os.replace(tmp, path)


def write_field(path, name: str, array: np.ndarray, t: float) -> None:
    atomic_write(Path(path), encode_block(name, array, t))


def read_field(path) -> tuple[str, float, np.ndarray]:
    blocks = read_blocks(path)
    if len(blocks) != 1:
        raise SnapshotFormatError(f"{path}: expected one block, found {len(blocks)}")
    return blocks[0]


def read_blocks(path) -> list[tuple[str, float, np.ndarray]]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise SnapshotFormatError(f"cannot read snapshot {path}: {exc}") from None
    return decode_blocks(data, str(path))


def snapshot_paths(directory: Path, index: int) -> dict[str, Path]:
    d = Path(directory) / SNAPSHOT_DIR
    return {k: d / f"{k}_{index:06d}.bin" for k in ("n", "c", "u")}


def write_snapshot(directory, index: int, snap: Snapshot) -> None:
    paths = snapshot_paths(directory, index)
    paths["n"].parent.mkdir(parents=True, exist_ok=True)
    write_field(paths["n"], "n", snap.n, snap.t)
    write_field(paths["c"], "c", snap.c, snap.t)
    atomic_write(paths["u"], encode_block("ux", snap.ux, snap.t) + encode_block("uy", snap.uy, snap.t))


def read_snapshot(directory, index: int) -> Snapshot:
    paths = snapshot_paths(directory, index)
    name, t, n = read_field(paths["n"])
    name_c, tc, c = read_field(paths["c"])
    ublocks = read_blocks(paths["u"])
    if name != "n" or name_c != "c" or [b[0] for b in ublocks] != ["ux", "uy"]:
        raise SnapshotFormatError(f"snapshot {index} in {directory} has unexpected block names")
    if len({t, tc, ublocks[0][1], ublocks[1][1]}) != 1:
        raise SnapshotFormatError(f"snapshot {index} in {directory} mixes sample times")
    return Snapshot(t, n, c, ublocks[0][2], ublocks[1][2])


def read_trajectory(directory) -> list[Snapshot]:
    d = Path(directory) / SNAPSHOT_DIR
    if not d.is_dir():
        raise SnapshotFormatError(f"{directory} has no {SNAPSHOT_DIR}/ directory")
    indices = sorted(int(p.stem.split("_")[1]) for p in d.glob("n_*.bin"))
    if indices != list(range(len(indices))):
        raise SnapshotFormatError(f"{d}: snapshot indices are not contiguous")
    return [read_snapshot(directory, i) for i in indices]


def records_to_csv(records) -> str:
    names = FunctionalRecord.field_names()
    lines = [",".join(names)]
    for r in records:
        lines.append(",".join(fmt(getattr(r, k)) for k in names))
    return "\n".join(lines) + "\n"


def read_records(path) -> list[FunctionalRecord]:
    path = Path(path)
    names = FunctionalRecord.field_names()
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise SnapshotFormatError(f"cannot read records {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != names:
            raise ContractError(f"{path}: records header does not match the record fields")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(names):
                raise ContractError(f"{path}:{lineno}: expected {len(names)} columns")
            out.append(FunctionalRecord(**{k: float(v) for k, v in zip(names, row)}))
    return out


class DirectorySink:
    """Streams records to ``records.csv.partial`` and snapshots to ``snapshots/``.

    ``finalize`` renames the records file into place; until then the run
    directory holds no records file that a checker would accept.
    """

    def __init__(self, directory, keep_in_memory: bool = True):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.records = []
        self.snapshots = []
        self.keep = keep_in_memory
        self._n_snap = 0
        self._fh = open(self.directory / (RECORDS_CSV + PARTIAL), "w", newline="")
        self._fh.write(",".join(FunctionalRecord.field_names()) + "\n")

    def record(self, rec: FunctionalRecord) -> None:
        self._fh.write(",".join(fmt(v) for v in rec.as_dict().values()) + "\n")
        self.records.append(rec)

    def snapshot(self, state) -> None:
        snap = Snapshot.of(state)
        write_snapshot(self.directory, self._n_snap, snap)
        self._n_snap += 1
        if self.keep:
            self.snapshots.append(snap)

    def finalize(self) -> None:
        self._fh.close()
        os.replace(self.directory / (RECORDS_CSV + PARTIAL), self.directory / RECORDS_CSV)

    def abort(self) -> None:
        if not self._fh.closed:
            self._fh.close()
