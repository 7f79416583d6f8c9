"""Exact cosine search over unit-normalized vectors."""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from memir.atoms import AtomId


class DenseTable:
    def __init__(self, atom_ids: Sequence[AtomId], vectors: np.ndarray):
        if len(atom_ids) != len(vectors):
            raise ValueError("one vector per atom id")
        order = sorted(range(len(atom_ids)), key=lambda i: atom_ids[i])
        self.atom_ids = [atom_ids[i] for i in order]
        self.vectors = np.asarray(vectors, dtype=np.float64)[order] if len(order) else np.zeros((0, 0))

    def __len__(self) -> int:
        return len(self.atom_ids)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1] if len(self) else 0

    def search(self, query_vec: np.ndarray, k: int) -> list[tuple[AtomId, float]]:
        """Top-k atoms by cosine similarity, ties by ascending atom id.

        Atoms with similarity <= 0 are not returned.
        """
        if not len(self) or not np.any(query_vec):
            return []
        sims = self.vectors @ query_vec
        order = np.argsort(-sims, kind="stable")
        out = []
        for i in order:
            if sims[i] <= 0 or len(out) >= k:
                break
            out.append((self.atom_ids[i], float(sims[i])))
        return out


def save_dense_table(table: DenseTable, path: Union[str, Path]) -> None:
    """Flat records: u16 id length, utf-8 id, u32 dim, float32 LE values."""
    with open(path, "wb") as fh:
        for atom_id, vec in zip(table.atom_ids, table.vectors):
            raw = str(atom_id).encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", len(vec)))
            fh.write(np.asarray(vec, dtype="<f4").tobytes())


def load_dense_table(path: Union[str, Path]) -> DenseTable:
    data = Path(path).read_bytes()
    ids, vecs = [], []
    pos = 0
    while pos < len(data):
        (n,) = struct.unpack_from("<H", data, pos)
        pos += 2
        ids.append(AtomId.parse(data[pos:pos + n].decode("utf-8")))
        pos += n
        (dim,) = struct.unpack_from("<I", data, pos)
        pos += 4
        vecs.append(np.frombuffer(data, dtype="<f4", count=dim, offset=pos).astype(np.float64))
        pos += 4 * dim
    return DenseTable(ids, np.vstack(vecs) if vecs else np.zeros((0, 0)))
