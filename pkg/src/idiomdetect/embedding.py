"""Embedding providers: the sentence-encoding function behind both classifiers.

Two interchangeable providers exist. :class:`TableProvider` serves vectors
exported by an external encoder from a text table file; :class:`HashedNgramEncoder`
is a deterministic, dependency-free character n-gram encoder used for offline
tests and desk-scale runs. Both expose ``dim`` and ``embed(sample)``.

Table file format (bit-exact contract with the exporter):
    line 1: ``#dim<TAB>d``
    line 2: ``#meta<TAB><canonical json>``
    data:   ``split<TAB>id<TAB>v1<TAB>...<TAB>vd``
with each value printed as the shortest decimal that round-trips as a 32-bit
float, and the meta json serialized with sorted keys and no spaces.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .corpus import Sample
from .errors import EmbeddingLookupError, FormatError

CONTEXT_MODES = ("target-only", "with-context")


class EmbeddingProvider(Protocol):
    """Any pure map from a sample to a fixed-dimension real vector."""

    @property
    def dim(self) -> int: ...

    def embed(self, sample: Sample) -> np.ndarray: ...


def compose_text(sample: Sample, context: str = "target-only") -> str:
    """Return the text a provider encodes: the target sentence, optionally
    with the surrounding context sentences joined by single spaces."""
    if context == "target-only":
        return sample.target
    if context == "with-context":
        return " ".join(p for p in (sample.prev_ctx, sample.target, sample.next_ctx) if p)
    raise ValueError(f"unknown context mode {context!r}; expected one of {CONTEXT_MODES}")


def format_value(v: float) -> str:
    """Shortest decimal that parses back to the same 32-bit float."""
    return str(np.float32(v))


@dataclass
class EmbeddingTable:
    """Immutable-after-load map from (split, sample id) to a float32 vector."""

    dim: int
    entries: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def add(self, split: str, sample_id: str, vector: np.ndarray) -> None:
        key = (split, sample_id)
        if key in self.entries:
            raise FormatError(f"duplicate embedding key {key}")
        vector = np.asarray(vector, dtype=np.float32)
        if vector.shape != (self.dim,):
            raise FormatError(
                f"embedding for {key} has length {vector.shape[0] if vector.ndim == 1 else vector.shape}, "
                f"expected {self.dim}"
            )
        if not np.all(np.isfinite(vector)):
            raise FormatError(f"embedding for {key} contains non-finite values")
        self.entries[key] = vector


def load_table(path: str | Path) -> EmbeddingTable:
    """Parse an embedding table file.

    Raises:
        FormatError: missing/garbled header, a row whose value count differs
            from the declared dimension (named by id), or a duplicate key.
    """
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"embedding table not found: {path}")
    lines = path.read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 2:
        raise FormatError(f"{path}: expected '#dim' and '#meta' header lines")

    dim_fields = lines[0].split("\t")
    if len(dim_fields) != 2 or dim_fields[0] != "#dim":
        raise FormatError(f"{path}: first line must be '#dim<TAB>d'")
    try:
        dim = int(dim_fields[1])
    except ValueError:
        raise FormatError(f"{path}: dimension {dim_fields[1]!r} is not an integer") from None
    if dim < 1:
        raise FormatError(f"{path}: dimension must be positive, got {dim}")

    meta_fields = lines[1].split("\t", 1)
    if len(meta_fields) != 2 or meta_fields[0] != "#meta":
        raise FormatError(f"{path}: second line must be '#meta<TAB><json>'")
    try:
        meta = json.loads(meta_fields[1])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: metadata is not valid json: {exc}") from None

    table = EmbeddingTable(dim=dim, meta=meta)
    for lineno, line in enumerate(lines[2:], start=3):
        fields = line.split("\t")
        if len(fields) != 2 + dim:
            row_id = fields[1] if len(fields) > 1 else f"line {lineno}"
            raise FormatError(
                f"{path}: row {row_id!r} has {len(fields) - 2} values, expected {dim}"
            )
        split, sample_id = fields[0], fields[1]
        try:
            vector = np.array([np.float32(v) for v in fields[2:]], dtype=np.float32)
        except ValueError:
            raise FormatError(f"{path}: row {sample_id!r} has a non-numeric value") from None
        table.add(split, sample_id, vector)
    return table


def write_table(table: EmbeddingTable, path: str | Path) -> None:
    """Serialize a table in the bit-exact format; load/write round-trips."""
    lines = [f"#dim\t{table.dim}"]
    lines.append("#meta\t" + json.dumps(table.meta, sort_keys=True, separators=(",", ":")))
    for (split, sample_id), vector in table.entries.items():
        lines.append(
            "\t".join([split, sample_id] + [format_value(v) for v in vector])
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


class TableProvider:
    """Embedding provider backed by a loaded :class:`EmbeddingTable`."""

    def __init__(self, table: EmbeddingTable):
        self.table = table

    @property
    def dim(self) -> int:
        return self.table.dim

    def embed(self, sample: Sample) -> np.ndarray:
        key = (str(sample.split), sample.id)
        vector = self.table.entries.get(key)
        if vector is None:
            raise EmbeddingLookupError(split=key[0], sample_id=key[1])
        return vector.astype(np.float64)


class HashedNgramEncoder(BaseEstimator, TransformerMixin):
    """Signed hashed character n-gram sentence encoder.

    Character n-grams of the configured sizes are hashed with a seedable,
    platform-stable 64-bit hash (blake2b keyed by the seed); each n-gram
    adds +/-1 (the hash's top bit picks the sign) to bucket ``hash mod dim``.
    With ``normalize`` the non-zero result is scaled to unit Euclidean norm.

    The encoder is stateless: ``fit`` is a no-op kept for pipeline
    compatibility, and ``transform`` maps a list of strings to a matrix.
    """

    def __init__(
        self,
        dim: int = 256,
        ngram_sizes: tuple[int, ...] = (3, 4),
        seed: int = 0,
        normalize: bool = True,
        context: str = "target-only",
    ):
        self.dim = dim
        self.ngram_sizes = ngram_sizes
        self.seed = seed
        self.normalize = normalize
        self.context = context

    def _validate(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if not self.ngram_sizes or any(n < 1 for n in self.ngram_sizes):
            raise ValueError(f"ngram_sizes must be non-empty with sizes >= 1, got {self.ngram_sizes}")
        if self.context not in CONTEXT_MODES:
            raise ValueError(f"context must be one of {CONTEXT_MODES}, got {self.context!r}")

    def fit(self, X=None, y=None):
        self._validate()
        return self

    def encode(self, text: str) -> np.ndarray:
        """Encode one string to a float64 vector of length ``dim``."""
        self._validate()
        key = (self.seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
        vector = np.zeros(self.dim, dtype=np.float64)
        for n in sorted(set(self.ngram_sizes)):
            for i in range(len(text) - n + 1):
                ngram = text[i : i + n].encode("utf-8")
                digest = hashlib.blake2b(ngram, digest_size=8, key=key).digest()
                h = int.from_bytes(digest, "big")
                sign = 1.0 if (h >> 63) & 1 else -1.0
                vector[h % self.dim] += sign
        if self.normalize:
            norm = float(np.linalg.norm(vector))
            if norm > 0.0:
                vector /= norm
        return vector

    def transform(self, X: Iterable[str]) -> np.ndarray:
        return np.stack([self.encode(text) for text in X])

    def embed(self, sample: Sample) -> np.ndarray:
        """Provider face: encode the sample's configured text fields only."""
        return self.encode(compose_text(sample, self.context))


def embed_corpus(samples: Iterable[Sample], provider: EmbeddingProvider) -> np.ndarray:
    """Stack provider embeddings for an ordered sample collection."""
    return np.stack([provider.embed(s) for s in samples])
