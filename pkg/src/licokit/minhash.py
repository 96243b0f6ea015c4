"""MinHash signatures and banded LSH for corpus-scale near-duplicate search.

Signatures use k = 256 slots: a 64-bit base hash per 5-token shingle run
through 256 multiply-shift hash functions (odd multiplier, 64-bit
wraparound), minimum per slot.  The LSH index groups slots into b = 128
bands of r = 2 rows, which puts the S-curve threshold (1/b)^(1/r) ~ 0.088
well below the 0.2 decision threshold: banding is used for recall only,
and exact shingle-set Jaccard makes the keep/drop decision.

A fixed default seed keeps index builds reproducible; all parameters are
recorded in the index and checked when signatures and indexes meet.
"""

from __future__ import annotations

import hashlib
import pickle
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from licokit.extract import FunctionSnippet
from licokit.lexing import shingles, tokenize_code

NUM_HASHES = 256
NUM_BANDS = 128
ROWS_PER_BAND = 2
DEFAULT_SEED = 917

_UINT64 = np.uint64
_SENTINEL = np.iinfo(np.uint64).max


class SeedMismatchError(ValueError):
    """Signature and index were built with different seeds or parameters."""


@dataclass(frozen=True)
class MinHashSignature:
    values: np.ndarray  # shape (NUM_HASHES,), dtype uint64
    shingle_count: int
    seed: int

    @property
    def is_empty(self) -> bool:
        return self.shingle_count == 0


def _hash_params(seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    # odd multipliers make x -> a*x + b a permutation of Z/2^64
    a = rng.integers(1, 1 << 63, size=NUM_HASHES, dtype=np.uint64) * _UINT64(2) + _UINT64(1)
    b = rng.integers(0, 1 << 63, size=NUM_HASHES, dtype=np.uint64)
    return a, b


_PARAM_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _params_for(seed: int) -> tuple[np.ndarray, np.ndarray]:
    if seed not in _PARAM_CACHE:
        _PARAM_CACHE[seed] = _hash_params(seed)
    return _PARAM_CACHE[seed]


def _base_hash(shingle: tuple[str, ...]) -> int:
    digest = hashlib.blake2b("\x1f".join(shingle).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def shingle_set(tokens: list[str]) -> frozenset[tuple[str, ...]]:
    return frozenset(shingles(tokens))


def minhash_signature(tokens: list[str], seed: int = DEFAULT_SEED) -> MinHashSignature:
    """MinHash signature of a token sequence's 5-gram shingle set.

    An empty shingle set yields a signature of sentinel maxima with
    shingle_count 0; such signatures never enter or match band buckets.
    """
    shingle_tuples = shingles(tokens)
    if not shingle_tuples:
        return MinHashSignature(np.full(NUM_HASHES, _SENTINEL, dtype=np.uint64), 0, seed)
    a, b = _params_for(seed)
    base = np.fromiter(
        (_base_hash(s) for s in shingle_tuples), dtype=np.uint64, count=len(shingle_tuples)
    )
    with np.errstate(over="ignore"):
        table = a[:, None] * base[None, :] + b[:, None]
    return MinHashSignature(table.min(axis=1), len(shingle_tuples), seed)


def estimate_jaccard(a: MinHashSignature, b: MinHashSignature) -> float:
    """Fraction of equal signature slots: an unbiased Jaccard estimate."""
    if a.seed != b.seed:
        raise SeedMismatchError(f"signature seeds differ: {a.seed} != {b.seed}")
    if a.is_empty or b.is_empty:
        return 0.0
    return float(np.count_nonzero(a.values == b.values)) / NUM_HASHES


# ---------------------------------------------------------------------------
# LSH index
# ---------------------------------------------------------------------------

@dataclass
class LshIndex:
    """Banded buckets over signatures: b bands of r rows each."""

    seed: int = DEFAULT_SEED
    num_hashes: int = NUM_HASHES
    num_bands: int = NUM_BANDS
    rows_per_band: int = ROWS_PER_BAND
    bands: list[dict[bytes, set[str]]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.bands:
            self.bands = [{} for _ in range(self.num_bands)]

    def _band_keys(self, signature: MinHashSignature) -> list[bytes]:
        rows = signature.values.reshape(self.num_bands, self.rows_per_band)
        return [rows[i].tobytes() for i in range(self.num_bands)]

    def _check(self, signature: MinHashSignature) -> None:
        if signature.seed != self.seed:
            raise SeedMismatchError(
                f"signature seed {signature.seed} does not match index seed {self.seed}"
            )
        if signature.values.shape[0] != self.num_hashes:
            raise SeedMismatchError(
                f"signature has {signature.values.shape[0]} slots, index expects {self.num_hashes}"
            )

    def insert(self, snippet_id: str, signature: MinHashSignature) -> None:
        self._check(signature)
        if signature.is_empty:
            return
        for band, key in zip(self.bands, self._band_keys(signature)):
            band.setdefault(key, set()).add(snippet_id)

    def query(self, signature: MinHashSignature, exclude: str | None = None) -> set[str]:
        """Union of the signature's band buckets, minus ``exclude``."""
        self._check(signature)
        if signature.is_empty:
            return set()
        candidates: set[str] = set()
        for band, key in zip(self.bands, self._band_keys(signature)):
            bucket = band.get(key)
            if bucket:
                candidates.update(bucket)
        candidates.discard(exclude)
        return candidates

    def save(self, path: str | Path) -> None:
        payload = {
            "format": "licokit-lsh@1",
            "seed": self.seed,
            "num_hashes": self.num_hashes,
            "num_bands": self.num_bands,
            "rows_per_band": self.rows_per_band,
            "bands": self.bands,
        }
        Path(path).write_bytes(pickle.dumps(payload, protocol=pickle.HIGHEST_PROTOCOL))

    @classmethod
    def load(cls, path: str | Path, expect_seed: int | None = None) -> "LshIndex":
        payload = pickle.loads(Path(path).read_bytes())
        if payload.get("format") != "licokit-lsh@1":
            raise ValueError(f"{path}: not an LSH index cache")
        index = cls(
            seed=payload["seed"],
            num_hashes=payload["num_hashes"],
            num_bands=payload["num_bands"],
            rows_per_band=payload["rows_per_band"],
            bands=payload["bands"],
        )
        if expect_seed is not None and index.seed != expect_seed:
            raise SeedMismatchError(
                f"cached index was built with seed {index.seed}, expected {expect_seed}"
            )
        return index


def build_lsh_index(
    signatures: dict[str, MinHashSignature], seed: int | None = None
) -> LshIndex:
    """Index a batch of signatures; insertion order never affects queries."""
    seeds = {sig.seed for sig in signatures.values()}
    if seed is not None:
        seeds.add(seed)
    if len(seeds) > 1:
        raise SeedMismatchError(f"signatures carry mixed seeds: {sorted(seeds)}")
    index = LshIndex(seed=seeds.pop() if seeds else DEFAULT_SEED)
    for snippet_id, signature in signatures.items():
        index.insert(snippet_id, signature)
    return index


def query_candidates(index: LshIndex, signature: MinHashSignature) -> set[str]:
    return index.query(signature)


# ---------------------------------------------------------------------------
# Corpus-level wrapper: LSH for recall, exact Jaccard for the decision
# ---------------------------------------------------------------------------

@dataclass
class CorpusIndex:
    """LSH index plus the exact shingle sets needed for the decision rule."""

    lsh: LshIndex
    shingle_sets: dict[str, frozenset[tuple[str, ...]]]

    @property
    def seed(self) -> int:
        return self.lsh.seed


def index_snippets(snippets: list[FunctionSnippet], seed: int = DEFAULT_SEED) -> CorpusIndex:
    """Build the dedup index over a corpus of snippets (keyed by body tokens)."""
    lsh = LshIndex(seed=seed)
    shingle_sets: dict[str, frozenset[tuple[str, ...]]] = {}
    for snippet in snippets:
        tokens = tokenize_code(snippet.body)
        shingle_sets[snippet.id] = shingle_set(tokens)
        lsh.insert(snippet.id, minhash_signature(tokens, seed))
    return CorpusIndex(lsh, shingle_sets)


def exact_jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 1.0
    union = len(a | b)
    return len(a & b) / union if union else 1.0


def filter_unseen(
    candidates: list[FunctionSnippet],
    index: CorpusIndex,
    jaccard_threshold: float = 0.2,
) -> list[FunctionSnippet]:
    """Keep candidates with no near-match in the indexed corpus.

    A candidate survives iff every LSH candidate pair has exact 5-gram
    Jaccard <= ``jaccard_threshold``.  LSH only proposes pairs; the exact
    check is the decision rule.  No self-exclusion: the index covers a
    different corpus, so an id collision means the candidate is byte-
    identical to an indexed snippet and must be dropped.
    """
    kept: list[FunctionSnippet] = []
    for snippet in candidates:
        tokens = tokenize_code(snippet.body)
        own = shingle_set(tokens)
        if not own:
            kept.append(snippet)
            continue
        signature = minhash_signature(tokens, index.seed)
        near = False
        for other_id in index.lsh.query(signature):
            other = index.shingle_sets.get(other_id)
            if other and exact_jaccard(own, other) > jaccard_threshold:
                near = True
                break
        if not near:
            kept.append(snippet)
    return kept
