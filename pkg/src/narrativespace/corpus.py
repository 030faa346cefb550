"""Load and validate the excerpt corpus, taxonomy, and precomputed sentence embeddings.

File formats (all UTF-8):
  excerpts:  one record per line, ``<class_id><TAB><text>``; the 0-based line
             number is the excerpt index.
  taxonomy:  one record per line, ``<id><TAB><P|H|O|N><TAB><description>``.
  embeddings: first line ``<N> <D>``, then N lines of D space-separated floats.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SUPERCATEGORIES = {
    "P": "ProPaper",
    "H": "ProDryer",
    "O": "Other",
    "N": "Irrelevant",
}
SUPERCATEGORY_ORDER = ("ProPaper", "ProDryer", "Other", "Irrelevant")


class CorpusError(ValueError):
    """Malformed or inconsistent corpus / taxonomy / embedding data."""


@dataclass(frozen=True)
class Excerpt:
    index: int
    text: str
    class_id: int


@dataclass(frozen=True)
class TaxonomyClass:
    id: int
    code: str  # one of P/H/O/N
    description: str

    @property
    def supercategory(self) -> str:
        return SUPERCATEGORIES[self.code]


@dataclass(frozen=True)
class Taxonomy:
    classes: tuple[TaxonomyClass, ...]

    def __post_init__(self):
        seen = set()
        for c in self.classes:
            if c.id in seen:
                raise CorpusError(f"duplicate taxonomy id {c.id}")
            if c.code not in SUPERCATEGORIES:
                raise CorpusError(f"unknown supercategory code {c.code!r} for class {c.id}")
            if not c.description:
                raise CorpusError(f"empty description for class {c.id}")
            seen.add(c.id)

    def __contains__(self, class_id: int) -> bool:
        return any(c.id == class_id for c in self.classes)

    def by_id(self, class_id: int) -> TaxonomyClass:
        for c in self.classes:
            if c.id == class_id:
                return c
        raise KeyError(class_id)

    def supercategory_of(self, class_id: int) -> str:
        return self.by_id(class_id).supercategory

    def ids_in_supercategory(self, supercategory: str) -> list[int]:
        return [c.id for c in self.classes if c.supercategory == supercategory]


@dataclass(frozen=True)
class Corpus:
    excerpts: tuple[Excerpt, ...]
    taxonomy: Taxonomy

    @property
    def n(self) -> int:
        return len(self.excerpts)

    @property
    def labels(self) -> np.ndarray:
        """Class id per excerpt, aligned with excerpt index."""
        return np.array([e.class_id for e in self.excerpts], dtype=np.int64)

    def texts(self) -> list[str]:
        return [e.text for e in self.excerpts]


@dataclass(frozen=True)
class SupercategoryStats:
    examples: int
    avg_length: float
    word_types: int
    ttr: float


@dataclass(frozen=True)
class CorpusStats:
    per_supercategory: dict[str, SupercategoryStats] = field(default_factory=dict)

    @property
    def total_examples(self) -> int:
        return sum(s.examples for s in self.per_supercategory.values())


def load_taxonomy(path: str | Path) -> Taxonomy:
    classes = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t", 2)
            if len(parts) != 3:
                raise CorpusError(f"{path}: malformed taxonomy line {lineno}: expected 3 tab-separated fields")
            try:
                cid = int(parts[0])
            except ValueError:
                raise CorpusError(f"{path}: malformed taxonomy line {lineno}: bad class id {parts[0]!r}") from None
            classes.append(TaxonomyClass(id=cid, code=parts[1], description=parts[2]))
    return Taxonomy(classes=tuple(classes))


def load_corpus(excerpt_path: str | Path, taxonomy_path: str | Path) -> Corpus:
    """Load excerpts and taxonomy; indices are assigned by file order."""
    taxonomy = load_taxonomy(taxonomy_path)
    known = {c.id for c in taxonomy.classes}
    excerpts = []
    with open(excerpt_path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t", 1)
            if len(parts) != 2:
                raise CorpusError(f"{excerpt_path}: malformed excerpt line {lineno}: expected <class_id><TAB><text>")
            try:
                cid = int(parts[0])
            except ValueError:
                raise CorpusError(f"{excerpt_path}: malformed excerpt line {lineno}: bad class id {parts[0]!r}") from None
            if cid not in known:
                raise CorpusError(f"{excerpt_path}: line {lineno}: unknown class_id {cid}")
            excerpts.append(Excerpt(index=len(excerpts), text=parts[1], class_id=cid))
    return Corpus(excerpts=tuple(excerpts), taxonomy=taxonomy)


def save_corpus(corpus: Corpus, excerpt_path: str | Path, taxonomy_path: str | Path) -> None:
    with open(excerpt_path, "w", encoding="utf-8") as fh:
        for e in corpus.excerpts:
            fh.write(f"{e.class_id}\t{e.text}\n")
    with open(taxonomy_path, "w", encoding="utf-8") as fh:
        for c in corpus.taxonomy.classes:
            fh.write(f"{c.id}\t{c.code}\t{c.description}\n")


def load_matrix(path: str | Path) -> np.ndarray:
    """Read a ``<N> <D>`` header plus N rows of D floats; reject non-finite values."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise CorpusError(f"{path}: bad header, expected '<N> <D>'")
        n, d = int(header[0]), int(header[1])
        matrix = np.empty((n, d), dtype=np.float64)
        for i in range(n):
            row = fh.readline().split()
            if len(row) != d:
                raise CorpusError(f"{path}: dimension mismatch at row {i}: expected {d} values, got {len(row)}")
            matrix[i] = [float(v) for v in row]
    bad = np.argwhere(~np.isfinite(matrix))
    if bad.size:
        r, c = bad[0]
        raise CorpusError(f"{path}: non-finite value at ({r}, {c})")
    return matrix


def load_embeddings(path: str | Path, corpus: Corpus) -> np.ndarray:
    """Load the N x D embedding matrix; row i is aligned with excerpt index i."""
    matrix = load_matrix(path)
    if matrix.shape[0] != corpus.n:
        raise CorpusError(
            f"{path}: row-count mismatch: file declares {matrix.shape[0]} rows, corpus has {corpus.n} excerpts"
        )
    return matrix


def save_embeddings(matrix: np.ndarray, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for row in matrix:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip leading/trailing punctuation."""
    tokens = []
    for raw in text.lower().split():
        tok = _strip_punct(raw)
        if tok:
            tokens.append(tok)
    return tokens


def _strip_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Per-supercategory example counts, mean token length, word types, and TTR."""
    buckets: dict[str, list[list[str]]] = {s: [] for s in SUPERCATEGORY_ORDER}
    for e in corpus.excerpts:
        buckets[corpus.taxonomy.supercategory_of(e.class_id)].append(tokenize(e.text))
    per = {}
    for name in SUPERCATEGORY_ORDER:
        docs = buckets[name]
        total_tokens = sum(len(d) for d in docs)
        types = len({t for d in docs for t in d})
        per[name] = SupercategoryStats(
            examples=len(docs),
            avg_length=(total_tokens / len(docs)) if docs else 0.0,
            word_types=types,
            ttr=(types / total_tokens) if total_tokens else 0.0,
        )
    return CorpusStats(per_supercategory=per)
