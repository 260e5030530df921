"""Transaction data model, tokenization and JSONL stream ingestion."""

from __future__ import annotations

import json
import string
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

SECONDS_PER_DAY = 86400.0
MIN_TOKEN_LENGTH = 2

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


class StreamError(ValueError):
    """Raised for malformed or inconsistent event data."""


@dataclass(frozen=True)
class Transaction:
    time: float
    anon_id: str
    vendor_id: int
    content: Mapping[int, int] = field(default_factory=dict)
    truth_label: int | None = None

    def __post_init__(self):
        if not self.time >= 0:
            raise StreamError(f"transaction time must be >= 0, got {self.time}")
        if self.vendor_id < 0:
            raise StreamError(f"negative vendor id {self.vendor_id}")
        for w, c in self.content.items():
            if c < 1:
                raise StreamError(f"word {w} has non-positive count {c}")

    @property
    def num_tokens(self) -> int:
        return sum(self.content.values())


class Vocabulary:
    """Bijective word <-> index map with document frequencies."""

    def __init__(self, words: Iterable[str] = ()):
        self._index: dict[str, int] = {}
        self._words: list[str] = []
        self.doc_freq: list[int] = []
        for w in words:
            self.add(w)

    def add(self, word: str) -> int:
        idx = self._index.get(word)
        if idx is None:
            idx = len(self._words)
            self._index[word] = idx
            self._words.append(word)
            self.doc_freq.append(0)
        return idx

    def index(self, word: str) -> int:
        return self._index[word]

    def word(self, idx: int) -> str:
        return self._words[idx]

    @property
    def words(self) -> list[str]:
        return list(self._words)

    def __contains__(self, word) -> bool:
        return word in self._index

    def __len__(self) -> int:
        return len(self._words)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Vocabulary) and self._words == other._words
                and self.doc_freq == other.doc_freq)


class VendorCatalog:
    """Bijective vendor name <-> index map."""

    def __init__(self, names: Iterable[str] = ()):
        self._index: dict[str, int] = {}
        self._names: list[str] = []
        for n in names:
            self.add(n)

    def add(self, name: str) -> int:
        idx = self._index.get(name)
        if idx is None:
            idx = len(self._names)
            self._index[name] = idx
            self._names.append(name)
        return idx

    def index(self, name: str) -> int:
        return self._index[name]

    def name(self, idx: int) -> str:
        return self._names[idx]

    @property
    def names(self) -> list[str]:
        return list(self._names)

    def __len__(self) -> int:
        return len(self._names)

    def __eq__(self, other) -> bool:
        return isinstance(other, VendorCatalog) and self._names == other._names


@dataclass(frozen=True)
class EventStream:
    """A time-ordered sequence of transactions under one anonymized ID.

    ``horizon`` is the end of the observation window in days.  The stream
    carries the vocabulary and vendor catalog its indices refer to.
    """

    transactions: tuple[Transaction, ...]
    origin: datetime
    horizon: float
    vocabulary: Vocabulary = field(default_factory=Vocabulary, compare=True)
    vendors: VendorCatalog = field(default_factory=VendorCatalog, compare=True)

    def __post_init__(self):
        prev = 0.0
        for i, tx in enumerate(self.transactions):
            if tx.time < prev:
                raise StreamError(f"transaction {i} at {tx.time} precedes {prev}")
            if tx.time > self.horizon:
                raise StreamError(f"transaction {i} at {tx.time} is past horizon {self.horizon}")
            if tx.vendor_id >= len(self.vendors):
                raise StreamError(f"transaction {i} vendor {tx.vendor_id} not in catalog")
            for w in tx.content:
                if not 0 <= w < len(self.vocabulary):
                    raise StreamError(f"transaction {i} word {w} not in vocabulary")
            prev = tx.time

    def __len__(self) -> int:
        return len(self.transactions)

    def __iter__(self):
        return iter(self.transactions)

    def __getitem__(self, i):
        return self.transactions[i]

    @property
    def times(self) -> list[float]:
        return [tx.time for tx in self.transactions]

    @property
    def truth_labels(self) -> list[int] | None:
        labels = [tx.truth_label for tx in self.transactions]
        if any(lab is None for lab in labels):
            return None
        return labels

    def documents(self) -> list[list[str]]:
        """Token lists per transaction (bag expanded in word-index order)."""
        docs = []
        for tx in self.transactions:
            doc = []
            for w in sorted(tx.content):
                doc.extend([self.vocabulary.word(w)] * tx.content[w])
            docs.append(doc)
        return docs


def tokenize(title: str, comment: str, stopwords: frozenset[str] = frozenset()) -> dict[str, int]:
    """Bag of words over title and comment.

    Lowercases, deletes ASCII punctuation, splits on whitespace and drops
    tokens shorter than two characters.

    >>> tokenize("LSD 100ug", "great product great")
    {'lsd': 1, '100ug': 1, 'great': 2, 'product': 1}
    """
    text = f"{title or ''} {comment or ''}".lower().translate(_PUNCT_TABLE)
    counts = Counter(tok for tok in text.split()
                     if len(tok) >= MIN_TOKEN_LENGTH and tok not in stopwords)
    return dict(counts)


def parse_timestamp(value) -> datetime:
    if not isinstance(value, str):
        raise StreamError(f"timestamp must be an ISO-8601 string, got {value!r}")
    text = value.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(text)
    except ValueError as exc:
        raise StreamError(f"unparsable timestamp {value!r}") from exc
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat(timespec="microseconds")


def days_between(origin: datetime, ts: datetime) -> float:
    return (ts - origin) / timedelta(days=1)


def load_stopwords(path: str | Path) -> frozenset[str]:
    words = Path(path).read_text(encoding="utf-8").split()
    return frozenset(w.lower() for w in words)


_REQUIRED = ("ts", "anon_id", "vendor")


def ingest_stream(path: str | Path, origin: datetime | str | None = None,
                  stopwords: frozenset[str] = frozenset()
                  ) -> tuple[EventStream, Vocabulary, VendorCatalog]:
    """Read a JSONL transaction file into an :class:`EventStream`.

    ``origin`` is either None (t=0 at the first event) or an explicit
    datetime.  Records are stably sorted by timestamp; vocabulary and
    vendor indices follow first appearance in that order.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"stream file not found: {path}")
    records = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StreamError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise StreamError(f"{path}:{lineno}: expected a JSON object")
            missing = [k for k in _REQUIRED if k not in obj]
            if missing:
                raise StreamError(f"{path}:{lineno}: missing field(s) {', '.join(missing)}")
            try:
                ts = parse_timestamp(obj["ts"])
            except StreamError as exc:
                raise StreamError(f"{path}:{lineno}: {exc}") from exc
            truth = obj.get("truth")
            if truth is not None and (not isinstance(truth, int) or isinstance(truth, bool)):
                raise StreamError(f"{path}:{lineno}: truth must be an integer")
            records.append((ts, obj, lineno))

    records.sort(key=lambda r: r[0])
    if isinstance(origin, str):
        origin = parse_timestamp(origin)
    if origin is None:
        if not records:
            raise StreamError(f"{path}: empty stream needs an explicit origin")
        origin = records[0][0]

    vocab = Vocabulary()
    vendors = VendorCatalog()
    txs = []
    for ts, obj, lineno in records:
        t = days_between(origin, ts)
        if t < 0:
            raise StreamError(f"{path}:{lineno}: timestamp precedes origin")
        bag = tokenize(obj.get("title", ""), obj.get("comment", ""), stopwords)
        content = {}
        for word, count in bag.items():
            idx = vocab.add(word)
            vocab.doc_freq[idx] += 1
            content[idx] = count
        txs.append(Transaction(time=t, anon_id=str(obj["anon_id"]),
                               vendor_id=vendors.add(str(obj["vendor"])),
                               content=content, truth_label=obj.get("truth")))
    horizon = txs[-1].time if txs else 0.0
    stream = EventStream(tuple(txs), origin, horizon, vocab, vendors)
    return stream, vocab, vendors


def stream_records(stream: EventStream) -> list[dict]:
    """Serializable records in the ingestion schema plus ``t_days``."""
    out = []
    for tx in stream:
        words = []
        for w in sorted(tx.content):
            words.extend([stream.vocabulary.word(w)] * tx.content[w])
        rec = {
            "ts": format_timestamp(stream.origin + timedelta(days=tx.time)),
            "t_days": tx.time,
            "anon_id": tx.anon_id,
            "vendor": stream.vendors.name(tx.vendor_id),
            "title": "",
            "comment": " ".join(words),
        }
        if tx.truth_label is not None:
            rec["truth"] = tx.truth_label
        out.append(rec)
    return out


def write_stream(stream: EventStream, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in stream_records(stream):
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def build_stream(rows: Sequence[tuple[float, str, str, Mapping[str, int], int | None]],
                 origin: datetime, horizon: float | None = None) -> EventStream:
    """Assemble a stream from (time, anon_id, vendor, word-counts, truth) rows.

    Rows are stably sorted by time; catalogs are built in first-appearance
    order, matching :func:`ingest_stream`.
    """
    rows = sorted(rows, key=lambda r: r[0])
    vocab = Vocabulary()
    vendors = VendorCatalog()
    txs = []
    for t, anon, vendor, bag, truth in rows:
        content = {}
        for word, count in bag.items():
            idx = vocab.add(word)
            vocab.doc_freq[idx] += 1
            content[idx] = int(count)
        txs.append(Transaction(float(t), anon, vendors.add(vendor), content, truth))
    if horizon is None:
        horizon = txs[-1].time if txs else 0.0
    return EventStream(tuple(txs), origin, horizon, vocab, vendors)


def mix_ground_truth(streams: Sequence[EventStream]) -> EventStream:
    """Merge several streams into one, labelling each event by its source.

    Events are placed on a common clock anchored at the earliest origin and
    stably sorted by time; ties keep the order of ``streams``.
    """
    if not streams:
        raise StreamError("mix_ground_truth needs at least one stream")
    origin = min(s.origin for s in streams)
    rows = []
    horizon = 0.0
    for label, s in enumerate(streams):
        shift = days_between(origin, s.origin)
        horizon = max(horizon, s.horizon + shift)
        for tx in s:
            bag = {s.vocabulary.word(w): c for w, c in tx.content.items()}
            rows.append((tx.time + shift, tx.anon_id, s.vendors.name(tx.vendor_id), bag, label))
    return build_stream(rows, origin, horizon)


def with_labels(stream: EventStream, labels: Sequence[int] | None) -> EventStream:
    """Copy of ``stream`` with truth labels replaced (None clears them)."""
    if labels is None:
        labels = [None] * len(stream)
    elif len(labels) != len(stream):
        raise StreamError("label count does not match stream length")
    txs = tuple(replace(tx, truth_label=None if lab is None else int(lab))
                for tx, lab in zip(stream, labels))
    return replace(stream, transactions=txs)
