"""JSONL corpus ingestion.

One document per line: {"id", "title", "country", "product",
"ingredients": [...], "text": "..."} plus, when pre-annotated,
"tokens": [{"lemma", "pos"}, ...]. Text is NFC-normalized; documents the
POS filter empties are dropped with a warning rather than scored.
"""

from __future__ import annotations

import json
import logging
import re
import unicodedata
from pathlib import Path
from typing import Union

from .annotation import NaiveProvider, PreannotatedProvider, filter_stream
from .corpus import Document
from .errors import EmptyAfterFilter, ParseError

log = logging.getLogger(__name__)

PROVIDERS = ("preannotated", "naive")

_WS_RE = re.compile(r"\s+")


def normalize_ingredient(raw: str) -> str:
    """Lowercase, trim, and collapse internal whitespace."""
    return _WS_RE.sub(" ", raw.strip().lower())


def _nfc(value: str) -> str:
    return unicodedata.normalize("NFC", value)


def _document_from_record(record: dict, provider_name: str, where: str) -> Document:
    try:
        doc_id = _nfc(str(record["id"]))
        title = _nfc(str(record.get("title", "")))
    except KeyError as exc:
        raise ParseError(f"{where}: missing required field {exc}") from exc

    if provider_name == "preannotated":
        tokens = record.get("tokens")
        if tokens is None:
            raise ParseError(f"{where}: provider is preannotated but record has no tokens")
        provider = PreannotatedProvider(
            [{k: _nfc(str(v)) for k, v in tok.items()} for tok in tokens]
        )
        raw_text = _nfc(str(record.get("text", "")))
    else:
        raw_text = _nfc(str(record.get("text", "")))
        if not raw_text.strip():
            raise ParseError(f"{where}: provider is naive but record has no text")
        provider = NaiveProvider()

    stream = provider.token_stream(raw_text)
    body = filter_stream(stream)

    country = str(record.get("country", "UNKNOWN")).upper() or "UNKNOWN"
    ingredients = frozenset(
        normalize_ingredient(_nfc(str(ing)))
        for ing in record.get("ingredients", [])
        if str(ing).strip()
    )
    return Document(
        id=doc_id,
        title=title,
        body_tokens=body,
        country=country,
        product=str(record.get("product", "NONE")) or "NONE",
        ingredients=ingredients,
        raw_token_count=len(stream),
    )


def read_documents(path: Union[str, Path], provider_name: str = "preannotated") -> list[Document]:
    """Read a JSONL corpus; returns documents in file order.

    Documents emptied by the POS filter are dropped and logged. Malformed
    lines and duplicate ids are hard errors with line context.
    """
    if provider_name not in PROVIDERS:
        raise ValueError(f"unknown annotation provider {provider_name!r}")
    path = Path(path)
    documents: list[Document] = []
    seen_ids: set[str] = set()
    dropped = 0
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{line_no}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{where}: invalid JSON ({exc})") from exc
            if not isinstance(record, dict):
                raise ParseError(f"{where}: expected a JSON object")
            try:
                doc = _document_from_record(record, provider_name, where)
            except EmptyAfterFilter:
                log.warning("%s: dropped document %r (empty after POS filter)",
                            where, record.get("id"))
                dropped += 1
                continue
            if doc.id in seen_ids:
                raise ParseError(f"{where}: duplicate document id {doc.id!r}")
            seen_ids.add(doc.id)
            documents.append(doc)
    if dropped:
        log.warning("%s: dropped %d empty-after-filter document(s)", path, dropped)
    return documents
