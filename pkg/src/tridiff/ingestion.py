"""Parsing of raw interaction files and dataset purification.

Wire format, one interaction per line::

    user<TAB>item<TAB>tag1,tag2,...

The tag field may be empty. Lines starting with ``#`` and blank lines are
skipped. There is no escaping: labels must not contain TAB or comma, and
tags must not contain comma.

Purification repeatedly removes rare tags, under-collected items and
stranded users until every rule holds simultaneously (a fixpoint); see
:func:`purify`.
"""

from __future__ import annotations

import io
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DataError, ParseError


@dataclass(frozen=True)
class InteractionRecord:
    """One interaction: a user collected an item and attached zero or more tags."""

    user: str
    item: str
    tags: tuple[str, ...] = ()


@dataclass(frozen=True)
class PurificationPolicy:
    """Minimum-degree rules applied by :func:`purify`.

    ``drop_singleton_tags`` removes tags attached to exactly one distinct
    item. It defaults to on; disable it for datasets whose tags are already
    curated.
    """

    min_users_per_item: int = 2
    min_items_per_user: int = 1
    min_tags_per_item: int = 1
    drop_singleton_tags: bool = True

    def __post_init__(self):
        if min(self.min_users_per_item, self.min_items_per_user, self.min_tags_per_item) < 0:
            raise ValueError("purification minimums must be >= 0")


@dataclass(frozen=True)
class PassStats:
    tags_removed: int
    items_removed: int
    users_removed: int

    @property
    def total(self) -> int:
        return self.tags_removed + self.items_removed + self.users_removed


@dataclass
class PurificationStats:
    """Per-pass removal counts accumulated while purifying."""

    input_records: int
    output_records: int = 0
    passes: list[PassStats] = field(default_factory=list)

    @property
    def tags_removed(self) -> int:
        return sum(p.tags_removed for p in self.passes)

    @property
    def items_removed(self) -> int:
        return sum(p.items_removed for p in self.passes)

    @property
    def users_removed(self) -> int:
        return sum(p.users_removed for p in self.passes)


def parse_interactions(lines: Iterable[str]) -> list[InteractionRecord]:
    """Parse the wire format into records, preserving file order.

    Duplicate tags within one line are dropped (first occurrence kept).
    Malformed lines raise :class:`ParseError` with their line number.
    """
    records = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise ParseError(line_no, f"expected 3 TAB-separated fields, got {len(fields)}")
        user, item, tag_field = fields
        if not user:
            raise ParseError(line_no, "empty user label")
        if not item:
            raise ParseError(line_no, "empty item label")
        if "," in user or "," in item:
            raise ParseError(line_no, "labels must not contain commas")
        if tag_field:
            tags = tag_field.split(",")
            if any(t == "" for t in tags):
                raise ParseError(line_no, "empty tag")
            tags = tuple(dict.fromkeys(tags))
        else:
            tags = ()
        records.append(InteractionRecord(user, item, tags))
    return records


def read_interactions(path: str | Path) -> list[InteractionRecord]:
    with io.open(path, "r", encoding="utf-8") as fh:
        return parse_interactions(fh)


def write_interactions(records: Iterable[InteractionRecord], path: str | Path) -> None:
    """Write records back out in the wire format."""
    with io.open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(f"{rec.user}\t{rec.item}\t{','.join(rec.tags)}\n")


def _pooled_tag_items(records: list[InteractionRecord]) -> dict[str, set[str]]:
    out: dict[str, set[str]] = {}
    for rec in records:
        for t in rec.tags:
            out.setdefault(t, set()).add(rec.item)
    return out


def purify(
    records: Iterable[InteractionRecord],
    policy: PurificationPolicy = PurificationPolicy(),
) -> tuple[list[InteractionRecord], PurificationStats]:
    """Apply the purification rules until a fixpoint is reached.

    Each pass runs three steps in order, recounting between steps:

    1. drop tags attached to fewer than two distinct items (if enabled);
    2. drop items with too few distinct users or too few surviving tags
       (tags are pooled per item across all of its records);
    3. drop users with too few surviving distinct items.

    Removing an item can strand a user and removing records can strand a
    tag, so the passes repeat until none of the rules fires. Raises
    :class:`DataError` if everything is purged.
    """
    recs = list(records)
    if not recs:
        raise DataError("no interaction records to purify")
    stats = PurificationStats(input_records=len(recs))
    while True:
        tags_removed = items_removed = users_removed = 0

        if policy.drop_singleton_tags and recs:
            tag_items = _pooled_tag_items(recs)
            doomed = {t for t, items in tag_items.items() if len(items) < 2}
            if doomed:
                tags_removed = len(doomed)
                recs = [
                    rec if not (set(rec.tags) & doomed)
                    else replace(rec, tags=tuple(t for t in rec.tags if t not in doomed))
                    for rec in recs
                ]

        if recs:
            item_users: dict[str, set[str]] = {}
            item_tags: dict[str, set[str]] = {}
            for rec in recs:
                item_users.setdefault(rec.item, set()).add(rec.user)
                item_tags.setdefault(rec.item, set()).update(rec.tags)
            bad_items = {
                i for i in item_users
                if len(item_users[i]) < policy.min_users_per_item
                or len(item_tags[i]) < policy.min_tags_per_item
            }
            if bad_items:
                items_removed = len(bad_items)
                recs = [rec for rec in recs if rec.item not in bad_items]

        if recs:
            user_items: dict[str, set[str]] = {}
            for rec in recs:
                user_items.setdefault(rec.user, set()).add(rec.item)
            bad_users = {
                u for u, items in user_items.items() if len(items) < policy.min_items_per_user
            }
            if bad_users:
                users_removed = len(bad_users)
                recs = [rec for rec in recs if rec.user not in bad_users]

        if tags_removed or items_removed or users_removed:
            stats.passes.append(PassStats(tags_removed, items_removed, users_removed))
        else:
            break
        if not recs:
            raise DataError("dataset fully purged: no records satisfy the purification policy")

    stats.output_records = len(recs)
    return recs, stats


def distinct_counts(records: Iterable[InteractionRecord]) -> dict[str, int]:
    """Distinct user/item/tag counts, for quick diagnostics."""
    users: Counter = Counter()
    items: Counter = Counter()
    tags: Counter = Counter()
    for rec in records:
        users[rec.user] += 1
        items[rec.item] += 1
        for t in rec.tags:
            tags[t] += 1
    return {"users": len(users), "items": len(items), "tags": len(tags)}


def iter_lines(text: str) -> Iterator[str]:
    """Split a string into lines, convenience for tests and small inputs."""
    return iter(text.splitlines())
