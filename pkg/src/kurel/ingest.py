"""Parse a Stack-Exchange-style data dump into knowledge units and links.

Two row sources are supported: the standard dump XML (``<row .../>``
elements, streamed so the file never resides in memory at once) and an
equivalent line-delimited JSON form using the same attribute names
(Id, PostTypeId, ParentId, AcceptedAnswerId, Title, Body, Tags for posts;
PostId, RelatedPostId, LinkTypeId for links).
"""

import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .util import read_jsonl, sha256_file, write_json, write_jsonl

log = logging.getLogger(__name__)

QUESTION = "question"
ANSWER = "answer"

# Public dump convention; the table stores only a numeric kind code.
DEFAULT_LINK_KINDS = {3: "duplicate", 1: "direct"}

_TAG_TOKEN_RE = re.compile(r"<([^<>]+)>")


class CorruptDumpError(ValueError):
    """The dump violates structural guarantees (e.g. duplicate post ids)."""


@dataclass
class RawPost:
    post_id: int
    post_type: str
    parent_id: Optional[int] = None
    accepted_answer_id: Optional[int] = None
    title: Optional[str] = None
    body: str = ""
    tags: list = field(default_factory=list)


@dataclass
class KnowledgeUnit:
    """One question thread: the question plus all its answers."""

    id: int
    title: str
    body_html: str
    answers: list  # [(answer_id, body_html)], ascending answer id
    accepted_answer_id: Optional[int] = None
    tags: list = field(default_factory=list)

    def to_row(self):
        return {
            "id": self.id,
            "title": self.title,
            "body_html": self.body_html,
            "answers": [[aid, body] for aid, body in self.answers],
            "accepted_answer_id": self.accepted_answer_id,
            "tags": self.tags,
        }

    @classmethod
    def from_row(cls, row):
        return cls(
            id=row["id"],
            title=row["title"],
            body_html=row["body_html"],
            answers=[(aid, body) for aid, body in row["answers"]],
            accepted_answer_id=row.get("accepted_answer_id"),
            tags=row.get("tags", []),
        )


@dataclass(frozen=True)
class LinkRecord:
    source_ku: int
    target_ku: int
    link_kind: str


class SkipLog:
    """Collects non-fatal rows dropped during ingestion."""

    def __init__(self):
        self.entries = []

    def add(self, context, reason):
        self.entries.append((context, reason))

    def __len__(self):
        return len(self.entries)

    def write(self, path):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            for context, reason in self.entries:
                fh.write(f"{context}\t{reason}\n")


def iter_dump_rows(path):
    """Stream attribute maps from a dump file (.xml or .jsonl)."""
    path = Path(path)
    if path.suffix.lower() == ".xml":
        for _, elem in ET.iterparse(str(path), events=("end",)):
            if elem.tag == "row":
                yield dict(elem.attrib)
                elem.clear()
    else:
        yield from read_jsonl(path)


def parse_tags(tag_string):
    """Parse ``<java><swing>`` (or pipe-delimited) tag strings."""
    if not tag_string:
        return []
    if "<" in tag_string:
        return _TAG_TOKEN_RE.findall(tag_string)
    return [t for t in tag_string.strip("|").split("|") if t]


def _opt_int(value):
    if value is None or value == "":
        return None
    return int(value)


def parse_posts(dump_rows, skip_log=None):
    """Turn raw post rows into RawPosts.

    Rows whose post type is neither question nor answer are skipped.  Rows
    with unparseable ids go to the skip log; a repeated post id means a
    corrupt dump and raises.
    """
    skip_log = skip_log if skip_log is not None else SkipLog()
    posts = []
    seen = set()
    for row in dump_rows:
        try:
            post_id = int(row["Id"])
            post_type_id = int(row.get("PostTypeId", 0))
        except (KeyError, TypeError, ValueError):
            skip_log.add(f"post row {row.get('Id')!r}", "unparseable id")
            continue
        if post_type_id not in (1, 2):
            continue
        if post_id in seen:
            raise CorruptDumpError(f"duplicate post id {post_id}")
        seen.add(post_id)
        if post_type_id == 1:
            posts.append(
                RawPost(
                    post_id=post_id,
                    post_type=QUESTION,
                    accepted_answer_id=_opt_int(row.get("AcceptedAnswerId")),
                    title=row.get("Title") or "",
                    body=row.get("Body") or "",
                    tags=parse_tags(row.get("Tags") or ""),
                )
            )
        else:
            try:
                parent_id = int(row["ParentId"])
            except (KeyError, TypeError, ValueError):
                skip_log.add(f"post row {post_id}", "answer without parent id")
                continue
            posts.append(
                RawPost(
                    post_id=post_id,
                    post_type=ANSWER,
                    parent_id=parent_id,
                    body=row.get("Body") or "",
                )
            )
    return posts


def assemble_knowledge_units(posts, tag_filter, skip_log=None):
    """Group answers under their questions, keeping questions with the tag.

    Tag matching is case-insensitive exact token match.  Answers to
    filtered-out questions are dropped; answers whose parent is absent from
    the dump entirely are skip-logged.
    """
    if not tag_filter:
        raise ValueError("tag_filter must be non-empty")
    skip_log = skip_log if skip_log is not None else SkipLog()
    wanted = tag_filter.lower()

    questions = {p.post_id: p for p in posts if p.post_type == QUESTION}
    matched = {
        qid: q
        for qid, q in questions.items()
        if any(t.lower() == wanted for t in q.tags)
    }

    answers_by_parent = {}
    for post in posts:
        if post.post_type != ANSWER:
            continue
        if post.parent_id in matched:
            answers_by_parent.setdefault(post.parent_id, []).append(post)
        elif post.parent_id not in questions:
            skip_log.add(f"answer {post.post_id}", "parent question missing from dump")

    units = []
    for qid in sorted(matched):
        q = matched[qid]
        answers = sorted(answers_by_parent.get(qid, []), key=lambda a: a.post_id)
        accepted = q.accepted_answer_id
        if accepted is not None and accepted not in {a.post_id for a in answers}:
            skip_log.add(f"question {qid}", "accepted answer missing; field cleared")
            accepted = None
        units.append(
            KnowledgeUnit(
                id=qid,
                title=q.title or "",
                body_html=q.body,
                answers=[(a.post_id, a.body) for a in answers],
                accepted_answer_id=accepted,
                tags=q.tags,
            )
        )
    return units


def parse_links(link_rows, known_ids, kind_map=None, skip_log=None):
    """Extract duplicate/direct link records between known knowledge units.

    Self-links and links touching unknown units are dropped; rows with an
    unknown kind code are skip-logged; exact duplicate rows are deduplicated.
    """
    kind_map = kind_map or DEFAULT_LINK_KINDS
    skip_log = skip_log if skip_log is not None else SkipLog()
    records = []
    seen = set()
    for row in link_rows:
        try:
            source = int(row["PostId"])
            target = int(row["RelatedPostId"])
            kind_code = int(row["LinkTypeId"])
        except (KeyError, TypeError, ValueError):
            skip_log.add(f"link row {row.get('Id')!r}", "unparseable link row")
            continue
        kind = kind_map.get(kind_code)
        if kind is None:
            skip_log.add(f"link {source}->{target}", f"unknown kind code {kind_code}")
            continue
        if source == target:
            continue
        if source not in known_ids or target not in known_ids:
            continue
        key = (source, target, kind)
        if key in seen:
            continue
        seen.add(key)
        records.append(LinkRecord(source, target, kind))
    return records


def run_ingest(posts_path, links_path, tag, out_dir, kind_map=None):
    """Full ingest stage: parse, assemble, link, and write artifacts.

    Emits ``kus.jsonl``, ``links.jsonl``, ``manifest.json`` and
    ``ingest.skipped.log`` under ``out_dir``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    skip_log = SkipLog()

    post_rows = 0

    def counted(rows):
        nonlocal post_rows
        for row in rows:
            post_rows += 1
            yield row

    posts = parse_posts(counted(iter_dump_rows(posts_path)), skip_log)
    units = assemble_knowledge_units(posts, tag, skip_log)
    known_ids = {u.id for u in units}

    link_rows = list(iter_dump_rows(links_path))
    links = parse_links(link_rows, known_ids, kind_map, skip_log)

    write_jsonl(out_dir / "kus.jsonl", (u.to_row() for u in units))
    write_jsonl(
        out_dir / "links.jsonl",
        ({"source": l.source_ku, "target": l.target_ku, "kind": l.link_kind} for l in links),
    )
    skip_log.write(out_dir / "ingest.skipped.log")

    manifest = {
        "tag": tag,
        "posts_file": {
            "path": str(posts_path),
            "sha256": sha256_file(posts_path),
            "rows": post_rows,
        },
        "links_file": {
            "path": str(links_path),
            "sha256": sha256_file(links_path),
            "rows": len(link_rows),
        },
        "link_kind_map": {str(k): v for k, v in (kind_map or DEFAULT_LINK_KINDS).items()},
        "knowledge_units": len(units),
        "links_kept": len(links),
        "rows_skipped": len(skip_log),
        "notes": [
            "closed/deleted questions are not distinguishable in the dump; "
            "all question rows present are kept"
        ],
    }
    write_json(out_dir / "manifest.json", manifest)
    log.info("ingest: %d units, %d links, %d skipped", len(units), len(links), len(skip_log))
    return units, links, manifest
