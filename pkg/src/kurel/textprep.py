"""HTML cleaning and tokenization for knowledge-unit text.

Cleaning order for a knowledge unit body:

1. pull ``<pre><code>...</code></pre>`` blocks out into a code list,
2. drop a leading moderator blockquote carrying a "Possible Duplicate:"
   marker (label leakage),
3. strip remaining markup and decode entities,
4. drop a leading text-level "Possible Duplicate:" marker if one survived,
5. tokenize.

Tokens are lowercase and whitespace-free, except the two reserved
sentinels ``URL`` and ``NUM`` which stay uppercase so that re-tokenizing
joined output is a fixpoint.
"""

import html
import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Optional

from .util import sha256_text

log = logging.getLogger(__name__)

URL_TOKEN = "URL"
NUM_TOKEN = "NUM"
SIGNAL_MARKER = "Possible Duplicate:"

_CODE_BLOCK_RE = re.compile(
    r"<pre[^>]*>\s*<code[^>]*>(.*?)</code>\s*</pre>", re.DOTALL | re.IGNORECASE
)
_OPEN_CODE_RE = re.compile(r"<pre[^>]*>\s*<code", re.IGNORECASE)
_TAG_RE = re.compile(r"<[^>]+>")
_WS_RE = re.compile(r"\s+")
_URL_RE = re.compile(r"^(?:(?:https?|ftp)://|www\.)\S+$", re.IGNORECASE)
_NUMBER_RE = re.compile(r"^\d+(?:\.\d+)?$")
_DIGITS_RE = re.compile(r"^\d+$")
_NON_ALNUM_RE = re.compile(r"[^0-9A-Za-z]+")
# Break EntityManage -> Entity|Manage and HTTPServer -> HTTP|Server.
_CAMEL_RE = re.compile(r"(?<=[a-z])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")
_SIGNAL_BLOCK_RE = re.compile(
    r"^\s*<blockquote\b[^>]*>.*?" + re.escape(SIGNAL_MARKER) + r".*?</blockquote>",
    re.DOTALL | re.IGNORECASE,
)
_TITLE_END_RE = re.compile(r"[?!.;:]")


@lru_cache(maxsize=4)
def _packaged_stopwords():
    text = resources.files("kurel").joinpath("data/stopwords.txt").read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


def default_stopwords():
    return _packaged_stopwords()


def load_stopwords(path):
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh if line.strip())


def stopword_list_hash(stopwords=None):
    """Hash of the sorted stopword list, recorded in cleaning manifests."""
    words = sorted(stopwords if stopwords is not None else default_stopwords())
    return sha256_text("\n".join(words))


def extract_code_snippets(html_text):
    """Split HTML into (html without code blocks, list of snippet strings).

    Snippets keep document order and have their entities decoded.  Unbalanced
    pre/code markup is left in place (treated as plain text) and logged.
    """
    snippets = [html.unescape(m.group(1)) for m in _CODE_BLOCK_RE.finditer(html_text)]
    remaining = _CODE_BLOCK_RE.sub(" ", html_text)
    if _OPEN_CODE_RE.search(remaining):
        log.debug("unbalanced pre/code markup left as plain text")
    return remaining, snippets


def strip_html(html_text):
    """Delete markup tags, decode entities, collapse whitespace to single spaces.

    Tags are removed before entity decoding, so a literal ``&lt;b`` decodes to
    ``<b`` without being mistaken for markup.
    """
    text = _TAG_RE.sub(" ", html_text)
    text = html.unescape(text)
    return _WS_RE.sub(" ", text).strip()


def remove_signal_block(html_text):
    """Drop a leading blockquote containing the duplicate-signal marker."""
    replaced = _SIGNAL_BLOCK_RE.sub(" ", html_text, count=1)
    if replaced != html_text:
        log.debug("removed leading signal blockquote")
    return replaced


def remove_signals(text):
    """Remove a leading "Possible Duplicate:" marker plus the quoted title.

    The quoted title ends with the line it sits on (the marker's own line,
    or the following line when the marker stands alone).  In single-line
    text the title ends at the first sentence punctuation mark; with none
    present the whole remainder is treated as the title.  Text without a
    leading marker is returned unchanged.
    """
    stripped = text.lstrip()
    if not stripped.startswith(SIGNAL_MARKER):
        return text
    log.debug("removed leading duplicate-signal marker")
    rest = stripped[len(SIGNAL_MARKER):]
    first_line, sep, after = rest.partition("\n")
    if sep and not first_line.strip():
        after = after.partition("\n")[2]
        return after.strip()
    if sep:
        return after.strip()
    match = _TITLE_END_RE.search(rest)
    return (rest[match.end():] if match else "").strip()


def tokenize(text, stopwords=None):
    """Tokenize cleaned text.

    Whitespace tokens that are URLs or standalone numbers collapse to the
    ``URL`` / ``NUM`` sentinels; everything else is split on punctuation,
    underscores and dots, then on camel-case boundaries, lowercased, and
    filtered against the stopword list.  All-digit fragments produced by the
    splitting also collapse to ``NUM`` so the output is a tokenize fixpoint.
    """
    if stopwords is None:
        stopwords = default_stopwords()
    tokens = []
    for raw in text.split():
        if raw in (URL_TOKEN, NUM_TOKEN):
            tokens.append(raw)
            continue
        if _URL_RE.match(raw):
            tokens.append(URL_TOKEN)
            continue
        if _NUMBER_RE.match(raw):
            tokens.append(NUM_TOKEN)
            continue
        for fragment in _NON_ALNUM_RE.split(raw):
            if not fragment:
                continue
            for piece in _CAMEL_RE.split(fragment):
                if _DIGITS_RE.match(piece):
                    tokens.append(NUM_TOKEN)
                    continue
                piece = piece.lower()
                if piece not in stopwords:
                    tokens.append(piece)
    return tokens


@dataclass
class CleanKU:
    """Cleaned view of one knowledge unit.

    Token lists drive the models; the parallel text/code/id fields preserve
    enough structure to export the human-readable dataset rows.
    """

    id: int
    title_tokens: list
    body_tokens: list
    body_code: list
    answers_tokens: list
    answers_code: list
    accepted_answer_tokens: Optional[list]
    title_text: str = ""
    body_text: str = ""
    answers_text: str = ""
    answer_ids: list = None
    accepted_answer_id: Optional[int] = None
    accepted_answer_text: str = ""
    accepted_answer_code: list = None
    tags: list = None

    def __post_init__(self):
        if self.answer_ids is None:
            self.answer_ids = []
        if self.accepted_answer_code is None:
            self.accepted_answer_code = []
        if self.tags is None:
            self.tags = []

    def part_tokens(self, part):
        if part == "title":
            return self.title_tokens
        if part == "body":
            return self.body_tokens
        if part == "answers":
            return self.answers_tokens
        if part == "titlebody":
            return self.title_tokens + self.body_tokens
        raise KeyError(part)

    def to_row(self):
        return {
            "id": self.id,
            "title_tokens": self.title_tokens,
            "body_tokens": self.body_tokens,
            "body_code": self.body_code,
            "answers_tokens": self.answers_tokens,
            "answers_code": self.answers_code,
            "accepted_answer_tokens": self.accepted_answer_tokens,
            "title_text": self.title_text,
            "body_text": self.body_text,
            "answers_text": self.answers_text,
            "answer_ids": self.answer_ids,
            "accepted_answer_id": self.accepted_answer_id,
            "accepted_answer_text": self.accepted_answer_text,
            "accepted_answer_code": self.accepted_answer_code,
            "tags": self.tags,
        }

    @classmethod
    def from_row(cls, row):
        return cls(**row)


def clean_text_part(html_text, stopwords=None, signals=False):
    """Run the full cleaning chain on one HTML field.

    Returns (text, tokens, code_snippets).  Signal removal only applies to
    question bodies (the marker is moderator text inserted at the top of a
    question).
    """
    without_code, snippets = extract_code_snippets(html_text)
    if signals:
        without_code = remove_signal_block(without_code)
    text = strip_html(without_code)
    if signals:
        text = remove_signals(text)
    return text, tokenize(text, stopwords), snippets


def clean_knowledge_unit(ku, stopwords=None):
    """Clean one ingest-stage knowledge unit into a CleanKU."""
    title_text, title_tokens, _ = clean_text_part(ku.title or "", stopwords)
    body_text, body_tokens, body_code = clean_text_part(
        ku.body_html, stopwords, signals=True
    )

    answer_ids = []
    answer_texts = []
    answers_code = []
    accepted_text = ""
    accepted_tokens = None
    accepted_code = []
    for answer_id, answer_html in sorted(ku.answers):
        text, _, snippets = clean_text_part(answer_html, stopwords)
        answer_ids.append(answer_id)
        answer_texts.append(text)
        answers_code.extend(snippets)
        if ku.accepted_answer_id is not None and answer_id == ku.accepted_answer_id:
            accepted_text = text
            accepted_tokens = tokenize(text, stopwords)
            accepted_code = snippets
    answers_text = " ".join(t for t in answer_texts if t)
    answers_tokens = tokenize(answers_text, stopwords)

    return CleanKU(
        id=ku.id,
        title_tokens=title_tokens,
        body_tokens=body_tokens,
        body_code=body_code,
        answers_tokens=answers_tokens,
        answers_code=answers_code,
        accepted_answer_tokens=accepted_tokens,
        title_text=title_text,
        body_text=body_text,
        answers_text=answers_text,
        answer_ids=answer_ids,
        accepted_answer_id=ku.accepted_answer_id,
        accepted_answer_text=accepted_text,
        accepted_answer_code=accepted_code,
        tags=list(ku.tags),
    )
