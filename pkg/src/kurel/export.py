"""Export labeled pairs as 24-attribute dataset rows (CSV or JSONL).

Each row carries both units' cleaned content (ids, title, body text, body
code, accepted-answer fields, answers fields, tags) followed by the
relatedness class.  List-valued fields are serialized as JSON arrays
inside the field, so a CSV round trip is lossless.
"""

import csv
import json
from pathlib import Path

from .util import read_jsonl

EXPORT_COLUMNS = (
    "Id",
    "q1_Id", "q1_Title", "q1_Body", "q1_BodyCode",
    "q1_AcceptedAnswerId", "q1_AcceptedAnswerBody", "q1_AcceptedAnswerCode",
    "q1_AnswersIdList", "q1_AnswersBody", "q1_AnswersCode", "q1_Tags",
    "q2_Id", "q2_Title", "q2_Body", "q2_BodyCode",
    "q2_AcceptedAnswerId", "q2_AcceptedAnswerBody", "q2_AcceptedAnswerCode",
    "q2_AnswersIdList", "q2_AnswersBody", "q2_AnswersCode", "q2_Tags",
    "Class",
)


class ExportError(ValueError):
    pass


def _unit_fields(prefix, ku):
    return {
        f"{prefix}_Id": str(ku.id),
        f"{prefix}_Title": ku.title_text,
        f"{prefix}_Body": ku.body_text,
        f"{prefix}_BodyCode": json.dumps(ku.body_code, ensure_ascii=False),
        f"{prefix}_AcceptedAnswerId": (
            "" if ku.accepted_answer_id is None else str(ku.accepted_answer_id)
        ),
        f"{prefix}_AcceptedAnswerBody": ku.accepted_answer_text,
        f"{prefix}_AcceptedAnswerCode": json.dumps(
            ku.accepted_answer_code, ensure_ascii=False
        ),
        f"{prefix}_AnswersIdList": json.dumps(ku.answer_ids),
        f"{prefix}_AnswersBody": ku.answers_text,
        f"{prefix}_AnswersCode": json.dumps(ku.answers_code, ensure_ascii=False),
        f"{prefix}_Tags": json.dumps(ku.tags, ensure_ascii=False),
    }


def build_rows(pairs, clean_by_id):
    rows = []
    for pair in pairs:
        try:
            ku1 = clean_by_id[pair.ku1]
            ku2 = clean_by_id[pair.ku2]
        except KeyError as missing:
            raise ExportError(f"pair references missing unit {missing}") from None
        row = {"Id": f"{pair.ku1}_{pair.ku2}"}
        row.update(_unit_fields("q1", ku1))
        row.update(_unit_fields("q2", ku2))
        row["Class"] = pair.label
        rows.append(row)
    return rows


def export_dataset(pairs, clean_by_id, path, fmt=None):
    """Write one row per pair; format inferred from the extension."""
    path = Path(path)
    fmt = fmt or ("jsonl" if path.suffix == ".jsonl" else "csv")
    rows = build_rows(pairs, clean_by_id)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=EXPORT_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
    elif fmt == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    else:
        raise ExportError(f"unknown format {fmt!r}")
    return len(rows)


def import_dataset(path, fmt=None):
    """Read exported rows back as a list of column dicts."""
    path = Path(path)
    fmt = fmt or ("jsonl" if path.suffix == ".jsonl" else "csv")
    if fmt == "csv":
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != EXPORT_COLUMNS:
                raise ExportError(f"unexpected header in {path}")
            return list(reader)
    if fmt == "jsonl":
        return list(read_jsonl(path))
    raise ExportError(f"unknown format {fmt!r}")
