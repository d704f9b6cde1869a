import json

import pytest

from kurel import ingest
from kurel.ingest import (
    CorruptDumpError,
    LinkRecord,
    SkipLog,
    assemble_knowledge_units,
    parse_links,
    parse_posts,
    parse_tags,
)


def question_row(qid, tags="<java>", **extra):
    row = {"Id": qid, "PostTypeId": 1, "Title": f"t{qid}",
           "Body": f"<p>b{qid}</p>", "Tags": tags}
    row.update(extra)
    return row


def answer_row(aid, parent):
    return {"Id": aid, "PostTypeId": 2, "ParentId": parent, "Body": f"<p>a{aid}</p>"}


class TestParsePosts:
    def test_question_mapping(self):
        posts = parse_posts([question_row(1)])
        assert len(posts) == 1
        q = posts[0]
        assert (q.post_id, q.post_type, q.tags) == (1, "question", ["java"])
        assert q.body == "<p>b1</p>"  # HTML preserved verbatim

    def test_answer_mapping(self):
        posts = parse_posts([answer_row(2, 1)])
        assert posts[0].post_type == "answer"
        assert posts[0].parent_id == 1

    def test_other_post_types_skipped(self):
        posts = parse_posts([{"Id": 3, "PostTypeId": 5}])
        assert posts == []

    def test_unparseable_id_skip_logged(self):
        log = SkipLog()
        posts = parse_posts([{"Id": "xx", "PostTypeId": 1}], log)
        assert posts == []
        assert len(log) == 1

    def test_duplicate_id_is_fatal(self):
        with pytest.raises(CorruptDumpError):
            parse_posts([question_row(1), question_row(1)])

    def test_deterministic(self):
        rows = [question_row(1), answer_row(2, 1), question_row(3)]
        assert parse_posts(rows) == parse_posts(rows)


class TestParseTags:
    @pytest.mark.parametrize("raw,expected", [
        ("<java>", ["java"]),
        ("<java><swing>", ["java", "swing"]),
        ("|java|swing|", ["java", "swing"]),
        ("", []),
    ])
    def test_forms(self, raw, expected):
        assert parse_tags(raw) == expected


class TestAssemble:
    def test_question_with_answers(self):
        posts = parse_posts([question_row(1), answer_row(3, 1), answer_row(2, 1)])
        units = assemble_knowledge_units(posts, "java")
        assert len(units) == 1
        assert [aid for aid, _ in units[0].answers] == [2, 3]

    def test_tag_filter_case_insensitive(self):
        posts = parse_posts([question_row(1, tags="<Java>"),
                             question_row(2, tags="<python>")])
        units = assemble_knowledge_units(posts, "java")
        assert [u.id for u in units] == [1]

    def test_unit_count_equals_tagged_questions(self):
        rows = [question_row(i) for i in range(1, 6)]
        rows += [question_row(10, tags="<c>"), answer_row(20, 1)]
        posts = parse_posts(rows)
        tagged = sum(1 for p in posts
                     if p.post_type == "question" and "java" in p.tags)
        assert len(assemble_knowledge_units(posts, "java")) == tagged

    def test_question_without_answers_is_valid(self):
        units = assemble_knowledge_units(parse_posts([question_row(1)]), "java")
        assert units[0].answers == []

    def test_orphan_answer_skip_logged(self):
        log = SkipLog()
        assemble_knowledge_units(parse_posts([answer_row(5, 99)]), "java", log)
        assert len(log) == 1

    def test_answer_to_filtered_question_dropped_silently(self):
        log = SkipLog()
        posts = parse_posts([question_row(1, tags="<python>"), answer_row(2, 1)])
        units = assemble_knowledge_units(posts, "java", log)
        assert units == [] and len(log) == 0

    def test_missing_accepted_answer_cleared(self):
        log = SkipLog()
        posts = parse_posts([question_row(1, AcceptedAnswerId=42)])
        units = assemble_knowledge_units(posts, "java", log)
        assert units[0].accepted_answer_id is None
        assert len(log) == 1


class TestParseLinks:
    def link_row(self, a, b, kind, link_id=1):
        return {"Id": link_id, "PostId": a, "RelatedPostId": b, "LinkTypeId": kind}

    def test_duplicate_kind(self):
        records = parse_links([self.link_row(1, 2, 3)], {1, 2})
        assert records == [LinkRecord(1, 2, "duplicate")]

    def test_unknown_endpoint_dropped(self):
        assert parse_links([self.link_row(1, 9, 1)], {1, 2}) == []

    def test_exact_duplicate_rows_deduplicated(self):
        rows = [self.link_row(1, 2, 1, link_id=i) for i in (1, 2)]
        assert len(parse_links(rows, {1, 2})) == 1

    def test_self_link_dropped(self):
        assert parse_links([self.link_row(1, 1, 3)], {1}) == []

    def test_unknown_kind_skip_logged(self):
        log = SkipLog()
        assert parse_links([self.link_row(1, 2, 7)], {1, 2}, skip_log=log) == []
        assert len(log) == 1

    def test_every_endpoint_resolves(self):
        known = {1, 2, 3}
        rows = [self.link_row(1, 2, 3), self.link_row(2, 9, 1),
                self.link_row(3, 1, 1)]
        for record in parse_links(rows, known):
            assert record.source_ku in known and record.target_ku in known


class TestRunIngest(object):
    def _write_dump(self, tmp_path, as_xml=False):
        posts = [question_row(1), question_row(2), answer_row(3, 1),
                 question_row(9, tags="<python>")]
        links = [{"Id": 1, "PostId": 1, "RelatedPostId": 2, "LinkTypeId": 3}]
        if as_xml:
            posts_path = tmp_path / "Posts.xml"
            links_path = tmp_path / "PostLinks.xml"
            with open(posts_path, "w") as fh:
                fh.write("<posts>\n")
                for row in posts:
                    attrs = " ".join(
                        f'{k}="{str(v).replace("<", "&lt;").replace(">", "&gt;")}"'
                        for k, v in row.items())
                    fh.write(f"  <row {attrs} />\n")
                fh.write("</posts>\n")
            with open(links_path, "w") as fh:
                fh.write("<postlinks>\n")
                for row in links:
                    attrs = " ".join(f'{k}="{v}"' for k, v in row.items())
                    fh.write(f"  <row {attrs} />\n")
                fh.write("</postlinks>\n")
        else:
            posts_path = tmp_path / "posts.jsonl"
            links_path = tmp_path / "links.jsonl"
            posts_path.write_text("\n".join(json.dumps(r) for r in posts))
            links_path.write_text("\n".join(json.dumps(r) for r in links))
        return posts_path, links_path

    @pytest.mark.parametrize("as_xml", [False, True])
    def test_artifacts_written(self, tmp_path, as_xml):
        posts_path, links_path = self._write_dump(tmp_path, as_xml)
        out = tmp_path / "out"
        units, links, manifest = ingest.run_ingest(posts_path, links_path, "java", out)
        assert [u.id for u in units] == [1, 2]
        assert len(links) == 1
        for name in ("kus.jsonl", "links.jsonl", "manifest.json",
                     "ingest.skipped.log"):
            assert (out / name).exists()
        assert manifest["knowledge_units"] == 2
        assert manifest["posts_file"]["sha256"]

    def test_xml_and_jsonl_agree(self, tmp_path):
        (tmp_path / "x").mkdir()
        (tmp_path / "j").mkdir()
        px, lx = self._write_dump(tmp_path / "x", as_xml=True)
        pj, lj = self._write_dump(tmp_path / "j", as_xml=False)
        ux, _, _ = ingest.run_ingest(px, lx, "java", tmp_path / "ox")
        uj, _, _ = ingest.run_ingest(pj, lj, "java", tmp_path / "oj")
        assert ux == uj


def test_knowledge_unit_row_roundtrip():
    ku = ingest.KnowledgeUnit(1, "t", "<p>b</p>", [(2, "<p>a</p>")], 2, ["java"])
    assert ingest.KnowledgeUnit.from_row(ku.to_row()) == ku
