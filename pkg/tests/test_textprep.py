import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kurel import textprep as tp


class TestExtractCodeSnippets:
    def test_single_block(self):
        html, snippets = tp.extract_code_snippets(
            "<p>x</p><pre><code>int a;</code></pre>"
        )
        assert snippets == ["int a;"]
        assert "<code>" not in html
        assert "<p>x</p>" in html

    def test_two_blocks_in_order(self):
        _, snippets = tp.extract_code_snippets(
            "<pre><code>first</code></pre><p>mid</p><pre><code>second</code></pre>"
        )
        assert snippets == ["first", "second"]

    def test_no_block(self):
        html, snippets = tp.extract_code_snippets("<p>plain</p>")
        assert (html, snippets) == ("<p>plain</p>", [])

    def test_multiline_block_and_entities(self):
        _, snippets = tp.extract_code_snippets(
            "<pre><code>a &lt; b\nwhile (true) {}\n</code></pre>"
        )
        assert snippets == ["a < b\nwhile (true) {}\n"]

    def test_unbalanced_left_as_text(self):
        html, snippets = tp.extract_code_snippets("<pre><code>oops</pre>")
        assert snippets == []
        assert "oops" in html


class TestStripHtml:
    def test_decodes_entities_after_tag_removal(self):
        assert tp.strip_html("<p>a&lt;b</p>") == "a<b"

    def test_newline_entity_normalized(self):
        assert tp.strip_html("a&#xA;b") == "a b"

    def test_plain_text_unchanged(self):
        assert tp.strip_html("plain") == "plain"

    def test_tags_become_word_breaks(self):
        assert tp.strip_html("<p>one</p><p>two</p>") == "one two"

    @given(
        st.lists(
            st.one_of(
                st.sampled_from(["<p>", "</p>", "<div class='x'>", "</div>",
                                 "<br/>", "<a href=\"u\">", "</a>"]),
                st.text(alphabet="abc &lt; &#xA;", min_size=1, max_size=10),
            ),
            max_size=30,
        )
    )
    @settings(max_examples=100)
    def test_no_tag_survives(self, chunks):
        out = tp.strip_html("".join(chunks))
        for tag in ("<p", "</p", "<div", "</div", "<br", "<a ", "</a"):
            assert tag not in out


class TestRemoveSignals:
    def test_leading_marker_and_title_removed(self):
        text = "Possible Duplicate: How to X? My question is here"
        assert tp.remove_signals(text) == "My question is here"

    def test_no_marker_unchanged(self):
        assert tp.remove_signals("no marker text") == "no marker text"

    def test_mid_text_marker_unchanged(self):
        text = "intro then Possible Duplicate: something"
        assert tp.remove_signals(text) == text

    def test_title_on_own_line(self):
        text = "Possible Duplicate:\nHow to X\nreal body"
        assert tp.remove_signals(text) == "real body"

    def test_blockquote_variant(self):
        html = (
            '<blockquote><p><strong>Possible Duplicate:</strong><br>'
            '<a href="u">How to X?</a></p></blockquote><p>Body here</p>'
        )
        assert tp.strip_html(tp.remove_signal_block(html)) == "Body here"


class TestTokenize:
    def test_punctuation_and_underscore_split(self):
        assert tp.tokenize("javax.persistence.Query javax_query") == [
            "javax", "persistence", "query", "javax", "query",
        ]

    def test_camel_case_split(self):
        assert tp.tokenize("EntityManage") == ["entity", "manage"]

    def test_acronym_run(self):
        assert tp.tokenize("HTTPServer") == ["http", "server"]

    def test_url_and_number_normalization(self):
        assert tp.tokenize("see https://x.io 42 times") == [
            "see", "URL", "NUM", "times",
        ]

    def test_decimal_is_a_number(self):
        assert tp.tokenize("pi 3.14") == ["pi", "NUM"]

    def test_digits_embedded_in_identifiers_survive(self):
        assert tp.tokenize("javax2 v1") == ["javax2", "v1"]

    def test_stopwords_removed(self):
        assert tp.tokenize("this is the query") == ["query"]

    def test_keep_stopwords_option(self):
        assert tp.tokenize("this is it", stopwords=frozenset()) == ["this", "is", "it"]

    @given(st.text(alphabet=st.characters(codec="ascii"), max_size=120))
    @settings(max_examples=150)
    def test_idempotent_on_own_output(self, text):
        once = tp.tokenize(text)
        again = tp.tokenize(" ".join(once))
        assert once == again

    @given(st.text(max_size=120))
    @settings(max_examples=100)
    def test_tokens_have_no_whitespace(self, text):
        for token in tp.tokenize(text):
            assert token
            assert not any(c.isspace() for c in token)
            assert token in (tp.URL_TOKEN, tp.NUM_TOKEN) or token == token.lower()


class TestCleanKnowledgeUnit:
    def test_full_unit(self):
        from kurel.ingest import KnowledgeUnit

        ku = KnowledgeUnit(
            id=7,
            title="Parse EntityManage output",
            body_html=(
                '<blockquote><p>Possible Duplicate:<br><a href="u">Old one?</a>'
                "</p></blockquote><p>My body uses javax.persistence.Query</p>"
                "<pre><code>int a = 1;</code></pre>"
            ),
            answers=[(9, "<p>Use a ResultSet</p><pre><code>rs.next();</code></pre>"),
                     (8, "<p>First answer</p>")],
            accepted_answer_id=9,
            tags=["java"],
        )
        clean = tp.clean_knowledge_unit(ku)
        assert clean.title_tokens == ["parse", "entity", "manage", "output"]
        assert clean.body_tokens == ["body", "uses", "javax", "persistence", "query"]
        assert clean.body_code == ["int a = 1;"]
        # answers concatenated in ascending answer-id order
        assert clean.answer_ids == [8, 9]
        assert clean.answers_tokens == ["first", "answer", "use", "result", "set"]
        assert clean.answers_code == ["rs.next();"]
        assert clean.accepted_answer_id == 9
        assert clean.accepted_answer_tokens == ["use", "result", "set"]
        assert clean.accepted_answer_code == ["rs.next();"]

    def test_row_roundtrip(self):
        from kurel.ingest import KnowledgeUnit

        ku = KnowledgeUnit(id=1, title="t", body_html="<p>b</p>", answers=[])
        clean = tp.clean_knowledge_unit(ku)
        assert tp.CleanKU.from_row(clean.to_row()) == clean


def test_stopword_hash_is_stable():
    assert tp.stopword_list_hash() == tp.stopword_list_hash()
    assert tp.stopword_list_hash(frozenset({"a"})) != tp.stopword_list_hash()


def test_part_tokens_unknown_part():
    from kurel.ingest import KnowledgeUnit

    clean = tp.clean_knowledge_unit(KnowledgeUnit(1, "t", "<p>b</p>", []))
    with pytest.raises(KeyError):
        clean.part_tokens("tags")
