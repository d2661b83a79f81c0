import pytest
from hypothesis import given, strategies as st

from oracles import registered_domain_oracle, token_delimited_oracle
from webcurate.corpus import Document, count_words
from webcurate.urlfilters import (
    DomainBlocklist,
    SubstringLexicon,
    UrlTokenMatcher,
    check_blocklist,
    check_hard_substrings,
    check_soft_substrings,
    check_strict_substrings,
    normalize_newlines,
    registered_domain,
    strip_inline_urls,
)

TEN_SUFFIXES = frozenset(
    ("com", "org", "net", "io", "co", "edu", "co.uk", "ac.uk", "com.au", "de")
)


def doc(text: str) -> Document:
    return Document(id="t", url="", text=text)


class TestRegisteredDomain:
    @pytest.mark.parametrize("host,expected", [
        # Frozen from the suffix-list oracle over the 10-entry list.
        ("bad.example.com", "example.com"),
        ("x.y.site.co.uk", "site.co.uk"),
        ("example.org", "example.org"),
        ("localhost", "localhost"),
        ("a.b.unknowntld", "b.unknowntld"),
    ])
    def test_against_oracle(self, host, expected):
        assert registered_domain_oracle(host, TEN_SUFFIXES) == expected
        assert registered_domain(host, TEN_SUFFIXES) == expected

    def test_random_hosts_match_oracle(self):
        import random

        rng = random.Random(42)
        labels = ["a", "bb", "ccc", "www", "sub", "example", "site"]
        tails = ["com", "co.uk", "org", "unknown", "io", "de"]
        for _ in range(300):
            host = ".".join(rng.choices(labels, k=rng.randint(0, 3)) + [rng.choice(tails)])
            assert registered_domain(host, TEN_SUFFIXES) == registered_domain_oracle(host, TEN_SUFFIXES)


class TestBlocklist:
    BLOCK = DomainBlocklist(domains=frozenset({"example.com"}), suffixes=TEN_SUFFIXES)

    def test_subdomain_of_blocked_domain_rejected(self):
        verdict = check_blocklist("http://bad.example.com/page", self.BLOCK)
        assert verdict.is_reject and verdict.stage == "ut1_blocklist"

    def test_other_domain_kept(self):
        assert not check_blocklist("http://example.org/", self.BLOCK).is_reject

    def test_empty_url_kept(self):
        assert not check_blocklist("", self.BLOCK).is_reject

    def test_case_insensitive(self):
        assert check_blocklist("http://WWW.EXAMPLE.COM/", self.BLOCK).is_reject

    def test_schemeless_url(self):
        assert check_blocklist("example.com/page", self.BLOCK).is_reject


class TestStrictSubstrings:
    LEX = SubstringLexicon.strict({"badterm"})

    def test_token_delimited_match_rejected(self):
        # From the table semantics: "-" and "." delimit tokens in the path.
        assert check_strict_substrings("http://x.com/foo-badterm.html", self.LEX).is_reject

    def test_embedded_occurrence_kept(self):
        # Frozen from the delimiter-scan oracle: not token-delimited.
        assert token_delimited_oracle("/embadtermed", "badterm") is False
        assert not check_strict_substrings("http://x.com/embadtermed", self.LEX).is_reject

    def test_segment_boundary_counts_as_delimiter(self):
        assert check_strict_substrings("http://x.com/badterm/rest", self.LEX).is_reject

    def test_empty_lexicon_keeps(self):
        assert not check_strict_substrings("http://x.com/badterm", SubstringLexicon.strict(())).is_reject

    def test_only_path_is_scanned(self):
        assert not check_strict_substrings("http://badterm.com/clean", self.LEX).is_reject


class TestHardSubstrings:
    LEX = SubstringLexicon.hard({"badterm"})

    def test_substring_anywhere_rejects(self):
        assert check_hard_substrings("http://x.com/abadtermz", self.LEX).is_reject

    def test_absent_keeps(self):
        assert not check_hard_substrings("http://x.com/clean", self.LEX).is_reject

    def test_whole_url_equality(self):
        assert check_hard_substrings("badterm", self.LEX).is_reject


class TestSoftSubstrings:
    LEX = SubstringLexicon.soft({"alpha", "beta"})

    def test_two_distinct_terms_reject(self):
        assert check_soft_substrings("http://x.com/alpha-beta", self.LEX).is_reject

    def test_single_term_kept(self):
        assert not check_soft_substrings("http://x.com/alpha", self.LEX).is_reject

    def test_one_term_twice_is_still_one_match(self):
        # Distinct-term counting: repeating one term does not reach two.
        assert not check_soft_substrings("http://alpha.com/alpha/alpha", self.LEX).is_reject

    def test_min_matches_validation(self):
        with pytest.raises(ValueError):
            SubstringLexicon("soft", frozenset({"x"}), 1)


class TestStripInlineUrls:
    def test_scheme_token_removed(self):
        # Frozen from the token-scan oracle: one token removed.
        cleaned, removed = strip_inline_urls(doc("see http://a.com now"))
        assert cleaned.text == "see now"
        assert removed == 1

    def test_no_urls_unchanged(self):
        d = doc("plain text with no links at all")
        cleaned, removed = strip_inline_urls(d)
        assert cleaned.text == d.text and removed == 0

    def test_tld_anchored_token_removed(self):
        cleaned, removed = strip_inline_urls(doc("visit example.org today"))
        assert cleaned.text == "visit today"
        assert removed == 1

    def test_plain_word_with_period_kept(self):
        cleaned, removed = strip_inline_urls(doc("The end. And more."))
        assert removed == 0

    def test_unknown_tld_kept(self):
        cleaned, removed = strip_inline_urls(doc("file.xyzzy stays"))
        assert removed == 0

    def test_trailing_punctuation_tolerated(self):
        cleaned, removed = strip_inline_urls(doc("go to www.example.com, then rest"))
        assert cleaned.text == "go to then rest"
        assert removed == 1

    @given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=200))
    def test_never_increases_words_never_changes_lines(self, text):
        d = doc(text)
        cleaned, removed = strip_inline_urls(d)
        assert count_words(cleaned.text) <= count_words(text)
        assert len(cleaned.text.split("\n")) == len(text.split("\n"))
        assert removed == count_words(text) - count_words(cleaned.text)


class TestNormalizeNewlines:
    @pytest.mark.parametrize("text,expected", [
        ("a\n\n\n\nb", "a\n\nb"),
        ("a\n\nb", "a\n\nb"),
        ("", ""),
        ("\n\n\n", "\n\n"),
    ])
    def test_examples(self, text, expected):
        assert normalize_newlines(doc(text)).text == expected

    @given(st.text(alphabet="ab\n", max_size=300))
    def test_idempotent_and_no_long_runs(self, text):
        once = normalize_newlines(doc(text)).text
        assert normalize_newlines(doc(once)).text == once
        assert "\n\n\n" not in once


class TestUrlTokenMatcher:
    def test_port_and_path(self):
        m = UrlTokenMatcher()
        assert m.is_url_token("http://x.com:8080/path?q=1")
        assert m.is_url_token("sub.domain.co/page")
        assert not m.is_url_token("3.14159")
        assert not m.is_url_token("etc.")

    def test_url_char_count(self):
        m = UrlTokenMatcher()
        assert m.url_char_count("a http://xy.com b") == len("http://xy.com")
