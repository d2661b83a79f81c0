"""Bundled default word lists.

Everything here is overridable from config; these defaults exist so the
pipeline runs end-to-end with no external resource files.
"""

# Classic 8-word stop-word list used by the Gopher quality gate's minimum
# stop-word-count criterion.
GOPHER_STOP_WORDS = frozenset(
    ("the", "be", "to", "of", "and", "that", "have", "with")
)

# Larger English function-word list for the stop-word *ratio* criterion of
# the custom quality gate. A 0.20 ratio is unreachable with the 8-word list.
ENGLISH_STOP_WORDS = frozenset("""
a about above after again against all am an and any are aren't as at be
because been before being below between both but by can't cannot could
couldn't did didn't do does doesn't doing don't down during each few for
from further had hadn't has hasn't have haven't having he he'd he'll he's
her here here's hers herself him himself his how how's i i'd i'll i'm i've
if in into is isn't it it's its itself let's me more most mustn't my myself
no nor not of off on once only or other ought our ours ourselves out over
own same shan't she she'd she'll she's should shouldn't so some such than
that that's the their theirs them themselves then there there's these they
they'd they'll they're they've this those through to too under until up
very was wasn't we we'd we'll we're we've were weren't what what's when
when's where where's which while who who's whom why why's with won't would
wouldn't you you'd you'll you're you've your yours yourself yourselves
""".split())

# TLD anchors for the inline-URL token matcher (stage 6) and the URL
# character-ratio criterion. Roughly the 50 most common endings; loadable
# from file via the tld_list_path config key.
DEFAULT_TLDS = (
    "com", "org", "net", "edu", "gov", "mil", "int", "info", "biz", "name",
    "io", "co", "ai", "app", "dev", "me", "tv", "us", "uk", "ca", "au",
    "de", "fr", "jp", "cn", "ru", "br", "in", "nl", "se", "es", "pl", "ch",
    "at", "be", "dk", "fi", "gr", "pt", "cz", "ro", "hu", "ie", "kr", "mx",
    "ar", "za", "tr", "xyz", "online", "site", "store", "blog", "news",
    "tech",
)

# Minimal public-suffix list for registered-domain extraction. The full
# list can be loaded from file; blocklist matching only needs the suffixes
# that actually occur in the blocklist's domains.
DEFAULT_PUBLIC_SUFFIXES = frozenset(
    (
        "com", "org", "net", "edu", "gov", "mil", "int", "info", "biz",
        "io", "co", "ai", "app", "dev", "me", "tv", "us", "uk", "ca", "au",
        "de", "fr", "jp", "cn", "ru", "br", "in", "nl", "se", "es", "pl",
        "ch", "at", "be", "dk", "fi", "gr", "pt", "cz", "ro", "hu", "ie",
        "kr", "mx", "ar", "za", "tr", "xyz",
        "co.uk", "ac.uk", "gov.uk", "org.uk", "me.uk",
        "com.au", "net.au", "org.au",
        "co.jp", "ne.jp", "or.jp", "ac.jp",
        "com.br", "com.cn", "com.mx", "com.ar", "co.kr", "co.in", "co.za",
        "com.tr",
    )
)


def load_terms(path: str) -> frozenset[str]:
    """One entry per line, lowercased; blank lines and #-comments skipped."""
    terms = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            term = line.strip().lower()
            if term and not term.startswith("#"):
                terms.add(term)
    return frozenset(terms)
