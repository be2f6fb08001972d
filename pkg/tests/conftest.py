import pytest

from modules.oracle import BatchResult
from modules.ranking import Item

WALKTHROUGH = "GEBACHFD"
WALKTHROUGH_TRACE = [
    ("G", "E", "B"), ("G", "A", "C"), ("A", "B", "E"), ("C", "B", "E"), ("G", "H", "F"),
    ("F", "A", "B"), ("F", "C", "E"), ("H", "D"), ("D", "A", "B"), ("D", "C", "E"),
]

# (comparison, n, tau, p) as printed for the university list
UNIVERSITY_TABLE = [
    ("Live/ARWU", 10, -0.0222, 1.0), ("Live/ARWU", 25, 0.0066, 0.9813), ("Live/ARWU", 50, -0.1167, 0.2349),
    ("Yahoo/ARWU", 10, 0.5111, 0.0490), ("Yahoo/ARWU", 25, 0.4666, 0.0011), ("Yahoo/ARWU", 50, 0.3436, 0.0004),
    ("Google/ARWU", 10, 0.1555, 0.5915), ("Google/ARWU", 25, 0.0733, 0.6238), ("Google/ARWU", 50, 0.0008, 1.0),
    ("Live/Yahoo", 10, 0.2000, 0.4742), ("Live/Yahoo", 25, 0.2599, 0.0721), ("Live/Yahoo", 50, 0.1183, 0.2283),
    ("Live/Google", 10, 0.5555, 0.0318), ("Live/Google", 25, 0.2666, 0.0650), ("Live/Google", 50, 0.1151, 0.2415),
    ("Yahoo/Google", 10, 0.6444, 0.0122), ("Yahoo/Google", 25, 0.2066, 0.1542), ("Yahoo/Google", 50, -0.0775, 0.4316),
]


def letter_items(letters):
    return [Item(id=letter, label=letter, url=f"http://{letter.lower()}.example/") for letter in letters]


class LexicographicOracle:
    """Orders every batch by item id"""

    name = "lex"

    def __init__(self, unindexed=()):
        self.unindexed = set(unindexed)
        self.calls = []

    def rank(self, items):
        self.calls.append(tuple(item.id for item in items))
        ranked = sorted((item for item in items if item.id not in self.unindexed), key=lambda item: item.id)
        return BatchResult(
            ordered_urls=tuple(item.url for item in ranked),
            unindexed=frozenset(item.url for item in items if item.id in self.unindexed),
            timestamp="2008-02-08T00:00:00+00:00",
        )


class QueryPositionOracle:
    """Answers with the batch reversed, whatever the items are"""

    name = "position"

    def rank(self, items):
        return BatchResult(ordered_urls=tuple(item.url for item in reversed(items)))


class StubTransport:
    """Search transport returning the queried URLs in a fixed order"""

    def __init__(self, order, missing=(), failures=0, error=None):
        self.order = list(order)
        self.missing = set(missing)
        self.failures = failures
        self.error = error
        self.calls = []

    def fetch(self, query, urls):
        self.calls.append(query)
        if self.failures:
            self.failures -= 1
            raise self.error
        return [url for url in self.order if url in urls and url not in self.missing]


@pytest.fixture
def walkthrough_items():
    return letter_items(WALKTHROUGH)


@pytest.fixture
def lex_oracle():
    return LexicographicOracle()


@pytest.fixture
def hbs_urls():
    return [
        "http://www.hbs.edu/",
        "http://www.gsb.stanford.edu/",
        "http://mba.wharton.upenn.edu/",
        "http://mitsloan.mit.edu/mba",
        "http://www.kellogg.northwestern.edu/",
    ]
