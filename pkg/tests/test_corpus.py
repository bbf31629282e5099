import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from medos.corpus import (
    Corpus,
    Product,
    QAPair,
    Review,
    load_corpus,
    mask_sources,
    normalize_ws,
    truncate_qa,
    validate_product,
    write_corpus,
)
from medos.sdc import SdcHyperparams


def record(pid, n_reviews=3, **extra):
    rec = {
        "product_id": pid,
        "domain": "electronics",
        "reviews": [{"review_id": f"r{i}", "text": f"review {i} of {pid}", "rating": 4} for i in range(n_reviews)],
        "description": f"about {pid}",
        "qa": [{"question": "Is it good?", "answer": "Yes."}],
        "summaries": None,
    }
    rec.update(extra)
    return rec


def write_lines(path, lines):
    path.write_text("".join(l if isinstance(l, str) else json.dumps(l) for l in lines), encoding="utf-8")


def test_two_products_keep_file_order(tmp_path):
    path = tmp_path / "c.jsonl"
    write_lines(path, [json.dumps(record("B")) + "\n", json.dumps(record("A")) + "\n"])
    corpus, report = load_corpus(path, "train")
    assert [p.product_id for p in corpus] == ["B", "A"]
    assert report.errors == [] and report.n_products == 2


def test_empty_file_warns(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    corpus, report = load_corpus(path, "dev")
    assert len(corpus) == 0
    assert report.warnings == ["no products loaded"]


def test_malformed_line_is_reported_with_its_number(tmp_path):
    path = tmp_path / "c.jsonl"
    write_lines(path, [json.dumps(record("A")) + "\n", "{not json\n", json.dumps(record("C")) + "\n"])
    corpus, report = load_corpus(path, "train", write_report=True)
    assert [p.product_id for p in corpus] == ["A", "C"]
    assert len(report.errors) == 1 and report.errors[0]["line"] == 2
    saved = json.loads((tmp_path / "c.jsonl.load_report.json").read_text())
    assert saved["errors"][0]["line"] == 2


def test_missing_file_is_fatal(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_corpus(tmp_path / "nope.jsonl", "train")


def test_bad_split_rejected(tmp_path):
    with pytest.raises(ValueError):
        Corpus((), "validation")


@pytest.mark.parametrize(
    "mutation, fragment",
    [
        ({"reviews": [{"review_id": "x", "text": "a"}, {"review_id": "x", "text": "b"}]}, "duplicate review_id"),
        ({"reviews": [{"review_id": "x", "text": "   "}]}, "empty"),
        ({"reviews": [{"review_id": "x", "text": "ok", "rating": 9}]}, "rating"),
        ({"qa": [{"question": "q", "answer": ""}]}, "empty question or answer"),
        ({"product_id": ""}, "product_id"),
    ],
)
def test_invalid_records(tmp_path, mutation, fragment):
    path = tmp_path / "c.jsonl"
    write_lines(path, [json.dumps(record("A", **mutation)) + "\n"])
    _, report = load_corpus(path, "train")
    assert fragment in report.errors[0]["error"]


def test_duplicate_product_ids_rejected(tmp_path):
    path = tmp_path / "c.jsonl"
    write_lines(path, [json.dumps(record("A")) + "\n"] * 2)
    corpus, report = load_corpus(path, "train")
    assert len(corpus) == 1 and "duplicate product_id" in report.errors[0]["error"]


def test_whitespace_normalised_and_absent_description_kept(tmp_path):
    path = tmp_path / "c.jsonl"
    rec = record("A", description=None)
    rec["reviews"][0]["text"] = "  lots   of \t space \n"
    write_lines(path, [json.dumps(rec) + "\n"])
    p = load_corpus(path, "train")[0].products[0]
    assert p.reviews[0].text == "lots of space"
    assert p.description is None


def test_plain_string_reviews_get_ids(tmp_path):
    path = tmp_path / "c.jsonl"
    write_lines(path, [json.dumps({"product_id": "A", "reviews": ["one", "two"]}) + "\n"])
    p = load_corpus(path, "train")[0].products[0]
    assert [r.review_id for r in p.reviews] == ["r0", "r1"]


def test_qa_concatenation_uses_one_space():
    assert QAPair("Is it loud?", "A little.").concatenated == "Is it loud? A little."


def _product(n_reviews, n_qa=0):
    return Product(
        "P", "d",
        tuple(Review(f"r{i}", f"text {i}") for i in range(n_reviews)),
        "desc",
        tuple(QAPair(f"q{i}", f"a{i}") for i in range(n_qa)),
    )


def test_validate_product_examples():
    hp = SdcHyperparams(k=8)
    assert validate_product(_product(9), hp) == []
    assert validate_product(_product(0), hp) == ["empty reviews"]
    assert validate_product(_product(8), hp) == ["insufficient reviews for SDC"]
    assert validate_product(_product(8)) == []


def test_validate_product_is_pure():
    p = _product(3, 12)
    hp = SdcHyperparams(k=2)
    assert validate_product(p, hp) == validate_product(p, hp) == ["qa pairs exceed m_cap"]


@pytest.mark.parametrize("n, kept", [(15, 10), (3, 3), (0, 0)])
def test_truncate_qa(n, kept):
    p = _product(2, n)
    t = truncate_qa(p, 10)
    assert [q.question for q in t.qa_pairs] == [f"q{i}" for i in range(kept)]
    assert t.reviews == p.reviews and t.description == p.description
    assert truncate_qa(t, 10) == t


def test_truncate_qa_rejects_zero_cap():
    with pytest.raises(ValueError):
        truncate_qa(_product(2, 1), 0)


def test_mask_sources():
    p = _product(2, 2)
    assert mask_sources(p, description=False).description is None
    assert mask_sources(p, qa=False).qa_pairs == ()
    assert mask_sources(p) == p


# round-trip over random products

_text = st.text(st.characters(codec="utf-8", exclude_categories=("Cs", "Cc")), min_size=1, max_size=30).map(
    normalize_ws
).filter(bool)


@st.composite
def products(draw, pid):
    n = draw(st.integers(1, 5))
    reviews = tuple(Review(f"r{i}", draw(_text), draw(st.one_of(st.none(), st.integers(1, 5)))) for i in range(n))
    qa = tuple(QAPair(draw(_text), draw(_text)) for _ in range(draw(st.integers(0, 3))))
    gold = draw(st.one_of(st.none(), st.lists(_text, max_size=3).map(tuple)))
    return Product(pid, draw(_text), reviews, draw(st.one_of(st.none(), _text)), qa, gold)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 4).flatmap(lambda n: st.tuples(*[products(f"p{i}") for i in range(n)])))
def test_write_then_load_is_identity(tmp_path_factory, prods):
    path = tmp_path_factory.mktemp("rt") / "c.jsonl"
    corpus = Corpus(tuple(prods), "test")
    write_corpus(corpus, path)
    loaded, report = load_corpus(path, "test")
    assert report.errors == []
    assert loaded.products == corpus.products
