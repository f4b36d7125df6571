from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spamdrift.normalize import (
    Marker, NormalizedText, collapse_inword_punct, fold_diacritics,
    load_table, marker_totals, normalize, strip_bogus_tags, strip_html_comments, tokenize,
)

# The five obfuscation bullets, as they render in print, with their plain forms.
OBFUSCATED = [
    ("v.ia.g.ra", "viagra"),
    ("100% Mo|ney Back Guaran|tee!", "100% money back guarantee!"),
    ("Our pro<br2sd9/>duct is doctor reco<br2sd9 />mmen<br2sd9/>ded and made from "
     "100% natu<br2sd9/>ral ingre<br2sd9/>dients.",
     "our product is doctor recommended and made from 100% natural ingredients."),
    ("C<!--7udzl53l5spp6-->lic<!--yajiwn1xnbecx2-->k he<!--ehc0aj2pvwu-->re</a>", "click here"),
    ("Inc̀rëäsë tëstöstërönë by 254%", "increase testosterone by 254%"),
]


@pytest.mark.parametrize("dirty,plain", OBFUSCATED)
def test_obfuscation_examples(dirty, plain):
    n = normalize(dirty)
    assert n.text == plain
    assert tokenize(n) == tokenize(plain)


def test_example_marker_counts():
    assert normalize(OBFUSCATED[0][0]).count(Marker.INWORD_PUNCT) == 3
    assert normalize(OBFUSCATED[1][0]).count(Marker.INWORD_PUNCT) == 2
    assert normalize(OBFUSCATED[2][0]).count(Marker.BOGUS_TAG) == 5
    click = normalize(OBFUSCATED[3][0])
    assert click.count(Marker.HTML_COMMENT) == 3
    assert click.count(Marker.BOGUS_TAG) == 1  # the stray </a>
    assert normalize(OBFUSCATED[4][0]).count(Marker.DIACRITIC) == 9


def test_strip_html_comments():
    assert strip_html_comments("C<!--7udzl53l5spp6-->lic<!--yajiwn1xnbecx2-->k "
                               "he<!--ehc0aj2pvwu-->re") == "Click here"
    assert strip_html_comments("no comments here") == "no comments here"
    assert strip_html_comments("a<!--x") == "a"
    assert strip_html_comments("a<!-- one\nline two -->b") == "ab"


def test_strip_bogus_tags():
    assert strip_bogus_tags("Our pro<br2sd9/>duct is doctor reco<br2sd9 />mmen<br2sd9/>ded") == \
        "Our product is doctor recommended"
    assert strip_bogus_tags("line<br>break") == "line break"
    assert strip_bogus_tags("a<P class='x'>b</p>c<DIV>d</div>e") == "a b c d e"
    assert strip_bogus_tags("a < b and b > c") == "a < b and b > c"
    assert strip_bogus_tags("x<font color=red>y</font>z") == "xyz"


def test_tag_length_cutoff():
    longest = "<a" + "b" * 61 + ">"
    assert len(longest) == 64
    assert strip_bogus_tags(f"x{longest}y") == "xy"
    too_long = "<a" + "b" * 62 + ">"
    assert strip_bogus_tags(f"x{too_long}y") == f"x{too_long}y"


def test_collapse_inword_punct():
    assert collapse_inword_punct("v.ia.g.ra") == "viagra"
    assert collapse_inword_punct("100% Mo|ney Back Guaran|tee!") == "100% Money Back Guarantee!"
    assert collapse_inword_punct("end. Next") == "end. Next"
    assert collapse_inword_punct("a..b") == "a..b"  # runs longer than one stay
    assert collapse_inword_punct("3.14") == "3.14"


def test_fold_diacritics():
    assert fold_diacritics("Incrèäse tëstöstërönë by 254%") == "Increase testosterone by 254%"
    assert fold_diacritics("0rgy") == "orgy"
    assert fold_diacritics("254") == "254"
    assert fold_diacritics("v1agra fr33") == "vlagra free"
    assert fold_diacritics("a1") == "a1"  # one letter is not enough
    assert fold_diacritics("Straße") == "Strasse"


def test_clean_and_empty_input():
    for text in ("", "plain lowercase words only", "numbers 123 and 45"):
        n = normalize(text)
        assert n.text == text
        assert all(v == 0 for v in n.removed_markers.values())
    assert tokenize(normalize("")) == []


def test_tokenize():
    assert tokenize(normalize("click here")) == ["click", "here"]
    assert tokenize("a-b c_d 42!") == ["a", "b", "c", "d", "42"]


def test_custom_table(tmp_path):
    path = tmp_path / "table.txt"
    path.write_text("# custom\nleet 4 a\nleet 0 o\nwhitespace_tag li\n")
    cfg = load_table(path)
    assert normalize("c4sh l0ve v1agra", cfg).text == "cash love v1agra"
    assert normalize("one<li>two", cfg).text == "one two"
    assert normalize("one<br>two", cfg).text == "onetwo"
    path.write_text("nonsense line\n")
    with pytest.raises(ValueError):
        load_table(path)


def test_marker_totals():
    items = [normalize(d) for d, _ in OBFUSCATED]
    totals = marker_totals(items)
    assert totals[Marker.HTML_COMMENT] == 3
    assert sum(totals.values()) == sum(sum(i.removed_markers.values()) for i in items)


def test_normalized_text_invariants():
    n = normalize("<!-- a --><b>V.i.a</b>")
    assert isinstance(n, NormalizedText)
    assert "<" not in n.text and n.text == n.text.lower()


text_strategy = st.text(
    alphabet=st.sampled_from(list("abcXYZ019 .|-_*'`<>!/-éüßØ̀İ\n")), max_size=40)


@settings(max_examples=400, deadline=None)
@given(text_strategy)
def test_normalize_idempotent(text):
    once = normalize(text)
    twice = normalize(once.text)
    assert twice.text == once.text
    assert all(v == 0 for v in twice.removed_markers.values())
    assert all(v >= 0 for v in once.removed_markers.values())


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789 \n", max_size=40))
def test_identity_on_clean_lowercase(text):
    # digits glued to letters are leet candidates, so keep words purely alphabetic or numeric
    words = [w for w in text.split() if w.isalpha() or w.isdigit()]
    clean = " ".join(words)
    n = normalize(clean)
    assert n.text == clean
    assert sum(n.removed_markers.values()) == 0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.from_regex(r"[a-z]{2,10}", fullmatch=True), min_size=1, max_size=6),
       st.sampled_from(["<!-- junk -->", "<x9k/>", "|", ".", "*"]))
def test_single_artifact_in_word_is_invisible(words, artifact):
    target = words[0]
    cut = len(target) // 2
    dirty = " ".join([target[:cut] + artifact + target[cut:]] + words[1:])
    assert tokenize(normalize(dirty)) == words
