from datetime import date

from hypothesis import given
from hypothesis import strategies as st

from memir.temporal import find_time_expressions, parse_timestamp, render_dates
from memir.text import content_words, function_words, sentence_bounds, split_sentences, tokenize


def test_tokenize_lowercases_word_runs():
    assert tokenize("When did Joanna's play end?") == ["when", "did", "joanna", "s", "play", "end"]


def test_function_word_table_loaded():
    table = function_words()
    assert {"the", "did", "when"} <= table
    assert "screenplay" not in table
    assert content_words("When did Joanna finish the screenplay?") == {"joanna", "finish", "screenplay"}


def test_sentence_split_basic():
    assert split_sentences("Hi there. How are you? Great!") == ["Hi there.", "How are you?", "Great!"]


def test_sentence_split_abbreviations():
    assert split_sentences("I met Dr. Smith at 5 p.m. today. Then we left.") == [
        "I met Dr. Smith at 5 p.m. today.",
        "Then we left.",
    ]


def test_sentence_split_newlines_and_no_terminal():
    assert split_sentences("first line\nsecond line") == ["first line", "second line"]


@given(st.text(alphabet="ab .?!\n", max_size=60))
def test_sentence_bounds_are_ordered_substrings(text):
    prev_end = 0
    for start, end in sentence_bounds(text):
        assert prev_end <= start < end <= len(text)
        assert text[start:end] == text[start:end].strip()
        prev_end = end


def _one(text, anchor=None):
    matches = find_time_expressions(text, anchor)
    assert len(matches) == 1, matches
    return matches[0]


def test_absolute_day_month_year():
    m = _one("We visited Machu Picchu on 12 May 2023")
    assert m.surface == "12 May 2023"
    assert m.normalized == ("2023-05-12", "2023-05-12")


def test_relative_with_anchor():
    anchor = date(2023, 5, 8)
    assert _one("I finished it last Friday", anchor).normalized == ("2023-05-05", "2023-05-05")
    assert _one("since last month", anchor).normalized == ("2023-04-01", "2023-04-30")
    assert _one("it was yesterday", anchor).normalized == ("2023-05-07", "2023-05-07")


def test_relative_without_anchor_keeps_expression():
    m = _one("finished her first screenplay last month")
    assert m.normalized is None
    assert m.relative_expression == "last month"


def test_clock_time_is_relative_only():
    m = _one("moved to 4 PM", date(2023, 7, 14))
    assert m.surface == "4 PM"
    assert m.normalized is None
    assert m.relative_expression == "4 PM"


def test_no_time_in_plain_text():
    assert find_time_expressions("haha nice") == []


def test_render_dates_and_timestamps():
    assert render_dates("on 12 May 2023 we met") == "on 2023-05-12 we met"
    assert parse_timestamp("1:56 pm on 8 May, 2023") == "2023-05-08T13:56:00"
    assert parse_timestamp("2023-05-08T13:56:00") == "2023-05-08T13:56:00"
