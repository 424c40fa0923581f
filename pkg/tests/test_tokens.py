from discodrive.tokens import metric_tokens, tokenize, word_tokens


def test_punctuation_detached():
    toks = [t.text for t in tokenize("Can you, um, check the tire pressure?")]
    assert toks == ["Can", "you", ",", "um", ",", "check", "the", "tire", "pressure", "?"]


def test_ellipsis_is_single_token():
    toks = [t.text for t in tokenize("there... soon")]
    assert toks == ["there", "...", "soon"]
    assert [t.text for t in tokenize("wait… now")] == ["wait", "…", "now"]


def test_dashes_split_interior():
    toks = [t.text for t in tokenize("We could—actually, let's go")]
    assert toks == ["We", "could", "—", "actually", ",", "let's", "go"]


def test_apostrophes_stay_internal():
    assert [t.text for t in tokenize("we're fine")] == ["we're", "fine"]


def test_numbers_keep_separators():
    assert [t.text for t in tokenize("at 6:30 pm")] == ["at", "6:30", "pm"]


def test_offsets_cover_source():
    text = "So, we're going to... um, the restaurant?"
    for tok in tokenize(text):
        assert text[tok.start:tok.end] == tok.text


def test_word_tokens_drop_punctuation():
    words = [t.text for t in word_tokens("Turn left—no, wait!")]
    assert words == ["Turn", "left", "no", "wait"]


def test_metric_tokens_lowercase():
    assert metric_tokens("The Cat SAT.") == ["the", "cat", "sat", "."]
    assert metric_tokens("The Cat", lowercase=False) == ["The", "Cat"]
