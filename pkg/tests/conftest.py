import datetime as dt
import json
from importlib import resources

import numpy as np
import pytest

from tweettone.corpus import TweetRecord

FIXTURE_DIR = resources.files("tweettone") / "data" / "fixture"


@pytest.fixture(scope="session")
def fixture_dir():
    return FIXTURE_DIR


@pytest.fixture(scope="session")
def fixture_truth():
    return json.loads((FIXTURE_DIR / "truth.json").read_text(encoding="utf-8"))


def make_tweet(tweet_id, text="stay home", retweets=2, day=25, location=None, user="u1", followers=10):
    return TweetRecord(tweet_id, user, text, retweets, followers, location, dt.date(2020, 3, day))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}")
