import random
import re

import pytest
from hypothesis import given, strategies as st

from depvec.errors import EmptyName, InvalidName
from depvec.reqparse import normalize_name, parse_requirements


@pytest.mark.parametrize(
    "raw, expected",
    [
        ("Django", "django"),
        ("beautiful_soup", "beautiful-soup"),
        ("zope.interface", "zope-interface"),
        ("  PyYAML  ", "pyyaml"),
        ("a__b--c..d", "a-b-c-d"),
        ("ruamel.yaml_clib", "ruamel-yaml-clib"),
    ],
)
def test_normalize_examples(raw, expected):
    assert normalize_name(raw) == expected


@pytest.mark.parametrize("raw", ["", "   ", "\t"])
def test_normalize_empty(raw):
    with pytest.raises(EmptyName):
        normalize_name(raw)


@pytest.mark.parametrize("raw", ["_private", "trailing-", "sp ace", "café", "a+b"])
def test_normalize_invalid(raw):
    with pytest.raises(InvalidName):
        normalize_name(raw)


name_chars = st.text(alphabet="abcXYZ019-_.", min_size=1, max_size=12)


@given(name_chars)
def test_normalize_idempotent_and_canonical(raw):
    try:
        name = normalize_name(raw)
    except InvalidName:
        return
    assert normalize_name(name) == name
    assert re.fullmatch(r"[a-z0-9]+(-[a-z0-9]+)*", name)


def test_comment_line_counted_as_skipped():
    report = parse_requirements("numpy==1.19\n# torch\n")
    assert report.names == {"numpy"}
    assert report.skipped_lines == 1


def test_marker_and_specifier_stripped():
    assert parse_requirements("requests>=2,<3 ; python_version>'3'").names == {"requests"}


def test_include_directive_and_extras():
    report = parse_requirements("-r other.txt\nFlask[async]==2.0")
    assert report.names == {"flask"}
    assert report.skipped_lines == 1


def test_continuation_joined():
    report = parse_requirements("Django>=2.2,\\\n    <3.0\n")
    assert report.names == {"django"}
    assert report.dependency_lines == 1


def test_inline_comment_does_not_eat_egg_fragment():
    report = parse_requirements("git+https://h/x.git#egg=real_name # trailing\n")
    assert report.names == {"real-name"}


def test_url_without_egg_is_warned_not_guessed():
    report = parse_requirements("https://example.org/thing-1.0.tar.gz\n")
    assert report.names == set()
    assert report.skipped_lines == 1
    assert "egg" in report.warnings[0][1]


def test_unparseable_line_reports_line_number():
    report = parse_requirements("ok\n\n!!!\n")
    assert report.names == {"ok"}
    assert report.warnings == [(3, "unparseable requirement '!!!'")]


def test_empty_content_is_skippable():
    assert parse_requirements("").is_empty
    assert parse_requirements("# only\n#comments\n").is_empty


lines = st.lists(
    st.sampled_from(
        [
            "numpy==1.0",
            "Flask[async]>=2",
            "# comment",
            "",
            "-r base.txt",
            "requests ; python_version > '3'",
            "zope.interface",
            "!!!",
            "-e git+https://x/y.git#egg=Tool_Name",
            "six --hash=sha256:abc",
        ]
    ),
    max_size=20,
)


@given(lines, st.randoms(use_true_random=False))
def test_line_permutation_does_not_change_names(content_lines, rnd):
    shuffled = list(content_lines)
    rnd.shuffle(shuffled)
    a = parse_requirements("\n".join(content_lines))
    b = parse_requirements("\n".join(shuffled))
    assert a.names == b.names


@given(lines)
def test_every_line_accounted_for(content_lines):
    report = parse_requirements("".join(line + "\n" for line in content_lines))
    total = report.dependency_lines + report.skipped_lines + report.blank_lines
    assert total == len(content_lines)
    for name in report.names:
        assert normalize_name(name) == name


def test_crlf_and_bom():
    report = parse_requirements("﻿PyYAML==5\r\ntqdm\r\n")
    assert report.names == {"pyyaml", "tqdm"}
