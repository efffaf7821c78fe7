"""Parse pip requirement files into sets of canonical package names."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import EmptyName, InvalidName

_SEPARATORS = re.compile(r"[-_.]+")
_CANONICAL = re.compile(r"^[a-z0-9]+(?:-[a-z0-9]+)*$")
# '#' starts a comment only at line start or after whitespace, so URL
# fragments such as '#egg=' survive.
_COMMENT = re.compile(r"(?:^|\s)#.*$")
_NAME = re.compile(r"^([A-Za-z0-9][A-Za-z0-9._-]*)")
# What may legally follow a name: extras, a version clause, a direct
# reference, or nothing.
_AFTER_NAME = re.compile(r"^\s*(?:$|\[|\(|===?|[<>!~]=?|@)")
_TRAILING_OPTION = re.compile(r"\s+--?[A-Za-z].*$")
_EGG = re.compile(r"[#&]egg=([^&#\s]+)")
_URL = re.compile(r"^(?:[A-Za-z][A-Za-z0-9+.-]*://|git\+|hg\+|svn\+|bzr\+|file:)")
_EDITABLE = re.compile(r"^(?:-e|--editable)(?:\s+|=)(.*)$")


def normalize_name(raw: str) -> str:
    """Canonicalize a package name: lowercase, separator runs collapsed to '-'."""
    stripped = raw.strip()
    if not stripped:
        raise EmptyName("package name is empty")
    name = _SEPARATORS.sub("-", stripped.lower())
    if not _CANONICAL.match(name):
        raise InvalidName(f"invalid package name {raw!r}")
    return name


@dataclass
class ParseReport:
    names: set[str] = field(default_factory=set)
    skipped_lines: int = 0
    warnings: list[tuple[int, str]] = field(default_factory=list)
    dependency_lines: int = 0
    blank_lines: int = 0

    @property
    def is_empty(self) -> bool:
        """True when the file yields no dependencies and should be skipped."""
        return not self.names


def _logical_lines(content: str):
    """Yield (first physical line number, text) with backslash continuations joined."""
    if content.startswith("﻿"):
        content = content[1:]
    physical = content.replace("\r\n", "\n").replace("\r", "\n").split("\n")
    if physical and physical[-1] == "":
        physical.pop()
    buf: list[str] = []
    start = 0
    for i, line in enumerate(physical, start=1):
        if not buf:
            start = i
        if line.endswith("\\"):
            buf.append(line[:-1])
            continue
        buf.append(line)
        yield start, "".join(buf)
        buf = []
    if buf:
        yield start, "".join(buf)


def _egg_name(text: str) -> str | None:
    m = _EGG.search(text)
    if not m:
        return None
    egg = m.group(1).split("[", 1)[0]
    return egg


def _parse_line(text: str) -> tuple[str | None, str | None]:
    """Return (raw name, None) for a dependency or (None, reason) to skip it."""
    edit = _EDITABLE.match(text)
    if edit:
        egg = _egg_name(edit.group(1))
        if egg is None:
            return None, "editable requirement without egg name"
        return egg, None
    if text.startswith("-"):
        return None, "option line"

    if _URL.match(text):
        egg = _egg_name(text)
        if egg is None:
            return None, "URL requirement without egg name"
        return egg, None
    if text.startswith((".", "/", "~")) or re.match(r"^[A-Za-z]:[\\/]", text):
        egg = _egg_name(text)
        if egg is None:
            return None, "local path requirement"
        return egg, None

    req = _TRAILING_OPTION.sub("", text.split(";", 1)[0]).strip()
    m = _NAME.match(req)
    if not m or not _AFTER_NAME.match(req[m.end():]):
        return None, f"unparseable requirement {text!r}"
    return m.group(1), None


def parse_requirements(content: str) -> ParseReport:
    """Extract the set of normalized package names from requirements text.

    Comment-only lines, option lines (``-r``, ``--index-url`` and the like) and
    unparseable lines are counted in ``skipped_lines``; every skip except plain
    comments also leaves a ``(line, reason)`` entry in ``warnings``.  Editable
    and URL requirements contribute their ``#egg=`` name when one is present,
    which is noted in ``warnings`` as well.
    """
    report = ParseReport()
    for lineno, raw in _logical_lines(content):
        if not raw.strip():
            report.blank_lines += 1
            continue
        text = _COMMENT.sub("", raw).strip()
        if not text:
            report.skipped_lines += 1
            continue
        name, reason = _parse_line(text)
        if name is not None:
            try:
                report.names.add(normalize_name(name))
            except (EmptyName, InvalidName) as exc:
                report.skipped_lines += 1
                report.warnings.append((lineno, str(exc)))
                continue
            report.dependency_lines += 1
            if text.startswith("-") or _URL.match(text) or "egg=" in text:
                report.warnings.append((lineno, f"egg name {name!r} taken from reference"))
        else:
            report.skipped_lines += 1
            report.warnings.append((lineno, reason))
    return report
