"""Shared fixtures for the test suite."""

from __future__ import annotations

import pytest

from corpusgen import build_corpus, write_corpus


@pytest.fixture
def clean_corpus_files(tmp_path):
    """Paths of a fully consistent 8-final corpus."""
    return write_corpus(build_corpus(n_finals=8), tmp_path)


@pytest.fixture
def faulty_corpus(tmp_path):
    """An 8-final corpus with one seeded shelf-life fault, plus its ground truth."""
    corpus = build_corpus(n_finals=8, fault_finals=(3,))
    return write_corpus(corpus, tmp_path), corpus
