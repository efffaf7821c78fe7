"""Library and project embeddings from dependency co-occurrence."""

from .corpus import Corpus, ProjectSnapshot, build_matrix, idf_table, load_corpus, save_corpus
from .embed import EmbeddingModel, build_model, load_model, save_model, truncated_svd
from .recommend import ModelKind, ScoringParams, preset, recommend

__version__ = "0.1.0"
