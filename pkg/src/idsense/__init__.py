"""Identity-sensitive word embeddings through heterogeneous network embedding."""

__version__ = "0.1.0"

from ._jit import backend
from .corpus import (Document, LabeledCorpus, Vocabulary, build_vocabulary, corpus_from_texts, load_corpus,
                     load_labeled_corpus, save_labeled_corpus, tokenize)
from .evaluation import (classification_report, contextual_similarity, cosine, document_embedding,
                         nearest_neighbors, spearman, train_classifier)
from .hetnet import (AliasTable, BipartiteNetwork, HeterogeneousNetwork, build_alias_table,
                     build_heterogeneous_network, build_noise_table, build_word_context_network,
                     build_word_identity_network, sample_edge)
from .identity import (gibbs_conditional, infer_identity, label_category, label_none, label_sentiment,
                       label_topics, select_sentiment_words)
from .modelio import load_model, save_model
from .trainer import (EmbeddingModel, TrainerConfig, edge_loss, evaluate_softmax, fit, learning_rate,
                      sgd_update, sigmoid, train)
